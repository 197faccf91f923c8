"""Command-line interface.

Every subcommand writes into a run directory containing a ``manifest.json``
(config echo, seed, input hash, produced files) plus its reports, so a run
can be re-executed from the manifest alone.  Flags may also be supplied
through a flat ``key = value`` config file via ``--config``; explicit
flags win.  The default output root is the current directory, overridable
with the ``ZILR_OUT_ROOT`` environment variable.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import data_io
from .analysis import export_traces, kmeans2, pca2
from .data_io import (Bindings, ColumnSpec, RunManifest, load_csv, parse_vector,
                      read_kv, write_csv, write_kv_report)
from .experiments import (SignFlipConfig, bimodality_scenario, run_bimodality,
                          run_signflip, run_simulation, simulation_scenario)
from .fit import FitConfig, fit_logistic, fit_zilr, relabel
from .model import Dataset, ParamPair
from .sampler import SamplerConfig, run_sampler
from .separation import SeparationStatus, detect_double_separation, estimate_margin


def _parse_recodes(text: str) -> dict[str, dict[str, float]]:
    """``col:raw=val,raw=val;col2:...`` -> per-column value maps."""
    out: dict[str, dict[str, float]] = {}
    for block in text.split(";"):
        block = block.strip()
        if not block:
            continue
        col, _, maps = block.partition(":")
        if not maps:
            raise ValueError(f"bad recode spec {block!r}, want col:raw=val,...")
        table = {}
        for pair in maps.split(","):
            raw, _, val = pair.partition("=")
            if not val:
                raise ValueError(f"bad recode pair {pair!r}")
            table[raw.strip()] = float(val)
        out[col.strip()] = table
    return out


def _bindings_from(opts: dict) -> Bindings:
    recodes = _parse_recodes(opts.get("recode", ""))
    std = {c.strip() for c in opts.get("standardize", "").split(",") if c.strip()}
    covs = [c.strip() for c in opts["covariates"].split(",") if c.strip()]
    if not covs:
        raise ValueError("at least one covariate column is required")
    return Bindings(
        outcome=ColumnSpec(opts["outcome"], recode=recodes.get(opts["outcome"])),
        covariates=[ColumnSpec(c, standardize=c in std, recode=recodes.get(c))
                    for c in covs],
        complete_case=not opts.get("keep_missing", False),
        add_intercept=not opts.get("no_intercept", False),
    )


def _load_dataset(opts: dict, manifest: RunManifest) -> Dataset:
    if "data" not in opts:
        raise UsageError("--data is required")
    info: dict = {}
    d = load_csv(opts["data"], _bindings_from(opts), info=info)
    manifest.input_path = opts["data"]
    manifest.input_sha256 = data_io.sha256_file(opts["data"])
    manifest.config["load_info"] = info
    return d


def _out_dir(opts: dict, command: str) -> str:
    if "out" in opts:
        return opts["out"]
    root = os.environ.get("ZILR_OUT_ROOT", ".")
    return os.path.join(root, f"zilr_{command}")


def _param_header(d_dim: int, p_dim: int) -> list[str]:
    return ([f"beta_{j}" for j in range(d_dim)]
            + [f"gamma_{j}" for j in range(p_dim)])


class UsageError(ValueError):
    pass


# Per-subcommand option defaults; config-file and flag values overlay these.
DEFAULTS = {
    "fit": {"model": "zilr", "seed": 0, "max_iters": 1000, "grad_tol": 1e-6,
            "init_sd": 0.1, "norm_cap": 1e3, "full_memory": False,
            "recode": "", "standardize": ""},
    "sample": {"seed": 0, "replicas": 20, "temp_ratio": 1.05,
               "exchange_every": 50, "iters": 53000, "burn_in": 3000,
               "prior_var": 100.0, "pg_trunc": 200, "init_sd": 0.1,
               "checkpoint_every": 0, "recode": "", "standardize": ""},
    "analyze": {"seed": 0, "restarts": 10, "bins": 50},
    "simulate": {"scenario": "Moderate", "reps": 500, "n": 1000, "seed": 0,
                 "methods": "Proposed,StandardLR,NaiveZILR",
                 "full_scale": False},
    "bimodality": {"scenario": "S1", "n": 2000, "seed": 0, "replicas": 20,
                   "temp_ratio": 1.05, "exchange_every": 50, "iters": 53000,
                   "burn_in": 3000, "prior_var": 100.0, "pg_trunc": 200},
    "signflip": {"seed": 0, "a": 1.0, "beta_intercept": 0.5,
                 "gamma_intercept": 1.7, "c_grid": "0,-1,-2,-4,-6,-8",
                 "n_samples": 200000},
    "diagnose": {"seed": 0, "restarts": 64, "iters": 500, "tol": 1e-8,
                 "recode": "", "standardize": ""},
    "relabel": {},
}


def _add_data_flags(sub):
    sub.add_argument("--data", help="input CSV path")
    sub.add_argument("--outcome", help="outcome column name")
    sub.add_argument("--covariates", help="comma-separated covariate columns")
    sub.add_argument("--standardize",
                     help="comma-separated columns to standardize")
    sub.add_argument("--recode",
                     help="value maps, e.g. 'DIQ010:1=1,2=0;SMQ020:1=1,2=0'")
    sub.add_argument("--keep-missing", action="store_true", dest="keep_missing",
                     help="fail on missing cells instead of dropping rows")
    sub.add_argument("--no-intercept", action="store_true", dest="no_intercept")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zilr",
        description="Zero-inflated logistic regression: fitting, separation "
                    "diagnostics, tempered posterior sampling, experiments.")
    subs = parser.add_subparsers(dest="command", required=True)

    def new_sub(name, **kw):
        sub = subs.add_parser(name, argument_default=argparse.SUPPRESS, **kw)
        sub.add_argument("--config", help="key = value config file")
        sub.add_argument("--out", help="output directory")
        sub.add_argument("--seed", type=int)
        return sub

    sub = new_sub("fit", help="maximum-likelihood fit")
    _add_data_flags(sub)
    sub.add_argument("--model", choices=["zilr", "lr"])
    sub.add_argument("--max-iters", type=int, dest="max_iters")
    sub.add_argument("--grad-tol", type=float, dest="grad_tol")
    sub.add_argument("--init-sd", type=float, dest="init_sd")
    sub.add_argument("--norm-cap", type=float, dest="norm_cap")
    sub.add_argument("--full-memory", action="store_true", dest="full_memory")
    sub.add_argument("--relabel", action="store_true", dest="do_relabel",
                     help="relabel the zilr fit against a standard LR fit")

    sub = new_sub("sample", help="tempered Gibbs posterior sampling")
    _add_data_flags(sub)
    sub.add_argument("--replicas", type=int)
    sub.add_argument("--temp-ratio", type=float, dest="temp_ratio")
    sub.add_argument("--exchange-every", type=int, dest="exchange_every")
    sub.add_argument("--iters", type=int)
    sub.add_argument("--burn-in", type=int, dest="burn_in")
    sub.add_argument("--prior-var", type=float, dest="prior_var")
    sub.add_argument("--pg-trunc", type=int, dest="pg_trunc")
    sub.add_argument("--init-sd", type=float, dest="init_sd")
    sub.add_argument("--checkpoint-every", type=int, dest="checkpoint_every")
    sub.add_argument("--resume", help="checkpoint file to resume from")

    sub = new_sub("analyze", help="cluster / project / plot posterior draws")
    sub.add_argument("--draws", help="draws CSV from `zilr sample`")
    sub.add_argument("--restarts", type=int)
    sub.add_argument("--bins", type=int)

    sub = new_sub("simulate", help="repeated-simulation bias tables")
    sub.add_argument("--scenario",
                     choices=["VeryLow", "Low", "Moderate", "High"])
    sub.add_argument("--reps", type=int)
    sub.add_argument("--n", type=int)
    sub.add_argument("--methods")
    sub.add_argument("--full-scale", action="store_true", dest="full_scale",
                     help="run 10000 replications instead of the default 500")

    sub = new_sub("bimodality", help="posterior bimodality run")
    sub.add_argument("--scenario", choices=["S1", "S2", "S3"])
    sub.add_argument("--n", type=int)
    sub.add_argument("--replicas", type=int)
    sub.add_argument("--temp-ratio", type=float, dest="temp_ratio")
    sub.add_argument("--exchange-every", type=int, dest="exchange_every")
    sub.add_argument("--iters", type=int)
    sub.add_argument("--burn-in", type=int, dest="burn_in")
    sub.add_argument("--prior-var", type=float, dest="prior_var")
    sub.add_argument("--pg-trunc", type=int, dest="pg_trunc")

    sub = new_sub("signflip", help="misspecification sign-flip table")
    sub.add_argument("--a", type=float)
    sub.add_argument("--beta-intercept", type=float, dest="beta_intercept")
    sub.add_argument("--gamma-intercept", type=float, dest="gamma_intercept")
    sub.add_argument("--c-grid", dest="c_grid")
    sub.add_argument("--n-samples", type=int, dest="n_samples")

    sub = new_sub("diagnose", help="double-separation diagnostics")
    _add_data_flags(sub)
    sub.add_argument("--restarts", type=int)
    sub.add_argument("--iters", type=int)
    sub.add_argument("--tol", type=float)

    sub = new_sub("relabel", help="relabel a fitted pair against an LR fit")
    sub.add_argument("--params",
                     help="key = value file with beta, gamma, beta_lr vectors")

    return parser


def _resolve_opts(ns: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS[ns.command])
    given = {k: v for k, v in vars(ns).items() if k != "command"}
    if "config" in given:
        for key, value in read_kv(given.pop("config")).items():
            key = key.replace("-", "_")
            if key in opts and not isinstance(opts[key], str):
                kind = type(opts[key])
                value = (value.lower() in ("1", "true", "yes")
                         if kind is bool else kind(value))
            opts[key] = value
    opts.update(given)
    return opts


def cmd_fit(opts: dict, manifest: RunManifest) -> None:
    d = _load_dataset(opts, manifest)
    cfg = FitConfig(max_iters=opts["max_iters"], grad_tol=opts["grad_tol"],
                    init_sd=opts["init_sd"], seed=opts["seed"],
                    norm_cap=opts["norm_cap"], full_memory=opts["full_memory"])
    report = {"model": opts["model"], "seed": opts["seed"]}
    if opts["model"] == "lr":
        res = fit_logistic(d, cfg)
        header = [f"beta_{j}" for j in range(d.d)]
        values = res.params.beta
    else:
        res = fit_zilr(d, cfg)
        header = _param_header(d.d, d.p)
        values = res.params.concat()
        if opts.get("do_relabel"):
            lr = fit_logistic(d, cfg)
            chosen, which, (sq_o, sq_s) = relabel(res.params, lr.params.beta)
            values = chosen.concat()
            report.update(relabeled=which, sq_dist_original=sq_o,
                          sq_dist_swapped=sq_s)
    report.update(loglik=res.loglik, converged=res.converged,
                  iterations=res.iterations, grad_norm=res.grad_norm)
    est = os.path.join(manifest.out_dir, "estimate.csv")
    write_csv(est, header, [[repr(float(v)) for v in values]])
    rep = os.path.join(manifest.out_dir, "fit_report.txt")
    write_kv_report(rep, report)
    manifest.add(est, rep)
    print(f"loglik = {res.loglik!r}  converged = {res.converged}")


def cmd_sample(opts: dict, manifest: RunManifest) -> None:
    d = _load_dataset(opts, manifest)
    ckpt = None
    if opts["checkpoint_every"]:
        ckpt = os.path.join(manifest.out_dir, "checkpoint.npz")
    cfg = SamplerConfig(
        n_replicas=opts["replicas"], temp_ratio=opts["temp_ratio"],
        exchange_every=opts["exchange_every"], total_iters=opts["iters"],
        burn_in=opts["burn_in"], prior_var_beta=opts["prior_var"],
        prior_var_gamma=opts["prior_var"], pg_trunc=opts["pg_trunc"],
        seed=opts["seed"], init_sd=opts["init_sd"],
        checkpoint_path=ckpt, checkpoint_every=opts["checkpoint_every"])
    draws = run_sampler(d, cfg, resume_from=opts.get("resume"))
    path = os.path.join(manifest.out_dir, "draws.csv")
    write_csv(path, _param_header(d.d, d.p) + ["loglik"],
              ([repr(float(v)) for v in row] + [repr(float(ll))]
               for row, ll in zip(draws.draws, draws.loglik_trace)))
    rep = os.path.join(manifest.out_dir, "swap_report.txt")
    write_kv_report(rep, {
        "seed": opts["seed"],
        "kept_draws": draws.kept_iters,
        "temperatures": draws.temperatures,
        "swap_accept_rate": draws.swap_accept_rate,
        "mean_swap_accept_rate": float(draws.swap_accept_rate.mean())
        if draws.swap_accept_rate.size else 0.0,
    })
    manifest.add(path, rep)
    if ckpt and os.path.exists(ckpt):
        manifest.add(ckpt)
    print(f"kept {draws.kept_iters} draws -> {path}")


def _read_draws_csv(path: str) -> tuple[np.ndarray, list[str]]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    cols = [i for i, name in enumerate(header) if name != "loglik"]
    return body[:, cols], [header[i] for i in cols]


def cmd_analyze(opts: dict, manifest: RunManifest) -> None:
    if "draws" not in opts:
        raise UsageError("--draws is required")
    x, names = _read_draws_csv(opts["draws"])
    manifest.input_path = opts["draws"]
    manifest.input_sha256 = data_io.sha256_file(opts["draws"])
    clusters = kmeans2(x, seed=opts["seed"], restarts=opts["restarts"])
    proj = pca2(x)

    rep = os.path.join(manifest.out_dir, "cluster_report.txt")
    write_kv_report(rep, {
        "seed": opts["seed"],
        "cluster_sizes": clusters.sizes.astype(float),
        "cluster_proportions": clusters.proportions,
        "inertia": clusters.inertia,
        "degenerate": clusters.degenerate,
        "centroid_1": clusters.centroids[0],
        "centroid_2": clusters.centroids[1],
        "explained_variance": proj.explained_variance,
    })
    scores = os.path.join(manifest.out_dir, "pca_scores.csv")
    k = proj.scores.shape[1]
    write_csv(scores, [f"pc{j + 1}" for j in range(k)] + ["cluster"],
              ([repr(float(v)) for v in row] + [str(c)]
               for row, c in zip(proj.scores, clusters.assignments)))
    manifest.add(rep, scores)

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(4, 4))
    for label, marker in ((1, "o"), (2, "s")):
        mask = clusters.assignments == label
        y = proj.scores[mask, 1] if k > 1 else np.zeros(mask.sum())
        ax.scatter(proj.scores[mask, 0], y, s=4, marker=marker,
                   label=f"cluster {label}")
    ax.set_xlabel("pc1")
    ax.set_ylabel("pc2")
    ax.legend()
    fig.tight_layout()
    scatter = os.path.join(manifest.out_dir, "pca_scatter.svg")
    fig.savefig(scatter)
    plt.close(fig)
    manifest.add(scatter)
    manifest.add(*export_traces(x, manifest.out_dir, param_names=names,
                                bins=opts["bins"]))
    print(f"cluster proportions: {clusters.proportions}")


def cmd_simulate(opts: dict, manifest: RunManifest) -> None:
    reps = 10000 if opts.get("full_scale") else opts["reps"]
    scenario = simulation_scenario(opts["scenario"], reps=reps,
                                   n=opts["n"], seed=opts["seed"])
    methods = tuple(m.strip() for m in opts["methods"].split(",") if m.strip())
    summary = run_simulation(scenario, methods=methods)
    rows = []
    for method, ms in summary.methods.items():
        names = ([f"beta_{j}" for j in range(len(ms.bias))]
                 if method == "StandardLR"
                 else _param_header(len(ms.bias) // 2, len(ms.bias) // 2))
        for j, name in enumerate(names):
            rows.append([method, name, repr(float(ms.bias[j])),
                         repr(float(ms.sd[j])), ms.n_converged, ms.n_total])
        est = os.path.join(manifest.out_dir, f"estimates_{method}.csv")
        write_csv(est, names,
                  ([repr(float(v)) for v in row] for row in ms.estimates))
        manifest.add(est)
    table = os.path.join(manifest.out_dir, "bias_table.csv")
    write_csv(table, ["method", "parameter", "bias", "sd",
                      "n_used", "n_total"], rows)
    manifest.add(table)
    print(f"wrote {table}")


def _bimodality_sampler_cfg(opts: dict) -> SamplerConfig:
    return SamplerConfig(
        n_replicas=opts["replicas"], temp_ratio=opts["temp_ratio"],
        exchange_every=opts["exchange_every"], total_iters=opts["iters"],
        burn_in=opts["burn_in"], prior_var_beta=opts["prior_var"],
        prior_var_gamma=opts["prior_var"], pg_trunc=opts["pg_trunc"],
        seed=opts["seed"])


def cmd_bimodality(opts: dict, manifest: RunManifest) -> None:
    scenario = bimodality_scenario(opts["scenario"], n=opts["n"],
                                   seed=opts["seed"])
    report = run_bimodality(scenario, _bimodality_sampler_cfg(opts),
                            cluster_seed=opts["seed"])
    d_dim = scenario.beta_true.shape[0]
    path = os.path.join(manifest.out_dir, "draws.csv")
    write_csv(path, _param_header(d_dim, d_dim) + ["loglik"],
              ([repr(float(v)) for v in row] + [repr(float(ll))]
               for row, ll in zip(report.draws.draws,
                                  report.draws.loglik_trace)))
    rep = os.path.join(manifest.out_dir, "bimodality_report.txt")
    write_kv_report(rep, {
        "scenario": scenario.name,
        "seed": opts["seed"],
        "cluster_proportions": report.clusters.proportions,
        "centroid_1": report.clusters.centroids[0],
        "centroid_2": report.clusters.centroids[1],
        "swap_distance": report.swap_distance,
        "centroid_distance": report.centroid_distance,
        "clusters_swap_related": report.clusters_swap_related,
        "mean_swap_accept_rate": float(report.draws.swap_accept_rate.mean()),
    })
    scores = os.path.join(manifest.out_dir, "pca_scores.csv")
    k = report.projection.scores.shape[1]
    write_csv(scores, [f"pc{j + 1}" for j in range(k)] + ["cluster"],
              ([repr(float(v)) for v in row] + [str(c)]
               for row, c in zip(report.projection.scores,
                                 report.clusters.assignments)))
    manifest.add(path, rep, scores)
    print(f"cluster proportions: {report.clusters.proportions}")


def cmd_signflip(opts: dict, manifest: RunManifest) -> None:
    cfg = SignFlipConfig(
        a=opts["a"], beta_intercept=opts["beta_intercept"],
        gamma_intercept=opts["gamma_intercept"],
        c_grid=tuple(float(c) for c in opts["c_grid"].split(",")),
        n_samples=opts["n_samples"], seed=opts["seed"])
    rows = run_signflip(cfg)
    table = os.path.join(manifest.out_dir, "signflip.csv")
    write_csv(table, ["c", "t_star", "f_hat", "f_se", "converged"],
              ([repr(r.c), repr(r.t_star), repr(r.f_hat), repr(r.f_se),
                r.converged] for r in rows))
    manifest.add(table)
    flips = [r.c for r in rows if r.t_star < 0]
    print(f"wrote {table}; sign flips at c in {flips}")


def cmd_diagnose(opts: dict, manifest: RunManifest) -> None:
    d = _load_dataset(opts, manifest)
    cert = detect_double_separation(d, tol=opts["tol"])
    if cert.status is not SeparationStatus.DOUBLY_SEPARATED:
        cert = estimate_margin(d, restarts=opts["restarts"],
                               iters=opts["iters"], seed=opts["seed"],
                               tol=opts["tol"])
    rep = os.path.join(manifest.out_dir, "separation_report.txt")
    items = {"seed": opts["seed"]}
    items.update(cert.as_report())
    write_kv_report(rep, items)
    manifest.add(rep)
    print(f"status = {cert.status.value}  margin = {cert.margin!r}")


def cmd_relabel(opts: dict, manifest: RunManifest) -> None:
    if "params" not in opts:
        raise UsageError("--params is required")
    kv = read_kv(opts["params"])
    for key in ("beta", "gamma", "beta_lr"):
        if key not in kv:
            raise UsageError(f"params file missing {key!r}")
    pair = ParamPair(parse_vector(kv["beta"]), parse_vector(kv["gamma"]))
    chosen, which, (sq_orig, sq_swap) = relabel(pair, parse_vector(kv["beta_lr"]))
    manifest.input_path = opts["params"]
    manifest.input_sha256 = data_io.sha256_file(opts["params"])
    rep = os.path.join(manifest.out_dir, "relabel_report.txt")
    write_kv_report(rep, {
        "selected": which,
        "sq_dist_original": sq_orig,
        "sq_dist_swapped": sq_swap,
        "beta": chosen.beta,
        "gamma": chosen.gamma,
    })
    manifest.add(rep)
    print(f"selected = {which}")
    print(f"sq_dist_original = {sq_orig:.3f}")
    print(f"sq_dist_swapped = {sq_swap:.3f}")


COMMANDS = {
    "fit": cmd_fit,
    "sample": cmd_sample,
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "bimodality": cmd_bimodality,
    "signflip": cmd_signflip,
    "diagnose": cmd_diagnose,
    "relabel": cmd_relabel,
}


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, nonzero for usage errors.
        return 0 if exc.code == 0 else 1
    try:
        opts = _resolve_opts(ns)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest = RunManifest(command=ns.command,
                           config={k: v for k, v in sorted(opts.items())},
                           seed=opts.get("seed"),
                           out_dir=_out_dir(opts, ns.command))
    try:
        manifest.write()
        COMMANDS[ns.command](opts, manifest)
        manifest.write()  # refresh config echo (load_info etc.)
        manifest.finalize("complete")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        try:
            manifest.finalize("failed")
        except OSError:
            pass
        return 2
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
