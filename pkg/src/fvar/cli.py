"""Command line interface.

Subcommands: simulate, fpca, fit, evaluate, stability, figure1.  Options
can come from flags or from a JSON file passed with --config; explicit
flags win.  Commands that draw random numbers require a seed.  Exit
codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, io
from .errors import DataError, FvarError, NumericalError, UsageError
from .grids import Grid
from .pipeline import (DEFAULT_ETA_GRID, DEFAULT_Q_GRID, FitConfig, fit_vfar)
from .simulate import gen_transition, simulate_panel
from .stability import figure_curves, stability_measure, upper_triangular_model
from .vfar import PathSpec

_STOCHASTIC = ("simulate", "fpca", "fit", "evaluate")


class _Parser(argparse.ArgumentParser):
    """Argument parser whose failures surface as usage errors (exit 1)."""

    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in str(text).split(","))
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(v) for v in str(text).split(","))
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="fvar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(sp):
        sp.add_argument("--config", help="JSON file with option defaults")
        sp.add_argument("--seed", type=int, help="random seed (required for "
                        "stochastic commands)")
        sp.add_argument("--threads", type=int,
                        help="accepted for compatibility; computation is serial")
        sp.add_argument("--fast", action="store_true", default=None,
                        help="allow out-of-order reductions; serial runs are "
                        "deterministic either way, so this changes nothing")

    sp = sub.add_parser("simulate", help="draw a synthetic curve panel")
    common(sp)
    sp.add_argument("--model", choices=("sparse", "banded"))
    sp.add_argument("--n", type=int, help="panel length")
    sp.add_argument("--p", type=int, help="number of variables")
    sp.add_argument("--out", help="output panel CSV path")
    sp.add_argument("--noise-sd", type=float, dest="noise_sd")
    sp.add_argument("--burn-in", type=int, dest="burn_in")
    sp.add_argument("--rep", type=int, help="replicate index within the seed")
    sp.add_argument("--grid-size", type=int, dest="grid_size")
    sp.add_argument("--latent-out", dest="latent_out",
                    help="also write the noise-free curves here")
    sp.add_argument("--truth", help="write the generating transition "
                    "(coefficient blocks, support, kappa) to this JSON path")

    sp = sub.add_parser("fpca", help="cross-validated principal components")
    common(sp)
    sp.add_argument("--input", help="panel CSV path")
    sp.add_argument("--out", help="component summary JSON path")
    sp.add_argument("--scores-out", dest="scores_out", help="scores CSV path")
    sp.add_argument("--q", type=int, help="fixed component count (skips CV's q)")
    sp.add_argument("--q-grid", type=_int_list, dest="q_grid")
    sp.add_argument("--eta-grid", type=_float_list, dest="eta_grid")
    sp.add_argument("--folds", type=int)
    sp.add_argument("--basis-size", type=int, dest="basis_size")
    sp.add_argument("--degree", type=int)
    sp.add_argument("--report", help="directory for rendered figures")

    sp = sub.add_parser("fit", help="sparse functional autoregression")
    common(sp)
    sp.add_argument("--input", help="panel CSV path")
    sp.add_argument("--out", help="fitted model JSON path")
    sp.add_argument("--L", type=int, dest="L", help="autoregressive order")
    sp.add_argument("--criterion", choices=("aic", "bic"))
    sp.add_argument("--q", type=int, help="fixed component count (skips CV's q)")
    sp.add_argument("--q-grid", type=_int_list, dest="q_grid")
    sp.add_argument("--eta-grid", type=_float_list, dest="eta_grid")
    sp.add_argument("--folds", type=int)
    sp.add_argument("--basis-size", type=int, dest="basis_size")
    sp.add_argument("--degree", type=int)
    sp.add_argument("--gamma-num", type=int, dest="gamma_num",
                    help="number of penalty path points")
    sp.add_argument("--gamma-eps", type=float, dest="gamma_eps",
                    help="smallest penalty as a fraction of the largest")
    sp.add_argument("--kernels-out", dest="kernels_out",
                    help="prefix for the reconstructed kernel array")
    sp.add_argument("--report", help="directory for rendered figures")

    sp = sub.add_parser("evaluate", help="replicated simulation study")
    common(sp)
    sp.add_argument("--study", help="study specification JSON path")
    sp.add_argument("--out", help="results JSON path")
    sp.add_argument("--table", help="summary table CSV path")
    sp.add_argument("--report", help="directory for rendered figures")

    sp = sub.add_parser("stability", help="stability measure of a two-"
                        "dimensional model")
    common(sp)
    sp.add_argument("--a", type=float, help="diagonal transition level")
    sp.add_argument("--b", type=float, help="off-diagonal transition level")
    sp.add_argument("--sigma2", type=float, help="innovation variance")
    sp.add_argument("--grid", "--theta-grid", type=int, dest="theta_grid",
                    help="frequency grid size")
    sp.add_argument("--out", help="report JSON path")

    sp = sub.add_parser("figure1", help="stability measure curves and figure")
    common(sp)
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--a-values", type=_float_list, dest="a_values")
    sp.add_argument("--b-values", type=_float_list, dest="b_values")
    sp.add_argument("--sigma2", type=float)
    sp.add_argument("--grid", "--theta-grid", type=int, dest="theta_grid")
    return parser


# ---------------------------------------------------------------------------
# option resolution

class _Options:
    """Flag values merged over a config file; flags win."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._cfg = {}
        self.effective = {"command": args.command}
        cfg_path = self._args.get("config")
        if cfg_path:
            loaded = io.read_json(cfg_path)
            if not isinstance(loaded, dict):
                raise DataError(f"{cfg_path}: config must be a JSON object")
            self._cfg = loaded

    def get(self, name, default=None, required=False):
        v = self._args.get(name)
        if v is None:
            v = self._cfg.get(name, default)
        if v is None and required:
            raise UsageError(f"--{name.replace('_', '-')} is required")
        self.effective[name] = v
        return v

    def seed(self) -> int:
        v = self.get("seed", required=True)
        if int(v) < 0:
            raise UsageError("seed must be a non-negative integer")
        return int(v)

    def hash(self) -> str:
        return io.config_hash(self.effective)


def _fit_config(o: _Options, with_path: bool = True) -> FitConfig:
    num = o.get("gamma_num", 50) if with_path else 50
    eps = o.get("gamma_eps", 1e-3) if with_path else 1e-3
    return FitConfig(
        L=int(o.get("L", 1)),
        q_grid=tuple(o.get("q_grid", DEFAULT_Q_GRID)),
        eta_grid=tuple(o.get("eta_grid", DEFAULT_ETA_GRID)),
        folds=int(o.get("folds", 5)),
        criterion=o.get("criterion", "bic"),
        basis_size=int(o.get("basis_size", 15)),
        degree=int(o.get("degree", 3)),
        path=PathSpec(num=int(num), eps=float(eps)),
        q_fixed=(int(o.get("q")) if o.get("q") is not None else None),
    )


def _report_dir(o: _Options) -> Path | None:
    rep = o.get("report")
    if rep is None:
        return None
    path = Path(rep)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands

def _cmd_simulate(o: _Options) -> int:
    model = o.get("model", required=True)
    n = int(o.get("n", required=True))
    p = int(o.get("p", required=True))
    seed = o.seed()
    out = o.get("out", required=True)
    noise_sd = float(o.get("noise_sd", 0.5))
    burn_in = int(o.get("burn_in", 200))
    rep = int(o.get("rep", 0))
    grid = Grid.uniform(int(o.get("grid_size", 50)))
    latent_out = o.get("latent_out")
    truth_out = o.get("truth")

    transition = gen_transition(model, p, seed, rep=rep)
    observed, latent = simulate_panel(transition, n, grid, noise_sd=noise_sd,
                                      burn_in=burn_in, seed=seed, rep=rep)
    h = o.hash()
    io.write_panel_csv(out, observed, seed=seed, cfg_hash=h)
    if latent_out:
        io.write_panel_csv(latent_out, latent, seed=seed, cfg_hash=h)
    if truth_out:
        io.write_json(truth_out, {
            "provenance": io.provenance_dict(seed, h),
            "model": transition.model,
            "p": transition.p,
            "d": transition.d,
            "kappa": transition.kappa,
            "support": transition.support.astype(int).tolist(),
            "B": transition.B.tolist(),
        })
    print(f"wrote {out} ({n} x {p} x {grid.size})")
    return 0


def _load_panel(o: _Options):
    path = o.get("input", required=True)
    return io.read_panel_csv(path)


def _cmd_fpca(o: _Options) -> int:
    from .pipeline import fit_fpca, truncate_components

    panel = _load_panel(o)
    seed = o.seed()
    out = o.get("out", required=True)
    scores_out = o.get("scores_out")
    config = _fit_config(o, with_path=False)
    h = o.hash()

    fpca_list = fit_fpca(panel, config, seed,
                         store_extra=config.q_fixed or 0)
    if config.q_fixed is not None:
        fpca_list = [truncate_components(f, min(config.q_fixed, f.q))
                     for f in fpca_list]
    summary = {
        "provenance": io.provenance_dict(seed, h),
        "variables": [
            {
                "j": j + 1,
                "q": int(f.q),
                "eta": float(f.eta),
                "cv_q": int(f.diagnostics["cv_q"]),
                "cv_eta": float(f.diagnostics["cv_eta"]),
                "eigenvalues": [float(v) for v in f.eigenvalues],
            }
            for j, f in enumerate(fpca_list)
        ],
    }
    io.write_json(out, summary)
    if scores_out:
        rows = []
        for j, f in enumerate(fpca_list):
            n, q = f.scores.shape
            for t in range(n):
                for l in range(q):
                    rows.append({"t": t + 1, "j": j + 1, "l": l + 1,
                                 "score": float(f.scores[t, l])})
        io.write_table_csv(scores_out, rows, ["t", "j", "l", "score"],
                           seed=seed, cfg_hash=h)
    report = _report_dir(o)
    if report is not None:
        from .plots import eigenfunction_figure
        eigenfunction_figure(fpca_list, panel.grid, report / "eigenfunctions.png")
    print(f"wrote {out}")
    return 0


def _cmd_fit(o: _Options) -> int:
    panel = _load_panel(o)
    seed = o.seed()
    out = o.get("out", required=True)
    config = _fit_config(o)
    kernels_out = o.get("kernels_out")
    h = o.hash()

    fit = fit_vfar(panel, seed, config)
    io.write_json(out, io.fit_to_dict(fit, seed=seed, cfg_hash=h))
    if kernels_out:
        io.save_kernels(kernels_out, fit.kernels, seed=seed, cfg_hash=h)
    report = _report_dir(o)
    if report is not None:
        from .plots import edge_norm_figure
        edge_norm_figure(fit.kernels, report / "edge_norms.png")
    print(f"wrote {out} ({len(fit.edge_set())} edges)")
    return 0


def _cmd_evaluate(o: _Options) -> int:
    from .evaluate import METHODS, concentration_experiment, run_study

    study_path = o.get("study", required=True)
    seed = o.seed()
    out = str(o.get("out", required=True))
    table = o.get("table")
    spec = io.read_json(study_path)
    if not isinstance(spec, dict):
        raise DataError(f"{study_path}: study spec must be a JSON object")
    o.effective["study_spec"] = spec
    h = o.hash()

    # --out may name a directory; results.json and tables.csv go inside
    if out.endswith(("/", "\\")) or Path(out).is_dir():
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        out = str(out_dir / "results.json")
        if table is None:
            table = str(out_dir / "tables.csv")

    for key in ("models", "sizes", "replicates"):
        if key not in spec:
            raise DataError(f"{study_path}: study spec lacks {key!r}")
    replicates = int(spec["replicates"])
    config = FitConfig(
        L=int(spec.get("L", 1)),
        q_grid=tuple(spec.get("q_grid", DEFAULT_Q_GRID)),
        eta_grid=tuple(spec.get("eta_grid", DEFAULT_ETA_GRID)),
        folds=int(spec.get("folds", 5)),
        basis_size=int(spec.get("basis_size", 15)),
        degree=int(spec.get("degree", 3)),
        path=PathSpec(num=int(spec.get("gamma_num", 50)),
                      eps=float(spec.get("gamma_eps", 1e-3))),
    )
    results = run_study(
        models=list(spec["models"]),
        sizes=[tuple(sz) for sz in spec["sizes"]],
        methods=tuple(spec.get("methods", METHODS)),
        replicates=replicates,
        seed=seed,
        criterion=spec.get("criterion", "bic"),
        config=config,
    )
    payload = {
        "provenance": io.provenance_dict(seed, h),
        "criterion": results["criterion"],
        "tables": results["tables"],
        "roc": results["roc"],
    }
    conc = spec.get("concentration")
    if conc:
        payload["concentration"] = concentration_experiment(
            seed=seed,
            p=int(conc.get("p", 10)),
            ns=tuple(int(v) for v in conc.get("ns", (100, 200, 400, 800))),
            replicates=int(conc.get("replicates", 20)),
            a_values=tuple(float(v) for v in conc.get("a_values", (0.0, 0.6))),
        )
    io.write_json(out, payload)
    if table:
        io.write_table_csv(
            table, results["tables"],
            ["model", "n", "p", "method", "metric", "mean", "se", "replicates"],
            seed=seed, cfg_hash=h)
    report = _report_dir(o)
    if report is not None:
        from .plots import concentration_figure, roc_figure
        roc_figure(results["roc"], report / "roc.png")
        if conc:
            concentration_figure(payload["concentration"]["rows"],
                                 payload["concentration"]["slopes"],
                                 report / "concentration.png")
    print(f"wrote {out}")
    return 0


def _cmd_stability(o: _Options) -> int:
    a = float(o.get("a", required=True))
    b = float(o.get("b", required=True))
    sigma2 = float(o.get("sigma2", 1.0))
    grid_size = int(o.get("theta_grid", 4096))
    out = o.get("out", required=True)
    h = o.hash()

    model = upper_triangular_model(a, b, sigma2)
    report = stability_measure(model, grid_size)
    payload = {"provenance": io.provenance_dict(None, h),
               "a": a, "b": b, "sigma2": sigma2}
    payload.update(report.to_dict())
    io.write_json(out, payload)
    print(f"wrote {out} (measure {report.m_fx!r})")
    return 0


def _cmd_figure1(o: _Options) -> int:
    from .plots import stability_figure

    out = Path(o.get("out", required=True))
    a_values = o.get("a_values", tuple(round(0.05 * i, 2) for i in range(20)))
    b_values = o.get("b_values", (0.0, 0.5, 1.0, 2.0))
    sigma2 = float(o.get("sigma2", 1.0))
    grid_size = int(o.get("theta_grid", 4096))
    h = o.hash()

    out.mkdir(parents=True, exist_ok=True)
    rows = figure_curves(a_values, b_values, sigma2=sigma2, grid_size=grid_size)
    io.write_table_csv(out / "stability_curves.csv", rows,
                       ["a", "b", "op_norm", "m_fx"], cfg_hash=h)
    stability_figure(rows, out / "stability.png")
    print(f"wrote {out}/stability_curves.csv and {out}/stability.png")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fpca": _cmd_fpca,
    "fit": _cmd_fit,
    "evaluate": _cmd_evaluate,
    "stability": _cmd_stability,
    "figure1": _cmd_figure1,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand is required")
        return _COMMANDS[args.command](_Options(args))
    except UsageError as exc:
        print(f"fvar: error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"fvar: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"fvar: numerical error: {exc}", file=sys.stderr)
        return 3
    except FvarError as exc:
        print(f"fvar: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
