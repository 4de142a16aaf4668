"""``loadshape`` command-line interface.

Exit status: 0 on success, 2 on invalid arguments or input (one diagnostic
line on stderr, nothing written), 1 on any other failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import cluster, formats, pld, predict, synth
from .curves import DayType, LoadCurve, period_matrix, smooth_values
from .errors import LoadShapeError

CLI_PERIOD_COUNTS = (1, 2, 3)
SEED_ENV = "LOADSHAPE_SEED"


class UsageError(LoadShapeError):
    """Invalid command-line parameters."""


@dataclass
class RunConfig:
    """Parsed and validated parameters of one invocation."""

    command: str
    args: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.args[name]
        except KeyError:
            raise AttributeError(name) from None


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _grid(text: str) -> tuple[float, float, int]:
    try:
        t0, t1, steps = text.split(":")
        return float(t0), float(t1), int(steps)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like t0:t1:steps, got {text!r}")


def validate(ns: argparse.Namespace) -> RunConfig:
    """Check every numeric parameter against its operation's preconditions."""
    args = dict(vars(ns))
    cmd = ns.command if ns.command != "pld" else f"pld {ns.pld_command}"
    if args.get("seed") is None:
        env = os.environ.get(SEED_ENV)
        try:
            args["seed"] = int(env) if env else 0
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}")
    if args.get("threads") is not None:
        _require(args["threads"] >= 1, "--threads must be at least 1")
    if "k" in args and args["k"] is not None:
        _require(args["k"] >= 1, "--k must be at least 1")
    if cmd == "cluster":
        _require(args["np"] in CLI_PERIOD_COUNTS, f"--np must be one of {CLI_PERIOD_COUNTS}")
    if "restarts" in args:
        _require(args["restarts"] >= 1, "--restarts must be at least 1")
    if "max_iter" in args:
        _require(args["max_iter"] >= 1, "--max-iter must be at least 1")
    if "smoothing" in args:
        _require(0.0 <= args["smoothing"] <= 1.0, "--smoothing must lie in [0, 1]")
    if "beta" in args:
        _require(0.0 < args["beta"] <= 1.0, "--beta must lie in (0, 1]")
    if cmd == "synth":
        _require(args["households"] >= 0, "--households must be non-negative")
        _require(args["days"] >= 1, "--days must be at least 1")
    if cmd == "select":
        _require(2 <= args["kmin"] <= args["kmax"] and args["kstep"] >= 1,
                 "need 2 <= --kmin <= --kmax and --kstep >= 1")
        _require(bool(args["np"]) and all(n in CLI_PERIOD_COUNTS for n in args["np"]),
                 f"--np values must come from {CLI_PERIOD_COUNTS}")
    if cmd.startswith("pld"):
        _require(args["alpha"] > 0, "--alpha must be positive")
    if cmd == "pld estimate":
        _require(args["frob"] > 0, "--frob must be positive")
        _require(args["l1"] >= 0, "--l1 must be non-negative")
    if cmd == "pld bounds":
        _require(args["rank"] is None or args["rank"] >= 1, "--rank must be at least 1")
        _require(args["grid"][2] >= 1, "--grid needs at least one step")
    for key in ("input", "history", "pred", "actual", "curve", "power", "model", "config"):
        paths = args.get(key)
        for path in ([paths] if isinstance(paths, str) else paths or []):
            _require(Path(path).is_file(), f"input file not found: {path}")
    return RunConfig(cmd, args)


# Subcommands ---------------------------------------------------------------------

def cmd_synth(cfg: RunConfig) -> None:
    archetypes = synth.load_archetypes(cfg.config)
    start = dt.date.fromisoformat(cfg.start_date)
    pop = synth.generate_population(archetypes, cfg.households, cfg.days, cfg.seed, start)
    formats.write_curves(cfg.out, pop.curves)
    if cfg.truth:
        truth = Path(cfg.truth)
        for house in pop.households:
            rows = []
            for c, A in zip(house.curves, house.usage):
                rows.extend([c.date.isoformat(), h, *map(float, A[h])] for h in range(A.shape[0]))
            formats.write_rows(truth / f"{house.household_id}.csv",
                               ["date", "hour", *house.columns], rows)
            formats.write_json(truth / f"{house.household_id}.power.json", {
                "archetype": house.archetype,
                "names": house.columns,
                "power": [float(p) for p in house.powers],
                "overflow_days": [d.isoformat() for d in house.overflow_days],
            })


def _prepared(curves: Sequence[LoadCurve], smoothing: float) -> np.ndarray:
    values = np.vstack([c.values for c in curves])
    if smoothing:
        values = np.vstack([smooth_values(v, smoothing) for v in values])
    return values


def cmd_cluster(cfg: RunConfig) -> None:
    curves = formats.read_curves(cfg.input)
    values = _prepared(curves, cfg.smoothing)
    ids = [c.curve_id for c in curves]
    models = predict.cluster_periods(values, cfg.k, cfg.np, cfg.seed, cfg.restarts,
                                     cfg.max_iter, metric=cfg.metric, curve_ids=ids)
    reports = {m.period: cluster.quality(m, period_matrix(values, cfg.np, m.period)) for m in models}
    formats.write_json(cfg.out, formats.model_to_dict(models, reports))


def _labels_for(model: cluster.ClusterModel, ids: Sequence[str], X: np.ndarray) -> np.ndarray:
    known = model.assignments
    nearest = np.argmin(cluster.cross_distance(X, model.prototypes, model.metric), axis=1) + 1
    return np.array([known.get(cid, int(n)) for cid, n in zip(ids, nearest)], dtype=int)


def cmd_quality(cfg: RunConfig) -> None:
    curves = formats.read_curves(cfg.input)
    values = np.vstack([c.values for c in curves])
    ids = [c.curve_id for c in curves]
    households = [c.household_id for c in curves]
    rows, entropy_rows, multi = [], [], False
    for path in cfg.model:
        for m in formats.read_model(path):
            multi = multi or m.n_periods > 1
            X = period_matrix(values, m.n_periods, m.period)
            bound = cluster.ClusterModel(m.metric, m.k, m.prototypes, _labels_for(m, ids, X), ids,
                                         m.period, m.n_periods, m.seed, m.medoids)
            rep = cluster.quality(bound, X, households, metric=cfg.metric)
            rows.append((m.k, cfg.metric or m.metric, m.period, rep.wc, rep.wb,
                         rep.wcbcr if rep.wcbcr is not None else float("nan")))
            entropy_rows.extend((m.k, m.metric, m.period, h, e) for h, e in rep.entropies.items())
    if multi:
        text = formats.write_rows(cfg.out, ["k", "metric", "period", "WC", "WB", "WCBCR"], rows)
    else:
        text = formats.write_rows(cfg.out, ["k", "metric", "WC", "WB", "WCBCR"],
                                  [(k, met, wc, wb, r) for k, met, _, wc, wb, r in rows])
    if cfg.entropy:
        formats.write_rows(cfg.entropy, ["k", "metric", "period", "household_id", "entropy"], entropy_rows)
    if cfg.out is None:
        sys.stdout.write(text)


def cmd_predict(cfg: RunConfig) -> None:
    curves = formats.read_curves(cfg.history)
    last: dict[str, dt.date] = {}
    for c in curves:
        last[c.household_id] = max(c.date, last.get(c.household_id, c.date))
    models = formats.read_model(cfg.model) if cfg.method == "markov" else None
    rows, sidecar = [], {}
    for house in predict.group_households(curves):
        target = last[house.household_id] + dt.timedelta(days=1)
        target_type = DayType.from_date(target)
        info = {"date": target.isoformat(), "method": cfg.method, "day_type": target_type.value}
        if cfg.method == "persistence":
            values = predict.persistence_forecast(house.values)
        else:
            split = len(set(house.day_types)) == 2
            fc = predict.forecast_next_day(
                house.values, [m.prototypes for m in models],
                house.day_types if split else None, target_type if split else None, cfg.beta)
            values = fc.values
            info.update(clusters=list(fc.indices), alpha=[float(a) for a in fc.alphas],
                        scaling=fc.scaling)
        sidecar[house.household_id] = info
        rows.append([house.household_id, target.isoformat(), *map(float, values)])
    formats.write_rows(cfg.out, formats.CURVE_HEADER, rows)
    formats.write_json(Path(cfg.out).with_suffix(".json"), sidecar)


def _read_table(path: str) -> dict[tuple[str, str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != formats.CURVE_HEADER:
            raise formats.FormatError(f"{path}: expected header {','.join(formats.CURVE_HEADER)}")
        out = {}
        for row in reader:
            if row:
                out[(row[0], row[1])] = np.asarray([float(v) for v in row[2:]], dtype=float)
    return out


def cmd_evaluate(cfg: RunConfig) -> None:
    pred = _read_table(cfg.pred)
    actual = {(c.household_id, c.date.isoformat()): c.values for c in formats.read_curves(cfg.actual)}
    rows, errors = [], []
    for key in sorted(pred):
        if key not in actual:
            continue
        e = predict.dtwe(pred[key], actual[key])
        errors.append(e)
        rows.append((key[0], key[1], e))
    if not errors:
        raise UsageError("no forecast matches an actual curve (household_id, date)")
    rows.append(("mean", "", float(np.mean(errors))))
    text = formats.write_rows(cfg.out, ["household_id", "date", "dtwe"], rows)
    if cfg.out is None:
        sys.stdout.write(text)


def cmd_select(cfg: RunConfig) -> None:
    curves = formats.read_curves(cfg.input)
    k_grid = list(range(cfg.kmin, cfg.kmax + 1, cfg.kstep))
    result = predict.model_select(curves, k_grid, cfg.np, cfg.seed, cfg.restarts)
    if cfg.format == "long":
        header = ["K", "n_p", "mean_dtwe", "weekday_dtwe", "weekend_dtwe", "folds"]
        rows = [(r.k, r.n_periods, r.mean_dtwe,
                 "" if r.weekday_dtwe is None else r.weekday_dtwe,
                 "" if r.weekend_dtwe is None else r.weekend_dtwe, r.folds) for r in result]
    else:
        table = {(r.k, r.n_periods): r.mean_dtwe for r in result}
        header = ["K", *(f"n_p={n}" for n in cfg.np)]
        rows = [(k, *(table[(k, n)] for n in cfg.np)) for k in k_grid]
    text = formats.write_rows(cfg.out, header, rows)
    if cfg.out is None:
        sys.stdout.write(text)


def _single_curve(path: str, row: int) -> LoadCurve:
    curves = formats.read_curves(path)
    if not 0 <= row < len(curves):
        raise UsageError(f"{path} has no row {row}")
    return curves[row]


def cmd_pld_estimate(cfg: RunConfig) -> None:
    x = _single_curve(cfg.curve, cfg.row).values
    pv, names = formats.read_power(cfg.power, cfg.alpha)
    if cfg.l1 > 0:
        est = pld.sparse_pld(x, pv, frob=cfg.frob, l1=cfg.l1)
    else:
        est = pld.pld_estimate(x, pv)
    formats.write_rows(cfg.out, names, ([float(v) for v in row] for row in est.A))


def cmd_pld_bounds(cfg: RunConfig) -> None:
    pred = _single_curve(cfg.pred, cfg.row)
    same_day = [c for c in formats.read_curves(cfg.actual)
                if (c.household_id, c.date) == (pred.household_id, pred.date)]
    x = same_day[0].values if same_day else _single_curve(cfg.actual, cfg.row).values
    x_hat = pred.values
    pv, _ = formats.read_power(cfg.power, cfg.alpha)
    bd = pld.BoundDistribution.from_curves(x, x_hat, pv, cfg.rank)
    t0, t1, steps = cfg.grid
    ts = np.linspace(t0, t1, steps)
    lower = np.atleast_1d(pld.bound_cdf_lower(ts, bd))
    upper = np.atleast_1d(pld.bound_cdf_upper(ts, bd))
    formats.write_rows(cfg.out, ["t", "F_lower", "F_upper"],
                       ((float(t), float(lo), float(up)) for t, lo, up in zip(ts, lower, upper)))


COMMANDS = {
    "synth": cmd_synth,
    "cluster": cmd_cluster,
    "quality": cmd_quality,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "select": cmd_select,
    "pld estimate": cmd_pld_estimate,
    "pld bounds": cmd_pld_bounds,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="loadshape", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for distance computations (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def seeded(p):
        p.add_argument("--seed", type=int, default=None, help=f"random seed (default: ${SEED_ENV} or 0)")

    p = sub.add_parser("synth", help="generate a synthetic household population")
    p.add_argument("--config", default=None, help="archetype JSON (default: bundled benchmark)")
    p.add_argument("--households", type=int, default=20, help="households per archetype")
    p.add_argument("--days", type=int, default=22)
    p.add_argument("--start-date", default=synth.DEFAULT_START.isoformat())
    p.add_argument("--out", required=True)
    p.add_argument("--truth", default=None, help="directory for true usage matrices")
    seeded(p)

    p = sub.add_parser("cluster", help="cluster load curves (per period)")
    p.add_argument("--input", required=True)
    p.add_argument("--metric", choices=cluster.METRICS, default="dtw")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--np", type=int, default=1)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--smoothing", type=float, default=0.0)
    p.add_argument("--out", required=True)
    seeded(p)

    p = sub.add_parser("quality", help="WC / WB / WCBCR of one or more cluster models")
    p.add_argument("--model", action="append", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--metric", choices=cluster.METRICS, default=None,
                   help="score with this metric instead of each model's own")
    p.add_argument("--entropy", default=None, help="write per-household entropies here")
    p.add_argument("--out", default=None)

    p = sub.add_parser("predict", help="forecast the next day of every household")
    p.add_argument("--model", default=None)
    p.add_argument("--history", required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--method", choices=("markov", "persistence"), default="markov")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="DTWE of forecasts against actual curves")
    p.add_argument("--pred", required=True)
    p.add_argument("--actual", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("select", help="leave-one-out DTWE over a K x n_p grid")
    p.add_argument("--input", required=True)
    p.add_argument("--kmin", type=int, default=2)
    p.add_argument("--kmax", type=int, default=26)
    p.add_argument("--kstep", type=int, default=2)
    p.add_argument("--np", type=_int_list, default=[1, 2, 3])
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--format", choices=("wide", "long"), default="wide")
    p.add_argument("--out", default=None)
    seeded(p)

    p = sub.add_parser("pld", help="power level decomposition")
    pld_sub = p.add_subparsers(dest="pld_command", required=True, parser_class=_Parser)
    q = pld_sub.add_parser("estimate", help="usage matrix of one load curve")
    q.add_argument("--curve", required=True)
    q.add_argument("--row", type=int, default=0)
    q.add_argument("--power", required=True)
    q.add_argument("--alpha", type=float, default=1.0)
    q.add_argument("--l1", type=float, default=0.0)
    q.add_argument("--frob", type=float, default=1.0)
    q.add_argument("--out", required=True)
    q = pld_sub.add_parser("bounds", help="CDFs of the PLD prediction-error bounds")
    q.add_argument("--pred", required=True)
    q.add_argument("--actual", required=True)
    q.add_argument("--row", type=int, default=0)
    q.add_argument("--power", required=True)
    q.add_argument("--alpha", type=float, default=1.0)
    q.add_argument("--rank", type=int, default=None)
    q.add_argument("--grid", type=_grid, default=(0.0, 2.0, 201))
    q.add_argument("--out", required=True)
    return parser


def _set_threads(n: int | None) -> None:
    import numba
    if n is not None:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def run(argv: Sequence[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = validate(ns)
        if cfg.command == "predict" and cfg.method == "markov" and not cfg.model:
            raise UsageError("--model is required for the markov method")
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (LoadShapeError, ValueError) as exc:
        print(f"loadshape: error: {exc}", file=sys.stderr)
        return 2
    try:
        _set_threads(cfg.threads)
        COMMANDS[cfg.command](cfg)
    except (LoadShapeError, FileNotFoundError) as exc:
        print(f"loadshape: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - exit status 1 contract
        print(f"loadshape: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
