"""Command-line entry point.

    pinnlab run --problem poisson-1 --optimizer multiadam --seeds 3 --out runs/p1
    pinnlab ablate-betas --out runs/betas
    pinnlab verify-scaling --problem poisson-8 --t 2 4 8
    pinnlab weights --sides 0.5 1 2 4 8 --run-dir runs/p1
    pinnlab oracle --problem burgers-1 --out burgers.csv

Config files are JSON objects whose keys are :class:`TrainConfig` fields,
optionally with a ``"runs"`` list of per-run overrides to form a grid.
``"problem"`` may also be an object describing a custom rectangle problem.
``--set key=value`` applies dotted overrides (values parsed as JSON when
possible) to every run.

Exit codes: 0 success, 1 bad config or arguments, 2 runtime failure,
3 scaling check out of tolerance.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from pinnlab import __version__, losses, metrics, network, optim, problems, trainer
from pinnlab.errors import ConfigError, PinnLabError
from pinnlab.oracles import GreenSeriesConfig, theoretical_weight
from pinnlab.trainer import TrainConfig

SEED_ENV = "PINNLAB_SEED"

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_TOLERANCE = 0, 1, 2, 3

METRIC_COLUMNS = ["run_id", "problem", "optimizer", "seed", "epoch", "loss_pde",
                  "loss_boundary", "mae", "rel_l2", "weight_estimate_pde"]
HISTORY_COLUMNS = ["run_id", "problem", "optimizer", "seed", "epoch", "loss_pde",
                   "loss_boundary", "loss_total"]
WEIGHT_COLUMNS = ["run_id", "problem", "optimizer", "seed", "epoch", "weight_estimate_pde",
                  "effective_weight_pde"]

FIELDS = {f.name for f in dataclasses.fields(TrainConfig)}


# config handling ------------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(doc: dict, assignment: str) -> None:
    key, sep, value = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    parts = key.split(".")
    node = doc
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"--set {key}: {p!r} is not an object")
        node = nxt
    node[parts[-1]] = _parse_value(value)


def load_config_file(path) -> dict:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return doc


def _seeds_from(value):
    if isinstance(value, int):
        if value < 1:
            raise ConfigError("seeds: need at least one seed")
        return list(range(value))
    if isinstance(value, str):
        value = [int(s) for s in value.split(",") if s.strip()]
    return list(value)


def build_config(entry: dict, where: str = "config") -> TrainConfig:
    entry = dict(entry)
    if isinstance(entry.get("problem"), dict):
        entry["custom_problem"] = entry["problem"]
        entry["problem"] = entry["problem"].get("name", "custom")
    unknown = sorted(set(entry) - FIELDS)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(unknown)}; "
                          f"valid fields: {', '.join(sorted(FIELDS))}")
    if "seeds" in entry:
        entry["seeds"] = _seeds_from(entry["seeds"])
    try:
        cfg = TrainConfig(**entry)
        cfg.resolve_problem()
    except KeyError as exc:
        raise ConfigError(f"{where}: {exc.args[0]}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return cfg


def expand(doc: dict) -> list[TrainConfig]:
    base = {k: v for k, v in doc.items() if k != "runs"}
    runs = doc.get("runs") or [{}]
    if not isinstance(runs, list):
        raise ConfigError("config: 'runs' must be a list of objects")
    return [build_config({**base, **r}, f"runs[{i}]" if "runs" in doc else "config")
            for i, r in enumerate(runs)]


def seed_shift(configs):
    """Apply the ``PINNLAB_SEED`` offset, if set."""
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return configs, None
    try:
        base = int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None
    return [dataclasses.replace(c, seeds=tuple(base + s for s in c.seeds)) for c in configs], base


# output files ---------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _config_dict(cfg: TrainConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["seeds"] = list(cfg.seeds)
    d["hidden_widths"] = list(cfg.hidden_widths)
    d["histogram_epochs"] = list(cfg.histogram_epochs)
    return d


def write_manifest(out: Path, configs, argv, overrides, seed_base, **extra) -> dict:
    manifest = {
        "tool": "pinnlab",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "argv": list(argv),
        "overrides": list(overrides),
        "seed_env": seed_base,
        "seeds": sorted({s for c in configs for s in c.seeds}),
        "output_dir": str(out),
        "started": datetime.now(timezone.utc).isoformat(),
        "configs": [_config_dict(c) for c in configs],
        **extra,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def write_outputs(out: Path, runs, rows) -> None:
    hist_rows, metric_rows, weight_rows, histos = [], [], [], {}
    for r in runs:
        for rep in r.history:
            hist_rows.append({
                "run_id": r.run_id, "problem": r.problem, "optimizer": r.label, "seed": r.seed,
                "epoch": rep.epoch, "loss_pde": rep.losses["pde"],
                "loss_boundary": rep.losses["boundary"], "loss_total": rep.total,
            })
        metric_rows += r.evals
        for w in r.weights:
            weight_rows.append({"run_id": r.run_id, "problem": r.problem, "optimizer": r.label,
                                "seed": r.seed, **w})
        if r.histograms:
            histos[r.run_id] = {
                str(ep): {g: {"edges": e.tolist(), "counts": c.tolist()} for g, (e, c) in hs.items()}
                for ep, hs in r.histograms.items()
            }
        network.save_checkpoint(out / "checkpoints" / r.run_id.replace("/", "__"), r.params, r.net)
    write_csv(out / "history.csv", HISTORY_COLUMNS, hist_rows)
    write_csv(out / "metrics.csv", METRIC_COLUMNS, metric_rows)
    write_csv(out / "weights.csv", WEIGHT_COLUMNS, weight_rows)
    (out / "histograms.json").write_text(json.dumps(histos))
    runs_doc = [{"run_id": r.run_id, "aborted_epoch": r.aborted_epoch, "wall_time": r.wall_time}
                for r in runs]
    (out / "runs.json").write_text(json.dumps(runs_doc, indent=2))
    (out / "summary.json").write_text(json.dumps(rows, indent=2))


def summary_from_files(out) -> list[dict]:
    """Recompute the suite table from metrics.csv, runs.json and the manifest."""
    out = Path(out)
    manifest = json.loads((out / "manifest.json").read_text())
    aborted = {r["run_id"]: r["aborted_epoch"] for r in json.loads((out / "runs.json").read_text())}
    rows = read_csv(out / "metrics.csv")
    last: dict[str, dict] = {}
    for row in rows:
        if row["run_id"] not in last or int(row["epoch"]) >= int(last[row["run_id"]]["epoch"]):
            last[row["run_id"]] = row
    table = []
    for c in manifest["configs"]:
        cfg = build_config(c)
        problem = cfg.resolve_problem().name
        ids = [f"{problem}/{cfg.name}/s{s}" for s in cfg.seeds]
        hp = cfg.hyperparams()
        entry = {"problem": problem, "optimizer": cfg.name, "beta1": hp.beta1, "beta2": hp.beta2,
                 "seeds": list(cfg.seeds), "aborted": [s for s, i in zip(cfg.seeds, ids) if aborted[i]]}
        if entry["aborted"]:
            entry["mae"] = entry["rel_l2"] = trainer.NA
        else:
            entry["mae"] = float(np.mean([float(last[i]["mae"]) for i in ids]))
            entry["rel_l2"] = float(np.mean([float(last[i]["rel_l2"]) for i in ids]))
        table.append(entry)
    return table


def print_table(rows, stream=sys.stdout) -> None:
    print(f"{'problem':<15}{'optimizer':<22}{'MAE':>12}{'rel L2':>12}", file=stream)
    for r in rows:
        mae = r["mae"] if isinstance(r["mae"], str) else f"{r['mae']:.3e}"
        rel = r["rel_l2"] if isinstance(r["rel_l2"], str) else f"{100 * r['rel_l2']:.2f}%"
        print(f"{r['problem']:<15}{r['optimizer']:<22}{mae:>12}{rel:>12}", file=stream)


# subcommands ----------------------------------------------------------------

def _run_configs(args, configs, argv) -> int:
    configs, seed_base = seed_shift(configs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = write_manifest(out, configs, argv, args.set or [], seed_base)
    try:
        runs, rows = trainer.run_suite(configs, workers=args.workers)
    except PinnLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    write_outputs(out, runs, rows)
    manifest["finished"] = datetime.now(timezone.utc).isoformat()
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    print_table(rows)
    return EXIT_OK


def _base_doc(args) -> dict:
    doc = load_config_file(args.config) if args.config else {}
    for key in ("problem", "optimizer", "epochs"):
        val = getattr(args, key, None)
        if val is not None:
            doc[key] = val
    if getattr(args, "seeds", None) is not None:
        doc["seeds"] = _parse_value(args.seeds)
    for assignment in args.set or []:
        apply_override(doc, assignment)
    return doc


def cmd_run(args, argv) -> int:
    return _run_configs(args, expand(_base_doc(args)), argv)


def cmd_ablate_betas(args, argv) -> int:
    doc = _base_doc(args)
    doc.setdefault("problem", "poisson-1")
    doc["optimizer"] = "multiadam"
    doc["runs"] = [{"beta1": b1, "beta2": b2, "label": f"multiadam({b1},{b2})"}
                   for b1, b2 in optim.BETA_GRID]
    return _run_configs(args, expand(doc), argv)


def cmd_verify_scaling(args, argv) -> int:
    try:
        problem = problems.get_problem(args.problem)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    if not problem.homogeneous:
        print(f"error: {problem.name} is not homogeneous (its operator mixes derivative orders or "
              "has a source term), so narrowing the domain does not rescale its loss by a fixed "
              "power of t", file=sys.stderr)
        return EXIT_CONFIG
    if any(t <= 0 for t in args.t):
        print("error: scale factors must be positive", file=sys.stderr)
        return EXIT_CONFIG
    k = problem.order
    net = network.MlpConfig(problem.domain.dim, (32, 32, 32), 1, problem.activation)
    worst = 0.0
    print(f"{'net':>4}{'t':>8}{'PDE ratio':>22}{'t^(2k)':>16}{'boundary ratio':>22}")
    for n in range(args.networks):
        params = network.init_glorot_normal(net, args.seed + n)
        for t in args.t:
            rf, rb = losses.verify_scaling(problem, params, net, t, args.seed + n)
            expect = t ** (2 * k)
            worst = max(worst, abs(rf / expect - 1.0), abs(rb - 1.0))
            print(f"{n:>4}{t:>8g}{rf:>22.15g}{expect:>16g}{rb:>22.17g}")
    ok = worst <= args.tol
    print(f"max relative deviation {worst:.3e} ({'ok' if ok else 'FAILED'}, tol {args.tol:g})")
    return EXIT_OK if ok else EXIT_TOLERANCE


def _problem_side(name: str) -> float | None:
    try:
        dom = problems.get_problem(name).domain
    except KeyError:
        return None
    return dom.bounds[0][1] - dom.bounds[0][0]


def cmd_weights(args, argv) -> int:
    if any(s <= 0 for s in args.sides):
        print("error: sides must be positive", file=sys.stderr)
        return EXIT_CONFIG
    cfg = GreenSeriesConfig(M=args.modes)
    doc = {"theory": {repr(float(s)): theoretical_weight(s, cfg) for s in args.sides}, "runs": {}}
    if args.run_dir:
        path = Path(args.run_dir) / "weights.csv"
        if path.exists():
            for row in read_csv(path):
                entry = doc["runs"].setdefault(row["run_id"], {
                    "problem": row["problem"], "optimizer": row["optimizer"],
                    "side": _problem_side(row["problem"]),
                    "epoch": [], "weight_estimate_pde": [], "effective_weight_pde": [],
                })
                entry["epoch"].append(int(row["epoch"]))
                entry["weight_estimate_pde"].append(float(row["weight_estimate_pde"]))
                entry["effective_weight_pde"].append(float(row["effective_weight_pde"]))
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return EXIT_OK


def cmd_oracle(args, argv) -> int:
    try:
        problem = problems.get_problem(args.problem)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    if args.fd_cells < 2:
        print("error: --fd-cells must be at least 2", file=sys.stderr)
        return EXIT_CONFIG
    try:
        dom = problem.domain
        if dom.kind == "spacetime1d":
            pts = metrics.grid_points(problem)
            ref = metrics.reference_values(problem, pts)
            cols = ["x", "t", "u"]
        else:
            (x0, x1), (y0, y1) = dom.bounds
            X, Y = np.meshgrid(np.linspace(x0, x1, 101), np.linspace(y0, y1, 101), indexing="ij")
            pts = np.column_stack([X.ravel(), Y.ravel()])
            keep = dom.outside_disks(pts)
            ref = np.full(len(pts), np.nan)
            ref[keep] = metrics.reference_values(problem, pts[keep], args.fd_cells)
            cols = ["x", "y", "u"]
    except PinnLabError as exc:
        print(f"error: oracle failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    rows = [dict(zip(cols, (float(a), float(b), float(u)))) for (a, b), u in zip(pts, ref)]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, cols, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _add_run_args(p, with_optimizer=True):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--problem", help="registered problem name")
    if with_optimizer:
        p.add_argument("--optimizer", choices=optim.OPTIMIZERS)
    p.add_argument("--seeds", help="seed count (e.g. 3) or comma list (e.g. 0,4,7)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted config override")
    p.add_argument("--out", default="runs/latest", help="output directory")
    p.add_argument("--workers", type=int, default=1, help="parallel runs")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pinnlab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"pinnlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train a suite of configurations")
    _add_run_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ablate-betas", help="MultiAdam over the betas grid")
    _add_run_args(p, with_optimizer=False)
    p.set_defaults(func=cmd_ablate_betas)

    p = sub.add_parser("verify-scaling", help="check the loss-scaling identity")
    p.add_argument("--problem", default="poisson-8")
    p.add_argument("--t", type=float, nargs="+", default=[2.0, 4.0, 8.0])
    p.add_argument("--networks", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_verify_scaling)

    p = sub.add_parser("weights", help="theoretical PDE-loss weights (and run estimates)")
    p.add_argument("--sides", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0, 8.0])
    p.add_argument("--run-dir", help="directory holding a weights.csv from a run")
    p.add_argument("--modes", type=int, default=80)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("oracle", help="dump a reference solution as CSV")
    p.add_argument("--problem", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fd-cells", type=int, default=512)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args, argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PinnLabError, FloatingPointError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
