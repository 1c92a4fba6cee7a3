"""Command-line interface, CSV ingestion and JSON model files.

Exit codes: 0 success, 1 data error, 2 configuration error, 3 solver divergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, SolverDiverged, VersionError
from .exp_family import FAMILIES, get_family
from .gmd_solver import CoefBlocks, SolverConfig
from .sim_bench import SCENARIOS, SimScenario, run_table
from .spline_basis import BasisSpec, expand_design
from .two_step import PathConfig, TwoStepResult, fit_two_step, linear_predictor

FORMAT_VERSION = 1
MISSING = {"", "na", "nan", "null", "none"}

log = logging.getLogger("hdgam")


# ---------------------------------------------------------------- CSV input

def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV with a header row.

    Missing cells (empty, NA, NaN) and non-numeric cells raise
    :class:`DataError` naming the data row (1-based, header excluded) and column.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"data file {path} does not exist")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty; a header row is required") from None
        if len(set(header)) != len(header):
            raise DataError(f"{path} has duplicate column names")
        rows = []
        for i, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise DataError(f"row {i} has {len(rec)} fields, expected {len(header)}")
            vals = []
            for name, cell in zip(header, rec):
                cell = cell.strip()
                if cell.lower() in MISSING:
                    raise DataError(f"missing value at row {i}, column {name!r}")
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"non-numeric value {cell!r} at row {i}, column {name!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"non-finite value at row {i}, column {name!r}")
                vals.append(v)
            rows.append(vals)
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, data


def _fmt(v) -> str:
    return repr(float(v))


def write_csv(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


# ---------------------------------------------------------------- model files

def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def model_to_dict(result: TwoStepResult, features, response, config: dict, seed=None) -> dict:
    sel = result.selected
    basis = []
    for spec, sl in zip(result.specs, sel.block_index):
        d = spec.to_dict()
        d["col_center"] = [float(c) for c in result.col_center[sl]]
        basis.append(d)
    return {
        "format_version": FORMAT_VERSION,
        "family": result.family.tag,
        "features": list(features),
        "response": response,
        "basis": basis,
        "intercept": float(sel.intercept),
        "blocks": [[float(v) for v in b] for b in sel.blocks],
        "support": sorted(int(j) for j in sel.support),
        "screening_lambda": float(result.screening_lambda),
        "screening_support": sorted(int(j) for j in result.screening.support),
        "adaptive_lambda": float(result.selected_lambda),
        "gic": float(result.gic),
        "deviance": float(result.adaptive_path[result.selected_index].deviance),
        "provenance": {"seed": seed, "config_hash": config_hash(config), "config": config},
    }


def save_model(path, model: dict):
    Path(path).write_text(json.dumps(model, indent=2, sort_keys=True) + "\n")


class LoadedModel:
    """A persisted model ready for prediction."""

    def __init__(self, d: dict):
        version = d.get("format_version")
        if version != FORMAT_VERSION:
            raise VersionError(f"model format_version {version!r} is not supported (expected {FORMAT_VERSION})")
        try:
            self.family = get_family(d["family"])
            self.features = list(d["features"])
            self.specs = [BasisSpec.from_dict(b) for b in d["basis"]]
            self.col_center = np.array([c for b in d["basis"] for c in b["col_center"]], dtype=float)
            beta = np.array([v for blk in d["blocks"] for v in blk], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed model file: {exc}") from None
        index, start = [], 0
        for s in self.specs:
            index.append(slice(start, start + s.num_basis))
            start += s.num_basis
        self.coef = CoefBlocks(float(d["intercept"]), beta, index)
        self.raw = d

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        design = expand_design(X.reshape(-1, len(self.specs)), self.specs, col_center=self.col_center)
        eta = linear_predictor(design, self.coef)
        return eta, self.family.inverse_link(eta)


def load_model(path) -> LoadedModel:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"model file {path} does not exist")
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"model file {path} is not valid JSON: {exc}") from None
    return LoadedModel(d)


# ---------------------------------------------------------------- commands

def _path_config(args) -> PathConfig:
    solver = SolverConfig(max_cycles=args.max_cycles, majorizer=args.majorizer)
    return PathConfig(n_lambda=args.path_len, smooth_lambda=args.smooth_lambda, gic_a_n=args.a_n, solver=solver)


def cmd_fit(args) -> int:
    header, data = read_csv(args.data)
    if args.response not in header:
        raise ConfigError(f"response column {args.response!r} not found in {args.data}")
    if args.features:
        features = [f.strip() for f in args.features.split(",")]
        missing = [f for f in features if f not in header]
        if missing:
            raise ConfigError(f"feature column(s) {missing} not found in {args.data}")
    else:
        features = [h for h in header if h != args.response]
    if not features:
        raise ConfigError("no feature columns")
    X = data[:, [header.index(f) for f in features]]
    y = data[:, header.index(args.response)]
    cfg = _path_config(args)
    result = fit_two_step(X, y, args.family, args.order, args.m, cfg)
    config = {"family": args.family, "order": args.order, "m": args.m, "path": cfg.to_dict(),
              "features": features, "response": args.response}
    model = model_to_dict(result, features, args.response, config, args.seed)
    if args.out:
        save_model(args.out, model)
    if args.emit_path:
        sel = result.selected_index
        write_csv(
            args.emit_path,
            ["index", "lambda", "deviance", "support_size", "gic", "selected"],
            [[i, e.lam, e.deviance, e.support_size, e.gic, int(i == sel)]
             for i, e in enumerate(result.adaptive_path.entries)],
        )
    names = [features[j] for j in sorted(result.selected.support)]
    print(f"selected: {', '.join(names) if names else '(none)'}")
    print(f"gic: {result.gic!r}")
    print(f"deviance: {result.adaptive_path[result.selected_index].deviance!r}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    header, data = read_csv(args.data)
    missing = [f for f in model.features if f not in header]
    if missing:
        raise ConfigError(f"data is missing model feature column(s) {missing}")
    X = data[:, [header.index(f) for f in model.features]] if data.size else np.zeros((0, len(model.features)))
    if X.shape[0]:
        eta, mean = model.predict(X)
    else:
        eta = mean = np.zeros(0)
    write_csv(args.out, ["row_id", "eta", "mean"], [[i, e, m] for i, (e, m) in enumerate(zip(eta, mean))])
    return 0


def parse_custom(spec: str) -> SimScenario:
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) != 6:
        raise ConfigError("--custom expects n,p,s,family,t,scale")
    try:
        n, p, s = int(parts[0]), int(parts[1]), int(parts[2])
        t, scale = float(parts[4]), float(parts[5])
    except ValueError as exc:
        raise ConfigError(f"bad --custom value: {exc}") from None
    return SimScenario(n, p, s, parts[3], t, scale)


SIM_COLUMNS = ["scenario", "reps", "nv", "nv_se", "tpr", "tpr_se", "fpr", "fpr_se", "pe", "pe_se", "dev", "dev_se"]


def cmd_simulate(args) -> int:
    if args.custom:
        scn, name = parse_custom(args.custom), "custom"
    elif args.scenario in SCENARIOS:
        scn, name = SCENARIOS[args.scenario], args.scenario
    else:
        raise ConfigError(f"unknown scenario {args.scenario!r}; choose from {', '.join(SCENARIOS)}")
    scn = SimScenario(**{**scn.__dict__, "seed": args.seed})
    table = run_table(scn, args.reps, _path_config(args), args.order, args.m)
    d = table.as_dict()
    row = [name, args.reps] + [d[c] for c in SIM_COLUMNS[2:]]
    if args.out:
        write_csv(args.out, SIM_COLUMNS, [row])
    print(
        f"{name}: reps={args.reps} NV={d['nv']:.3f} ({d['nv_se']:.3f}) TPR={d['tpr']:.3f} ({d['tpr_se']:.3f}) "
        f"FPR={d['fpr']:.4f} ({d['fpr_se']:.4f}) PE={d['pe']:.4f} ({d['pe_se']:.4f})"
    )
    return 0


def _add_fit_options(p):
    p.add_argument("--m", type=int, default=9, help="basis functions per feature")
    p.add_argument("--order", type=int, default=4, help="spline order (degree + 1)")
    p.add_argument("--smooth-lambda", type=float, default=0.0)
    p.add_argument("--path-len", type=int, default=50)
    p.add_argument("--a-n", type=float, default=None, help="override the GIC model-size penalty")
    p.add_argument("--majorizer", choices=("scalar", "block", "hessian"), default="hessian")
    p.add_argument("--max-cycles", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdgam", description="Two-step sparse generalized additive models")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to a CSV file")
    p.add_argument("--data", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--features", default=None, help="comma-separated feature columns (default: all others)")
    p.add_argument("--out", default="model.json")
    p.add_argument("--emit-path", default=None)
    _add_fit_options(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="run a simulation scenario")
    p.add_argument("--scenario", default="ex1-case1")
    p.add_argument("--custom", default=None, help="n,p,s,family,t,scale")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--out", default=None)
    _add_fit_options(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, matching the config-error code
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverDiverged as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
