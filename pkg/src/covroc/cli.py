"""Command-line interface: ``covroc {fit,auc,roc,bootstrap,simulate}``.

Input is a CSV file with header ``group,z,marker``; groups are ``x``/``y``
(or ``0``/``1``), ``x`` being the non-diseased population. Results are
written as JSON with every float at 17 significant digits, so repeated runs
with the same input, configuration and seed give byte-identical files
whatever ``--threads`` is.

Exit status: 0 success, 2 invalid input, 3 estimation failure,
4 too many failed bootstrap replicates.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .bandwidth import BandwidthGrid, BandwidthSet
from .bootstrap import BootstrapConfig, RefitMode, bootstrap_auc
from .errors import BootstrapFailureError, CovrocError, EmptySampleError, InputError
from .estimators import (
    Estimator,
    auc_normal_values,
    camwe_values,
    roc_curve_camwe,
    roc_curve_normal,
    sens_spec_camwe,
    sens_spec_normal,
    standardized_residuals,
    working_sample,
    youden_index,
)
from .kernels import Kernel
from .locpoly import Population, SamplePairs
from .pipeline import EstimatorSpec
from .simulation import (
    BandwidthPolicy,
    SimScenario,
    StudySettings,
    run_band_study,
    run_mse_study,
)

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_INPUT, EXIT_ESTIMATION, EXIT_BOOTSTRAP = 0, 2, 3, 4
WIDEN_STEPS = 3
COMMANDS = ("fit", "auc", "roc", "bootstrap", "simulate")
_GROUPS = {"x": Population.X, "y": Population.Y, "0": Population.X, "1": Population.Y}


def schema_path() -> Path:
    """Location of the JSON schema every result document validates against."""
    return Path(str(resources.files("covroc") / "schema" / "result.schema.json"))


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Everything that determines a run. Round-trips through JSON losslessly."""

    command: str = "auc"
    data: str | None = None
    estimator: str = "camwe"
    order: int = 1
    kernel: str = "epanechnikov"
    bandwidths: list[float] | None = None
    bw_grid: list[float] = field(default_factory=lambda: [0.05, 1.0, 15])
    kernel_bandwidths: list[float] | None = None
    grid: list[float] | None = None
    clamp: bool = False
    log_response: bool = False
    widen_on_sparse: bool = False
    bootstrap: int | None = None
    level: float = 0.95
    refit_bandwidths: str = "frozen"
    seed: int = 0
    at: float | None = None
    fpr_points: int = 99
    threshold: float | None = None
    scenario: str = "normal"
    study: str = "mse"
    runs: int = 100
    m: int = 40
    n: int = 40
    policy: str | None = None
    estimators: list[str] = field(default_factory=lambda: ["normal", "camwe", "kernel"])
    out: str | None = None
    csv: str | None = None
    threads: int | None = None

    # fields that say where output goes or how fast it is computed, not what it is
    RUNTIME_ONLY = ("out", "csv", "threads")

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.order < 0:
            raise InputError("order must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")
        if self.bandwidths is not None and len(self.bandwidths) != 4:
            raise InputError("--bandwidths needs four values h1,h2,b1,b2")
        if self.kernel_bandwidths is not None and len(self.kernel_bandwidths) != 2:
            raise InputError("--kernel-bandwidths needs two values hx,hy")
        if len(self.bw_grid) != 3 or int(self.bw_grid[2]) < 1:
            raise InputError("--bw-grid needs min,max,count with count >= 1")
        if self.grid is not None and (len(self.grid) != 3 or int(self.grid[2]) < 1):
            raise InputError("--grid needs zmin,zmax,count with count >= 1")
        if self.threads is not None and self.threads < 1:
            raise InputError("--threads must be positive")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RunConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise InputError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**d)

    def echo(self) -> dict[str, Any]:
        d = self.to_dict()
        for key in self.RUNTIME_ONLY:
            d.pop(key)
        return d


# --------------------------------------------------------------------------
# Input
# --------------------------------------------------------------------------


def ingest(path: str | os.PathLike, log_response: bool = False) -> tuple[SamplePairs, SamplePairs]:
    """Read a ``group,z,marker`` CSV into the two samples.

    Raises:
        InputError: malformed header or row (the message cites the line),
            non-finite value, non-positive marker under ``log_response``.
        EmptySampleError: a group has no rows.
    """
    rows: dict[Population, tuple[list[float], list[float]]] = {
        Population.X: ([], []),
        Population.Y: ([], []),
    }
    tokens: set[str] = set()
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["group", "z", "marker"]:
            raise InputError("header must be 'group,z,marker'", line=1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise InputError(f"expected 3 fields, got {len(row)}", line=line)
            tok = row[0].strip().lower()
            if tok not in _GROUPS:
                raise InputError(f"group must be x/y or 0/1, got {row[0]!r}", line=line)
            tokens.add(tok)
            try:
                z, v = float(row[1]), float(row[2])
            except ValueError:
                raise InputError(f"cannot parse numbers in {row[1]!r}, {row[2]!r}", line=line) from None
            if not (math.isfinite(z) and math.isfinite(v)):
                raise InputError("covariate and marker must be finite", line=line)
            if log_response:
                if v <= 0:
                    raise InputError(f"marker {v} is not positive; cannot take its log", line=line)
                v = math.log(v)
            rows[_GROUPS[tok]][0].append(z)
            rows[_GROUPS[tok]][1].append(v)
    if tokens & {"x", "y"} and tokens & {"0", "1"}:
        raise InputError("group labels mix x/y with 0/1")
    for pop in (Population.X, Population.Y):
        if not rows[pop][0]:
            name = pop.value if not tokens & {"0", "1"} else ("0" if pop is Population.X else "1")
            raise EmptySampleError(f"group {name!r} has no observations")
    return (
        SamplePairs(*rows[Population.X], Population.X),
        SamplePairs(*rows[Population.Y], Population.Y),
    )


def _file_digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _encode(obj: Any, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [inner + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits; non-finite floats become null."""
    return _encode(obj, indent, 0) + "\n"


def _write_csv(path: str, columns: dict[str, Sequence]) -> None:
    names = list(columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*(columns[k] for k in names)):
            w.writerow(format(float(v), ".17g") if not isinstance(v, str) else v for v in row)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def _z_grid(cfg: RunConfig, x_data: SamplePairs, y_data: SamplePairs) -> np.ndarray:
    if cfg.grid is not None:
        lo, hi, count = cfg.grid
        return np.linspace(float(lo), float(hi), int(count))
    # central 90% of the covariate range both samples cover
    lo = max(x_data.covariates.min(), y_data.covariates.min())
    hi = min(x_data.covariates.max(), y_data.covariates.max())
    if hi < lo:
        raise InputError("the two groups' covariate ranges do not overlap; pass --grid")
    pad = 0.05 * (hi - lo)
    return np.linspace(lo + pad, hi - pad, 41)


def _spec(cfg: RunConfig, estimator: str | None = None) -> EstimatorSpec:
    lo, hi, count = cfg.bw_grid
    bws = None
    if cfg.bandwidths is not None:
        bws = BandwidthSet(*cfg.bandwidths)
    kb = tuple(cfg.kernel_bandwidths) if cfg.kernel_bandwidths is not None else None
    return EstimatorSpec(
        estimator=Estimator(estimator or cfg.estimator),
        order=cfg.order,
        kernel=Kernel.from_name(cfg.kernel),
        bandwidths=bws,
        bw_grid=BandwidthGrid.log_spaced(float(lo), float(hi), int(count)),
        kernel_bandwidths=kb,
        clamp=cfg.clamp,
        max_widen=WIDEN_STEPS if cfg.widen_on_sparse else 0,
    )


def _bandwidth_doc(spec: EstimatorSpec) -> dict[str, Any]:
    doc: dict[str, Any] = {"method": None, "h1": None, "h2": None, "b1": None, "b2": None}
    if spec.bandwidths is not None:
        doc.update(spec.bandwidths.as_dict(), method=spec.bandwidths.method.value)
    doc["kernel_hx_hy"] = list(spec.kernel_bandwidths) if spec.kernel_bandwidths else None
    return doc


def _load(cfg: RunConfig) -> tuple[SamplePairs, SamplePairs]:
    if cfg.data is None:
        raise InputError(f"{cfg.command} needs a data file")
    x_data, y_data = ingest(cfg.data, cfg.log_response)
    x_data.check_order(cfg.order)
    y_data.check_order(cfg.order)
    return x_data, y_data


def cmd_fit(cfg: RunConfig) -> tuple[dict, dict]:
    x_data, y_data = _load(cfg)
    z = _z_grid(cfg, x_data, y_data)
    spec = _spec(cfg, "camwe").resolve(x_data, y_data)
    curves = spec.fit(x_data, y_data)
    values = {"f": curves.f(z), "g": curves.g(z), "v1": curves.v1(z), "v2": curves.v2(z)}
    result = {"bandwidths": _bandwidth_doc(spec), "z_grid": z, **values}
    return result, {"z": z, **values}


def cmd_auc(cfg: RunConfig) -> tuple[dict, dict]:
    x_data, y_data = _load(cfg)
    z = _z_grid(cfg, x_data, y_data)
    spec = _spec(cfg)
    boot = None
    if cfg.bootstrap is not None:
        band = bootstrap_auc(
            x_data, y_data, spec, z,
            BootstrapConfig(cfg.bootstrap, cfg.level, cfg.seed, RefitMode(cfg.refit_bandwidths),
                            _threads(cfg)),
        )
        resolved, estimates = band.spec, band.point_estimates
        boot = {
            "replicates": band.B,
            "failures": band.failures,
            "effective_replicates": band.B_effective,
            "level": band.level,
            "refit_bandwidths": cfg.refit_bandwidths,
            "lower": band.lower,
            "upper": band.upper,
            "variance": band.variance,
        }
    else:
        resolved = spec.resolve(x_data, y_data)
        estimates = resolved.evaluate(x_data, y_data, z)
    result = {
        "estimator": resolved.estimator.value,
        "bandwidths": _bandwidth_doc(resolved),
        "clamp": cfg.clamp,
        "z_grid": z,
        "estimates": estimates,
        "bootstrap": boot,
    }
    table = {"z": z, "estimate": estimates}
    if boot is not None:
        table.update(lower=boot["lower"], upper=boot["upper"], variance=boot["variance"])
    return result, table


def cmd_bootstrap(cfg: RunConfig) -> tuple[dict, dict]:
    if cfg.bootstrap is None:
        cfg = dataclasses.replace(cfg, bootstrap=1000)
    return cmd_auc(cfg)


def cmd_roc(cfg: RunConfig) -> tuple[dict, dict]:
    if cfg.at is None:
        raise InputError("roc needs --at z")
    est = Estimator(cfg.estimator)
    if est not in (Estimator.NORMAL, Estimator.CAMWE):
        raise InputError("ROC curves are available for the normal and camwe estimators")
    x_data, y_data = _load(cfg)
    spec = _spec(cfg).resolve(x_data, y_data)
    curves = spec.fit(x_data, y_data)
    z = float(cfg.at)
    sens_spec = None
    youden = None
    if est is Estimator.NORMAL:
        k = int(cfg.fpr_points)
        if k < 1:
            raise InputError("--fpr-points must be positive")
        points = roc_curve_normal(curves, z, np.arange(1, k + 1) / (k + 1))
        auc = float(auc_normal_values(curves, [z])[0])
        if cfg.threshold is not None:
            sens_spec = sens_spec_normal(curves, z, cfg.threshold)
    else:
        resid = standardized_residuals(x_data, y_data, curves)
        ws = working_sample(resid, curves, z)
        points = roc_curve_camwe(ws)
        auc = float(camwe_values(resid, curves, [z])[0])
        if cfg.threshold is not None:
            sens_spec = sens_spec_camwe(ws, cfg.threshold)
        yi, c = youden_index(ws)
        youden = {"index": yi, "threshold": c}
    if cfg.clamp:
        auc = max(auc, 0.5)
    result = {
        "estimator": est.value,
        "bandwidths": _bandwidth_doc(spec),
        "z": z,
        "auc": auc,
        "points": [
            {"threshold": p.threshold, "sensitivity": p.sensitivity,
             "one_minus_specificity": p.one_minus_specificity}
            for p in points
        ],
        "at_threshold": None if sens_spec is None else {
            "threshold": cfg.threshold, "sensitivity": sens_spec[0], "specificity": sens_spec[1]
        },
        "youden": youden,
    }
    table = {
        "threshold": [p.threshold for p in points],
        "sensitivity": [p.sensitivity for p in points],
        "one_minus_specificity": [p.one_minus_specificity for p in points],
    }
    return result, table


def simulate(cfg: RunConfig):
    """Run the configured study through the library API (no serialisation)."""
    scenario = SimScenario(cfg.scenario, m=cfg.m, n=cfg.n)
    lo, hi, count = cfg.bw_grid
    settings = StudySettings(
        cfg.order, Kernel.from_name(cfg.kernel), BandwidthGrid.log_spaced(float(lo), float(hi), int(count))
    )
    z = None if cfg.grid is None else np.linspace(float(cfg.grid[0]), float(cfg.grid[1]), int(cfg.grid[2]))
    if cfg.study == "mse":
        return run_mse_study(
            scenario, cfg.runs, cfg.estimators, BandwidthPolicy(cfg.policy or "oracle"), z,
            cfg.seed, settings, _threads(cfg),
        )
    if cfg.study == "bands":
        return run_band_study(
            scenario, cfg.runs, cfg.bootstrap or 1000, z, cfg.seed,
            BandwidthPolicy(cfg.policy or "cv"), cfg.level, settings, _threads(cfg),
        )
    raise InputError(f"unknown study {cfg.study!r}; use mse or bands")


def cmd_simulate(cfg: RunConfig) -> tuple[dict, dict]:
    res = simulate(cfg)
    doc = res.to_dict()
    table: dict[str, Any] = {"z": doc["z_grid"], "true_auc": doc["true_auc"]}
    if cfg.study == "mse":
        for k, v in doc["mse"].items():
            table[f"mse_{k}"] = v
    else:
        for k in ("mean_estimate", "mc_lower", "mc_upper", "boot_lower", "boot_upper",
                  "mc_variance", "boot_variance"):
            table[k] = doc[k]
    return doc, table


_DISPATCH = {
    "fit": cmd_fit,
    "auc": cmd_auc,
    "roc": cmd_roc,
    "bootstrap": cmd_bootstrap,
    "simulate": cmd_simulate,
}


def _threads(cfg: RunConfig) -> int:
    return cfg.threads if cfg.threads is not None else (os.cpu_count() or 1)


def run(cfg: RunConfig) -> dict[str, Any]:
    """Execute a configuration and return the full result document."""
    result, table = _DISPATCH[cfg.command](cfg)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command,
        "version": __version__,
        "seed": cfg.seed,
        "input_sha256": _file_digest(cfg.data) if cfg.data and cfg.command != "simulate" else None,
        "config": cfg.echo(),
        "result": result,
    }
    if cfg.csv:
        _write_csv(cfg.csv, table)
    return doc


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


def _floats(n: int | None = None, last_int: bool = False):
    def parse(text: str) -> list[float]:
        try:
            vals: list[Any] = [float(t) for t in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
        if n is not None and len(vals) != n:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated values, got {len(vals)}")
        if last_int:
            if vals[-1] != int(vals[-1]):
                raise argparse.ArgumentTypeError("the count must be an integer")
            vals[-1] = int(vals[-1])
        return vals

    return parse


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS  # unset flags fall through to --config, then defaults
    p.add_argument("--config", help="JSON run configuration; explicit flags override it")
    p.add_argument("--save-config", help="write the resolved configuration as JSON and continue")
    p.add_argument("--order", type=int, default=S, help="local polynomial degree p (default 1)")
    p.add_argument("--kernel", default=S,
                   choices=["epanechnikov", "biweight", "triweight", "gaussian"])
    p.add_argument("--bw-grid", dest="bw_grid", type=_floats(3, last_int=True), default=S,
                   metavar="MIN,MAX,COUNT", help="log-spaced CV grid as fractions of the covariate range")
    p.add_argument("--grid", type=_floats(3, last_int=True), default=S, metavar="ZMIN,ZMAX,COUNT")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--threads", type=int, default=S, help="worker processes (default: all cores)")
    p.add_argument("--out", default=S, help="JSON output path (default: stdout)")
    p.add_argument("--csv", default=S, help="also write plot-ready CSV here")


def _add_estimation(p: argparse.ArgumentParser, with_estimator: bool = True) -> None:
    S = argparse.SUPPRESS
    p.add_argument("data", nargs="?", default=S, help="CSV file with header group,z,marker")
    if with_estimator:
        p.add_argument("--estimator", default=S, choices=["normal", "camwe", "kernel"])
    p.add_argument("--bandwidths", type=_floats(4), default=S, metavar="H1,H2,B1,B2",
                   help="fixed mean and variance bandwidths (skips CV)")
    p.add_argument("--kernel-bandwidths", dest="kernel_bandwidths", type=_floats(2), default=S,
                   metavar="HX,HY", help="bandwidths of the bivariate kernel estimator")
    p.add_argument("--clamp", action="store_true", default=S, help="report max(AUC, 0.5)")
    p.add_argument("--log-response", dest="log_response", action="store_true", default=S)
    p.add_argument("--widen-on-sparse", dest="widen_on_sparse", action="store_true", default=S,
                   help=f"double a bandwidth locally up to {WIDEN_STEPS} times where the fit is singular")


def _add_bootstrap(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--bootstrap", type=int, default=S, metavar="B", help="bootstrap replicates")
    p.add_argument("--level", type=float, default=S)
    p.add_argument("--refit-bandwidths", dest="refit_bandwidths", default=S,
                   choices=[m.value for m in RefitMode])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covroc", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"covroc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit mean and variance curves")
    _add_common(p)
    _add_estimation(p, with_estimator=False)

    for name, text in (("auc", "covariate-adjusted AUC on a grid"),
                       ("bootstrap", "AUC with bootstrap percentile bands")):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        _add_estimation(p)
        _add_bootstrap(p)

    p = sub.add_parser("roc", help="ROC curve at one covariate value")
    _add_common(p)
    _add_estimation(p)
    p.add_argument("--at", type=float, default=argparse.SUPPRESS, metavar="Z")
    p.add_argument("--fpr-points", dest="fpr_points", type=int, default=argparse.SUPPRESS)
    p.add_argument("--threshold", type=float, default=argparse.SUPPRESS)

    p = sub.add_parser("simulate", help="Monte Carlo MSE or bootstrap-band study")
    _add_common(p)
    _add_bootstrap(p)
    S = argparse.SUPPRESS
    p.add_argument("--scenario", default=S, choices=["normal", "t3", "lognormal"])
    p.add_argument("--study", default=S, choices=["mse", "bands"])
    p.add_argument("--runs", type=int, default=S)
    p.add_argument("--m", type=int, default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--policy", default=S, choices=[b.value for b in BandwidthPolicy])
    p.add_argument("--estimators", type=lambda s: s.split(","), default=S,
                   help="comma-separated subset of normal,camwe,kernel")
    return parser


def config_from_args(argv: Sequence[str] | None = None) -> tuple[RunConfig, str | None]:
    args = vars(build_parser().parse_args(argv))
    base: dict[str, Any] = {}
    cfg_path = args.pop("config", None)
    save_path = args.pop("save_config", None)
    if cfg_path:
        try:
            base = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"cannot read config {cfg_path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"config {cfg_path} is not valid JSON: {exc.msg}", line=exc.lineno) from exc
        if not isinstance(base, dict):
            raise InputError(f"config {cfg_path} must hold a JSON object")
    base.update(args)  # explicit flags win
    return RunConfig.from_dict(base), save_path


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg, save_path = config_from_args(argv)
        if save_path:
            Path(save_path).write_text(dumps(cfg.to_dict()), encoding="utf-8")
        text = dumps(run(cfg))
    except BootstrapFailureError as exc:
        print(f"covroc: bootstrap failure: {exc}", file=sys.stderr)
        return EXIT_BOOTSTRAP
    except (InputError, ValueError, TypeError) as exc:
        print(f"covroc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CovrocError as exc:
        print(f"covroc: estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
