"""Scenario files: parsing, validation, execution and output writing.

A scenario is a JSON document naming a wavefunction pair, a measuring point
and one experiment:

``ratio_sweep``
    ``P_s / P_dis`` on the left-right event for each ``a`` in ``a_values``
    at fixed ``delta`` (``eta = a * delta``).
``event_ratio_sweep``
    ``P(left_right) / P(same_either)`` for each statistics, same grid.
``limit_order``
    ``P_s / P_dis`` under both iterated limits (``eta_first``, ``delta_first``).
``mean_density_check``
    Mean of ``|psi1|**2`` over nested shrinking windows around ``x0``.

Output tables use 17 significant digits and no locale-dependent formatting,
so identical scenarios give byte-identical CSV files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Sequence

from . import __version__
from .detection import DetectorPair, IllDefinedRatioError
from .limits import (
    MAX_SIZE_OVER_LAMBDA,
    MIN_SAMPLES,
    LimitProtocol,
    Observable,
    Probe,
    Schedule,
    estimate_limit,
)
from .quadrature import DEFAULT_REL_TOL, Interval, integrate_1d
from .jointdensity import Statistics, single_pdf
from .spwf import Spwf, find_nodes, from_dict, overlap, pair_length_scale, to_dict

__all__ = [
    "EXPERIMENTS",
    "Scenario",
    "ScenarioError",
    "RunResult",
    "parse_scenario",
    "load_scenario",
    "execute",
    "run",
    "format_float",
    "EXIT_OK",
    "EXIT_ERROR",
    "EXIT_PARTIAL",
]

EXPERIMENTS = ("ratio_sweep", "event_ratio_sweep", "limit_order", "mean_density_check")
EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2
ORTHOGONALITY_TOL = 1e-6

_DEFAULT_STATISTICS = {
    "ratio_sweep": ["bos", "fer"],
    "event_ratio_sweep": ["dis", "bos", "fer"],
    "limit_order": ["bos", "fer"],
    "mean_density_check": [],
}
_KEYS = {
    "experiment", "psi1", "psi2", "x0", "regime", "statistics", "a_values", "delta",
    "delta_over_lambda", "schedule", "inner_fraction", "rel_tol", "output", "allow_non_orthogonal",
}


class ScenarioError(ValueError):
    """Invalid scenario; ``errors`` lists every problem found."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class Scenario:
    experiment: str
    psi1: Spwf
    psi2: Spwf | None
    x0: float
    statistics: tuple[str, ...] = ()
    regime: str | None = None
    a_values: tuple[float, ...] = ()
    delta: float | None = None
    schedule: Schedule | None = None
    inner_fraction: float = 0.25
    rel_tol: float = DEFAULT_REL_TOL
    output_path: str | None = None
    output_format: str = "csv"
    allow_non_orthogonal: bool = False
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def length_scale(self) -> float:
        psis = [self.psi1] + ([self.psi2] if self.psi2 is not None else [])
        return pair_length_scale(*psis)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"experiment": self.experiment, "psi1": to_dict(self.psi1)}
        if self.psi2 is not None:
            d["psi2"] = to_dict(self.psi2)
        d["x0"] = self.x0
        if self.regime is not None:
            d["regime"] = self.regime
        if self.statistics:
            d["statistics"] = list(self.statistics)
        if self.a_values:
            d["a_values"] = list(self.a_values)
        if self.delta is not None:
            d["delta"] = self.delta
        if self.schedule is not None:
            s = self.schedule
            d["schedule"] = {"start": s.start, "factor": s.factor, "count": s.count}
        if self.experiment == "limit_order":
            d["inner_fraction"] = self.inner_fraction
        d["rel_tol"] = self.rel_tol
        out: dict[str, Any] = {"format": self.output_format}
        if self.output_path is not None:
            out["path"] = self.output_path
        d["output"] = out
        d["allow_non_orthogonal"] = self.allow_non_orthogonal
        return d


def _number(doc, key, errors, positive=False, default=None):
    if key not in doc:
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        errors.append(f"{key}: expected a finite number, got {v!r}")
        return None
    if positive and not v > 0:
        errors.append(f"{key}: must be positive, got {v!r}")
        return None
    return float(v)


def _parse_schedule(doc, lam, errors, min_count):
    spec = doc.get("schedule")
    if not isinstance(spec, dict):
        errors.append("schedule: expected an object with start/start_over_lambda, factor, count")
        return None
    unknown = set(spec) - {"start", "start_over_lambda", "factor", "count"}
    for key in sorted(unknown):
        errors.append(f"schedule.{key}: unexpected field")
    n_before = len(errors)
    start = None
    if ("start" in spec) == ("start_over_lambda" in spec):
        errors.append("schedule: give exactly one of start, start_over_lambda")
    elif "start" in spec:
        start = _number(spec, "start", errors, positive=True)
    else:
        rel = _number(spec, "start_over_lambda", errors, positive=True)
        if rel is not None:
            if math.isinf(lam):
                errors.append("schedule.start_over_lambda: local models have no length scale; use start")
            else:
                start = rel * lam
    factor = _number(spec, "factor", errors, default=0.5)
    count = spec.get("count", 10)
    if isinstance(count, bool) or not isinstance(count, (int, float)) or not float(count).is_integer():
        errors.append(f"schedule.count: expected an integer, got {count!r}")
        count = None
    elif count < min_count:
        errors.append(f"schedule.count: need at least {min_count} samples, got {count}")
    if len(errors) > n_before or start is None or factor is None or count is None:
        return None
    if start > MAX_SIZE_OVER_LAMBDA * lam:
        errors.append(f"schedule.start: {start!r} violates delta, eta << lambda (must be <= lambda/100 = {lam / 100!r})")
        return None
    try:
        return Schedule(start, factor, int(count))
    except ValueError as exc:
        errors.append(f"schedule: {exc}")
        return None


def _node_near(psi, x0, lam) -> bool:
    if psi.family == "local_node":
        return psi.x0 == x0
    if psi.family == "local_regular":
        return False
    span = 1e-3 * lam
    nodes = find_nodes(psi, (x0 - span, x0 + span))
    return any(abs(x - x0) <= 1e-9 * max(1.0, abs(x0)) for x in nodes)


def parse_scenario(text: str | dict) -> Scenario:
    """Parse and validate a scenario document.

    Raises
    ------
    ScenarioError
        Carrying every validation problem, not just the first.
    """
    errors: list[str] = []
    warnings: list[str] = []
    if isinstance(text, dict):
        doc = text
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"malformed document: {exc}"]) from None
    if not isinstance(doc, dict):
        raise ScenarioError(["top level must be an object"])

    for key in sorted(set(doc) - _KEYS):
        errors.append(f"{key}: unknown field")
    experiment = doc.get("experiment")
    if experiment not in EXPERIMENTS:
        errors.append(f"experiment: expected one of {', '.join(EXPERIMENTS)}, got {experiment!r}")

    psi1 = from_dict(doc["psi1"], "psi1", errors) if "psi1" in doc else None
    if "psi1" not in doc:
        errors.append("psi1: missing")
    psi2 = None
    if "psi2" in doc:
        psi2 = from_dict(doc["psi2"], "psi2", errors)
    elif experiment != "mean_density_check":
        errors.append("psi2: missing")

    x0 = _number(doc, "x0", errors)
    if "x0" not in doc:
        errors.append("x0: missing")

    regime = doc.get("regime")
    if regime is not None and regime not in ("node", "regular"):
        errors.append(f"regime: expected 'node' or 'regular', got {regime!r}")
        regime = None

    stats = doc.get("statistics", _DEFAULT_STATISTICS.get(experiment, []))
    if not isinstance(stats, list) or not all(s in ("dis", "bos", "fer") for s in stats):
        errors.append(f"statistics: expected a list drawn from 'dis', 'bos', 'fer', got {stats!r}")
        stats = []
    elif experiment in ("ratio_sweep", "event_ratio_sweep", "limit_order") and not stats:
        errors.append("statistics: at least one entry required")

    rel_tol = _number(doc, "rel_tol", errors, default=DEFAULT_REL_TOL)
    if rel_tol is not None and not 1e-14 <= rel_tol <= 1e-2:
        errors.append(f"rel_tol: must lie in [1e-14, 1e-2], got {rel_tol!r}")

    allow = doc.get("allow_non_orthogonal", False)
    if not isinstance(allow, bool):
        errors.append(f"allow_non_orthogonal: expected true/false, got {allow!r}")
        allow = False

    out = doc.get("output", {})
    out_path, out_format = None, "csv"
    if not isinstance(out, dict):
        errors.append("output: expected an object with path and/or format")
    else:
        for key in sorted(set(out) - {"path", "format"}):
            errors.append(f"output.{key}: unexpected field")
        out_path = out.get("path")
        if out_path is not None and not isinstance(out_path, str):
            errors.append(f"output.path: expected a string, got {out_path!r}")
            out_path = None
        out_format = out.get("format", "csv")
        if out_format not in ("csv", "json"):
            errors.append(f"output.format: expected 'csv' or 'json', got {out_format!r}")
            out_format = "csv"

    psis = [p for p in (psi1, psi2) if p is not None]
    lam = pair_length_scale(*psis) if psis else math.inf

    a_values: list[float] = []
    delta = None
    schedule = None
    inner_fraction = 0.25
    if experiment in ("ratio_sweep", "event_ratio_sweep"):
        raw_a = doc.get("a_values")
        if not isinstance(raw_a, list) or not raw_a:
            errors.append("a_values: expected a non-empty list of numbers")
        else:
            for i, a in enumerate(raw_a):
                if isinstance(a, bool) or not isinstance(a, (int, float)) or not math.isfinite(a) or a < 0:
                    errors.append(f"a_values[{i}]: expected a finite number >= 0, got {a!r}")
                else:
                    a_values.append(float(a))
        if ("delta" in doc) == ("delta_over_lambda" in doc):
            errors.append("delta: give exactly one of delta, delta_over_lambda")
        elif "delta" in doc:
            delta = _number(doc, "delta", errors, positive=True)
        else:
            rel = _number(doc, "delta_over_lambda", errors, positive=True)
            if rel is not None:
                if math.isinf(lam):
                    errors.append("delta_over_lambda: local models have no length scale; use delta")
                else:
                    delta = rel * lam
        if delta is not None:
            if delta > MAX_SIZE_OVER_LAMBDA * lam:
                errors.append(f"delta: {delta!r} violates delta << lambda (must be <= lambda/100 = {lam / 100!r})")
            elif a_values and max(a_values) * delta > MAX_SIZE_OVER_LAMBDA * lam:
                errors.append(
                    f"a_values: eta = {max(a_values) * delta!r} violates eta << lambda (must be <= lambda/100)"
                )
    elif experiment == "limit_order":
        schedule = _parse_schedule(doc, lam, errors, MIN_SAMPLES)
        inner_fraction = _number(doc, "inner_fraction", errors, positive=True, default=0.25)
        if inner_fraction is not None and inner_fraction > 1:
            errors.append(f"inner_fraction: must lie in (0, 1], got {inner_fraction!r}")
    elif experiment == "mean_density_check":
        schedule = _parse_schedule(doc, lam, errors, 3)
    for key in ("a_values", "delta", "delta_over_lambda"):
        if key in doc and experiment not in ("ratio_sweep", "event_ratio_sweep"):
            errors.append(f"{key}: not used by experiment {experiment!r}")
    if "schedule" in doc and experiment not in ("limit_order", "mean_density_check"):
        errors.append(f"schedule: not used by experiment {experiment!r}")

    if psi1 is not None and psi2 is not None and psi1.normalizable and psi2.normalizable:
        ov = abs(overlap(psi1, psi2))
        if ov >= ORTHOGONALITY_TOL:
            msg = f"non-orthogonal pair: |<psi1|psi2>| = {ov:.6g}"
            if allow:
                warnings.append(msg + " (allowed by allow_non_orthogonal)")
            else:
                errors.append(msg + "; set allow_non_orthogonal to override")

    if errors:
        raise ScenarioError(errors)

    if regime is not None and psi2 is not None:
        has_node = _node_near(psi1, x0, lam) or _node_near(psi2, x0, lam)
        if has_node != (regime == "node"):
            found = "a node" if has_node else "no node"
            warnings.append(f"regime declared {regime!r} but find_nodes reports {found} at x0 = {x0!r}")

    return Scenario(
        experiment=experiment,
        psi1=psi1,
        psi2=psi2,
        x0=x0,
        statistics=tuple(stats),
        regime=regime,
        a_values=tuple(a_values),
        delta=delta,
        schedule=schedule,
        inner_fraction=inner_fraction,
        rel_tol=rel_tol,
        output_path=out_path,
        output_format=out_format,
        allow_non_orthogonal=allow,
        warnings=tuple(warnings),
    )


def load_scenario(path: str | os.PathLike) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# ---- execution ---------------------------------------------------------------


@dataclass
class RunResult:
    columns: list[str]
    rows: list[list[Any]]
    summary: dict[str, Any]
    converged: list[bool]

    @property
    def all_converged(self) -> bool:
        return all(self.converged)


def _sweep_point(args):
    psi1, psi2, x0, kind, stats, a, delta, rel_tol = args
    g = DetectorPair.from_ratio(x0, a, delta)
    ratios, errs, ok = [], [], True
    for s in stats:
        probe = Probe(psi1, psi2, x0, Observable(kind, s), rel_tol)
        try:
            res = probe.ratio(g)
        except IllDefinedRatioError:
            ratios.append(math.nan)
            errs.append(math.inf)
            ok = False
            continue
        ratios.append(res.value)
        errs.append(res.error)
        ok = ok and res.converged
    return [a, delta, g.eta, *ratios, max(errs) if errs else 0.0, ok]


def _limit_point(args):
    psi1, psi2, x0, s, protocol, schedule, inner_fraction, rel_tol = args
    probe = Probe(psi1, psi2, x0, Observable("statistics", s), rel_tol)
    return estimate_limit(probe, LimitProtocol(protocol), schedule, inner_fraction=inner_fraction)


def _map(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _run_sweep(sc: Scenario, jobs: int) -> RunResult:
    kind = "statistics" if sc.experiment == "ratio_sweep" else "event"
    prefix = "ratio_{}_dis" if kind == "statistics" else "event_ratio_{}"
    columns = ["a", "delta", "eta", *(prefix.format(s) for s in sc.statistics), "error", "converged"]
    tasks = [(sc.psi1, sc.psi2, sc.x0, kind, sc.statistics, a, sc.delta, sc.rel_tol) for a in sc.a_values]
    rows = _map(_sweep_point, tasks, jobs)
    return RunResult(columns, rows, {}, [bool(r[-1]) for r in rows])


def _run_limits(sc: Scenario, jobs: int) -> RunResult:
    protocols = ("eta_first", "delta_first")
    tasks = [
        (sc.psi1, sc.psi2, sc.x0, s, p, sc.schedule, sc.inner_fraction, sc.rel_tol)
        for p in protocols
        for s in sc.statistics
    ]
    estimates = _map(_limit_point, tasks, jobs)
    columns = ["protocol", "statistics", "value", "extrapolation_error", "observed_order", "converged"]
    rows, summary, details = [], {p: {} for p in protocols}, {p: {} for p in protocols}
    for task, est in zip(tasks, estimates):
        s, p = task[3], task[4]
        order = math.nan if est.observed_order is None else est.observed_order
        rows.append([p, s, est.value, est.extrapolation_error, order, est.converged])
        summary[p][s] = est.value
        details[p][s] = est.to_dict()
    summary["details"] = details
    return RunResult(columns, rows, summary, [bool(r[-1]) for r in rows])


def _run_mean_density(sc: Scenario, jobs: int) -> RunResult:
    psi, x0 = sc.psi1, sc.x0
    target = single_pdf(psi, 0.0, x0)
    columns = ["level", "half_width", "mean", "deviation", "diff_prev", "shrink_factor", "error", "converged"]
    rows = []
    prev_mean = prev_diff = None
    for level, eps in enumerate(sc.schedule.values):
        res = integrate_1d(lambda u: single_pdf(psi, u, x0), Interval(-eps, eps), sc.rel_tol)
        mean = res.value / (2.0 * eps)
        diff = math.nan if prev_mean is None else abs(mean - prev_mean)
        shrink = math.nan if prev_diff is None or diff == 0 else prev_diff / diff
        rows.append([level, eps, mean, mean - target, diff, shrink, res.abs_error_estimate / (2.0 * eps), res.converged])
        prev_mean, prev_diff = mean, (None if math.isnan(diff) else diff)
    return RunResult(columns, rows, {"target": target}, [bool(r[-1]) for r in rows])


def execute(sc: Scenario, jobs: int = 1) -> RunResult:
    """Run the scenario's experiment and return its table (no files written)."""
    if sc.experiment == "limit_order":
        return _run_limits(sc, jobs)
    if sc.experiment == "mean_density_check":
        return _run_mean_density(sc, jobs)
    return _run_sweep(sc, jobs)


# ---- output ----------------------------------------------------------------


def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def render(result: RunResult, fmt: str, sc: Scenario) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()
    doc: dict[str, Any] = {"experiment": sc.experiment}
    doc.update(result.summary)
    doc["columns"] = result.columns
    doc["rows"] = [dict(zip(result.columns, row)) for row in result.rows]
    return json.dumps(_json_safe(doc), indent=2, sort_keys=False) + "\n"


def run(
    sc: Scenario,
    out: str | os.PathLike | None = None,
    fmt: str | None = None,
    jobs: int = 1,
    default_stem: str = "scenario",
) -> tuple[int, str]:
    """Execute ``sc`` and write the table plus its manifest.

    Returns the exit status (0 converged, 2 partially converged) and the
    output path. Validation problems surface earlier, from parsing.
    """
    fmt = fmt or sc.output_format
    path = os.fspath(out) if out is not None else (sc.output_path or f"{default_stem}.{fmt}")
    result = execute(sc, jobs)
    text = render(result, fmt, sc)
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    bad = [i for i, ok in enumerate(result.converged) if not ok]
    manifest = {
        "scenario": sc.to_dict(),
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "output": {"path": path, "format": fmt},
        "points": len(result.converged),
        "converged_points": len(result.converged) - len(bad),
        "nonconverged_rows": bad,
        "warnings": list(sc.warnings),
    }
    with open(path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(_json_safe(manifest), fh, indent=2)
        fh.write("\n")
    return (EXIT_OK if not bad else EXIT_PARTIAL), path
