"""CSV panels, run-config files, lambda helpers, and table-shaped reports."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import platform
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import __version__
from .core import AssumptionViolation, InvalidInputError, MisdidError, ObservedPanel
from .estimators import DidEstimate
from .identification import AttBounds, Branch, att_bounds
from .montecarlo import McConfig, McResult, MisclassDesign, Mode, PanelKind, Threshold

REPORT_SCHEMA = "misdid.report/1"


class PanelFormatError(MisdidError):
    pass


class UnparseableValueError(PanelFormatError):
    pass


class NonBinaryTreatmentError(PanelFormatError):
    pass


class UnbalancedPanelError(PanelFormatError):
    pass


class TreatmentVariesError(PanelFormatError):
    pass


class DuplicateRecordError(PanelFormatError):
    pass


class PanelFormat(str, enum.Enum):
    LONG = "long"
    WIDE = "wide"


LONG_COLUMNS = ("unit_id", "period", "outcome", "treatment")
WIDE_COLUMNS = ("unit_id", "y0", "y1", "d")


def _read_rows(path, columns):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise PanelFormatError(f"{path}: missing header row")
        missing = [c for c in columns if c not in reader.fieldnames]
        if missing:
            raise PanelFormatError(f"{path}: missing columns {missing}")
        # header is line 1, first data row is line 2
        for lineno, row in enumerate(reader, start=2):
            yield lineno, row


def _number(value, lineno, column):
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise UnparseableValueError(f"row {lineno}: {column}={value!r} is not a number") from None
    if not math.isfinite(x):
        raise UnparseableValueError(f"row {lineno}: {column}={value!r} is not finite")
    return x


def _binary(value, lineno, column):
    v = (value or "").strip()
    if v not in ("0", "1"):
        raise NonBinaryTreatmentError(f"row {lineno}: {column}={value!r} is not 0 or 1")
    return int(v)


def read_panel(path, fmt: Union[PanelFormat, str] = PanelFormat.LONG) -> ObservedPanel:
    """Load an observed two-period panel.

    Long files have columns ``unit_id,period,outcome,treatment`` with one row
    per unit and period; wide files have ``unit_id,y0,y1,d``. Units keep
    their first-appearance order.
    """
    return read_panel_with_ids(path, fmt)[0]


def read_panel_with_ids(path, fmt=PanelFormat.LONG) -> tuple[ObservedPanel, list[str]]:
    fmt = PanelFormat(fmt)
    if fmt is PanelFormat.WIDE:
        ids, y0, y1, d = [], [], [], []
        seen = {}
        for lineno, row in _read_rows(path, WIDE_COLUMNS):
            uid = row["unit_id"]
            if uid in seen:
                raise DuplicateRecordError(f"row {lineno}: unit {uid!r} already on row {seen[uid]}")
            seen[uid] = lineno
            ids.append(uid)
            y0.append(_number(row["y0"], lineno, "y0"))
            y1.append(_number(row["y1"], lineno, "y1"))
            d.append(_binary(row["d"], lineno, "d"))
        if not ids:
            raise PanelFormatError(f"{path}: no data rows")
        return ObservedPanel(y0, y1, d), ids

    units: dict[str, dict] = {}
    for lineno, row in _read_rows(path, LONG_COLUMNS):
        uid = row["unit_id"]
        period_raw = (row["period"] or "").strip()
        if period_raw not in ("0", "1"):
            raise PanelFormatError(f"row {lineno}: period={row['period']!r} must be 0 or 1")
        period = int(period_raw)
        outcome = _number(row["outcome"], lineno, "outcome")
        treatment = _binary(row["treatment"], lineno, "treatment")
        rec = units.setdefault(uid, {"d": treatment, "d_row": lineno})
        if period in rec:
            raise DuplicateRecordError(f"row {lineno}: unit {uid!r} period {period} appears twice")
        if rec["d"] != treatment:
            raise TreatmentVariesError(
                f"row {lineno}: unit {uid!r} treatment {treatment} differs from {rec['d']} on row {rec['d_row']}")
        rec[period] = outcome
    if not units:
        raise PanelFormatError(f"{path}: no data rows")
    for uid, rec in units.items():
        for period in (0, 1):
            if period not in rec:
                raise UnbalancedPanelError(f"unit {uid!r} has no period {period} record")
    ids = list(units)
    panel = ObservedPanel([units[u][0] for u in ids], [units[u][1] for u in ids],
                          [units[u]["d"] for u in ids])
    return panel, ids


def write_panel(panel: ObservedPanel, path, fmt=PanelFormat.LONG,
                unit_ids: Optional[Sequence[str]] = None) -> None:
    fmt = PanelFormat(fmt)
    ids = list(unit_ids) if unit_ids is not None else [str(i) for i in range(1, len(panel) + 1)]
    if len(ids) != len(panel):
        raise InvalidInputError("unit_ids length differs from panel length")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fmt is PanelFormat.WIDE:
            w.writerow(WIDE_COLUMNS)
            for uid, u in zip(ids, panel):
                w.writerow([uid, repr(u.y0), repr(u.y1), u.d])
        else:
            w.writerow(LONG_COLUMNS)
            for uid, u in zip(ids, panel):
                w.writerow([uid, 0, repr(u.y0), u.d])
                w.writerow([uid, 1, repr(u.y1), u.d])


class LambdaMethod(str, enum.Enum):
    PERIOD_RATIO = "PeriodRatio"
    CASE_COUNT_RATIO = "CaseCountRatio"
    DIRECT = "Direct"


@dataclass(frozen=True)
class LambdaEstimate:
    lambda_: float
    method: LambdaMethod
    numerator: int
    denominator: int

    def __str__(self):
        return (f"lambda={self.lambda_:.6f} method={self.method.value} "
                f"inputs=({self.numerator}, {self.denominator})")


def _ratio(num, den, method, what):
    if den < 1:
        raise InvalidInputError(f"{what} must be at least 1")
    if not 0 <= num <= den:
        raise InvalidInputError(f"need 0 <= ambiguous <= {what}, got ({num}, {den})")
    lam = Fraction(num, den)
    if lam >= 1:
        raise AssumptionViolation(f"lambda = {num}/{den} = 1; the known-bound assumption requires λ < 1")
    return LambdaEstimate(float(lam), method, num, den)


def estimate_lambda_periods(ambiguous_periods: int, post_periods: int) -> LambdaEstimate:
    """Share of the post-intervention window whose treatment status is in doubt."""
    return _ratio(ambiguous_periods, post_periods, LambdaMethod.PERIOD_RATIO, "post_periods")


def estimate_lambda_counts(ambiguous_cases: int, reference_cases: int) -> LambdaEstimate:
    """Share of reference cases falling in the years of possible misclassification."""
    return _ratio(ambiguous_cases, reference_cases, LambdaMethod.CASE_COUNT_RATIO, "reference_cases")


def direct_lambda(value: float) -> LambdaEstimate:
    if not 0 <= value < 1:
        raise AssumptionViolation(f"lambda={value!r} outside [0, 1); λ < 1 is required")
    return LambdaEstimate(float(value), LambdaMethod.DIRECT, 0, 0)


# ---------------------------------------------------------------- run configs

def load_config(path) -> McConfig:
    """Parse a ``key = value`` run file.

    Keys: n, reps, seed, mode, panel, then either ``rate`` or both ``fn`` and
    ``fp``; optional ``lambda`` (comma list), ``threads``, ``threshold``,
    ``calibrated``. ``#`` starts a comment.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        raw[k.lower()] = v
    try:
        mode = Mode(raw["mode"])
        threshold = Threshold(raw.get("threshold", "per-arm"))
        if "fn" in raw or "fp" in raw:
            design = MisclassDesign.explicit(mode, float(raw.get("fn", 0)), float(raw.get("fp", 0)), threshold)
        else:
            calibrated = raw.get("calibrated", "true").lower() in ("1", "true", "yes")
            design = MisclassDesign.from_rate(mode, PanelKind(raw["panel"]), float(raw["rate"]),
                                              calibrated, threshold)
        lambdas = tuple(float(x) for x in raw.get("lambda", "0.4").split(",") if x.strip())
        return McConfig(int(raw["n"]), int(raw["reps"]), int(raw["seed"]), design, lambdas,
                        int(raw.get("threads", 1)))
    except KeyError as exc:
        raise InvalidInputError(f"{path}: missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, MisdidError):
            raise
        raise InvalidInputError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class EmpiricalRow:
    """One outcome's DID estimate with its ATT interval for each lambda."""

    label: str
    estimate: DidEstimate
    bounds: dict[float, AttBounds]

    @classmethod
    def build(cls, label: str, estimate: DidEstimate, lambdas: Iterable[float]) -> "EmpiricalRow":
        return cls(label, estimate, {float(l): att_bounds(estimate.theta_did, l) for l in lambdas})


class ReportFormat(str, enum.Enum):
    TSV = "tsv"
    MARKDOWN = "md"
    JSON = "json"


def _pct(rate: float) -> str:
    return f"{rate * 100:g}%"


def _interval(b: AttBounds, digits: int) -> str:
    return f"({b.lower:.{digits}f} , {b.upper:.{digits}f})"


def _sim_table(results: Sequence[McResult]):
    lambdas = list(results[0].bounds_by_lambda)
    header = ["Overall error rate", "False negative", "False positive", "DID true", "DID observed"]
    header += [f"ATT bounds (λ={lam:g})" for lam in lambdas]
    rows = []
    for r in results:
        row = [_pct(r.config.design.target_rate), f"{r.mean_fn_rate:.3f}", f"{r.mean_fp_rate:.3f}",
               f"{r.did_true:.3f}", f"{r.did_observed:.3f}"]
        row += [_interval(r.bounds_by_lambda[lam], 3) for lam in lambdas]
        rows.append(row)
    return header, rows


def _emp_table(rows_in: Sequence[EmpiricalRow]):
    lambdas = list(rows_in[0].bounds)
    header = ["Outcome", "Estimate", "SE"] + [f"Bounds (λ={lam:g})" for lam in lambdas]
    rows = []
    for r in rows_in:
        se = "" if r.estimate.se is None else f"{r.estimate.se:.4f}"
        rows.append([r.label, f"{r.estimate.theta_did:.4f}", se]
                    + [_interval(r.bounds[lam], 4) for lam in lambdas])
    return header, rows


def _bounds_json(bounds: dict[float, AttBounds]):
    return [{"lambda": lam, "lower": b.lower, "upper": b.upper, "theta": b.theta, "branch": b.branch.value}
            for lam, b in bounds.items()]


def _bounds_from_json(items):
    return {it["lambda"]: AttBounds(it["lower"], it["upper"], it["lambda"], it["theta"], Branch(it["branch"]))
            for it in items}


def _num(x):
    # JSON has no NaN; keep the slot
    return None if isinstance(x, float) and math.isnan(x) else x


_MC_FIELDS = ("mean_fn_rate", "mean_fp_rate", "mean_eps_given_d0", "mean_eps_given_d1", "did_true",
              "did_observed", "mean_att", "mean_att_implied", "mean_pt_gap", "mean_attenuation",
              "max_decomposition_residual", "sign_reversal_share", "rep_dispersion")


def mc_result_to_dict(r: McResult) -> dict:
    cfg = r.config
    d = cfg.design
    out = {
        "config": {
            "n": cfg.n, "reps": cfg.reps, "seed": cfg.seed, "lambda_grid": list(cfg.lambda_grid),
            "design": {"mode": d.mode.value, "panel": d.panel.value, "target_rate": d.target_rate,
                       "fn_rate": d.fn_rate, "fp_rate": d.fp_rate, "threshold": d.threshold.value,
                       "calibrated": d.calibrated},
        },
        "bounds": _bounds_json(r.bounds_by_lambda),
    }
    out.update({k: _num(getattr(r, k)) for k in _MC_FIELDS})
    return out


def mc_result_from_dict(data: dict) -> McResult:
    c = data["config"]
    design = MisclassDesign(**c["design"])
    cfg = McConfig(c["n"], c["reps"], c["seed"], design, tuple(c["lambda_grid"]))
    vals = {k: (math.nan if data[k] is None else data[k]) for k in _MC_FIELDS}
    return McResult(config=cfg, bounds_by_lambda=_bounds_from_json(data["bounds"]), **vals)


def empirical_row_to_dict(r: EmpiricalRow) -> dict:
    return {"label": r.label, "estimate": asdict(r.estimate), "bounds": _bounds_json(r.bounds)}


def empirical_row_from_dict(data: dict) -> EmpiricalRow:
    return EmpiricalRow(data["label"], DidEstimate(**data["estimate"]), _bounds_from_json(data["bounds"]))


def render_report(results: Sequence, fmt=ReportFormat.TSV, meta: Optional[dict] = None) -> str:
    """Render simulation results or empirical rows as tsv, markdown or JSON text."""
    fmt = ReportFormat(fmt)
    results = list(results)
    if not results:
        raise InvalidInputError("nothing to report")
    simulation = isinstance(results[0], McResult)
    if fmt is ReportFormat.JSON:
        doc = {
            "schema": REPORT_SCHEMA,
            "kind": "simulation" if simulation else "empirical",
            "versions": {"misdid": __version__, "numpy": np.__version__, "python": platform.python_version()},
            "meta": meta or {},
            "results": [mc_result_to_dict(r) if simulation else empirical_row_to_dict(r) for r in results],
        }
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    header, rows = _sim_table(results) if simulation else _emp_table(results)
    if fmt is ReportFormat.TSV:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def emit_report(results: Sequence, fmt, path, meta: Optional[dict] = None) -> None:
    text = render_report(results, fmt, meta)
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"cannot write report to {path}: {exc}") from exc


def read_report(path) -> list:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != REPORT_SCHEMA:
        raise InvalidInputError(f"{path}: unknown report schema {doc.get('schema')!r}")
    if doc["kind"] == "simulation":
        return [mc_result_from_dict(d) for d in doc["results"]]
    return [empirical_row_from_dict(d) for d in doc["results"]]
