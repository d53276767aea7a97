"""Log-log order fitting and the convergence report container."""
from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientData, ZeroError

# rows whose error is below FLOOR_FACTOR x the estimated numerical floor are
# dropped from slope fits
FLOOR_FACTOR = 10.0


def select_rows(rows, floors=None, factor=FLOOR_FACTOR):
    """Split (h, error) rows into (kept, excluded) by the floor rule."""
    kept, excluded = [], []
    for i, (h, err) in enumerate(rows):
        floor = 0.0 if floors is None else floors[i]
        if not np.isfinite(err) or err <= 0.0 or err < factor * floor:
            excluded.append((h, err))
        else:
            kept.append((h, err))
    return kept, excluded


def fit_order(rows, floors=None, factor=FLOOR_FACTOR):
    """Least-squares slope of log(error) against log(h).

    Returns ``(slope, residual)`` with residual the RMS deviation of the fit
    in natural-log units. Rows under the floor rule are skipped first.
    """
    rows = [(float(h), float(e)) for h, e in rows]
    if len(rows) < 3:
        raise InsufficientData(f"need at least 3 rows, got {len(rows)}")
    kept, _ = select_rows(rows, floors, factor)
    if not kept:
        raise ZeroError("every error is below the numerical floor")
    if len(kept) < 3:
        raise InsufficientData(f"only {len(kept)} rows above the floor")
    x = np.log([h for h, _ in kept])
    y = np.log([e for _, e in kept])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(coef[0]), resid


@dataclass
class MetricResult:
    name: str
    errors: list
    floors: list
    expected: float
    tolerance: float
    # "equal": |slope - expected| <= tol; "at_least": slope >= expected - tol
    mode: str = "equal"
    slope: float = float("nan")
    residual: float = float("nan")
    excluded: list = field(default_factory=list)
    note: str = ""
    # informational metrics are reported but never count against the verdict
    informational: bool = False

    @property
    def passed(self):
        if not np.isfinite(self.slope):
            return False
        if self.mode == "at_least":
            return self.slope >= self.expected - self.tolerance
        return abs(self.slope - self.expected) <= self.tolerance


@dataclass
class ConvergenceReport:
    label: str
    h_values: list
    metrics: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    factor: float = FLOOR_FACTOR

    def add(self, name, errors, floors, expected, tolerance, mode="equal", note="", informational=False):
        m = MetricResult(name, list(errors), list(floors), expected, tolerance, mode, note=note,
                         informational=informational)
        rows = list(zip(self.h_values, m.errors))
        _, excluded = select_rows(rows, m.floors, self.factor)
        m.excluded = [h for h, _ in excluded]
        try:
            m.slope, m.residual = fit_order(rows, m.floors, self.factor)
        except (InsufficientData, ZeroError) as exc:
            m.note = (m.note + "; " if m.note else "") + str(exc)
        self.metrics[name] = m
        return m

    @property
    def rows(self):
        return [(h, {k: m.errors[i] for k, m in self.metrics.items()}) for i, h in enumerate(self.h_values)]

    @property
    def slopes(self):
        return {k: (m.slope, m.residual) for k, m in self.metrics.items()}

    @property
    def expected_order(self):
        return {k: m.expected for k, m in self.metrics.items()}

    @property
    def passed(self):
        return all(m.passed for m in self.metrics.values() if not m.informational)

    def summary(self):
        lines = [self.label]
        for m in self.metrics.values():
            rel = ">=" if m.mode == "at_least" else "="
            flag = "ok" if m.passed else ("info" if m.informational else "DEVIATION")
            extra = f" excluded h={m.excluded}" if m.excluded else ""
            lines.append(f"  {m.name}: slope {m.slope:.3f} (expected {rel} {m.expected:g} +/- {m.tolerance:g}) "
                         f"[{flag}]{extra}" + (f" {m.note}" if m.note else ""))
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)
