"""Numerical certification of regularity and monotone hazard rate.

Inside each analytic segment the checks evaluate the differential forms

    regular:  2 f^2 + (1 - F) f' >= 0
    MHR:        f^2 + (1 - F) f' >= 0

on a grid that stays ``knot_radius`` away from breakpoints. Across
breakpoints and atoms the virtual value (resp. hazard rate) is compared
through its one-sided limits, which must not decrease. A drop at a knot is
folded into ``min_margin`` as a negative value so a single number decides
the verdict.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .distributions import PiecewiseDistribution


class Property(str, enum.Enum):
    REGULAR = "Regular"
    MHR = "MHR"


class GridConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    points: int = 10_000
    knot_radius: float = 1e-7
    tolerance: float = 1e-9
    min_per_segment: int = 10
    window: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class ValidationReport:
    property: Property
    grid_points: int
    min_margin: float
    argmin: float
    excluded_knots: Tuple[float, ...]
    tolerance: float = 1e-9
    label: str = ""
    knot_drops: Tuple[Tuple[float, float], ...] = ()
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.min_margin >= -self.tolerance))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "property": self.property.value,
            "grid_points": self.grid_points,
            "min_margin": self.min_margin,
            "argmin": self.argmin,
            "excluded_knots": list(self.excluded_knots),
            "tolerance": self.tolerance,
            "knot_drops": [list(k) for k in self.knot_drops],
            "passed": self.passed,
        }


def check_regularity(d: PiecewiseDistribution, grid: GridSpec = GridSpec()) -> ValidationReport:
    return _check(d, grid, Property.REGULAR)


def check_mhr(d: PiecewiseDistribution, grid: GridSpec = GridSpec()) -> ValidationReport:
    return _check(d, grid, Property.MHR)


def check(d: PiecewiseDistribution, prop: Property, grid: GridSpec = GridSpec()) -> ValidationReport:
    return _check(d, grid, Property(prop))


def margin(form, x, prop: Property):
    """Left-hand side of the differential condition for one analytic form."""
    coef = 2.0 if prop is Property.REGULAR else 1.0
    f = form.pdf(x)
    return coef * f * f + form.sf(x) * form.dpdf(x)


def _side_value(form, x: float, prop: Property) -> Optional[float]:
    f = float(form.pdf(x))
    s = float(form.sf(x))
    if s <= 0.0 or f <= 0.0:
        return None
    return x - s / f if prop is Property.REGULAR else f / s


def _check(d: PiecewiseDistribution, grid: GridSpec, prop: Property) -> ValidationReport:
    wlo, whi = grid.window if grid.window is not None else (0.0, 1.0)
    r = grid.knot_radius
    best, where, total = math.inf, math.nan, 0

    # interior of each non-flat segment
    for seg in d.segments:
        if seg.form.is_flat:
            continue
        lo, hi = max(seg.lo, wlo), min(seg.hi, whi)
        if hi <= lo:
            continue
        n = int(round(grid.points * (hi - lo)))
        if n < grid.min_per_segment or hi - lo <= 2 * r:
            raise GridConfigError(
                f"{d.label}: {n} grid points on ({lo:.6g}, {hi:.6g}); "
                f"need at least {grid.min_per_segment} per segment"
            )
        xs = np.linspace(lo + r, hi - r, n)
        xs = xs[seg.form.sf(xs) > 0.0]
        total += n
        if xs.size == 0:
            continue
        m = margin(seg.form, xs, prop)
        i = int(np.argmin(m))
        if m[i] < best:
            best, where = float(m[i]), float(xs[i])

    # one-sided limits across knots and atoms, walked in increasing order
    inf_value = math.inf if prop is Property.MHR else None
    seq: List[Tuple[float, float]] = []
    atoms = dict(d.atoms)
    if 0.0 in atoms:
        seq.append((0.0, 0.0 if prop is Property.REGULAR else math.inf))
    for seg in d.segments:
        if not seg.form.is_flat:
            for x in (seg.lo, seg.hi):
                v = _side_value(seg.form, x, prop)
                if v is not None and wlo <= x <= whi:
                    seq.append((x, v))
        if seg.hi in atoms and seg.hi > 0.0 and wlo <= seg.hi <= whi:
            seq.append((seg.hi, seg.hi if inf_value is None else inf_value))
    drops = []
    for (x0, v0), (x1, v1) in zip(seq, seq[1:]):
        diff = v1 - v0 if not (math.isinf(v0) and math.isinf(v1)) else 0.0
        scale = max(1.0, abs(v0)) if math.isfinite(v0) else 1.0
        if diff < -grid.tolerance * scale:
            drops.append((x1, diff))
            if diff < best:
                best, where = diff, x1

    if best == math.inf:  # nothing to evaluate (all flat or exhausted)
        best = 0.0
    knots = tuple(k for k in d.breakpoints if wlo <= k <= whi)
    return ValidationReport(
        property=prop,
        grid_points=total,
        min_margin=best,
        argmin=where,
        excluded_knots=knots,
        tolerance=grid.tolerance,
        label=d.label,
        knot_drops=tuple(drops),
    )


__all__ = [
    "GridConfigError",
    "GridSpec",
    "Property",
    "ValidationReport",
    "check",
    "check_mhr",
    "check_regularity",
    "margin",
]
