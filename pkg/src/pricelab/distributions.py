"""Piecewise-analytic distributions on [0, 1].

CDFs are left-continuous, ``F(x) = Pr[X < x]``. A distribution is a list of
segments tiling [0, 1] plus explicit point masses; segment ``(lo, hi]``
carries a closed form for ``F`` valid on the closed interval, and an atom at
``k`` accounts for the jump ``F(k+) - F(k)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .forms import Constant, Form, form_from_params

KNOT_TOL = 1e-12
JUMP_TOL = 1e-9
INVERSE_XTOL = 1e-12


class DistributionError(ValueError):
    """Raised when a distribution fails construction-time validation."""


class UndefinedVirtualValue(ArithmeticError):
    """Virtual value requested where the density vanishes."""


class ExhaustedSupport(ArithmeticError):
    """Hazard rate requested where ``F(x) = 1``."""


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    form: Form


@dataclass(frozen=True)
class PiecewiseDistribution:
    segments: Tuple[Segment, ...]
    atoms: Tuple[Tuple[float, float], ...] = ()
    label: str = ""
    _knots: np.ndarray = field(init=False, repr=False, compare=False)
    _los: np.ndarray = field(init=False, repr=False, compare=False)
    _atom_map: Dict[float, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple(self.segments)
        atoms = tuple(sorted((float(a), float(m)) for a, m in self.atoms))
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_knots", np.array([s.hi for s in segs]))
        object.__setattr__(self, "_los", np.array([s.lo for s in segs]))
        object.__setattr__(self, "_atom_map", dict(atoms))
        self._validate()

    def _validate(self):
        segs = self.segments
        if not segs:
            raise DistributionError(f"{self.label}: no segments")
        if segs[0].lo != 0.0 or segs[-1].hi != 1.0:
            raise DistributionError(f"{self.label}: segments must tile [0, 1]")
        for s in segs:
            if not s.lo < s.hi:
                raise DistributionError(f"{self.label}: empty segment ({s.lo}, {s.hi}]")
        for a, b in zip(segs, segs[1:]):
            if a.hi != b.lo:
                raise DistributionError(f"{self.label}: gap/overlap at {a.hi} vs {b.lo}")
        knots = {0.0, 1.0} | {s.hi for s in segs}
        for loc, mass in self.atoms:
            if loc not in knots:
                raise DistributionError(f"{self.label}: atom at {loc} is not a breakpoint")
            if not 0 < mass <= 1 + KNOT_TOL:
                raise DistributionError(f"{self.label}: atom mass {mass} at {loc}")
        # jumps must be matched by atoms
        checks = [(0.0, 0.0, float(segs[0].form.cdf(0.0)))]
        for a, b in zip(segs, segs[1:]):
            checks.append((a.hi, float(a.form.cdf(a.hi)), float(b.form.cdf(b.lo))))
        checks.append((1.0, float(segs[-1].form.cdf(1.0)), 1.0))
        for k, left, right in checks:
            jump = right - left - self._atom_map.get(k, 0.0)
            tol = KNOT_TOL if k == 1.0 else JUMP_TOL
            if abs(jump) > tol:
                raise DistributionError(
                    f"{self.label}: unmatched jump {jump:.3e} at {k} (F-={left}, F+={right})"
                )
        for s in segs:
            xs = np.linspace(s.lo, s.hi, 201)
            F = s.form.cdf(xs)
            if np.any(F < -KNOT_TOL) or np.any(F > 1 + KNOT_TOL):
                raise DistributionError(f"{self.label}: CDF leaves [0, 1] on ({s.lo}, {s.hi}]")
            if np.any(np.diff(F) < -KNOT_TOL) or np.any(s.form.pdf(xs) < -1e-9):
                raise DistributionError(f"{self.label}: CDF decreasing on ({s.lo}, {s.hi}]")

    # -- structure -------------------------------------------------------
    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(s.hi for s in self.segments[:-1])

    def atom_at(self, x: float) -> float:
        return self._atom_map.get(float(x), 0.0)

    def _segment_closed_right(self, x: float) -> Segment:
        i = int(np.searchsorted(self._knots, x, side="left"))
        return self.segments[min(i, len(self.segments) - 1)]

    def _segment_open_right(self, x: float) -> Segment:
        i = int(np.searchsorted(self._los, x, side="right")) - 1
        return self.segments[min(max(i, 0), len(self.segments) - 1)]

    # -- evaluation ------------------------------------------------------
    def cdf(self, x):
        """Vectorised left-continuous CDF."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            xv = float(x)
            if xv <= 0.0:
                return 0.0
            if xv > 1.0:
                return 1.0
            v = float(self._segment_closed_right(xv).form.cdf(xv))
            return min(max(v, 0.0), 1.0)
        out = np.empty_like(x)
        idx = np.searchsorted(self._knots, x, side="left")
        idx = np.minimum(idx, len(self.segments) - 1)
        for i in np.unique(idx):
            sel = idx == i
            out[sel] = self.segments[i].form.cdf(x[sel])
        out = np.where(x <= 0.0, 0.0, out)
        out = np.where(x > 1.0, 1.0, out)
        return np.clip(out, 0.0, 1.0)

    def __str__(self):
        return self.label or "PiecewiseDistribution"

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "segments": [
                {
                    "lo": repr(float(s.lo)),
                    "hi": repr(float(s.hi)),
                    "form": s.form.tag,
                    "params": _encode(s.form.params()),
                }
                for s in self.segments
            ],
            "atoms": [{"loc": repr(float(a)), "mass": repr(float(m))} for a, m in self.atoms],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PiecewiseDistribution":
        try:
            segs = tuple(
                Segment(
                    float(s["lo"]),
                    float(s["hi"]),
                    form_from_params(s["form"], _decode(s.get("params", {}))),
                )
                for s in doc["segments"]
            )
            atoms = tuple((float(a["loc"]), float(a["mass"])) for a in doc.get("atoms", ()))
        except (KeyError, TypeError) as exc:
            raise DistributionError(f"malformed distribution document: {exc}") from exc
        return cls(segs, atoms, str(doc.get("label", "")))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseDistribution":
        return cls.from_dict(json.loads(text))


def _encode(v):
    if isinstance(v, dict):
        return {k: _encode(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_encode(x) for x in v]
    return repr(float(v))


def _decode(v):
    if isinstance(v, dict):
        return {k: _decode(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_decode(x) for x in v]
    return float(v)


def assemble(
    label: str, pieces: Iterable[Tuple[float, float, Form]], atom_floor: float = 1e-15
) -> PiecewiseDistribution:
    """Build a distribution from ``(lo, hi, form)`` pieces, deriving atoms.

    Zero-width pieces are dropped and every jump (including the residual mass
    at 1) becomes an explicit atom.
    """
    segs = [Segment(float(lo), float(hi), f) for lo, hi, f in pieces if hi > lo]
    atoms: List[Tuple[float, float]] = []
    first = float(segs[0].form.cdf(segs[0].lo))
    if first > atom_floor:
        atoms.append((0.0, first))
    for a, b in zip(segs, segs[1:]):
        jump = float(b.form.cdf(b.lo)) - float(a.form.cdf(a.hi))
        if jump > atom_floor:
            atoms.append((a.hi, jump))
    top = 1.0 - float(segs[-1].form.cdf(1.0))
    if top > atom_floor:
        atoms.append((1.0, top))
    return PiecewiseDistribution(tuple(segs), tuple(atoms), label)


def point_mass(loc: float, label: str = "") -> PiecewiseDistribution:
    loc = float(loc)
    label = label or f"point mass at {loc}"
    if loc == 0.0:
        return assemble(label, [(0.0, 1.0, Constant(1.0))])
    if loc == 1.0:
        return assemble(label, [(0.0, 1.0, Constant(0.0))])
    return assemble(label, [(0.0, loc, Constant(0.0)), (loc, 1.0, Constant(1.0))])


def degenerate_at_zero(label: str = "degenerate at 0") -> PiecewiseDistribution:
    return point_mass(0.0, label)


# -- operations ---------------------------------------------------------------


def cdf_at(d: PiecewiseDistribution, x: float) -> float:
    """Left-continuous CDF; an atom at ``x`` is excluded, values above 1 give 1."""
    return float(d.cdf(float(x)))


def density_at(d: PiecewiseDistribution, x: float) -> float:
    """Generalised density: +inf at atoms, right-hand derivative at knots."""
    x = float(x)
    if d.atom_at(x) > 0:
        return math.inf
    return float(d._segment_open_right(x).form.pdf(x))


def density_slope_at(d: PiecewiseDistribution, x: float) -> float:
    x = float(x)
    return float(d._segment_open_right(x).form.dpdf(x))


def inverse_cdf(d: PiecewiseDistribution, u: float) -> float:
    """``inf{x : F(x+) >= u}``; ``u = 0`` maps to the infimum of the support."""
    u = float(u)
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u must lie in [0, 1], got {u}")
    strict = u == 0.0  # infimum of support: first point where F(x+) > 0
    reached = (lambda v: v > 0.0) if strict else (lambda v: v >= u)

    if reached(d.atom_at(0.0)):
        return 0.0
    for seg in d.segments:
        # right limit at lo; any atom at lo is already inside this form's value
        f_lo = float(seg.form.cdf(seg.lo))
        if reached(f_lo):
            return seg.lo
        f_hi = float(seg.form.cdf(seg.hi))
        if reached(f_hi):
            if strict:
                return seg.lo
            x = seg.form.inverse(u, seg.lo, seg.hi)
            if x is not None:
                return min(max(x, seg.lo), seg.hi)
            return _bisect(seg, u)
        if reached(f_hi + d.atom_at(seg.hi)):
            return seg.hi
    return 1.0


def _bisect(seg: Segment, u: float) -> float:
    lo, hi = seg.lo, seg.hi
    for _ in range(200):
        if hi - lo <= INVERSE_XTOL:
            break
        mid = 0.5 * (lo + hi)
        if seg.form.cdf(mid) >= u:
            hi = mid
        else:
            lo = mid
    return hi


def sample(d: PiecewiseDistribution, rng: np.random.Generator) -> float:
    """One draw by inverse transform; reproducible for a seeded generator."""
    return inverse_cdf(d, rng.random())


def virtual_value(d: PiecewiseDistribution, x: float) -> float:
    """``x - (1 - F(x)) / f(x)``; equals ``x`` at atoms."""
    f = density_at(d, x)
    if math.isinf(f):
        return float(x)
    if f <= 0.0:
        raise UndefinedVirtualValue(f"{d}: density vanishes at {x}")
    seg = d._segment_open_right(float(x))
    return float(x) - float(seg.form.sf(float(x))) / f


def hazard_rate(d: PiecewiseDistribution, x: float) -> float:
    """``f(x) / (1 - F(x))``; +inf at atoms."""
    f = density_at(d, x)
    if math.isinf(f):
        return math.inf
    surv = 1.0 - cdf_at(d, x)
    if surv <= 0.0:
        raise ExhaustedSupport(f"{d}: F({x}) = 1")
    seg = d._segment_open_right(float(x))
    return f / float(seg.form.sf(float(x)))


def total_mass(d: PiecewiseDistribution) -> float:
    """``F(1) + atom(1)``, which must be 1."""
    return float(d.segments[-1].form.cdf(1.0)) + d.atom_at(1.0)


def distribution_from_file(path: str) -> PiecewiseDistribution:
    with open(path) as fh:
        return PiecewiseDistribution.from_json(fh.read())


def describe(d: PiecewiseDistribution) -> str:
    parts = [f"({s.lo:.6g}, {s.hi:.6g}] {s.form.tag}" for s in d.segments]
    if d.atoms:
        parts.append("atoms " + ", ".join(f"{m:.4g}@{a:.6g}" for a, m in d.atoms))
    return f"{d.label}: " + "; ".join(parts)


__all__ = [
    "DistributionError",
    "ExhaustedSupport",
    "PiecewiseDistribution",
    "Segment",
    "UndefinedVirtualValue",
    "assemble",
    "cdf_at",
    "degenerate_at_zero",
    "density_at",
    "density_slope_at",
    "describe",
    "distribution_from_file",
    "hazard_rate",
    "inverse_cdf",
    "point_mass",
    "sample",
    "total_mass",
    "virtual_value",
]
