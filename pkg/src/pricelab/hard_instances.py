"""Base instances and perturbed "needle" instances for the lower-bound families.

Five families are built here:

``two-regular-25``    two regular buyers, quadratic bumps of width 4*sqrt(eps)
``three-regular-3``   three regular buyers, revenue spike at a/(3a-1)
``two-regular-3``     two regular buyers, tail bent along the regularity ODE
``two-mhr-25``        two MHR buyers, bumps as in two-regular-25
``three-mhr-3``       three MHR buyers, tail bent along the MHR ODE

Each member differs from the base only on its informative interval, where
the first-order-statistic CDF dips and revenue rises by ``nominal_gap``.
Intervals are half-open ``[lo, hi)``. Families whose perturbation lives on a
right-closed range ``(g_{i-1}, g_i]`` store ``lo = nextafter(g_{i-1})`` and
``hi = nextafter(g_i)`` so that the stored interval is exactly that range.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from .distributions import PiecewiseDistribution, assemble, degenerate_at_zero
from .forms import (
    Constant,
    Exponential,
    Linear,
    Rational,
    RationalExp,
    SaturatedMHR,
    SaturatedRegular,
    quadratic,
)
from .market import Instance, revenue_at
from .validation import GridSpec, Property, ValidationReport, check


class HardInstanceError(ValueError):
    """Parameters outside a construction's valid range."""


class ConstructionAborted(RuntimeError):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(
            f"{report.label} fails {report.property.value}: min margin "
            f"{report.min_margin:.3e} at x={report.argmin:.9g}"
        )


class FamilyTag(str, enum.Enum):
    TwoRegular25 = "two-regular-25"
    ThreeRegular3 = "three-regular-3"
    TwoRegular3 = "two-regular-3"
    TwoMhr25 = "two-mhr-25"
    ThreeMhr3 = "three-mhr-3"

    @property
    def property(self) -> Property:
        if self in (FamilyTag.TwoMhr25, FamilyTag.ThreeMhr3):
            return Property.MHR
        return Property.REGULAR


@dataclass(frozen=True)
class FamilyMember:
    instance: Instance
    interval: Tuple[float, float]
    bump_price: float
    nominal_gap: float
    param: float


@dataclass(frozen=True)
class HardFamily:
    base: Instance
    members: Tuple[FamilyMember, ...]
    eps: float
    family_tag: FamilyTag

    @property
    def K(self) -> int:
        return len(self.members)

    @property
    def intervals(self) -> List[Tuple[float, float]]:
        return [m.interval for m in self.members]

    def distributions(self) -> List[PiecewiseDistribution]:
        """Every distinct buyer distribution in the family, base first."""
        seen, out = set(), []
        for inst in [self.base] + [m.instance for m in self.members]:
            for b in inst.buyers:
                if id(b) not in seen:
                    seen.add(id(b))
                    out.append(b)
        return out

    def manifest(self) -> dict:
        return {
            "family_tag": self.family_tag.value,
            "eps": self.eps,
            "K": self.K,
            "members": [
                {
                    "label": m.instance.label,
                    "interval": list(m.interval),
                    "bump_price": m.bump_price,
                    "nominal_gap": m.nominal_gap,
                }
                for m in self.members
            ],
        }


def _floor(x: float) -> int:
    # guards 0.3/0.05 = 5.999999999999999 and friends
    return int(math.floor(x + 1e-9))


def _up(x: float) -> float:
    return float(np.nextafter(x, 2.0))


def _member(inst: Instance, base: Instance, interval, bump_price, param) -> FamilyMember:
    gap = revenue_at(inst, bump_price) - revenue_at(base, bump_price)
    return FamilyMember(inst, (float(interval[0]), float(interval[1])), float(bump_price), gap, float(param))


def _certify(dists: Sequence[PiecewiseDistribution], prop: Property, grid: Optional[GridSpec]):
    if grid is None:
        return
    for d in dists:
        rep = check(d, prop, grid)
        if not rep.passed:
            raise ConstructionAborted(rep)


# -- shared pieces ----------------------------------------------------------------

X_OVER_X_PLUS = lambda a: Rational((0.0, 1.0), (a, 1.0))  # x / (x + a)  # noqa: E731
ONE_MINUS_THIRD_X = Rational((-1.0, 3.0), (0.0, 3.0))  # 1 - 1/(3x)
ZERO, ONE = Constant(0.0), Constant(1.0)


def _bumps(make, start: float, eps: float):
    """Three pieces subtracting the quadratic bump (depth eps at start + 2 sqrt(eps))."""
    w = math.sqrt(eps)
    return [
        (start, start + w, make(quadratic(-0.5, start))),
        (start + w, start + 3 * w, make(quadratic(0.5, start + 2 * w, -eps))),
        (start + 3 * w, start + 4 * w, make(quadratic(-0.5, start + 4 * w))),
    ]


def _third_plateau(label: str) -> PiecewiseDistribution:
    """0 up to 1/3, then 1 - 1/(3x); revenue is 1/3 on [1/3, 1]."""
    return assemble(label, [(0.0, 1 / 3, ZERO), (1 / 3, 1.0, ONE_MINUS_THIRD_X)])


# -- two regular buyers, eps^-2.5 ---------------------------------------------------

F2_NUM = (-1.0, 2.0, 3.0)  # (3x - 1)(x + 1)
CUBIC_DEN = (0.0, 0.0, 3.0)  # 3x^2


def _two_regular_25_buyer1() -> PiecewiseDistribution:
    return assemble(
        "F_{1,0} two-regular-25",
        [(0.0, 0.5, X_OVER_X_PLUS(1.0)), (0.5, 1.0, ONE_MINUS_THIRD_X)],
    )


def _two_regular_25_f2(a: Optional[float], eps: float) -> PiecewiseDistribution:
    base = lambda poly=(0.0,): Rational(F2_NUM, CUBIC_DEN, poly)  # noqa: E731
    if a is None:
        return assemble(
            "F_{2,0} two-regular-25", [(0.0, 1 / 3, ZERO), (1 / 3, 0.5, base()), (0.5, 1.0, ONE)]
        )
    start = a / 2
    end = start + 4 * math.sqrt(eps)
    if end > 0.5 - 1e-15:
        end = 0.5
    pieces = [(0.0, 1 / 3, ZERO), (1 / 3, start, base())]
    pieces += _bumps(base, start, eps)
    pieces[-1] = (pieces[-1][0], end, pieces[-1][2])
    pieces += [(end, 0.5, base()), (0.5, 1.0, ONE)]
    return assemble(f"F_{{2,{a:.6g}}} two-regular-25 eps={eps:g}", pieces)


_TWO_REG_25_B1 = None


def two_regular_25_base() -> Instance:
    return Instance((_b1(), _two_regular_25_f2(None, 0.0)), "two-regular-base")


def _b1():
    global _TWO_REG_25_B1
    if _TWO_REG_25_B1 is None:
        _TWO_REG_25_B1 = _two_regular_25_buyer1()
    return _TWO_REG_25_B1


def two_regular_25_member(a: float, eps: float) -> Instance:
    """``(F_{1,0}, F_{2,a})``: ``F_{2,0}`` minus a quadratic bump on ``[a/2, a/2 + 4 sqrt(eps)]``."""
    if not 0.9 <= a <= 1.0:
        raise HardInstanceError(f"a must lie in [0.9, 1], got {a}")
    if not 0.0 < eps < 0.05:
        raise HardInstanceError(f"eps must lie in (0, 0.05), got {eps}")
    if a / 2 + 4 * math.sqrt(eps) > 0.5 + 1e-12:
        raise HardInstanceError(
            f"bump [a/2, a/2 + 4 sqrt(eps)] = [{a / 2:g}, {a / 2 + 4 * math.sqrt(eps):g}] "
            "must end by 0.5, where F_{2,0} reaches 1"
        )
    return Instance((_b1(), _two_regular_25_f2(a, eps)), f"two-regular-25 a={a:.6g} eps={eps:g}")


def two_regular_25_family(eps: float, grid: Optional[GridSpec] = None) -> HardFamily:
    """K = floor(0.1 / (8 sqrt eps)) members at a_i = 0.9 + 8 (i-1) sqrt(eps)."""
    if not eps > 0:
        raise HardInstanceError("eps must be positive")
    w = math.sqrt(eps)
    K = _floor(0.1 / (8 * w))
    if K < 1:
        raise HardInstanceError(
            f"eps={eps:g} gives K = 0 members; need eps <= {(0.1 / 8) ** 2:.6g}"
        )
    base = two_regular_25_base()
    members = []
    for i in range(1, K + 1):
        a = 8 * (i - 1) * w + 0.9
        inst = two_regular_25_member(a, eps)
        # hi written as the next member's lo so adjacent intervals share the endpoint exactly
        hi = min((8 * i * w + 0.9) / 2, 0.5)
        members.append(_member(inst, base, (a / 2, hi), a / 2 + 2 * w, a))
    fam = HardFamily(base, tuple(members), eps, FamilyTag.TwoRegular25)
    _certify(fam.distributions(), Property.REGULAR, grid)
    return fam


# -- three regular buyers, eps^-3 -----------------------------------------------------


def three_regular_c(a: float, b: float) -> float:
    """Root of ``R_{12}(c) = 1/3``; both discriminant forms are computed and compared."""
    disc = (3 * a * b + a + b) ** 2 - 4 * a * b
    alt = (3 * a * b + a - b) ** 2 + 12 * a * b * b
    if not math.isclose(disc, alt, rel_tol=1e-12, abs_tol=1e-15):
        raise AssertionError(f"discriminants disagree: {disc} vs {alt}")
    return (a + b - 3 * a * b + math.sqrt(disc)) / (2 * (3 * (a + b) - 1))


def _plateau_base(n_degenerate: int, label: str) -> Instance:
    buyers = [_third_plateau("F_{1,0} plateau")]
    buyers += [degenerate_at_zero(f"F_{{{j + 2},0}} degenerate") for j in range(n_degenerate)]
    return Instance(tuple(buyers), label)


def _three_regular(m: float, eps: float):
    a = m / (3 * m - 1)
    b = eps
    c = three_regular_c(a, b)
    tag = f"m={m:.6g} eps={eps:g}"
    f1 = assemble(f"F_{{1,a}} {tag}", [(0.0, m, X_OVER_X_PLUS(a)), (m, 1.0, ONE_MINUS_THIRD_X)])
    f2 = assemble(f"F_{{2,a}} {tag}", [(0.0, m, X_OVER_X_PLUS(b)), (m, 1.0, ONE)])
    num = P.polymul(P.polymul((-1.0, 3.0), (a, 1.0)), (b, 1.0))  # (3x-1)(x+a)(x+b)
    f3 = assemble(
        f"F_{{3,a}} {tag}",
        [(0.0, 1 / 3, ZERO), (1 / 3, c, Rational(num, (0.0, 0.0, 0.0, 3.0))), (c, 1.0, ONE)],
    )
    return Instance((f1, f2, f3), f"three-regular-3 {tag}"), a, c


def three_regular_3_member(m: float, eps: float) -> Instance:
    """``(F_{1,a}, F_{2,a}, F_{3,a})`` with ``a = m/(3m-1)`` and ``b = eps``."""
    if not 0.4 < m <= 0.5 + 1e-12:
        raise HardInstanceError(f"m must lie in (0.4, 0.5], got {m}")
    if not 0.0 < eps <= 0.1:
        raise HardInstanceError(f"eps must lie in (0, 0.1], got {eps}")
    return _three_regular(min(m, 0.5), eps)[0]


def three_regular_3_family(eps: float, grid: Optional[GridSpec] = None) -> HardFamily:
    """K = floor(0.1/eps) members with monopoly prices 0.4 + i eps."""
    if not 0.0 < eps <= 0.1:
        raise HardInstanceError(f"eps must lie in (0, 0.1], got {eps}")
    K = _floor(0.1 / eps)
    if K < 1:
        raise HardInstanceError(f"eps={eps:g} gives K = 0 members")
    base = _plateau_base(2, "three-regular-base")
    g = [0.4 + i * eps for i in range(K + 1)]
    g[-1] = min(g[-1], 0.5)
    members = []
    for i in range(1, K + 1):
        inst = three_regular_3_member(g[i], eps)
        members.append(_member(inst, base, (_up(g[i - 1]), _up(g[i])), g[i], g[i]))
    fam = HardFamily(base, tuple(members), eps, FamilyTag.ThreeRegular3)
    _certify(fam.distributions(), Property.REGULAR, grid)
    return fam


# -- two regular buyers, eps^-3 -------------------------------------------------------


def saturated_regular_tail(y: float, yprime: float, s: float, hi: float):
    """Segment ``(s, hi]`` on which ``2 f^2 + (1 - F) f' = 0`` with ``F(s)=y, F'(s)=y'``."""
    if not y < 1:
        raise HardInstanceError(f"tail needs y < 1, got {y}")
    if not s < hi:
        raise HardInstanceError(f"tail needs s < hi, got s={s}, hi={hi}")
    return (s, hi, SaturatedRegular(y, yprime, s))


def saturated_mhr_tail(y: float, yprime: float, s: float, hi: float):
    """Segment ``(s, hi]`` with constant hazard ``y'/(1-y)``: saturates the MHR condition."""
    if not y < 1:
        raise HardInstanceError(f"tail needs y < 1, got {y}")
    if not s < hi:
        raise HardInstanceError(f"tail needs s < hi, got s={s}, hi={hi}")
    return (s, hi, SaturatedMHR(y, yprime, s))


def tilde_f2(a: float) -> Rational:
    """``(3x - 1)(x + a) / (3x^2)``, whose product with ``x/(x+a)`` is ``1 - 1/(3x)``."""
    return Rational((-a, 3 * a - 1, 3.0), CUBIC_DEN)


def _two_regular_3(m: float, s: float) -> Instance:
    a = m / (3 * m - 1)
    tilde = tilde_f2(a)
    y, yp = float(tilde.cdf(s)), float(tilde.pdf(s))
    tag = f"m={m:.6g} eps={m - s:g}"
    f1 = assemble(f"F_{{1,a}} {tag}", [(0.0, m, X_OVER_X_PLUS(a)), (m, 1.0, ONE_MINUS_THIRD_X)])
    f2 = assemble(
        f"F_{{2,a}} {tag}",
        [(0.0, 1 / 3, ZERO), (1 / 3, s, tilde), saturated_regular_tail(y, yp, s, m), (m, 1.0, ONE)],
    )
    return Instance((f1, f2), f"two-regular-3 {tag}")


def two_regular_3_member(m: float, eps: float) -> Instance:
    """``F_{2,a}`` follows the tilde form up to ``s = m - eps``, then the saturated tail."""
    if not 1 / 3 < m <= 1.0:
        raise HardInstanceError(f"m must lie in (1/3, 1], got {m}")
    if not 0.0 < eps <= m - 1 / 3 + 1e-12:
        raise HardInstanceError(f"eps must lie in (0, m - 1/3], got {eps}")
    return _two_regular_3(m, max(m - eps, 1 / 3))


def two_regular_3_family(eps: float, grid: Optional[GridSpec] = None) -> HardFamily:
    """K = floor(2/(3 eps)) members with monopoly prices 1/3 + i eps."""
    if not 0.0 < eps <= 2 / 3:
        raise HardInstanceError(f"eps must lie in (0, 2/3], got {eps}")
    K = _floor(2 / (3 * eps))
    if K < 1:
        raise HardInstanceError(f"eps={eps:g} gives K = 0 members")
    base = _plateau_base(1, "two-regular-3-base")
    g = [1 / 3 + i * eps for i in range(K + 1)]
    g[-1] = min(g[-1], 1.0)
    members = []
    for i in range(1, K + 1):
        inst = _two_regular_3(g[i], g[i - 1])
        members.append(_member(inst, base, (_up(g[i - 1]), _up(g[i])), g[i], g[i]))
    fam = HardFamily(base, tuple(members), eps, FamilyTag.TwoRegular3)
    _certify(fam.distributions(), Property.REGULAR, grid)
    return fam


# -- MHR families ---------------------------------------------------------------------

MHR_RATE = 0.4
MHR_PLATEAU = 0.7


def _f20_form(poly=(0.0,)) -> RationalExp:
    """``(1 - 0.7/x) / (1 - exp(-0.4 x))`` written as ``(x - 0.7) / (x (1 - e^{-0.4x}))``."""
    return RationalExp((-MHR_PLATEAU, 1.0), (0.0, 1.0), 1.0, -1.0, -MHR_RATE, poly)


def f20_mhr(x: float) -> float:
    return float(_f20_form().cdf(x))


_MHR_CACHE: Dict[str, PiecewiseDistribution] = {}


def _mhr_buyer1() -> PiecewiseDistribution:
    if "b1" not in _MHR_CACHE:
        _MHR_CACHE["b1"] = assemble("F_{1,0} exp(0.4)", [(0.0, 1.0, Exponential(1.0, -1.0, -MHR_RATE))])
    return _MHR_CACHE["b1"]


def _mhr_buyer2() -> PiecewiseDistribution:
    if "b2" not in _MHR_CACHE:
        _MHR_CACHE["b2"] = assemble(
            "F_{2,0} mhr", [(0.0, MHR_PLATEAU, ZERO), (MHR_PLATEAU, 1.0, _f20_form())]
        )
    return _MHR_CACHE["b2"]


def two_mhr_base() -> Instance:
    return Instance((_mhr_buyer1(), _mhr_buyer2()), "two-mhr-base")


def two_mhr_25_member(a: float, eps: float) -> Instance:
    """``F_{2,0}`` minus the quadratic bump on ``[a, a + 4 sqrt(eps)]``."""
    w = math.sqrt(eps)
    if not 0.0 < eps < 0.05:
        raise HardInstanceError(f"eps must lie in (0, 0.05), got {eps}")
    if not (MHR_PLATEAU <= a and a + 4 * w <= 1.0 + 1e-12):
        raise HardInstanceError(f"bump [{a:g}, {a + 4 * w:g}] must lie in [0.7, 1]")
    end = min(a + 4 * w, 1.0)
    pieces = [(0.0, MHR_PLATEAU, ZERO), (MHR_PLATEAU, a, _f20_form())]
    pieces += _bumps(_f20_form, a, eps)
    pieces[-1] = (pieces[-1][0], end, pieces[-1][2])
    pieces.append((end, 1.0, _f20_form()))
    f2 = assemble(f"F_{{2,{a:.6g}}} mhr eps={eps:g}", pieces)
    return Instance((_mhr_buyer1(), f2), f"two-mhr-25 a={a:.6g} eps={eps:g}")


def two_mhr_25_family(eps: float, grid: Optional[GridSpec] = GridSpec()) -> HardFamily:
    """K = floor(0.3/(8 sqrt eps)) members at a_i = 0.7 + 8 (i-1) sqrt(eps); each is MHR-certified."""
    if not eps > 0:
        raise HardInstanceError("eps must be positive")
    w = math.sqrt(eps)
    K = _floor(0.3 / (8 * w))
    if K < 1:
        raise HardInstanceError(
            f"eps={eps:g} gives K = 0 members; need eps <= {(0.3 / 8) ** 2:.6g}"
        )
    base = two_mhr_base()
    members = []
    for i in range(1, K + 1):
        a = MHR_PLATEAU + 8 * (i - 1) * w
        inst = two_mhr_25_member(a, eps)
        # the bump vanishes at a itself, so the interval is open on the left
        members.append(_member(inst, base, (_up(a), min(a + 4 * w, 1.0)), a + 2 * w, a))
    fam = HardFamily(base, tuple(members), eps, FamilyTag.TwoMhr25)
    _certify(fam.distributions(), Property.MHR, grid)
    return fam


def _three_mhr(a: float, s: float) -> Instance:
    f2a_at = f20_mhr(a)
    tag = f"a={a:.6g} eps={a - s:g}"
    pieces = [(0.0, a, Linear(f2a_at / a))]
    if a < 1.0:
        pieces.append((a, 1.0, _f20_form()))
    f2 = assemble(f"F_{{2,a}} linear {tag}", pieces)
    k = a / f2a_at
    tilde = RationalExp((-MHR_PLATEAU * k, k), (0.0, 0.0, 1.0), 1.0, -1.0, -MHR_RATE)
    y, yp = float(tilde.cdf(s)), float(tilde.pdf(s))
    f3 = assemble(
        f"F_{{3,a}} {tag}",
        [(0.0, MHR_PLATEAU, ZERO), (MHR_PLATEAU, s, tilde), saturated_mhr_tail(y, yp, s, a), (a, 1.0, ONE)],
    )
    return Instance((_mhr_buyer1(), f2, f3), f"three-mhr-3 {tag}")


def three_mhr_3_member(a: float, eps: float) -> Instance:
    """``(F_{1,0}, F_{2,a}, F_{3,a})``; ``F_{3,a}`` bends along the MHR ODE on ``[a - eps, a]``."""
    if not 0.0 < eps <= 0.05:
        raise HardInstanceError(f"eps must lie in (0, 0.05], got {eps}")
    if not MHR_PLATEAU + eps - 1e-12 <= a <= 1.0 + 1e-12:
        raise HardInstanceError(f"a must lie in [0.7 + eps, 1], got {a}")
    a = min(a, 1.0)
    return _three_mhr(a, max(a - eps, MHR_PLATEAU))


def three_mhr_base() -> Instance:
    return Instance(
        (_mhr_buyer1(), _mhr_buyer2(), degenerate_at_zero("F_{3,0} degenerate")), "three-mhr-base"
    )


def three_mhr_3_family(eps: float, grid: Optional[GridSpec] = GridSpec()) -> HardFamily:
    """K = floor(0.3/eps) members at a_i = 0.7 + i eps; each is MHR-certified."""
    if not 0.0 < eps <= 0.05:
        raise HardInstanceError(f"eps must lie in (0, 0.05], got {eps}")
    K = _floor(0.3 / eps)
    base = three_mhr_base()
    g = [MHR_PLATEAU + i * eps for i in range(K + 1)]
    g[-1] = min(g[-1], 1.0)
    members = []
    for i in range(1, K + 1):
        inst = _three_mhr(g[i], g[i - 1])
        members.append(_member(inst, base, (_up(g[i - 1]), _up(g[i])), g[i], g[i]))
    fam = HardFamily(base, tuple(members), eps, FamilyTag.ThreeMhr3)
    _certify(fam.distributions(), Property.MHR, grid)
    return fam


BUILDERS = {
    FamilyTag.TwoRegular25: two_regular_25_family,
    FamilyTag.ThreeRegular3: three_regular_3_family,
    FamilyTag.TwoRegular3: two_regular_3_family,
    FamilyTag.TwoMhr25: two_mhr_25_family,
    FamilyTag.ThreeMhr3: three_mhr_3_family,
}

BASES = {
    "two-regular-base": two_regular_25_base,
    "three-regular-base": lambda: _plateau_base(2, "three-regular-base"),
    "two-regular-3-base": lambda: _plateau_base(1, "two-regular-3-base"),
    "two-mhr-base": two_mhr_base,
    "three-mhr-base": three_mhr_base,
}


def build_family(tag, eps: float, grid: Optional[GridSpec] = None) -> HardFamily:
    """Construct a family by tag; ``grid`` (if given) certifies every distribution."""
    tag = FamilyTag(tag)
    return BUILDERS[tag](eps, grid=grid)


def validate_family(fam: HardFamily, grid: GridSpec = GridSpec()) -> List[ValidationReport]:
    prop = fam.family_tag.property
    return [check(d, prop, grid) for d in fam.distributions()]


__all__ = [
    "BASES",
    "ConstructionAborted",
    "FamilyMember",
    "FamilyTag",
    "HardFamily",
    "HardInstanceError",
    "build_family",
    "f20_mhr",
    "saturated_mhr_tail",
    "saturated_regular_tail",
    "three_mhr_3_family",
    "three_mhr_3_member",
    "three_mhr_base",
    "three_regular_3_family",
    "three_regular_3_member",
    "three_regular_c",
    "tilde_f2",
    "two_mhr_25_family",
    "two_mhr_25_member",
    "two_mhr_base",
    "two_regular_25_base",
    "two_regular_25_family",
    "two_regular_25_member",
    "two_regular_3_family",
    "two_regular_3_member",
    "validate_family",
]
