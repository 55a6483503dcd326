"""Closed-form CDF pieces used to assemble piecewise distributions.

Every form evaluates the CDF, its first two derivatives and (where it is
cheap to do exactly) the survival function and the inverse. Forms are
immutable and vectorised over numpy arrays.

Polynomial coefficients are stored in ascending order, as in
``numpy.polynomial.polynomial``.
"""

from __future__ import annotations

import math
from typing import Any, ClassVar, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

Coeffs = Tuple[float, ...]

FD_STEP = 1e-6


def _coeffs(c: Sequence[float]) -> Coeffs:
    out = tuple(float(v) for v in c)
    return out if out else (0.0,)


def quadratic(scale: float, center: float, shift: float = 0.0) -> Coeffs:
    """Coefficients of ``scale * (x - center)**2 + shift``."""
    return (scale * center * center + shift, -2.0 * scale * center, scale)


class Form:
    """Base class; subclasses override what they can do in closed form."""

    tag: ClassVar[str] = ""

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def dpdf(self, x):
        # central difference fallback
        x = np.asarray(x, dtype=float)
        return (self.pdf(x + FD_STEP) - self.pdf(x - FD_STEP)) / (2 * FD_STEP)

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def inverse(self, u: float, lo: float, hi: float) -> Optional[float]:
        """Closed-form solution of ``cdf(x) = u`` on ``[lo, hi]``, or None."""
        return None

    @property
    def is_flat(self) -> bool:
        return False

    def params(self) -> Dict[str, Any]:
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self):
        return hash((self.tag, repr(self.params())))

    def __repr__(self):
        return f"{type(self).__name__}({self.params()})"


class Constant(Form):
    tag = "constant"

    def __init__(self, value: float):
        self.value = float(value)

    def cdf(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def pdf(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def dpdf(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    @property
    def is_flat(self) -> bool:
        return True

    def params(self):
        return {"value": self.value}


class RationalExp(Form):
    """``P(x) / (Q(x) * (alpha + beta*exp(gamma*x))) + S(x)``.

    The exponential factor lets the same machinery express quotients such
    as ``(1 - c/x) / (1 - exp(-k x))``; with ``beta = 0`` it is a plain
    rational function plus a polynomial perturbation.
    """

    tag = "rational_exp"

    def __init__(
        self,
        num: Sequence[float],
        den: Sequence[float] = (1.0,),
        alpha: float = 1.0,
        beta: float = 0.0,
        gamma: float = 0.0,
        poly: Sequence[float] = (0.0,),
    ):
        self.num = _coeffs(num)
        self.den = _coeffs(den)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.gamma = float(gamma)
        self.poly = _coeffs(poly)
        self._dnum = P.polyder(self.num)
        self._ddnum = P.polyder(self.num, 2)
        self._dden = P.polyder(self.den)
        self._ddden = P.polyder(self.den, 2)
        self._dpoly = P.polyder(self.poly)
        self._ddpoly = P.polyder(self.poly, 2)

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        e = self.beta * np.exp(self.gamma * x) if self.beta else 0.0 * x
        E = self.alpha + e
        dE = self.gamma * e
        ddE = self.gamma * dE
        q, dq, ddq = (P.polyval(x, c) for c in (self.den, self._dden, self._ddden))
        D = q * E
        dD = dq * E + q * dE
        ddD = ddq * E + 2 * dq * dE + q * ddE
        p, dp, ddp = (P.polyval(x, c) for c in (self.num, self._dnum, self._ddnum))
        return x, p, dp, ddp, D, dD, ddD

    def cdf(self, x):
        x, p, _, _, D, _, _ = self._parts(x)
        return p / D + P.polyval(x, self.poly)

    def pdf(self, x):
        x, p, dp, _, D, dD, _ = self._parts(x)
        return (dp * D - p * dD) / D**2 + P.polyval(x, self._dpoly)

    def dpdf(self, x):
        x, p, dp, ddp, D, dD, ddD = self._parts(x)
        w = dp * D - p * dD
        return (ddp * D - p * ddD) / D**2 - 2 * dD * w / D**3 + P.polyval(x, self._ddpoly)

    def params(self):
        return {
            "num": list(self.num),
            "den": list(self.den),
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "poly": list(self.poly),
        }


class Rational(RationalExp):
    """``P(x)/Q(x) + S(x)``; ``S`` carries the quadratic bump perturbations."""

    tag = "rational"

    def __init__(self, num, den=(1.0,), poly=(0.0,)):
        super().__init__(num, den, poly=poly)

    def inverse(self, u, lo, hi):
        # Moebius pieces (degree <= 1 over degree <= 1) invert exactly.
        if any(self.poly) or len(self.num) > 2 or len(self.den) > 2:
            return None
        p0, p1 = (self.num + (0.0,))[:2]
        q0, q1 = (self.den + (0.0,))[:2]
        denom = p1 - u * q1
        if denom == 0:
            return None
        x = (u * q0 - p0) / denom
        return x if lo - 1e-12 <= x <= hi + 1e-12 else None

    def params(self):
        return {"num": list(self.num), "den": list(self.den), "poly": list(self.poly)}


class Linear(Rational):
    tag = "linear"

    def __init__(self, slope: float, intercept: float = 0.0):
        self.slope = float(slope)
        self.intercept = float(intercept)
        super().__init__((self.intercept, self.slope))

    def params(self):
        return {"slope": self.slope, "intercept": self.intercept}


class Exponential(Form):
    """``a + b*exp(c*x)``."""

    tag = "exponential"

    def __init__(self, a: float, b: float, c: float):
        self.a, self.b, self.c = float(a), float(b), float(c)

    def cdf(self, x):
        return self.a + self.b * np.exp(self.c * np.asarray(x, dtype=float))

    def pdf(self, x):
        return self.b * self.c * np.exp(self.c * np.asarray(x, dtype=float))

    def dpdf(self, x):
        return self.b * self.c**2 * np.exp(self.c * np.asarray(x, dtype=float))

    def sf(self, x):
        if self.a == 1.0:
            return -self.b * np.exp(self.c * np.asarray(x, dtype=float))
        return super().sf(x)

    def inverse(self, u, lo, hi):
        arg = (u - self.a) / self.b
        if arg <= 0:
            return None
        x = math.log(arg) / self.c
        return x if lo - 1e-12 <= x <= hi + 1e-12 else None

    def params(self):
        return {"a": self.a, "b": self.b, "c": self.c}


class SaturatedRegular(Form):
    """Tail solving ``2 f^2 + (1 - F) f' = 0`` from ``F(s) = y, F'(s) = y'``.

    ``F(x) = 1 - (1 - y)^2 / ((x - s) y' + 1 - y)``.
    """

    tag = "saturated_regular"

    def __init__(self, y: float, yprime: float, s: float):
        if not y < 1:
            raise ValueError(f"saturated tail needs y < 1, got {y}")
        if not yprime > 0:
            raise ValueError(f"saturated tail needs y' > 0, got {yprime}")
        self.y, self.yprime, self.s = float(y), float(yprime), float(s)

    def _den(self, x):
        return (np.asarray(x, dtype=float) - self.s) * self.yprime + 1.0 - self.y

    def sf(self, x):
        return (1.0 - self.y) ** 2 / self._den(x)

    def cdf(self, x):
        return 1.0 - self.sf(x)

    def pdf(self, x):
        return (1.0 - self.y) ** 2 * self.yprime / self._den(x) ** 2

    def dpdf(self, x):
        return -2.0 * (1.0 - self.y) ** 2 * self.yprime**2 / self._den(x) ** 3

    def inverse(self, u, lo, hi):
        if u >= 1:
            return None
        om = 1.0 - self.y
        return self.s + (om * om / (1.0 - u) - om) / self.yprime

    def params(self):
        return {"y": self.y, "yprime": self.yprime, "s": self.s}


class SaturatedMHR(Form):
    """Tail solving ``f^2 + (1 - F) f' = 0``: constant hazard ``y'/(1-y)``.

    ``F(x) = 1 - (1 - y) exp(-y' (x - s) / (1 - y))``.
    """

    tag = "saturated_mhr"

    def __init__(self, y: float, yprime: float, s: float):
        if not y < 1:
            raise ValueError(f"saturated tail needs y < 1, got {y}")
        if not yprime > 0:
            raise ValueError(f"saturated tail needs y' > 0, got {yprime}")
        self.y, self.yprime, self.s = float(y), float(yprime), float(s)
        self.rate = self.yprime / (1.0 - self.y)

    def sf(self, x):
        return (1.0 - self.y) * np.exp(-self.rate * (np.asarray(x, dtype=float) - self.s))

    def cdf(self, x):
        return 1.0 - self.sf(x)

    def pdf(self, x):
        return self.rate * self.sf(x)

    def dpdf(self, x):
        return -self.rate**2 * self.sf(x)

    def inverse(self, u, lo, hi):
        if u >= 1:
            return None
        return self.s - math.log((1.0 - u) / (1.0 - self.y)) / self.rate

    def params(self):
        return {"y": self.y, "yprime": self.yprime, "s": self.s}


FORMS = {
    cls.tag: cls
    for cls in (Constant, RationalExp, Rational, Linear, Exponential, SaturatedRegular, SaturatedMHR)
}


def form_from_params(tag: str, params: Dict[str, Any]) -> Form:
    try:
        cls = FORMS[tag]
    except KeyError:
        raise ValueError(f"unknown segment form {tag!r}") from None
    return cls(**params)
