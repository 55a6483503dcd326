"""Repeated uniform pricing with binary feedback.

An :class:`Instance` is an ordered tuple of buyer distributions. The
first-order statistic has CDF ``prod_i F_i`` and the expected revenue at
price ``p`` is ``r(p) = p * (1 - prod_i F_i(p))``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .distributions import PiecewiseDistribution, inverse_cdf


class InstanceMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    buyers: Tuple[PiecewiseDistribution, ...]
    label: str = ""
    _breaks: Tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        buyers = tuple(self.buyers)
        if not buyers:
            raise ValueError("an instance needs at least one buyer")
        object.__setattr__(self, "buyers", buyers)
        pts = set()
        for b in buyers:
            pts.update(b.breakpoints)
            pts.update(a for a, _ in b.atoms)
        object.__setattr__(self, "_breaks", tuple(sorted(pts)))

    @property
    def n_buyers(self) -> int:
        return len(self.buyers)

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        """Union of every buyer's knots and atom locations."""
        return self._breaks

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x) if x.ndim else 1.0
        for b in self.buyers:
            out = out * b.cdf(x)
        return out

    def revenue(self, p):
        p = np.asarray(p, dtype=float)
        return p * (1.0 - self.cdf(p))


def product_cdf(inst: Instance, x: float) -> float:
    return float(inst.cdf(float(x)))


def revenue_at(inst: Instance, p: float) -> float:
    return float(inst.revenue(float(p)))


@dataclass(frozen=True)
class PriceGrid:
    points: int = 100_000
    neighbor: float = 1e-9
    tie_tol: float = 1e-12


def monopoly_price(inst: Instance, grid: PriceGrid = PriceGrid()) -> Tuple[float, float]:
    """Grid argmax of ``r`` with breakpoints (and their neighbours) injected.

    Ties within ``grid.tie_tol`` go to the smallest price.
    """
    knots = np.asarray(inst.breakpoints, dtype=float)
    cand = np.concatenate(
        [np.linspace(0.0, 1.0, grid.points), knots, knots - grid.neighbor, knots + grid.neighbor]
    )
    cand = np.unique(np.clip(cand, 0.0, 1.0))
    r = inst.revenue(cand)
    top = r.max()
    i = int(np.flatnonzero(r >= top - grid.tie_tol)[0])
    return float(cand[i]), float(r[i])


def post_price(
    inst: Instance, p: float, rng: np.random.Generator, mode: str = "bids"
) -> Tuple[bool, float]:
    """One round: ``sold = max bid >= p``, revenue ``p * sold``.

    ``mode="bids"`` draws every buyer's bid; ``mode="fast"`` draws one uniform
    and compares it with the first-order-statistic CDF. Both have sale
    probability ``1 - prod F_i(p)``.
    """
    if mode == "bids":
        sold = any(inverse_cdf(b, rng.random()) >= p for b in inst.buyers)
    elif mode == "fast":
        sold = rng.random() >= product_cdf(inst, p)
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return bool(sold), p if sold else 0.0


@dataclass
class EpisodeLog:
    prices: np.ndarray
    sold: np.ndarray
    seed: int
    learner_label: str
    instance_label: str
    clamped: np.ndarray = None

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float)
        self.sold = np.asarray(self.sold, dtype=bool)
        if self.clamped is None:
            self.clamped = np.zeros(self.prices.shape, dtype=bool)
        if self.prices.shape != self.sold.shape:
            raise ValueError("prices and sold must have equal length")

    @property
    def horizon(self) -> int:
        return int(self.prices.size)

    @property
    def revenue(self) -> np.ndarray:
        return np.where(self.sold, self.prices, 0.0)

    @property
    def cumulative_revenue(self) -> float:
        return float(self.revenue.sum())

    @property
    def rounds(self) -> List[Tuple[int, float, bool, float]]:
        rev = self.revenue
        return [
            (t + 1, float(self.prices[t]), bool(self.sold[t]), float(rev[t]))
            for t in range(self.horizon)
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "price", "sold", "revenue"])
        for t, p, s, r in self.rounds:
            w.writerow([t, repr(p), int(s), repr(r)])
        return buf.getvalue()


def run_episode(
    inst: Instance, learner, T: int, seed: int, mode: str = "fast"
) -> EpisodeLog:
    """Play ``learner`` against ``inst`` for ``T`` rounds.

    Randomness for the environment comes from ``default_rng(seed)``; the
    learner owns its own stream. Prices outside [0, 1] are clamped and
    flagged.
    """
    if T < 1:
        raise ValueError("horizon must be at least 1")
    rng = np.random.default_rng(seed)
    prices = np.empty(T)
    sold = np.zeros(T, dtype=bool)
    clamped = np.zeros(T, dtype=bool)
    if mode == "fast":
        u = rng.random(T)
        no_sale: Dict[float, float] = {}
        choose, update = learner.choose, learner.update
        for t in range(T):
            p = choose()
            if not 0.0 <= p <= 1.0:
                p = min(max(p, 0.0), 1.0)
                clamped[t] = True
            q = no_sale.get(p)
            if q is None:
                q = no_sale[p] = product_cdf(inst, p)
            s = u[t] >= q
            prices[t] = p
            sold[t] = s
            update(p, s)
    elif mode == "bids":
        for t in range(T):
            p = learner.choose()
            if not 0.0 <= p <= 1.0:
                p = min(max(p, 0.0), 1.0)
                clamped[t] = True
            s, _ = post_price(inst, p, rng, mode="bids")
            prices[t] = p
            sold[t] = s
            learner.update(p, s)
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return EpisodeLog(prices, sold, seed, getattr(learner, "label", ""), inst.label, clamped)


@dataclass(frozen=True)
class RegretReport:
    pseudo_regret: float
    realized_regret: float
    optimal_price: float
    optimal_revenue: float
    horizon: int


def expected_revenue_sum(log: EpisodeLog, inst: Instance) -> float:
    uniq, counts = np.unique(log.prices, return_counts=True)
    return float(np.dot(inst.revenue(uniq), counts))


def pseudo_regret(
    log: EpisodeLog, inst: Instance, optimum: Optional[Tuple[float, float]] = None
) -> RegretReport:
    """``T r(p*) - sum_t r(p_t)``, with realized regret as a secondary field."""
    if log.instance_label != inst.label:
        raise InstanceMismatch(
            f"log was produced on {log.instance_label!r}, not {inst.label!r}"
        )
    p_star, r_star = optimum if optimum is not None else monopoly_price(inst)
    T = log.horizon
    return RegretReport(
        pseudo_regret=T * r_star - expected_revenue_sum(log, inst),
        realized_regret=T * r_star - log.cumulative_revenue,
        optimal_price=p_star,
        optimal_revenue=r_star,
        horizon=T,
    )


def summary_json(
    learner: str, instance: str, T: int, seed: int, report: RegretReport
) -> str:
    doc = {
        "learner": learner,
        "instance": instance,
        "T": T,
        "seed": seed,
        "pseudo_regret": report.pseudo_regret,
        "realized_regret": report.realized_regret,
    }
    return json.dumps(doc, sort_keys=True)


__all__ = [
    "EpisodeLog",
    "Instance",
    "InstanceMismatch",
    "PriceGrid",
    "RegretReport",
    "expected_revenue_sum",
    "monopoly_price",
    "post_price",
    "product_cdf",
    "pseudo_regret",
    "revenue_at",
    "run_episode",
    "summary_json",
]
