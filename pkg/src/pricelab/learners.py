"""Pricing policies that learn from the sold / not-sold bit.

All policies share a tiny duck-typed contract: ``choose() -> price``,
``update(price, sold)``, ``pull_counts()`` and a ``label``. Arm-based
policies play prices from a fixed list and treat ``price * sold`` as the
reward of the pulled arm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .market import EpisodeLog, Instance, run_episode


@dataclass(frozen=True)
class ArmGrid:
    """``K`` evenly spaced prices ``1/K, 2/K, ..., 1`` (price 0 is useless)."""

    K: int

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("an arm grid needs K >= 1")

    @property
    def prices(self) -> np.ndarray:
        return np.arange(1, self.K + 1) / self.K


class ArmLearner:
    label = "arms"

    def __init__(self, prices: Union[ArmGrid, Sequence[float]]):
        prices = prices.prices if isinstance(prices, ArmGrid) else prices
        self.prices = np.asarray(prices, dtype=float)
        if self.prices.ndim != 1 or self.prices.size == 0:
            raise ValueError("need a non-empty list of prices")
        self._price_list = self.prices.tolist()
        self._index = {p: i for i, p in enumerate(self._price_list)}
        self.K = self.prices.size
        self.counts = np.zeros(self.K, dtype=np.int64)
        self.t = 0
        self._last: Optional[int] = None

    def _arm_of(self, price: float) -> int:
        i = self._last
        if i is not None and self._price_list[i] == price:
            return i
        try:
            return self._index[price]
        except KeyError:
            raise ValueError(f"{price} is not one of this learner's arms") from None

    def pull_counts(self) -> np.ndarray:
        return self.counts.copy()

    def choose(self) -> float:
        raise NotImplementedError

    def update(self, price: float, sold: bool) -> None:
        i = self._arm_of(price)
        self.counts[i] += 1
        self.t += 1
        self._observe(i, price if sold else 0.0)

    def _observe(self, arm: int, reward: float) -> None:
        pass


class UCB1(ArmLearner):
    """Index ``mean_i + sqrt(2 ln t / n_i)`` after one round-robin pass."""

    def __init__(self, prices):
        super().__init__(prices)
        self.label = f"ucb(K={self.K})"
        self.sums = np.zeros(self.K)
        self.means = np.zeros(self.K)
        self._inv_sqrt_n = np.zeros(self.K)

    def choose(self) -> float:
        if self.t < self.K:
            i = self.t
        else:
            bonus = math.sqrt(2.0 * math.log(self.t))
            i = int(np.argmax(self.means + bonus * self._inv_sqrt_n))
        self._last = i
        return self._price_list[i]

    def _observe(self, i, reward):
        n = self.counts[i]
        self.sums[i] += reward
        self.means[i] = self.sums[i] / n
        self._inv_sqrt_n[i] = 1.0 / math.sqrt(n)


class EXP3(ArmLearner):
    """Exponential weights on importance-weighted losses ``1 - reward``.

    This is FTRL with the entropic regulariser; the sampling distribution is
    ``w / w.sum()`` with ``w_i = exp(-eta * L_i)``.
    """

    _BLOCK = 4096

    def __init__(self, prices, eta: float, seed: Optional[int] = None):
        super().__init__(prices)
        if not eta > 0:
            raise ValueError("EXP3 needs eta > 0")
        self.eta = float(eta)
        self.label = f"exp3(K={self.K})"
        # separate spawn key: a learner seeded like the environment must not share its stream
        self.rng = np.random.default_rng(
            None if seed is None else np.random.SeedSequence(seed, spawn_key=(0x1EA,))
        )
        self.w = np.ones(self.K)
        self._u = self.rng.random(self._BLOCK)
        self._k = 0
        self._p_last = 1.0

    def probabilities(self) -> np.ndarray:
        return self.w / self.w.sum()

    def choose(self) -> float:
        if self._k == self._BLOCK:
            self._u = self.rng.random(self._BLOCK)
            self._k = 0
        u = self._u[self._k]
        self._k += 1
        cum = np.cumsum(self.w)
        total = cum[-1]
        i = min(int(np.searchsorted(cum, u * total, side="right")), self.K - 1)
        self._last = i
        self._p_last = self.w[i] / total
        return self._price_list[i]

    def _observe(self, i, reward):
        self.w[i] *= math.exp(-self.eta * (1.0 - reward) / self._p_last)
        if self.t % 1024 == 0:
            top = self.w.max()
            if top < 1e-100:
                self.w /= top


class ConstantPrice:
    def __init__(self, price: float):
        self.price = float(price)
        self.label = f"constant({self.price:g})"
        self.n = 0

    def choose(self) -> float:
        return self.price

    def update(self, price, sold) -> None:
        self.n += 1

    def pull_counts(self) -> np.ndarray:
        return np.array([self.n])


class RoundRobin(ArmLearner):
    """Cycles through its prices; the uniform-grid baseline strategy."""

    def __init__(self, prices):
        super().__init__(prices)
        self.label = f"uniform(K={self.K})"

    def choose(self) -> float:
        i = self.t % self.K
        self._last = i
        return self._price_list[i]


def default_eta(K: int, T: int) -> float:
    if K == 1:
        return 1.0
    return math.sqrt(math.log(K) / (T * K))


def make_ucb(K: int) -> UCB1:
    return UCB1(ArmGrid(K))


def make_exp3(K: int, eta: Optional[float] = None, T: Optional[int] = None, seed=None) -> EXP3:
    if eta is None:
        if T is None:
            raise ValueError("EXP3 needs eta or a known horizon T")
        eta = default_eta(K, T)
    return EXP3(ArmGrid(K), eta, seed=seed)


def cube_root_arms(T: int) -> int:
    """Smallest ``K`` with ``K**3 >= T``."""
    k = max(1, int(round(T ** (1.0 / 3.0))))
    while k**3 < T:
        k += 1
    while k > 1 and (k - 1) ** 3 >= T:
        k -= 1
    return k


def vanilla_pricing(T: int, core: str = "exp3", seed=None, K: Optional[int] = None) -> ArmLearner:
    """Bandit core over ``ceil(T^(1/3))`` evenly spaced prices.

    ``K`` may be overridden to study the discretisation trade-off.
    """
    if T < 8:
        raise ValueError("vanilla pricing expects T >= 8")
    K = cube_root_arms(T) if K is None else int(K)
    if core == "exp3":
        learner = make_exp3(K, T=T, seed=seed)
    elif core == "ucb":
        learner = make_ucb(K)
    else:
        raise ValueError(f"unknown bandit core {core!r}")
    learner.label = f"vanilla-{core}(K={K})"
    return learner


class FindBestResult(NamedTuple):
    arm: int
    price: float
    counts: np.ndarray
    log: EpisodeLog


def find_best(
    arms,
    T: int,
    core: ArmLearner,
    inst: Instance,
    rng: np.random.Generator,
    mode: str = "fast",
) -> FindBestResult:
    """Run ``core`` for ``T`` rounds, then return arm ``i`` w.p. ``T_i / T``."""
    prices = arms.prices if isinstance(arms, ArmGrid) else np.asarray(arms, dtype=float)
    if not np.array_equal(prices, core.prices):
        raise ValueError("core must operate on exactly the given arms")
    log = run_episode(inst, core, T, seed=int(rng.integers(2**63)), mode=mode)
    counts = core.pull_counts()
    if int(counts.sum()) != T:
        raise RuntimeError(f"pull counts sum to {counts.sum()}, expected {T}")
    arm = sample_arm(counts, rng)
    return FindBestResult(arm, float(prices[arm]), counts, log)


def sample_arm(counts, rng: np.random.Generator) -> int:
    """Arm ``i`` with probability ``counts[i] / sum(counts)``."""
    counts = np.asarray(counts, dtype=float)
    return int(rng.choice(counts.size, p=counts / counts.sum()))


def check_disjoint(intervals: Sequence[Tuple[float, float]]) -> None:
    order = sorted(intervals)
    for (lo, hi) in order:
        if not lo <= hi:
            raise ValueError(f"bad interval [{lo}, {hi})")
    for (a_lo, a_hi), (b_lo, b_hi) in zip(order, order[1:]):
        if b_lo < a_hi:
            raise ValueError(f"intervals [{a_lo}, {a_hi}) and [{b_lo}, {b_hi}) overlap")


def pull_counts_in(log, intervals: Sequence[Tuple[float, float]]) -> np.ndarray:
    """Number of logged prices falling in each half-open ``[lo, hi)``."""
    check_disjoint(intervals)
    prices = log.prices if isinstance(log, EpisodeLog) else np.asarray(log, dtype=float)
    uniq, counts = np.unique(prices, return_counts=True)
    out = np.zeros(len(intervals), dtype=np.int64)
    for j, (lo, hi) in enumerate(intervals):
        out[j] = counts[(uniq >= lo) & (uniq < hi)].sum()
    return out


@dataclass(frozen=True)
class Strategy:
    """Picklable learner factory: ``Strategy(cfg)(T, seed)`` builds a fresh learner.

    ``cfg`` follows :func:`learner_from_config`; frozen so it can be shipped
    to worker processes and used as a dictionary key.
    """

    kind: str
    K: Optional[int] = None
    price: Optional[float] = None
    core: str = "exp3"
    eta: Optional[float] = None
    prices: Optional[Tuple[float, ...]] = None

    def __call__(self, T: int, seed=None):
        cfg = {"type": self.kind, "core": self.core, "T": T}
        if self.K is not None:
            cfg["K"] = self.K
        if self.prices is not None:
            cfg["prices"] = list(self.prices)
        if self.price is not None:
            cfg["price"] = self.price
        if self.eta is not None:
            cfg["eta"] = self.eta
        return learner_from_config(cfg, T=T, seed=seed)

    @property
    def label(self) -> str:
        if self.kind == "vanilla":
            return f"vanilla-{self.core}"
        if self.kind == "constant":
            return f"constant({self.price:g})"
        if self.prices is not None:
            return f"{self.kind}(prices={len(self.prices)})"
        return f"{self.kind}(K={self.K})"

    @classmethod
    def from_config(cls, cfg: dict) -> "Strategy":
        cfg = dict(cfg)
        kind = cfg.pop("type", None)
        if kind not in ("ucb", "exp3", "vanilla", "constant", "uniform"):
            raise ValueError(f"unknown learner type {kind!r}")
        if kind in ("ucb", "exp3", "uniform") and "K" not in cfg and "prices" not in cfg:
            raise ValueError(f"learner type {kind!r} needs K or prices")
        if kind == "constant" and "price" not in cfg:
            raise ValueError("constant learner needs a price")
        known = {"K", "price", "core", "eta", "prices"}
        extra = set(cfg) - known
        if extra:
            raise ValueError(f"unknown learner parameters {sorted(extra)}")
        if "K" in cfg:
            cfg["K"] = int(cfg["K"])
        if "prices" in cfg:
            cfg["prices"] = tuple(float(p) for p in cfg["prices"])
        return cls(kind, **cfg)


def learner_from_config(cfg: dict, T: Optional[int] = None, seed=None):
    """Build a learner from ``{"type": ..., **params}``."""
    kind = cfg.get("type")
    params = {k: v for k, v in cfg.items() if k != "type"}
    if kind == "ucb":
        return UCB1(params["prices"]) if "prices" in params else make_ucb(int(params["K"]))
    if kind == "exp3":
        if "prices" in params:
            eta = params.get("eta") or default_eta(len(params["prices"]), int(params.get("T") or T))
            return EXP3(params["prices"], eta, seed=seed)
        return make_exp3(int(params["K"]), params.get("eta"), T=params.get("T") or T, seed=seed)
    if kind == "vanilla":
        return vanilla_pricing(int(params.get("T") or T), params.get("core", "exp3"), seed=seed)
    if kind == "constant":
        return ConstantPrice(float(params["price"]))
    if kind == "uniform":
        return RoundRobin(params["prices"]) if "prices" in params else RoundRobin(ArmGrid(int(params["K"])))
    raise ValueError(f"unknown learner type {kind!r}")


__all__ = [
    "ArmGrid",
    "ArmLearner",
    "ConstantPrice",
    "EXP3",
    "FindBestResult",
    "RoundRobin",
    "Strategy",
    "UCB1",
    "check_disjoint",
    "cube_root_arms",
    "default_eta",
    "find_best",
    "learner_from_config",
    "make_exp3",
    "make_ucb",
    "pull_counts_in",
    "sample_arm",
    "vanilla_pricing",
]
