"""KL tools and Monte Carlo experiment drivers.

Experiments derive every per-trial seed from ``SeedSequence(seed,
spawn_key=...)``, so results depend only on the top-level seed and not on
worker scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import rel_entr

from .hard_instances import HardFamily
from .learners import ArmLearner, Strategy, check_disjoint, find_best
from .market import Instance, expected_revenue_sum, monopoly_price, run_episode


class KLPreconditionError(ValueError):
    pass


class KLBoundViolation(AssertionError):
    pass


class BudgetOverflow(OverflowError):
    pass


# -- divergences ---------------------------------------------------------------------


def bernoulli_kl(x, y):
    """``d(x, y)`` in nats; ``+inf`` when ``y`` puts zero mass where ``x`` does not."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    # the two terms can cancel to a tiny negative number in floating point
    out = np.maximum(rel_entr(x, y) + rel_entr(1.0 - x, 1.0 - y), 0.0)
    return float(out) if out.ndim == 0 else out


def kl_batch_bound(xs: Sequence[float], b: float, ys: Sequence[float]) -> Tuple[float, float]:
    """Return ``(sum_{x_i < b} d(x_i, y_i), n d(mean(xs), b))`` after checking ``lhs >= rhs``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size == 0:
        raise KLPreconditionError("xs and ys must be non-empty lists of equal length")
    if np.any((xs < 0) | (xs > 1)) or np.any((ys < 0) | (ys > 1)):
        raise KLPreconditionError("all xs and ys must be probabilities")
    if not b > 0:
        raise KLPreconditionError(f"need 0 < b, got b={b}")
    if not b <= ys.min():
        raise KLPreconditionError(f"need b <= min(ys), got b={b} > {ys.min()}")
    a = float(xs.mean())
    if not a < b:
        raise KLPreconditionError(f"need a = mean(xs) < b, got a={a}, b={b}")
    below = xs < b
    lhs = float(np.sum(bernoulli_kl(xs[below], ys[below])))
    rhs = xs.size * bernoulli_kl(a, b)
    if lhs < rhs - 1e-12 * max(1.0, abs(rhs)):
        raise KLBoundViolation(f"batch bound fails: {lhs} < {rhs}")
    return lhs, rhs


def kl_profile(base: Instance, member: Instance, points: int = 100_000):
    """``d(F_0(x), F_a(x))`` on a uniform grid plus the member's knots."""
    xs = np.unique(np.concatenate([np.linspace(0.0, 1.0, points), member.breakpoints]))
    return xs, bernoulli_kl(base.cdf(xs), member.cdf(xs))


def max_kl(base: Instance, member: Instance, points: int = 100_000) -> Tuple[float, float]:
    xs, d = kl_profile(base, member, points)
    i = int(np.argmax(d))
    return float(d[i]), float(xs[i])


def kl_interval_bound(x_hat: float, sx: float, y_hat: float, sy: float) -> float:
    """Smallest ``d(x, y)`` over ``|x - x_hat| <= sx``, ``|y - y_hat| <= sy``."""
    x_lo, x_hi = max(0.0, x_hat - sx), min(1.0, x_hat + sx)
    y_lo, y_hi = max(0.0, y_hat - sy), min(1.0, y_hat + sy)
    if x_hi < y_lo:
        return bernoulli_kl(x_hi, y_lo)
    if y_hi < x_lo:
        return bernoulli_kl(x_lo, y_hi)
    return 0.0


# -- reductions ----------------------------------------------------------------------


def _intervals(family_or_intervals):
    if isinstance(family_or_intervals, HardFamily):
        return family_or_intervals.intervals
    return list(family_or_intervals)


def interval_distinguisher(p_hat: float, family) -> int:
    """1-based index of the interval ``[lo, hi)`` containing ``p_hat``; 0 if none."""
    for i, (lo, hi) in enumerate(_intervals(family), start=1):
        if lo <= p_hat < hi:
            return i
    return 0


def informative_pulls(prices: np.ndarray, counts: np.ndarray, intervals) -> np.ndarray:
    """Pulls per interval, given each arm's price and pull count."""
    out = np.zeros(len(intervals), dtype=np.int64)
    for p, n in zip(np.asarray(prices), np.asarray(counts)):
        j = interval_distinguisher(float(p), intervals)
        if j:
            out[j - 1] += n
    return out


SIMULATION_CAP = 10**10


def regret_budget(c: float, alpha: float, eps: float) -> float:
    """``T' = (25000 c / eps) ** (1 / (1 - alpha))``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not (c > 0 and eps > 0):
        raise ValueError("c and eps must be positive")
    try:
        return (25000.0 * c / eps) ** (1.0 / (1.0 - alpha))
    except OverflowError:
        return math.inf


def regret_to_distinguisher(
    core: Callable,
    family: HardFamily,
    member: int,
    c: float,
    alpha: float,
    budget_override: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    mode: str = "fast",
) -> int:
    """Run ``core(T', seed)`` on member ``member`` and sample an interval from its pull shares.

    Mass outside every informative interval maps to 0 (the base hypothesis).
    """
    if not 1 <= member <= family.K:
        raise ValueError(f"member must lie in 1..{family.K}, got {member}")
    T = regret_budget(c, alpha, family.eps)
    if budget_override is not None:
        T = int(budget_override)
    elif not T <= SIMULATION_CAP:
        raise BudgetOverflow(
            f"T' = {T:.4g} rounds cannot be simulated; pass budget_override"
        )
    T = int(math.ceil(T))
    rng = rng if rng is not None else np.random.default_rng()
    learner = core(T, int(rng.integers(2**63)))
    log = run_episode(family.members[member - 1].instance, learner, T, int(rng.integers(2**63)), mode)
    uniq, counts = np.unique(log.prices, return_counts=True)
    pulls = informative_pulls(uniq, counts, family.intervals)
    z = np.append(pulls, T - pulls.sum()) / T
    j = int(rng.choice(z.size, p=z))
    return 0 if j == family.K else j + 1


# -- identification ------------------------------------------------------------------


@dataclass
class IdentificationResult:
    family_tag: str
    eps: float
    budget: int
    trials: int
    strategy: str
    seed: int
    base_success: float
    success_rate: List[float]
    mean_informative_pulls: List[float]  # E_0[T_i], under the base instance
    stderr_informative_pulls: List[float]
    own_informative_pulls: List[float]
    p0_event: List[float]
    pi_event: List[float]
    kl_budget: List[float]
    kl_required: List[float]
    violations: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _smoothed_sigma(k: int, n: int) -> float:
    # Laplace-smoothed binomial error bar; never zero at k = 0 or k = n
    p = (k + 1) / (n + 2)
    return math.sqrt(p * (1 - p) / n)


def _identify_trial(args):
    inst, intervals, strategy, budget, seed, h, trial, mode = args
    ss = np.random.SeedSequence(seed, spawn_key=(h, trial))
    rng = np.random.default_rng(ss)
    learner = strategy(budget, int(rng.integers(2**63)))
    if not isinstance(learner, ArmLearner):
        raise TypeError("identification strategies must be arm-based")
    res = find_best(learner.prices, budget, learner, inst, rng, mode=mode)
    pulls = informative_pulls(learner.prices, res.counts, intervals)
    return interval_distinguisher(res.price, intervals), pulls


def _pool_map(fn, tasks, jobs: int):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))


def identification_experiment(
    family: HardFamily,
    strategy: Callable,
    budget: int,
    trials: int,
    seed: int = 42,
    jobs: int = 1,
    mode: str = "fast",
) -> IdentificationResult:
    """FindBest + interval distinguisher against the base and every member.

    Each hypothesis gets ``trials`` independent sessions of ``budget`` rounds.
    For every member ``i`` the KL budget ``eps^2 E_0[T_i]`` is compared with
    ``d(P_0[E_i], P_i[E_i])``, where ``E_i`` is "output i"; both sides get 3
    sigma of slack and a violation is recorded when even the slack cannot
    reconcile them.
    """
    K = family.K
    if budget < K:
        raise ValueError(f"budget {budget} is smaller than K = {K}")
    if trials < 1:
        raise ValueError("need at least one trial")
    intervals = family.intervals
    check_disjoint(intervals)
    insts = [family.base] + [m.instance for m in family.members]
    tasks = [
        (insts[h], intervals, strategy, budget, seed, h, t, mode)
        for h in range(K + 1)
        for t in range(trials)
    ]
    results = _pool_map(_identify_trial, tasks, jobs)
    outputs = np.array([r[0] for r in results]).reshape(K + 1, trials)
    pulls = np.array([r[1] for r in results]).reshape(K + 1, trials, K)

    base_pulls = pulls[0].astype(float)
    mean0 = base_pulls.mean(axis=0)
    se0 = base_pulls.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(K)
    eps2 = family.eps**2
    p0, pi, budget_side, required, violations = [], [], [], [], []
    for i in range(1, K + 1):
        k0 = int(np.sum(outputs[0] == i))
        ki = int(np.sum(outputs[i] == i))
        x, y = k0 / trials, ki / trials
        p0.append(x)
        pi.append(y)
        lhs = eps2 * (mean0[i - 1] + 3 * se0[i - 1])
        rhs = kl_interval_bound(x, 3 * _smoothed_sigma(k0, trials), y, 3 * _smoothed_sigma(ki, trials))
        budget_side.append(float(lhs))
        required.append(float(rhs))
        if lhs < rhs:
            violations.append(i)

    label = getattr(strategy, "label", getattr(strategy, "__name__", repr(strategy)))
    return IdentificationResult(
        family_tag=family.family_tag.value,
        eps=family.eps,
        budget=int(budget),
        trials=int(trials),
        strategy=str(label),
        seed=int(seed),
        base_success=float(np.mean(outputs[0] == 0)),
        success_rate=[float(np.mean(outputs[i] == i)) for i in range(1, K + 1)],
        mean_informative_pulls=[float(v) for v in mean0],
        stderr_informative_pulls=[float(v) for v in se0],
        own_informative_pulls=[float(pulls[i, :, i - 1].mean()) for i in range(1, K + 1)],
        p0_event=p0,
        pi_event=pi,
        kl_budget=budget_side,
        kl_required=required,
        violations=violations,
    )


# -- regret scaling ------------------------------------------------------------------


@dataclass
class RegretScalingFit:
    horizons: List[int]
    mean_regret: List[float]
    stderr: List[float]
    slope: float
    intercept: float
    seeds: List[List[int]]
    learner: str
    instance: str
    excluded: List[int] = field(default_factory=list)
    degenerate: bool = False
    regrets: List[List[float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("slope", "intercept"):
            if not math.isfinite(d[k]):
                d[k] = None
        return d


def _regret_run(args):
    inst, factory, T, seed, j, k, optimum, mode = args
    ss = np.random.SeedSequence(seed, spawn_key=(j, k))
    env_seed, learner_seed = (int(v) for v in ss.generate_state(2, dtype=np.uint64))
    learner = factory(T, learner_seed)
    log = run_episode(inst, learner, T, env_seed, mode=mode)
    return env_seed, T * optimum[1] - expected_revenue_sum(log, inst), learner.label


def regret_scaling_experiment(
    inst: Instance,
    learner_factory: Callable,
    horizons: Sequence[int],
    seeds_per_horizon: int,
    seed: int = 42,
    jobs: int = 1,
    mode: str = "fast",
) -> RegretScalingFit:
    """Mean pseudo-regret per horizon and an OLS fit of ``ln regret`` on ``ln T``."""
    horizons = [int(T) for T in horizons]
    if len(horizons) < 3:
        raise ValueError("need at least 3 horizons")
    if min(horizons) < 64:
        raise ValueError("every horizon must be at least 64")
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ValueError("horizons must be strictly increasing")
    if seeds_per_horizon < 1:
        raise ValueError("need at least one seed per horizon")
    optimum = monopoly_price(inst)
    tasks = [
        (inst, learner_factory, T, seed, j, k, optimum, mode)
        for j, T in enumerate(horizons)
        for k in range(seeds_per_horizon)
    ]
    # longest runs first keeps the pool busy
    order = sorted(range(len(tasks)), key=lambda i: -tasks[i][2])
    done = dict(zip(order, _pool_map(_regret_run, [tasks[i] for i in order], jobs)))
    runs = [done[i] for i in range(len(tasks))]

    n = seeds_per_horizon
    seeds, regrets, means, errs = [], [], [], []
    for j in range(len(horizons)):
        block = runs[j * n : (j + 1) * n]
        seeds.append([b[0] for b in block])
        r = np.array([b[1] for b in block])
        regrets.append(r.tolist())
        means.append(float(r.mean()))
        errs.append(float(r.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0)

    keep = [j for j, m in enumerate(means) if m > 0]
    excluded = [horizons[j] for j in range(len(horizons)) if j not in keep]
    if len(keep) >= 2:
        slope, intercept = np.polyfit(np.log([horizons[j] for j in keep]), np.log([means[j] for j in keep]), 1)
        degenerate = False
    else:
        slope = intercept = math.nan
        degenerate = True
    return RegretScalingFit(
        horizons=horizons,
        mean_regret=means,
        stderr=errs,
        slope=float(slope),
        intercept=float(intercept),
        seeds=seeds,
        learner=runs[0][2] if not isinstance(learner_factory, Strategy) else learner_factory.label,
        instance=inst.label,
        excluded=excluded,
        degenerate=degenerate,
        regrets=regrets,
    )


__all__ = [
    "BudgetOverflow",
    "IdentificationResult",
    "KLBoundViolation",
    "KLPreconditionError",
    "RegretScalingFit",
    "bernoulli_kl",
    "identification_experiment",
    "informative_pulls",
    "interval_distinguisher",
    "kl_batch_bound",
    "kl_interval_bound",
    "kl_profile",
    "max_kl",
    "regret_budget",
    "regret_scaling_experiment",
    "regret_to_distinguisher",
]
