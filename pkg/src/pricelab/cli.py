"""``pricelab`` command line.

Exit codes: 0 success, 1 validation failure, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import re
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import identification_experiment, regret_scaling_experiment
from .distributions import PiecewiseDistribution
from .hard_instances import BASES, FamilyTag, HardFamily, build_family
from .learners import ArmGrid, Strategy, cube_root_arms, find_best
from .market import Instance, monopoly_price, pseudo_regret, run_episode, summary_json
from .validation import GridSpec, Property, check

EXIT_OK, EXIT_INVALID, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


def parse_horizons(text: str) -> List[int]:
    """``4096..1048576x2`` (geometric), ``64,128,256`` or a single integer."""
    m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*x\s*(\d+(?:\.\d+)?)\s*", text)
    if m:
        start, end, factor = int(m[1]), int(m[2]), float(m[3])
        if start < 1 or end < start or factor <= 1:
            raise ConfigError(f"bad horizon range {text!r}")
        out, T = [], float(start)
        while T <= end * (1 + 1e-12):
            out.append(int(round(T)))
            T *= factor
        return out
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse horizons {text!r}") from None


# -- instance resolution ----------------------------------------------------------


@dataclass
class Target:
    instance: Instance
    family: Optional[HardFamily] = None
    member: int = 0


def load_instance_file(path: str) -> Instance:
    """JSON document with ``buyers`` (a list of distribution specs) or a single spec."""
    with open(path) as fh:
        doc = json.load(fh)
    if "buyers" in doc:
        buyers = tuple(PiecewiseDistribution.from_dict(b) for b in doc["buyers"])
        return Instance(buyers, doc.get("label", os.path.basename(path)))
    d = PiecewiseDistribution.from_dict(doc)
    return Instance((d,), d.label)


def resolve_target(args) -> Target:
    if getattr(args, "spec", None):
        return Target(load_instance_file(args.spec))
    if getattr(args, "family", None):
        if args.eps is None:
            raise ConfigError("--family needs --eps")
        fam = build_family(args.family, args.eps)
        member = getattr(args, "member", 0) or 0
        if not 0 <= member <= fam.K:
            raise ConfigError(f"--member must lie in 0..{fam.K}")
        inst = fam.base if member == 0 else fam.members[member - 1].instance
        return Target(inst, fam, member)
    name = getattr(args, "instance", None)
    if name is None:
        raise ConfigError("choose --instance, --family or --spec")
    if name not in BASES:
        raise ConfigError(f"unknown instance {name!r}; known: {', '.join(sorted(BASES))}")
    return Target(BASES[name]())


def strategy_from_args(args, T_hint: Optional[int] = None) -> Strategy:
    kind = args.learner
    cfg = {"type": kind}
    if kind == "vanilla":
        cfg["core"] = args.core
    elif kind == "constant":
        if args.price is None:
            raise ConfigError("--learner constant needs --price")
        cfg["price"] = args.price
    else:
        K = args.K if args.K is not None else (cube_root_arms(T_hint) if T_hint else None)
        if K is None:
            raise ConfigError(f"--learner {kind} needs --K")
        cfg["K"] = K
    if getattr(args, "eta", None) is not None:
        cfg["eta"] = args.eta
    return Strategy.from_config(cfg)


# -- output --------------------------------------------------------------------------


def _metadata(args) -> dict:
    return {
        "command": args.command + (f" {args.experiment}" if getattr(args, "experiment", None) else ""),
        "seed": args.seed,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
    }


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def emit_json(args, result: dict, path: Optional[str] = None) -> None:
    doc = {"metadata": _metadata(args), "result": _clean(result)}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    path = path or args.out
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- commands ------------------------------------------------------------------------


def cmd_validate(args) -> int:
    grid = GridSpec(points=args.grid)
    if args.spec:
        inst = load_instance_file(args.spec)
        prop = Property(args.property) if args.property else Property.REGULAR
        dists, tag, eps = list(inst.buyers), None, None
    else:
        if not args.family or args.eps is None:
            raise ConfigError("validate needs --family and --eps, or --spec")
        fam = build_family(args.family, args.eps)
        prop = Property(args.property) if args.property else fam.family_tag.property
        dists, tag, eps = fam.distributions(), fam.family_tag.value, fam.eps
    reports = [check(d, prop, grid) for d in dists]
    ok = all(r.passed for r in reports)
    emit_json(
        args,
        {
            "family_tag": tag,
            "eps": eps,
            "property": prop.value,
            "passed": ok,
            "reports": [r.to_dict() for r in reports],
        },
    )
    for r in reports:
        if not r.passed:
            _say(f"FAIL {r.label}: min margin {r.min_margin:.3e} at x={r.argmin:.9g}")
    _say(f"{sum(r.passed for r in reports)}/{len(reports)} distributions pass {prop.value}")
    return EXIT_OK if ok else EXIT_INVALID


def cmd_inspect(args) -> int:
    target = resolve_target(args)
    inst = target.instance
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    xs = np.unique(np.concatenate([np.linspace(0.0, 1.0, args.points), inst.breakpoints]))
    cols = {"x": xs}
    for i, b in enumerate(inst.buyers, start=1):
        cols[f"F_{i}"] = b.cdf(xs)
    cols["product_F"] = inst.cdf(xs)
    cols["r"] = inst.revenue(xs)
    if target.family is not None:
        base = target.family.base
        for i, (b0, b) in enumerate(zip(base.buyers, inst.buyers), start=1):
            cols[f"dF_{i}"] = b0.cdf(xs) - b.cdf(xs)
        cols["d_product_F"] = base.cdf(xs) - inst.cdf(xs)
        cols["dr"] = inst.revenue(xs) - base.revenue(xs)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(cols))
        for row in zip(*cols.values()):
            w.writerow([repr(float(v)) for v in row])
    finally:
        if args.out:
            fh.close()
    p, r = monopoly_price(inst)
    _say(f"{inst.label}: {len(xs)} rows, monopoly price {p:.9g}, revenue {r:.9g}")
    return EXIT_OK


def cmd_export_family(args) -> int:
    fam = build_family(args.family, args.eps)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)

    def dump(name, inst):
        doc = {"label": inst.label, "buyers": [b.to_dict() for b in inst.buyers]}
        with open(os.path.join(out, name), "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

    dump("base.json", fam.base)
    for i, m in enumerate(fam.members, start=1):
        dump(f"member_{i:03d}.json", m.instance)
    emit_json(args, fam.manifest(), os.path.join(out, "manifest.json"))
    _say(f"wrote {fam.K} members of {fam.family_tag.value} (eps={fam.eps:g}) to {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    exp = args.experiment
    if exp == "regret":
        horizons = parse_horizons(args.horizons)
        target = resolve_target(args)
        strategy = strategy_from_args(args, max(horizons))
        fit = regret_scaling_experiment(
            target.instance, strategy, horizons, args.seeds, seed=args.seed, jobs=args.jobs
        )
        emit_json(args, fit.to_dict())
        _say(f"{fit.learner} on {fit.instance}: slope {fit.slope:.4f} over {len(horizons)} horizons")
    elif exp == "identify":
        if not args.family or args.eps is None:
            raise ConfigError("run identify needs --family and --eps")
        fam = build_family(args.family, args.eps)
        args.learner = args.strategy
        args.K = args.arms if args.arms is not None else cube_root_arms(args.budget)
        strategy = strategy_from_args(args)
        res = identification_experiment(fam, strategy, args.budget, args.trials, seed=args.seed, jobs=args.jobs)
        emit_json(args, res.to_dict())
        _say(
            f"{res.strategy} on {res.family_tag} eps={res.eps:g}: mean success "
            f"{np.mean(res.success_rate):.3f}, {len(res.violations)} KL-budget violations"
        )
    elif exp == "findbest":
        target = resolve_target(args)
        if args.T < 1 or args.arms < 1 or args.trials < 1:
            raise ConfigError("--T, --arms and --trials must be positive")
        grid = ArmGrid(args.arms)
        strategy = Strategy(args.core, K=args.arms)
        rng = np.random.default_rng(args.seed)
        arms, counts = [], np.zeros(args.arms, dtype=np.int64)
        for _ in range(args.trials):
            core = strategy(args.T, int(rng.integers(2**63)))
            res = find_best(grid, args.T, core, target.instance, rng)
            arms.append(res.arm)
            counts += res.counts
        rev = target.instance.revenue(grid.prices)
        best = int(np.flatnonzero(rev >= rev.max() - 1e-12)[0])
        emit_json(
            args,
            {
                "instance": target.instance.label,
                "core": args.core,
                "T": args.T,
                "arm": arms[0],
                "price": float(grid.prices[arms[0]]),
                "arms": arms,
                "arm_frequency": (np.bincount(arms, minlength=args.arms) / args.trials).tolist(),
                "mean_pull_counts": (counts / args.trials).tolist(),
                "arm_revenue": rev.tolist(),
                "best_arm": best,
            },
        )
        _say(f"find-best returned arm {arms[0]} (best arm {best}) over {args.trials} trial(s)")
    elif exp == "episode":
        target = resolve_target(args)
        if args.T < 1:
            raise ConfigError("--T must be positive")
        strategy = strategy_from_args(args, args.T)
        ss = np.random.SeedSequence(args.seed)
        env_seed, learner_seed = (int(v) for v in ss.generate_state(2, dtype=np.uint64))
        learner = strategy(args.T, learner_seed)
        log = run_episode(target.instance, learner, args.T, env_seed)
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(log.to_csv())
        rep = pseudo_regret(log, target.instance)
        print(summary_json(log.learner_label, log.instance_label, args.T, args.seed, rep))
    return EXIT_OK


# -- parser --------------------------------------------------------------------------


def _instance_flags(p):
    p.add_argument("--instance", help=f"named base instance ({', '.join(sorted(BASES))})")
    p.add_argument("--family", choices=[t.value for t in FamilyTag])
    p.add_argument("--eps", type=float)
    p.add_argument("--member", type=int, default=0, help="1-based member index; 0 is the base")
    p.add_argument("--spec", help="instance or distribution JSON file")


def _learner_flags(p):
    p.add_argument("--learner", default="vanilla", choices=["vanilla", "ucb", "exp3", "uniform", "constant"])
    p.add_argument("--core", default="exp3", choices=["exp3", "ucb"])
    p.add_argument("--K", type=int)
    p.add_argument("--price", type=float)
    p.add_argument("--eta", type=float)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out")
    common.add_argument("--grid", type=int, default=10_000, help="validator grid points")

    ap = argparse.ArgumentParser(prog="pricelab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="certify a family or a spec file")
    p.add_argument("--family", choices=[t.value for t in FamilyTag])
    p.add_argument("--eps", type=float)
    p.add_argument("--spec")
    p.add_argument("--property", choices=[q.value for q in Property])
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("inspect", parents=[common], help="CDF and revenue curves as CSV")
    _instance_flags(p)
    p.add_argument("--points", type=int, default=1001)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("export-family", parents=[common], help="write member specs and a manifest")
    p.add_argument("--family", required=True, choices=[t.value for t in FamilyTag])
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=cmd_export_family)

    run = sub.add_parser("run", help="episodes and experiments")
    rsub = run.add_subparsers(dest="experiment", required=True)

    p = rsub.add_parser("regret", parents=[common])
    _instance_flags(p)
    _learner_flags(p)
    p.add_argument("--horizons", default="4096..65536x2")
    p.add_argument("--seeds", type=int, default=20)

    p = rsub.add_parser("identify", parents=[common])
    p.add_argument("--family", required=True, choices=[t.value for t in FamilyTag])
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--strategy", default="ucb", choices=["ucb", "uniform", "exp3"])
    p.add_argument("--arms", type=int)
    p.add_argument("--core", default="exp3")
    p.add_argument("--price", type=float)
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--trials", type=int, default=100)

    p = rsub.add_parser("findbest", parents=[common])
    _instance_flags(p)
    p.add_argument("--arms", type=int, default=10)
    p.add_argument("--T", type=int, default=2000)
    p.add_argument("--core", default="ucb", choices=["ucb", "exp3"])
    p.add_argument("--trials", type=int, default=1)

    p = rsub.add_parser("episode", parents=[common])
    _instance_flags(p)
    _learner_flags(p)
    p.add_argument("--T", type=int, default=10_000)
    run.set_defaults(func=cmd_run)
    return ap


def _check_common(args) -> None:
    if args.jobs < 1:
        raise ConfigError("--jobs must be positive")
    if args.grid < 1:
        raise ConfigError("--grid must be positive")
    eps = getattr(args, "eps", None)
    if eps is not None and not eps > 0:
        raise ConfigError("--eps must be positive")
    for name in ("seeds", "budget", "trials"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            raise ConfigError(f"--{name} must be positive")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _check_common(args)
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        # ConfigError, HardInstanceError, DistributionError and JSON errors are all ValueErrors
        _say(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
