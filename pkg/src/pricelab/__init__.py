"""Posted-price learning against hard multi-buyer instances."""

__version__ = "0.1.0"

from .analysis import bernoulli_kl, identification_experiment, kl_batch_bound, regret_scaling_experiment
from .distributions import PiecewiseDistribution, assemble, cdf_at, density_at, inverse_cdf, sample
from .hard_instances import BASES, FamilyTag, HardFamily, build_family
from .learners import ArmGrid, Strategy, find_best, vanilla_pricing
from .market import Instance, monopoly_price, pseudo_regret, revenue_at, run_episode
from .validation import GridSpec, Property, ValidationReport, check_mhr, check_regularity
