import numpy as np
import pytest

from pricelab.distributions import assemble
from pricelab.forms import Constant, SaturatedRegular
from pricelab.hard_instances import two_mhr_base, two_regular_25_member
from pricelab.validation import (
    GridConfigError,
    GridSpec,
    Property,
    check,
    check_mhr,
    check_regularity,
    margin,
)


def test_exact_saturation_regular(f10):
    rep = check_regularity(f10)
    assert rep.passed
    assert abs(rep.min_margin) <= 1e-10
    assert rep.property is Property.REGULAR


def test_exact_saturation_mhr(exp04):
    rep = check_mhr(exp04)
    assert rep.passed
    assert abs(rep.min_margin) <= 1e-10


def test_counterexample_fails(counterexample, oracle):
    rep = check_regularity(counterexample)
    assert not rep.passed
    assert rep.argmin == pytest.approx(0.5)
    drop = oracle["counterexample_phi_right"] - oracle["counterexample_phi_left"]
    assert rep.min_margin == pytest.approx(drop, rel=1e-9)


def test_bumped_member_is_regular():
    for d in two_regular_25_member(0.9, 1e-4).buyers:
        assert check_regularity(d).passed


def test_mhr_baseline_margin():
    f20 = two_mhr_base().buyers[1]
    rep = check_mhr(f20, GridSpec(window=(0.7, 1.0)))
    assert rep.passed
    # away from the knot the margin stays above 1.1
    xs = np.linspace(0.7 + 1e-7, 1 - 1e-7, 1000)
    assert margin(f20.segments[1].form, xs, Property.MHR).min() >= 1.1


def test_saturated_regular_tail_is_regular_not_mhr():
    d = assemble(
        "tail",
        [(0.0, 0.5, Constant(0.0)), (0.5, 1.0, SaturatedRegular(0.0, 3.0, 0.5))],
    )
    assert check_regularity(d).passed
    assert not check_mhr(d).passed


def test_mhr_implies_regular(exp04):
    assert check_mhr(exp04).passed and check_regularity(exp04).passed


def test_coarse_grid_rejected(f10):
    with pytest.raises(GridConfigError):
        check(f10, Property.REGULAR, GridSpec(points=5))


def test_report_fields(third):
    rep = check(third, "Regular")
    doc = rep.to_dict()
    assert doc["passed"] is True
    assert doc["tolerance"] == 1e-9
    assert doc["grid_points"] == rep.grid_points > 0
    assert rep.excluded_knots == (pytest.approx(1 / 3),)
