"""Independent symbolic / high-precision derivation of reference values.

Run ``python tests/oracles/derive.py`` to regenerate ``frozen.json``. Nothing
here imports ``pricelab``: every number comes from sympy or mpmath.
"""

import json
import pathlib

import mpmath as mp
import sympy as sp

mp.mp.dps = 40
x = sp.symbols("x", positive=True)


def bern_kl(p, q):
    p, q = mp.mpf(p), mp.mpf(q)
    t1 = 0 if p == 0 else p * mp.log(p / q)
    t2 = 0 if p == 1 else (1 - p) * mp.log((1 - p) / (1 - q))
    return float(t1 + t2)


def margin(F, coef):
    f = sp.diff(F, x)
    return sp.simplify(coef * f**2 + (1 - F) * sp.diff(f, x))


def virtual(F):
    return sp.simplify(x - (1 - F) / sp.diff(F, x))


def hazard(F):
    return sp.simplify(sp.diff(F, x) / (1 - F))


def derive():
    out = {}
    out["kl_half_095"] = bern_kl("0.5", "0.95")
    out["kl_zero_half"] = bern_kl(0, "0.5")
    out["kl_01_09"] = bern_kl("0.1", "0.9")
    out["kl_01_05"] = bern_kl("0.1", "0.5")

    F10 = 1 - 1 / (x + 1)
    Fthird = 1 - 1 / (3 * x)
    Fexp = 1 - sp.exp(-sp.Rational(2, 5) * x)
    out["phi_F10"] = str(virtual(F10))
    out["phi_third"] = str(virtual(Fthird))
    out["phi_exp"] = str(virtual(Fexp))
    out["lambda_exp"] = str(hazard(Fexp))
    out["lambda_third"] = str(hazard(Fthird))
    out["regular_margin_F10"] = str(margin(F10, 2))
    out["mhr_margin_exp"] = str(margin(Fexp, 1))
    out["density_third_half"] = float(sp.diff(Fthird, x).subs(x, sp.Rational(1, 2)))
    out["density_exp_zero"] = float(sp.diff(Fexp, x).subs(x, 0))

    # saturated tails solve their ODE with equality
    y, yp, s = sp.symbols("y yp s", positive=True)
    Freg = 1 - (1 - y) ** 2 / ((x - s) * yp + 1 - y)
    Fmhr = 1 - (1 - y) * sp.exp(-yp * (x - s) / (1 - y))
    out["saturated_regular_margin"] = str(margin(Freg, 2))
    out["saturated_mhr_margin"] = str(margin(Fmhr, 1))
    out["saturated_regular_boundary"] = [
        str(sp.simplify(Freg.subs(x, s))),
        str(sp.simplify(sp.diff(Freg, x).subs(x, s))),
    ]

    # F_{2,0} of the two-MHR base at 1
    F20_1 = mp.mpf("0.3") / (1 - mp.e ** mp.mpf("-0.4"))
    out["mhr_F20_at_1"] = float(F20_1)
    out["mhr_F20_atom"] = float(1 - F20_1)

    # two-regular-25 member a = 0.9, eps = 1e-4: revenue at b = 0.47
    b, eps = mp.mpf("0.47"), mp.mpf("1e-4")
    out["two_regular_25_revenue_at_b"] = float(mp.mpf(1) / 3 + (b / (b + 1)) * eps * b)

    # three-regular: c is the root of c (1 - c^2 / ((c + a)(c + b))) = 1/3 above 1/3
    a_, b_ = sp.Integer(1), sp.Rational(1, 100)
    cs = sp.solve(sp.Eq(x * (1 - x**2 / ((x + a_) * (x + b_))), sp.Rational(1, 3)), x)
    cs = [float(c) for c in cs if c.is_real and c > sp.Rational(1, 3)]
    out["three_regular_c_a1_b001"] = min(cs)
    out["three_regular_gap_a1_b001"] = float(sp.Rational(1, 3) * sp.Rational(2, 100) / sp.Rational(102, 100))

    # product identity (x/(x+a)) (x/(x+b)) (3x-1)(x+a)(x+b)/(3x^3) = 1 - 1/(3x)
    a, bb = sp.symbols("a b", positive=True)
    prod = (x / (x + a)) * (x / (x + bb)) * (3 * x - 1) * (x + a) * (x + bb) / (3 * x**3)
    out["three_regular_product_minus_base"] = str(sp.simplify(prod - Fthird))
    prod2 = (x / (x + a)) * (3 * x - 1) * (x + a) / (3 * x**2)
    out["two_regular_3_product_minus_base"] = str(sp.simplify(prod2 - Fthird))

    # T' = (25000 c / eps)^(1/(1-alpha)) for c = 1, alpha = 2/3, eps = 0.01
    out["regret_budget_c1_a23_e001"] = float(mp.mpf(2500000) ** 3)
    # family sizes
    out["K_two_regular_25_1e-6"] = int(sp.floor(sp.Rational(1, 10) / (8 * sp.sqrt(sp.Rational(1, 10**6)))))
    out["K_two_regular_3_1_30"] = int(sp.floor(sp.Rational(2, 3) / sp.Rational(1, 30)))
    out["K_three_mhr_3_005"] = int(sp.floor(sp.Rational(3, 10) / sp.Rational(5, 100)))
    # two-piece counterexample: density 1.8 on [0, .5], 0.2 on (.5, 1]
    F_left = sp.Rational(9, 5) * x
    phi_left = sp.Rational(1, 2) - (1 - F_left.subs(x, sp.Rational(1, 2))) / sp.Rational(9, 5)
    out["counterexample_phi_left"] = float(phi_left)
    out["counterexample_phi_right"] = float(sp.Rational(1, 2) - (1 - sp.Rational(9, 10)) / sp.Rational(1, 5))
    return out


if __name__ == "__main__":
    path = pathlib.Path(__file__).with_name("frozen.json")
    path.write_text(json.dumps(derive(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")
