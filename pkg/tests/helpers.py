"""Shared fixtures: the T^5 x R^2 contact chart and its Jacobi structure,
plus small random generators used by the algebraic property suites."""

from __future__ import annotations

import random
from fractions import Fraction

from coiso.rational import GaussianRational
from coiso.ring import Chart, ScalarFn
from coiso.multivector import MultiVectorField
from coiso.multider import MultiDerivation


def torus_chart():
    """T^5 x R^2 with leaf directions ph_1, ph_2."""
    return Chart(
        torus=("ph_1", "ph_2", "ph_3", "ph_4", "ph_5"),
        fiber=("y_1", "y_2"),
        leaf=("ph_1", "ph_2"),
    )


def fields_XY(chart):
    """X = cos(ph_3) d/dph_4 - sin(ph_3) d/dph_5,
    Y = sin(ph_3) d/dph_4 + cos(ph_3) d/dph_5 (the Reeb field)."""
    s3 = ScalarFn.sin_phi(chart, "ph_3")
    c3 = ScalarFn.cos_phi(chart, "ph_3")
    X = MultiVectorField.vector(chart, {"ph_4": c3, "ph_5": -s3})
    Y = MultiVectorField.vector(chart, {"ph_4": s3, "ph_5": c3})
    return X, Y


def torus_jacobi(chart=None) -> MultiDerivation:
    """The Jacobi structure of theta = y_1 dph_1 + y_2 dph_2 + sin(ph_3) dph_4
    + cos(ph_3) dph_5, written directly in its displayed (P, Q) form:
    P = dph_3 ^ X + Y ^ Euler - dph_1 ^ dy_1 - dph_2 ^ dy_2, Q = Y."""
    chart = chart or torus_chart()
    X, Y = fields_XY(chart)
    d3 = MultiVectorField.basis_vector(chart, "ph_3")
    euler = MultiVectorField.vector(
        chart,
        {"y_1": ScalarFn.y(chart, "y_1"), "y_2": ScalarFn.y(chart, "y_2")},
    )
    lam = d3.wedge(X) + Y.wedge(euler)
    for a in (1, 2):
        dphi = MultiVectorField.basis_vector(chart, f"ph_{a}")
        dy = MultiVectorField.basis_vector(chart, f"y_{a}")
        lam = lam - dphi.wedge(dy)
    return MultiDerivation(lam, Y)


def random_scalar(chart, rng: random.Random, max_terms=2, freq=1, fiber_deg=1) -> ScalarFn:
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        n = tuple(rng.randint(-freq, freq) for _ in range(chart.k))
        alpha = tuple(rng.randint(0, fiber_deg) for _ in range(chart.m))
        c = GaussianRational(
            Fraction(rng.randint(-3, 3), rng.randint(1, 3)),
            Fraction(rng.randint(-3, 3), rng.randint(1, 3)),
        )
        terms[(n, alpha)] = c
    return ScalarFn(chart, terms)


def random_real_scalar(chart, rng, **kw) -> ScalarFn:
    f = random_scalar(chart, rng, **kw)
    return f + f.conjugate()


def random_base_scalar(chart, rng, max_terms=2, freq=1) -> ScalarFn:
    f = random_scalar(chart, rng, max_terms=max_terms, freq=freq, fiber_deg=0)
    return f


def random_mvf(chart, rng: random.Random, degree, **kw) -> MultiVectorField:
    from itertools import combinations

    keys = list(combinations(range(chart.dim), degree))
    terms = {}
    for _ in range(rng.randint(1, 2)):
        key = rng.choice(keys)
        terms[key] = random_scalar(chart, rng, **kw)
    return MultiVectorField(chart, degree, terms)


def random_multider(chart, rng: random.Random, arity, **kw) -> MultiDerivation:
    p = random_mvf(chart, rng, arity, **kw)
    q = random_mvf(chart, rng, arity - 1, **kw) if arity > 0 else None
    return MultiDerivation(p, q)
