"""The transversal multibracket engine and its cross-checks."""

import random
from fractions import Fraction
from itertools import permutations

import pytest

from coiso.rational import GaussianRational
from coiso.ring import Chart, ScalarFn
from coiso.multivector import MultiVectorField
from coiso.leafform import LeafForm
from coiso.linfty import extract_multibrackets
from coiso.transversal import TransversalData, mat_eq, mat_identity, mat_mul

from helpers import fields_XY, random_base_scalar, torus_chart, torus_jacobi


@pytest.fixture
def chart():
    return torus_chart()


@pytest.fixture
def td(chart):
    """Adapted-frame data of the worked torus example: G_1 = d/dph_3,
    G_2 = X, G = Y, C_a = 0, omega_12 = theta_S([d/dph_3, X]) = -1, F = 0."""
    X, Y = fields_XY(chart)
    zero = ScalarFn.zero(chart)
    one = ScalarFn.one(chart)
    omega = [[zero, -one], [one, zero]]
    return TransversalData(
        chart,
        Ga_fields=[MultiVectorField.basis_vector(chart, "ph_3"), X],
        G_field=Y,
        C=[zero, zero],
        omega=omega,
    )


def random_td(chart, rng):
    """Random involutive data: F = 0, random constant invertible omega,
    random C_a and G-frame components."""
    zero = ScalarFn.zero(chart)
    c = GaussianRational(rng.randint(1, 3))
    omega = [[zero, ScalarFn.const(chart, c)], [ScalarFn.const(chart, -c), zero]]
    ga = [
        MultiVectorField.vector(chart, {"ph_1": random_base_scalar(chart, rng)}),
        MultiVectorField.vector(chart, {"ph_2": random_base_scalar(chart, rng)}),
    ]
    g = MultiVectorField.vector(chart, {"ph_1": random_base_scalar(chart, rng)})
    C = [random_base_scalar(chart, rng), random_base_scalar(chart, rng)]
    return TransversalData(chart, ga, g, C, omega)


def test_w_inverse_exact(td, chart):
    assert mat_eq(mat_mul(chart, td.W(), td.W_inv()), mat_identity(chart, td.n))
    assert mat_eq(td.y_matrix(()), td.W_inv())


def test_y_matrices_vanish_without_curvature(td):
    for idx in [(0,), (1,), (0, 1), (1, 1)]:
        Y = td.y_matrix(idx)
        assert all(f.is_zero() for row in Y for f in row)


def test_y_matrix_neumann_oracle(chart):
    """(W + p F) * [truncated Neumann series] = id through order 2: the
    series whose p-derivatives the induction formula computes."""
    rng = random.Random(1)
    td = random_td(chart, rng)
    # plant a nonzero curvature block
    one = ScalarFn.one(chart)
    zero = ScalarFn.zero(chart)
    td.Fab[0] = [[zero, random_base_scalar(chart, rng)], [zero, zero]]
    td.Fab[0][1][0] = -td.Fab[0][0][1]
    td.Fa[1] = [random_base_scalar(chart, rng), zero]

    # formal polynomial in p_0, p_1 with matrix coefficients, truncated
    def trunc_mul(A, B, order):
        out = {}
        for ka, Ma in A.items():
            for kb, Mb in B.items():
                k = tuple(x + y for x, y in zip(ka, kb))
                if sum(k) > order:
                    continue
                prod = mat_mul(chart, Ma, Mb)
                if k in out:
                    out[k] = [
                        [a + b for a, b in zip(ra, rb)]
                        for ra, rb in zip(out[k], prod)
                    ]
                else:
                    out[k] = prod
        return out

    order = 2
    Wp = {(0, 0): td.W(), (1, 0): td.F(0), (0, 1): td.F(1)}
    # Neumann series built from the Y-matrices:
    # W_p^{-1} = sum_k (-1)^k sum_{i_1..i_k} p_{i_1}..p_{i_k} Y^{i_1..i_k}
    series = {(0, 0): td.W_inv()}
    for k in (1, 2):
        for seq in [(0,) * k, (1,) * k] + ([(0, 1), (1, 0)] if k == 2 else []):
            key = (seq.count(0), seq.count(1))
            M = td.y_matrix(seq)
            M = [[f.scale((-1) ** k) for f in row] for row in M]
            if key in series:
                series[key] = [
                    [a + b for a, b in zip(ra, rb)]
                    for ra, rb in zip(series[key], M)
                ]
            else:
                series[key] = M
    prod = trunc_mul(Wp, series, order)
    for key, M in prod.items():
        expected = mat_identity(chart, td.n) if key == (0, 0) else None
        if expected is not None:
            assert mat_eq(M, expected)
        else:
            assert all(f.is_zero() for row in M for f in row)


def test_cross_check_with_linfty(td, chart):
    """Generator-by-generator equality with the derived-bracket table of the
    worked example, under the frame identification dF_ph_a <-> delta_a."""
    table = extract_multibrackets(torus_jacobi(chart))
    rng = random.Random(2)
    delta = [LeafForm(chart, 1, {(a,): ScalarFn.one(chart)}) for a in range(2)]

    for _ in range(4):
        f = random_base_scalar(chart, rng)
        g = random_base_scalar(chart, rng)
        # m_1 on functions
        assert td.multibracket([("fn", f)]) == table.m1(LeafForm.function(f))
        # m_2 generator families
        assert td.multibracket([("fn", f), ("fn", g)]) == table.m(
            [LeafForm.function(f), LeafForm.function(g)]
        )
        for i in range(2):
            assert td.multibracket([("fn", f), ("form", i)]) == table.m(
                [LeafForm.function(f), delta[i]]
            )
        assert td.multibracket([("form", 0), ("form", 1)]) == table.m(
            [delta[0], delta[1]]
        )
        # m_1 on the frame forms
        assert td.multibracket([("form", 0)]) == table.m([delta[0]])
        # m_k = 0 for k > 2 (transversally integrable)
        for k in (3, 4):
            args = [("fn", f)] + [("form", i % 2) for i in range(k - 1)]
            assert td.multibracket(args).is_zero()


def test_involutive_brackets_vanish_above_two(chart):
    rng = random.Random(3)
    for _ in range(3):
        td = random_td(chart, rng)
        f = random_base_scalar(chart, rng)
        for k in (3, 4, 5):
            args = [("form", i % 2) for i in range(k)]
            assert td.multibracket(args).is_zero()
            args = [("fn", f)] + [("form", i % 2) for i in range(k - 1)]
            assert td.multibracket(args).is_zero()


def test_dG_extension(td, chart):
    X, Y = fields_XY(chart)
    rng = random.Random(4)
    # on functions: d_G f = (G_a f, G f) in the transverse coframe
    for _ in range(4):
        f = random_base_scalar(chart, rng)
        out = td.d_G(LeafForm.function(f))
        assert out[0].as_function() == MultiVectorField.basis_vector(chart, "ph_3").lie_derivative_fn(f)
        assert out[1].as_function() == X.lie_derivative_fn(f)
        assert out[2].as_function() == Y.lie_derivative_fn(f)
    # [eps, d_F] = 0 on random degree-1 forms
    for _ in range(4):
        w = LeafForm(
            chart,
            1,
            {(0,): random_base_scalar(chart, rng), (1,): random_base_scalar(chart, rng)},
        )
        left = td.d_G(w.d_leaf())
        right = {al: form.d_leaf() for al, form in td.d_G(w).items()}
        for al in left:
            assert left[al] == right[al]
    # leafwise-constant f: d_F d_G f = 0
    f = ScalarFn.cos_phi(chart, "ph_4") * random_base_scalar(
        chart, rng, max_terms=1
    ).restrict_zero_section()
    f = ScalarFn(
        chart,
        {(n, a): c for (n, a), c in f.terms.items() if n[0] == 0 and n[1] == 0},
    )
    out = td.d_G(LeafForm.function(f))
    for al in out:
        assert out[al].d_leaf().is_zero()


def test_j1G_prolong(td, chart):
    rng = random.Random(5)
    f = random_base_scalar(chart, rng)
    out = td.j1_G(LeafForm.function(f))
    comps = td.jG0(f)
    assert out[0].as_function() == comps[0]
    for al in range(1, 4):
        assert out[al].as_function() == comps[al]
    # [delta, d_F] = 0 on random functions
    left = td.j1_G(LeafForm.function(f).d_leaf())
    right = {al: form.d_leaf() for al, form in td.j1_G(LeafForm.function(f)).items()}
    for al in left:
        assert left[al] == right[al]
