import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trapkink.grid import (Grid, StencilOperator, apply_d2, first_derivative,
                           first_derivative_matrix, quadrature)
from trapkink.spectra import trapezoid_weights


@given(m=st.integers(3, 400), dx=st.floats(1e-3, 1.0))
def test_nodes_exactly_symmetric(m, dx):
    x = Grid(dx, m).nodes
    assert np.array_equal(x, -x[::-1])
    assert x[m] == 0.0


def test_d2_fourth_order_interior():
    errs = []
    for dx in (0.1, 0.05):
        g = Grid.symmetric(6.0, dx)
        x = g.nodes
        f = np.exp(-x**2)
        exact = (4 * x**2 - 2) * f
        errs.append(np.max(np.abs(apply_d2(StencilOperator(g), f) - exact)[4:-4]))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)


def test_d2_matrix_matches_slices():
    g = Grid.symmetric(3.0, 0.1)
    f = np.sin(g.nodes) + g.nodes**3
    op = StencilOperator(g)
    assert np.allclose(op.matrix @ f, apply_d2(op, f), rtol=0, atol=1e-9)
    assert np.allclose(op @ f, apply_d2(op, f))


def test_mirror_closure_annihilates_constants_and_is_weighted_symmetric():
    g = Grid.symmetric(2.0, 0.1)
    op = StencilOperator(g)
    assert np.max(np.abs(apply_d2(op, np.ones(g.n)))) < 1e-10
    W = np.diag(trapezoid_weights(g.n))
    M = W @ op.matrix.toarray()
    assert np.max(np.abs(M - M.T)) < 1e-10
    # negative semidefinite: no growing modes for the wave equation
    ev = np.linalg.eigvalsh(0.5 * (M + M.T))
    assert ev.max() < 1e-9


@given(st.lists(st.floats(-5, 5), min_size=21, max_size=21))
def test_d2_commutes_with_reflection(vals):
    g = Grid(0.3, 10)
    op = StencilOperator(g)
    f = np.array(vals)
    assert np.allclose(apply_d2(op, f[::-1]), apply_d2(op, f)[::-1], atol=1e-9)


def test_first_derivative_order_and_matrix():
    errs = []
    for dx in (0.1, 0.05):
        g = Grid.symmetric(4.0, dx)
        x = g.nodes
        df = first_derivative(np.sin(x), g)
        errs.append(np.max(np.abs(df - np.cos(x))))
        assert np.allclose(first_derivative_matrix(g) @ np.sin(x), df, atol=1e-10)
    assert errs[0] / errs[1] > 12


def test_quadrature_exact_for_cubics_and_gaussian():
    g = Grid.symmetric(2.0, 0.1)
    x = g.nodes
    assert quadrature(x**3 + x**2, g) == pytest.approx(16 / 3, abs=1e-12)
    g = Grid.symmetric(10.0, 0.05)
    assert quadrature(np.exp(-g.nodes**2), g) == pytest.approx(np.sqrt(np.pi), abs=1e-10)


def test_shape_errors():
    g = Grid.symmetric(1.0, 0.1)
    with pytest.raises(ValueError):
        apply_d2(StencilOperator(g), np.ones(5))
    with pytest.raises(ValueError):
        StencilOperator(Grid(0.1, 2))
    with pytest.raises(ValueError):
        quadrature(np.ones(3), g)
