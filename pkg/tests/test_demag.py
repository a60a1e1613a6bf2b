import math

import numpy as np
import pytest
import scipy.integrate as si
from hypothesis import given, strategies as st

from conftest import random_unit
from spinflow.demag import NEAR, box_integral_grad_newton, demag_field, newton_potential
from spinflow.errors import DimensionError
from spinflow.grid import Grid, integrate, l2_norm


def grad_newton(r):
    return r / (4 * math.pi * np.linalg.norm(r) ** 3)


def quad_box(lo, hi, axis, tol=1e-11):
    def f(z, y, x):
        r = np.array([x, y, z])
        return grad_newton(r)[axis]
    return si.tplquad(f, lo[0], hi[0], lo[1], hi[1], lo[2], hi[2], epsabs=tol, epsrel=tol)[0]


def constant(grid, direction):
    return np.broadcast_to(np.asarray(direction, float), grid.shape + (3,)).copy()


def mean(grid, f):
    return float(integrate(grid, f)) / grid.volume


# --- exact box integral ------------------------------------------------------------

@pytest.mark.parametrize("lo, hi, tol", [
    ((0.1, -0.3, 0.2), (0.5, 0.3, 0.4), 1e-10),
    ((-0.7, 0.05, -0.2), (-0.2, 0.6, 0.1), 1e-10),
    ((0.0, 0.0, 0.0), (0.5, 0.3, 0.2), 1e-7),  # origin at a corner
])
def test_box_integral_matches_quadrature(lo, hi, tol):
    exact = box_integral_grad_newton(lo, hi)
    for ax in range(3):
        assert exact[ax] == pytest.approx(quad_box(lo, hi, ax, tol), abs=10 * tol)


def test_box_around_origin_splits_into_corner_boxes():
    # each octant has the singularity at a corner, where quadrature is reliable
    lo, hi = np.array([-0.2, -0.1, -0.3]), np.array([0.3, 0.25, 0.15])
    total = np.zeros(3)
    for signs in np.ndindex(2, 2, 2):
        o_lo = np.where(signs, 0.0, lo)
        o_hi = np.where(signs, hi, 0.0)
        total += box_integral_grad_newton(o_lo, o_hi)
    np.testing.assert_allclose(box_integral_grad_newton(lo, hi), total, atol=1e-14)


def test_symmetric_box_integrates_to_zero():
    np.testing.assert_allclose(box_integral_grad_newton([-0.1, -0.2, -0.3], [0.1, 0.2, 0.3]), 0.0, atol=1e-15)


@given(st.tuples(*[st.floats(-1, 1) for _ in range(3)]),
       st.tuples(*[st.floats(0.05, 1) for _ in range(3)]),
       st.floats(0.1, 0.9), st.integers(0, 2))
def test_box_integral_additive(corner, size, frac, axis):
    lo = np.array(corner)
    hi = lo + np.array(size)
    cut = lo[axis] + frac * size[axis]
    hi_a, lo_b = hi.copy(), lo.copy()
    hi_a[axis] = lo_b[axis] = cut
    whole = box_integral_grad_newton(lo, hi)
    parts = box_integral_grad_newton(lo, hi_a) + box_integral_grad_newton(lo_b, hi)
    np.testing.assert_allclose(parts, whole, atol=1e-12)


# --- potential and field ------------------------------------------------------------

def naive_potential(grid, u):
    """Pairwise loop: exact control-box integrals near the target, point rule beyond."""
    x = np.stack(np.meshgrid(*(grid.axis_coords(j) for j in range(3)), indexing="ij"), axis=-1)
    idx = np.stack(np.meshgrid(*(np.arange(n) for n in grid.counts), indexing="ij"), axis=-1).reshape(-1, 3)
    x = x.reshape(-1, 3)
    w = grid.weights.ravel()
    uf = u.reshape(-1, 3)
    h = np.array(grid.spacing)
    box_lo = np.maximum(x - h / 2, 0.0)
    box_hi = np.minimum(x + h / 2, grid.extents)
    phi = np.zeros(len(x))
    for i in range(len(x)):
        near = np.max(np.abs(idx - idx[i]), axis=1) <= NEAR
        exact = box_integral_grad_newton(x[i] - box_hi, x[i] - box_lo)
        r = x[i] - x
        dist = np.linalg.norm(r, axis=1)
        dist[i] = 1.0
        point = w[:, None] * r / (4 * math.pi * dist[:, None] ** 3)
        kernel = np.where(near[:, None], exact, point)
        phi[i] = np.sum(kernel * uf)
    return phi


@pytest.mark.parametrize("grid", [Grid((4, 5, 4), (1.0, 1.2, 0.8)), Grid((6, 5, 8), (1.0, 0.6, 1.5))])
def test_potential_matches_naive_sum(grid, rng):
    u = random_unit(rng, grid.shape)
    np.testing.assert_allclose(newton_potential(grid, u).ravel(), naive_potential(grid, u), atol=1e-12)


def test_zero_field():
    g = Grid.cube(6)
    assert np.all(demag_field(g, g.zeros(3)) == 0.0)


def test_dimension_error():
    with pytest.raises(DimensionError):
        demag_field(Grid.cube(6, dim=2), np.zeros((6, 6, 3)))


def test_linear(rng):
    g = Grid((5, 6, 4), (1.0, 1.0, 0.7))
    a, b = rng.normal(size=(2,) + g.shape + (3,))
    np.testing.assert_allclose(demag_field(g, 2.0 * a - 0.5 * b),
                               2.0 * demag_field(g, a) - 0.5 * demag_field(g, b), atol=1e-12)


def test_cube_demag_tensor_symmetric():
    # equal diagonal demagnetizing factors, zero mean transverse field
    g = Grid.cube(10)
    diag = []
    for ax in range(3):
        e = np.eye(3)[ax]
        hd = demag_field(g, constant(g, e))
        diag.append(mean(g, hd[..., ax]))
        for other in set(range(3)) - {ax}:
            assert abs(mean(g, hd[..., other])) <= 1e-13
    assert np.ptp(diag) <= 1e-12
    assert sum(diag) == pytest.approx(-1.0, rel=0.1)


def test_cube_factor_at_16():
    g = Grid.cube(16)
    val = mean(g, demag_field(g, constant(g, (0, 0, 1)))[..., 2])
    assert val == pytest.approx(-1 / 3, rel=0.1)


@pytest.mark.slow
def test_cube_factor_against_32_oracle():
    coarse, fine = Grid.cube(16), Grid.cube(32)
    vals = [mean(g, demag_field(g, constant(g, (0, 0, 1)))[..., 2]) for g in (coarse, fine)]
    assert vals[1] == pytest.approx(-1 / 3, rel=0.1)
    assert vals[0] == pytest.approx(vals[1], rel=0.1)
    # refinement moves the value towards -1/3
    assert abs(vals[1] + 1 / 3) < abs(vals[0] + 1 / 3)


def test_operator_norm_ratio(rng):
    g = Grid.cube(12)
    ratios = []
    for _ in range(20):
        u = random_unit(rng, g.shape)
        ratios.append(l2_norm(g, demag_field(g, u)) / l2_norm(g, u))
    assert max(ratios) <= 1.1


def test_flat_slab_field_opposes_normal():
    # thin plate magnetized along its normal: the centre field approaches -u,
    # reduced by the finite aspect ratio (uniformly magnetized prism value)
    g = Grid((12, 12, 4), (1.0, 1.0, 0.05))
    hd = demag_field(g, constant(g, (0, 0, 1)))
    centre = hd[5:7, 5:7, 1:3].mean(axis=(0, 1, 2))
    prism = prism_centre_factor(1.0, 1.0, 0.05)
    assert centre[2] == pytest.approx(-prism, abs=0.02)
    assert np.all(np.abs(centre[:2]) <= 1e-3)


def prism_centre_factor(a, b, c):
    """Demagnetizing factor along c at the centre of a uniformly magnetized prism."""
    return 2.0 / np.pi * np.arctan(a * b / (c * np.sqrt(a * a + b * b + c * c)))
