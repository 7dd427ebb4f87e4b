import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_mesh
from frozen import DENSE_GAP_PRODUCT_N8, THETA_DIAGONAL_UNNORMALIZED
from oracles import (dense_laplacian_ref, liouville_area, product_torus_points,
                     to_library_order)
from isotori.analysis_norms import grid_for
from isotori.discrete_ops import (bilinear_r, delta, delta_star, dense_spectral_gap, laplacian,
                                  laplacian_matrix, laplacian_stencil, moment_map, moment_map_r,
                                  spectral_gap, stencil_parts)
from isotori.immersions import (diagonal_product_torus, padded_product_torus, product_torus)
from isotori.lattice_grid import build_grid, square_grid
from isotori.mesh_core import (J, Mesh, face_inner, indicator, ones, opposite_diagonals,
                               sample_immersion, shear, vertex_inner)


def test_unit_square_density():
    g = square_grid(2)
    pts = np.zeros((4, 4))
    e = np.eye(4)
    # face 0 has corners (0,0), (1,0), (1,1), (0,1) -> indices 0, 2, 3, 1
    pts[g.index(1, 0)] = e[0]
    pts[g.index(1, 1)] = e[0] + e[1]
    pts[g.index(0, 1)] = e[1]
    assert moment_map(Mesh(g, pts))[0] == pytest.approx(1.0)


def test_isotropic_plane_density(grid, rng):
    pts = np.zeros((grid.size, 4))
    pts[:, [0, 2]] = rng.standard_normal((grid.size, 2))  # span(x1, x2)
    assert np.max(np.abs(moment_map(Mesh(grid, pts)))) == 0.0


def test_liouville_oracle(grid, rng):
    m = random_mesh(grid, 3, rng)
    mu = moment_map(m)
    fv = grid.face_vertices
    for f in range(grid.size):
        A = m.points[fv[f]]
        ref = liouville_area(A)
        assert abs(mu[f] - ref) <= 1e-12 * max(1.0, abs(ref))
    assert np.allclose(moment_map_r(m), grid.N**2 * mu)


def test_bilinear_form(grid, rng):
    a, b = random_mesh(grid, 2, rng), random_mesh(grid, 2, rng)
    assert np.allclose(bilinear_r(a, a), moment_map_r(a))
    assert np.array_equal(bilinear_r(a, b), bilinear_r(b, a))
    s = Mesh(grid, a.points + b.points)
    lhs = moment_map_r(s)
    rhs = moment_map_r(a) + 2 * bilinear_r(a, b) + moment_map_r(b)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(lhs))


def test_delta_kills_constants(grid, rng):
    m = random_mesh(grid, 2, rng)
    c = np.broadcast_to(rng.standard_normal(4), (grid.size, 4))
    assert np.max(np.abs(delta(m, c))) < 1e-10


def test_delta_derivative_of_density(grid, rng):
    m = random_mesh(grid, 2, rng)
    V = rng.standard_normal((grid.size, 4))
    eps = 1e-5
    fd = (moment_map_r(m + eps * J(V)) - moment_map_r(m + (-eps) * J(V))) / (2 * eps)
    assert np.max(np.abs(fd + delta(m, V))) <= 1e-6 * np.max(np.abs(delta(m, V)))
    # D mu_r . V = 2 Psi_r(tau, V)
    fd2 = (moment_map_r(m + eps * V) - moment_map_r(m + (-eps) * V)) / (2 * eps)
    assert np.allclose(fd2, 2 * bilinear_r(m, Mesh(grid, V)), rtol=1e-6, atol=1e-6)


def test_delta_star_examples(grid, rng):
    m = random_mesh(grid, 2, rng)
    N = grid.N
    scale = N**2 * np.max(np.abs(m.points))
    assert np.max(np.abs(delta_star(m, ones(grid)))) <= 1e-13 * scale
    f = 5
    ds = delta_star(m, indicator(grid, f))
    od = opposite_diagonals(m)
    expect = np.zeros_like(ds)
    for p, v in enumerate(grid.face_vertices[f]):
        expect[v] += 0.5 * N**2 * od[f, p]
    assert np.allclose(ds, expect)


def test_adjointness(grid, rng):
    m = random_mesh(grid, 3, rng)
    V = rng.standard_normal((grid.size, 6))
    phi = rng.standard_normal(grid.size)
    lhs = face_inner(grid, delta(m, V), phi)
    rhs = vertex_inner(grid, V, delta_star(m, phi))
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_laplacian_matches_stencil_and_dense_oracle(rng):
    pts = product_torus_points(8) + 0.05 * rng.standard_normal((8, 8, 4))
    m = Mesh(square_grid(8), to_library_order(pts))
    phi = rng.standard_normal(64)
    L = dense_laplacian_ref(pts)
    assert np.allclose(laplacian(m, phi), L @ phi, rtol=1e-12, atol=1e-12 * np.max(np.abs(L @ phi)))
    assert np.allclose(laplacian_stencil(m, phi), L @ phi, atol=1e-12 * np.max(np.abs(L @ phi)))
    assert np.allclose(laplacian_matrix(m).toarray(), L, atol=1e-11 * np.max(np.abs(L)))


def test_laplacian_symmetric_psd(grid, rng):
    m = random_mesh(grid, 2, rng)
    phi, psi = rng.standard_normal((2, grid.size))
    a = face_inner(grid, laplacian(m, phi), psi)
    b = face_inner(grid, phi, laplacian(m, psi))
    assert a == pytest.approx(b, rel=1e-12)
    assert face_inner(grid, laplacian(m, phi), phi) >= 0
    assert np.max(np.abs(laplacian(m, ones(grid)))) <= 1e-10 * np.max(np.abs(laplacian(m, phi)))


def test_stencil_locality(rng):
    g = square_grid(8)
    m = random_mesh(g, 2, rng)
    f = g.index(4, 4)
    out = laplacian(m, indicator(g, f))
    support = {int(g.index(4 + a, 4 + b)) for a in (-1, 0, 1) for b in (-1, 0, 1)}
    outside = [i for i in range(g.size) if i not in support]
    assert np.all(out[outside] == 0.0)


def test_stencil_split(grid, rng):
    m = random_mesh(grid, 2, rng)
    phi = rng.standard_normal(grid.size)
    dE, dI, tu, tv, kappa = stencil_parts(m, phi)
    full = laplacian(m, phi)
    assert np.max(np.abs(dE + dI - full)) <= 1e-12 * np.max(np.abs(full))
    plus = np.where(grid.parity == 0, phi, 0.0)
    dE, dI, *_ = stencil_parts(m, plus)
    assert np.all(dE[grid.parity == 1] == 0.0)
    assert np.all(dI[grid.parity == 0] == 0.0)


def test_theta_of_degenerate_example():
    # theta for the unnormalized diagonal product torus is 4 pi^2 (frozen)
    errs = []
    for N in (8, 16, 32):
        imm = diagonal_product_torus(normalized=False)
        tau = sample_immersion(imm, grid_for(imm, N))
        _, _, tu, tv, _ = stencil_parts(tau, np.zeros(tau.grid.size))
        errs.append(np.max(np.abs(tu / THETA_DIAGONAL_UNNORMALIZED - 1)))
    assert errs[-1] < 0.05
    assert errs[-1] < errs[0]
    imm = diagonal_product_torus(normalized=True)
    tau = sample_immersion(imm, grid_for(imm, 32))
    _, _, tu, _, _ = stencil_parts(tau, np.zeros(tau.grid.size))
    assert np.max(np.abs(tu - 1)) < 0.05


def test_translation_invariance(grid, rng):
    m = random_mesh(grid, 2, rng)
    t = rng.standard_normal(4)
    s = shear(m, t, t)
    phi = rng.standard_normal(grid.size)
    assert np.allclose(moment_map_r(s), moment_map_r(m), atol=1e-11)
    assert np.allclose(laplacian(s, phi), laplacian(m, phi), atol=1e-9)
    assert np.allclose(delta_star(s, phi), delta_star(m, phi), atol=1e-10)


def test_spectral_gap_matches_dense_oracle():
    m = sample_immersion(product_torus(), square_grid(8))
    gap = spectral_gap(m)
    assert gap == pytest.approx(DENSE_GAP_PRODUCT_N8, rel=1e-6)
    assert dense_spectral_gap(m) == pytest.approx(DENSE_GAP_PRODUCT_N8, rel=1e-10)


def test_spectral_gap_positive_n16_and_zero_for_constant():
    m = sample_immersion(product_torus(), square_grid(16))
    assert spectral_gap(m) > 1.0
    const = Mesh(square_grid(8), np.ones((64, 4)))
    assert spectral_gap(const) == pytest.approx(0.0, abs=1e-12)


def test_spectral_gap_stable_in_n():
    gaps = [spectral_gap(sample_immersion(product_torus(), square_grid(N))) for N in (8, 16, 32)]
    assert 0.5 <= gaps[0] / gaps[2] <= 2.0


def test_spectral_gap_n3_skew_grid():
    imm = padded_product_torus()
    m = sample_immersion(imm, grid_for(imm, 8))
    assert spectral_gap(m) == pytest.approx(dense_spectral_gap(m), rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.sampled_from([2, 3]),
       L=st.sampled_from([[[4, 0], [0, 4]], [[4, -2], [2, 4]], [[6, 1], [0, 5]], [[2, -2], [2, 2]]]))
def test_identities_property(seed, n, L):
    rng = np.random.default_rng(seed)
    g = build_grid(L, 4)
    m = random_mesh(g, n, rng)
    mu = moment_map(m)
    assert abs(np.sum(mu)) <= 1e-10 * np.sum(np.abs(mu))
    V = rng.standard_normal((g.size, 2 * n))
    phi = rng.standard_normal(g.size)
    dV = delta(m, V)
    lhs = face_inner(g, dV, phi)
    rhs = vertex_inner(g, V, delta_star(m, phi))
    bound = np.sqrt(face_inner(g, dV, dV) * face_inner(g, phi, phi))
    assert abs(lhs - rhs) <= 1e-12 * bound
