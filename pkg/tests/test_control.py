import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphbc.control import (
    adjoint_check,
    assemble_H,
    assemble_WstarW,
    compute_control,
    constant_in_time,
    h_column_pairs,
    project_time,
    reconstruct_mu,
    time_reversal,
    wstar_harmonic,
    zero_extend,
)
from graphbc.experiments import boundary_indices
from graphbc.fpt import exact_fpt
from graphbc.graph import Graph, GraphError, harmonic_basis, solve_dirichlet, transition_kernel, weighted_inner_product
from graphbc.heat import assemble_lambda, direct_heat_solve

from conftest import p3, path_graph, random_graph


def boundary_fpt(g, T=None):
    B = boundary_indices(g)
    return exact_fpt(transition_kernel(g), T or g.T, B, B)


def st_product(g, f, h):
    return weighted_inner_product(g, f, h, domain="B")


# ---------------------------------------------------------------- time operators


def test_time_reversal_and_projection_examples():
    u = np.arange(4.0)[:, None]
    np.testing.assert_array_equal(time_reversal(u, 4).ravel(), [3, 2, 1, 0])
    np.testing.assert_array_equal(project_time(u, 2).ravel(), [0, 1])
    np.testing.assert_array_equal(zero_extend(np.ones((2, 1)), 2).ravel(), [1, 1, 0, 0])
    np.testing.assert_array_equal(constant_in_time([1.0, 2.0], 3), [[1, 2]] * 3)
    with pytest.raises(ValueError):
        time_reversal(u, 3)
    with pytest.raises(ValueError):
        project_time(u, 3)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), L=st.integers(1, 10))
def test_time_reversal_involution_and_isometry(seed, L):
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2, L, 3))
    np.testing.assert_array_equal(time_reversal(time_reversal(u, L), L), u)
    assert np.sum(time_reversal(u, L) * v) == pytest.approx(np.sum(u * time_reversal(v, L)))


def test_project_is_adjoint_of_zero_extension(rng):
    u = rng.standard_normal((6, 2))
    f = rng.standard_normal((3, 2))
    assert np.sum(project_time(u, 3) * f) == pytest.approx(np.sum(u * zero_extend(f, 3)))


# ---------------------------------------------------------------- W*W and W*phi


def test_wstarw_symmetric_psd_in_weighted_product(shipped):
    r = boundary_fpt(shipped)
    a = assemble_WstarW(r)
    m = np.diag(np.tile(shipped.mu_boundary, shipped.T))
    ma = m @ a
    np.testing.assert_allclose(ma, ma.T, atol=1e-12)
    assert np.linalg.eigvalsh(0.5 * (ma + ma.T)).min() >= -1e-12


def test_blagovescenskii_identity(shipped, rng):
    g, T = shipped, shipped.T
    a = assemble_WstarW(boundary_fpt(g))
    for _ in range(20):
        f1, f2 = rng.standard_normal((2, T, g.n_boundary))
        lhs = weighted_inner_product(g, direct_heat_solve(g, f1, T)[T], direct_heat_solve(g, f2, T)[T])
        rhs = st_product(g, f1, (a @ f2.ravel()).reshape(T, -1))
        assert abs(lhs - rhs) <= 1e-10


def test_wstar_of_constant_is_constant(shipped):
    g = shipped
    lam = assemble_lambda(boundary_fpt(g))
    out = wstar_harmonic(lam, np.ones(g.n), g, g.T)
    np.testing.assert_allclose(out, 1.0, atol=1e-14)


def test_wstar_matches_adjoint_of_terminal_map(shipped, rng):
    g = shipped
    lam = assemble_lambda(boundary_fpt(g))
    phi = solve_dirichlet(g, rng.standard_normal(g.n_boundary))
    wphi = wstar_harmonic(lam, phi, g.mask_interior(), g.T)
    for _ in range(20):
        f = rng.standard_normal((g.T, g.n_boundary))
        lhs = st_product(g, f, wphi)
        rhs = weighted_inner_product(g, direct_heat_solve(g, f, g.T)[g.T], phi)
        assert abs(lhs - rhs) <= 1e-10


def test_wstar_rejects_non_harmonic():
    g = p3()
    lam = assemble_lambda(boundary_fpt(g))
    phi = np.zeros(3)
    phi[g.index("b")] = 1.0
    with pytest.raises(ValueError, match="not harmonic"):
        wstar_harmonic(lam, phi, g, 3)


def test_adjoint_identity(shipped):
    lam = assemble_lambda(boundary_fpt(shipped))
    assert adjoint_check(lam, shipped, shipped.T) <= 1e-10


def test_adjoint_check_zero_operator():
    g = p3()
    assert adjoint_check(np.zeros((6, 6)), g, 3) == 0.0


# ---------------------------------------------------------------- control


def test_control_with_identity_operator(rng):
    rhs = rng.standard_normal((3, 2))
    np.testing.assert_allclose(compute_control(np.eye(6), rhs, 1e-12), rhs)


def test_control_hits_harmonic_targets(shipped):
    g = shipped
    r = boundary_fpt(g)
    lam = assemble_lambda(r)
    a = assemble_WstarW(r)
    for phi in harmonic_basis(g):
        h0 = compute_control(a, wstar_harmonic(lam, phi, g, g.T), 1e-12)
        assert np.abs(direct_heat_solve(g, h0, g.T)[g.T] - phi).max() <= 1e-6


def test_truncated_control_matches_svd_pseudoinverse(shipped, rng):
    """W*W has rank |X| < T|B| with a clean gap, so truncated QR and truncated SVD agree."""
    g = shipped
    r = boundary_fpt(g)
    a = assemble_WstarW(r)
    lam = assemble_lambda(r)
    u, s, vt = np.linalg.svd(a)
    keep = s > 1e-12 * s[0]
    assert keep.sum() == g.n
    pinv = vt[keep].T @ np.diag(1 / s[keep]) @ u[:, keep].T
    phi = solve_dirichlet(g, rng.standard_normal(g.n_boundary))
    consistent = wstar_harmonic(lam, phi, g, g.T)
    got = compute_control(a, consistent, 1e-12).ravel()
    np.testing.assert_allclose(got, pinv @ consistent.ravel(), atol=1e-8 * np.abs(got).max())
    np.testing.assert_allclose(a @ got, consistent.ravel(), atol=1e-10)
    # a generic right-hand side gets the minimum-norm least-squares solution
    generic = rng.standard_normal((g.T, g.n_boundary))
    got = compute_control(a, generic, 1e-12).ravel()
    np.testing.assert_allclose(got, pinv @ generic.ravel(), rtol=1e-6, atol=1e-6 * np.abs(got).max())


# ---------------------------------------------------------------- H and reconstruction


def test_H_on_p3():
    g = p3()
    H = assemble_H(harmonic_basis(g), g.n_interior)
    assert h_column_pairs(2) == [(0, 0), (0, 1), (1, 1)]
    np.testing.assert_allclose(H, [[0.25, 0.25, 0.25]])


@pytest.mark.parametrize("mu_b", [1.0, 2.0])
def test_reconstruct_p3(mu_b):
    g = p3(mu_b=mu_b)
    res = reconstruct_mu(boundary_fpt(g), g)
    assert res.mu_interior == pytest.approx([mu_b], rel=1e-10)
    assert res.rank_H == 1 and not res.projection_only


def test_reconstruct_exact_on_shipped(shipped):
    res = reconstruct_mu(boundary_fpt(shipped), shipped)
    truth = shipped.mu[shipped.interior]
    assert np.linalg.norm(res.mu_interior - truth) / np.linalg.norm(truth) <= 1e-5
    assert res.rank_H == shipped.n_interior and not res.projection_only
    assert np.abs(res.residuals).max() <= 1e-9


def test_reconstruct_ignores_interior_mu(shipped):
    r = boundary_fpt(shipped)
    fake = shipped.mu.copy()
    fake[shipped.interior] = 123.0
    a = reconstruct_mu(r, shipped)
    b = reconstruct_mu(r, shipped.with_mu(fake))
    np.testing.assert_array_equal(a.mu_interior, b.mu_interior)


def test_reconstruct_scaling_invariance(shipped):
    c = 3.0
    scaled = Graph(shipped.ids, shipped.weights * c, shipped.mu * c, shipped.n_interior, shipped.T)
    r = boundary_fpt(shipped)
    np.testing.assert_allclose(boundary_fpt(scaled).r, r.r, atol=1e-15)
    res = reconstruct_mu(r, scaled)
    np.testing.assert_allclose(res.mu_interior, c * shipped.mu[shipped.interior], rtol=1e-8)


def test_reconstruct_random_graphs(rng):
    done = 0
    while done < 5:
        n = int(rng.integers(4, 7))
        g = random_graph(n, rng, n_boundary=3, extra_edges=2)
        g = Graph(g.ids, g.weights, g.mu, g.n_interior, n)
        res = reconstruct_mu(boundary_fpt(g), g)
        if res.projection_only:
            continue
        np.testing.assert_allclose(res.mu_interior, g.mu[g.interior], rtol=1e-6)
        done += 1


def test_projection_only_on_under_observed_path():
    # |B| = 2 gives 3 columns of H but there are 4 interior vertices
    g = path_graph(6, mu=[1.0, 1.5, 2.0, 1.2, 0.8, 1.0], T=6)
    res = reconstruct_mu(boundary_fpt(g), g)
    assert res.projection_only and res.rank_H == 3
    H = res.operators["H"]
    truth = g.mu[g.interior]
    # minimum-norm solution = orthogonal projection of the truth onto span(H)
    proj = H @ np.linalg.lstsq(H, truth, rcond=None)[0]
    np.testing.assert_allclose(res.mu_interior, proj, atol=1e-6)
    assert any("projection" in w for w in res.warnings)


def test_single_boundary_path_gives_mean():
    # with one observed end the only harmonic function is constant, so span(H) = constants
    mu = [1.0, 2.0, 3.0, 1.5, 1.0]
    g = path_graph(5, mu=mu, boundary=["v0"], T=5)
    res = reconstruct_mu(boundary_fpt(g), g)
    assert res.projection_only and res.rank_H == 1
    np.testing.assert_allclose(res.mu_interior, np.mean(mu[1:]), rtol=1e-8)


def test_reconstruct_warns_on_short_horizon():
    g = path_graph(4, T=3)
    with pytest.warns(RuntimeWarning, match="controllability"):
        res = reconstruct_mu(boundary_fpt(g), g)
    assert any("T=3" in w for w in res.warnings)


def test_reconstruct_input_errors():
    g = p3()
    with pytest.raises(ValueError, match="B x B"):
        reconstruct_mu(exact_fpt(transition_kernel(g), 3), g)
    no_mu_b = g.with_mu(np.array([1.0, np.nan, 1.0]))
    with pytest.raises(GraphError):
        reconstruct_mu(boundary_fpt(g), no_mu_b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(ValueError, match="at least 2"):
            reconstruct_mu(boundary_fpt(g, T=1), g)


def test_time_reversal_fixes_constants_and_projection_kills_tail():
    c = constant_in_time([1.0, -2.0], 4)
    np.testing.assert_array_equal(time_reversal(c, 4), c)
    u = np.zeros((4, 2))
    u[2:] = 1.0
    np.testing.assert_array_equal(project_time(u, 2), 0.0)


def test_wstar_p3_first_basis_function(rng):
    g = p3()
    lam = assemble_lambda(boundary_fpt(g))
    phi = harmonic_basis(g)[0]
    wphi = wstar_harmonic(lam, phi, g.mask_interior(), 3)
    for _ in range(20):
        f = rng.standard_normal((3, 2))
        assert st_product(g, f, wphi) == pytest.approx(
            weighted_inner_product(g, direct_heat_solve(g, f, 3)[3], phi), abs=1e-12
        )


def test_adjoint_deviation_on_empirical_data_is_reported():
    from graphbc.fpt import McConfig, mc_fpt

    g = p3()
    emp = mc_fpt(transition_kernel(g), [1, 2], McConfig(20000, 1, 3))
    dev = adjoint_check(assemble_lambda(emp), g, 3)
    assert np.isfinite(dev)


def test_wstarw_spectrum_matches_weighted_terminal_map(shipped):
    from graphbc.heat import terminal_map_matrix
    from graphbc.numerics import singular_values

    g = shipped
    a = assemble_WstarW(boundary_fpt(g))
    mb = np.tile(g.mu_boundary, g.T)
    sym = np.sqrt(mb)[:, None] * a / np.sqrt(mb)[None, :]
    w = np.sqrt(g.mu)[:, None] * terminal_map_matrix(g, g.T) / np.sqrt(mb)[None, :]
    s_w = singular_values(w)
    s_a = singular_values(sym)[: g.n]
    np.testing.assert_allclose(s_a, s_w**2, rtol=1e-6)


def test_H_diagonal_columns_nonnegative(shipped):
    basis = harmonic_basis(shipped)
    H = assemble_H(basis, shipped.n_interior)
    for col, (j, k) in enumerate(h_column_pairs(shipped.n_boundary)):
        if j == k:
            assert np.all(H[:, col] >= 0)
