import numpy as np
import pytest
import scipy.linalg as sl
from hypothesis import given, settings, strategies as st
from numpy import cos, pi, sin

from mixedfem.assembly import (
    assemble_curl_coupling,
    assemble_div_pressure,
    assemble_load,
    assemble_mass,
    assemble_mean,
)
from mixedfem.mesh import build_uniform_square, perturb_interior
from mixedfem.projections import (
    DATA_DEGREE,
    curl_moments,
    curl_operator,
    discrete_gradient,
    discrete_hodge_decompose,
    interpolate_rt_canonical,
    l2_error,
    l2_norm,
    project_elliptic_sigma,
    project_l2,
    project_pvh,
)
from mixedfem.space import FeFunction, SpaceError, build_space
from mixedfem.verify import observed_rate, smooth_field


def div_distance(v_fn, s_fn):
    """||div v_fn - s_fn|| with s_fn discontinuous."""
    from mixedfem.refelem import quadrature

    mesh = v_fn.space.mesh
    rule = quadrature(2 * v_fn.space.degree + 2)
    _, d = v_fn.at(rule.points, derivative=True)
    w = np.abs(mesh.dets)[:, None] * rule.weights
    return float(np.sqrt(np.sum(w * (d - s_fn.at(rule.points)) ** 2)))


def u_sin(x, y):
    return sin(pi * x) * sin(pi * y)


def grad_u_sin(x, y):
    return pi * cos(pi * x) * sin(pi * y), pi * sin(pi * x) * cos(pi * y)


def curl_u_sin(x, y):
    gx, gy = grad_u_sin(x, y)
    return gy, -gx


@pytest.fixture(scope="module")
def pmesh():
    return perturb_interior(build_uniform_square(4), 0.25, seed=9)


# -- L2 projection -------------------------------------------------------

@pytest.mark.parametrize("k", [0, 1, 2])
def test_project_l2_reproduces_constants(pmesh, k):
    S = build_space(pmesh, "dg", k)
    assert l2_error(project_l2(S, lambda x, y: 1.0 + 0 * x), lambda x, y: 1.0 + 0 * x) <= 1e-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_project_l2_reproduces_x(pmesh, k):
    S = build_space(pmesh, "dg", k)
    assert l2_error(project_l2(S, lambda x, y: x), lambda x, y: x) <= 1e-12


def test_project_l2_rate():
    levels = (8, 16, 32)
    errs = [l2_error(project_l2(build_space(build_uniform_square(n), "dg", 1),
                                lambda x, y: sin(pi * x)), lambda x, y: sin(pi * x))
            for n in levels]
    assert abs(observed_rate(errs, levels) - 2.0) <= 0.1


def test_project_l2_mean_zero(pmesh):
    P = build_space(pmesh, "dg", 1, "mean_zero")
    f = project_l2(P, lambda x, y: 3.0 + x * y)
    assert abs(assemble_mean(P) @ f.coeffs) <= 1e-13


def test_project_l2_needs_dg(pmesh):
    with pytest.raises(SpaceError):
        project_l2(build_space(pmesh, "lagrange", 1), lambda x, y: x)


# -- elliptic projection ----------------------------------------------------

def test_elliptic_reproduces_zero_trace_polynomial(pmesh):
    def tau(x, y):
        return x * (1 - x) * y * (1 - y)

    def grad(x, y):
        return (1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y)
    S0 = build_space(pmesh, "lagrange", 4, "zero_trace")
    p = project_elliptic_sigma(S0, tau, grad)
    assert np.abs(p.coeffs - S0.interpolate(tau).coeffs).max() <= 1e-10


def test_elliptic_full_space_mean(pmesh):
    def tau(x, y):
        return cos(2 * x) + y * y

    def grad(x, y):
        return -2 * sin(2 * x), 2 * y
    S = build_space(pmesh, "lagrange", 2)
    p = project_elliptic_sigma(S, tau, grad)
    dg0 = build_space(pmesh, "dg", 0)
    exact_mean = assemble_load(dg0, tau, DATA_DEGREE).sum()
    assert abs(assemble_mean(S) @ p.coeffs - exact_mean) <= 1e-12


def test_elliptic_full_space_reproduces_p2(pmesh):
    S = build_space(pmesh, "lagrange", 2)
    p = project_elliptic_sigma(S, lambda x, y: x * x - y + 0.5, lambda x, y: (2 * x, -1.0 + 0 * y))
    assert l2_error(p, lambda x, y: x * x - y + 0.5) <= 1e-10


def test_elliptic_rate():
    levels = (8, 16, 32, 64)
    errs = [l2_error(project_elliptic_sigma(
        build_space(build_uniform_square(n), "lagrange", 2, "zero_trace"), u_sin, grad_u_sin),
        u_sin) for n in levels]
    assert abs(observed_rate(errs, levels) - 3.0) <= 0.15


# -- canonical RT interpolant ---------------------------------------------

@pytest.mark.parametrize("r", [1, 2, 3])
def test_rt_interpolant_reproduces_p_rminus1(pmesh, r):
    rng = np.random.default_rng(r)
    a = rng.standard_normal((2, 3))

    def v(x, y):
        if r == 1:
            return a[0, 0] + 0 * x, a[1, 0] + 0 * x
        return a[0, 0] + a[0, 1] * x + a[0, 2] * y, a[1, 0] + a[1, 1] * x + a[1, 2] * y
    pi_v = interpolate_rt_canonical(build_space(pmesh, "rt", r), v)
    assert l2_error(pi_v, v) <= 1e-12


def test_rt_commutes_with_divergence_sin():
    m = build_uniform_square(16)
    v = lambda x, y: (sin(pi * y), 0 * x)  # noqa: E731
    pi_v = interpolate_rt_canonical(build_space(m, "rt", 2), v)
    ps = project_l2(build_space(m, "dg", 1), lambda x, y: 0 * x)
    assert div_distance(pi_v, ps) <= 1e-10


def test_rt_interpolation_rate():
    levels = (8, 16, 32, 64)
    errs = [l2_error(interpolate_rt_canonical(build_space(build_uniform_square(n), "rt", 2),
                                              curl_u_sin), curl_u_sin) for n in levels]
    assert abs(observed_rate(errs, levels) - 2.0) <= 0.15


def test_rt_interpolant_needs_rt(pmesh):
    with pytest.raises(SpaceError):
        interpolate_rt_canonical(build_space(pmesh, "lagrange", 1), curl_u_sin)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r=st.integers(1, 2))
def test_commuting_identities_random_fields(seed, r):
    mesh = build_uniform_square(4)
    v, div_v = smooth_field(seed)
    ps = project_l2(build_space(mesh, "dg", r - 1), div_v)
    assert div_distance(project_pvh(v, div_v, mesh, r), ps) <= 1e-9
    assert div_distance(interpolate_rt_canonical(build_space(mesh, "rt", r), v), ps) <= 1e-9


# -- P_V0 -------------------------------------------------------------

@pytest.mark.parametrize("r", [1, 2])
def test_pvh_orthogonality(pmesh, r):
    v, div_v = smooth_field(r)
    pv = project_pvh(v, div_v, pmesh, r)
    V = pv.space
    S0 = build_space(pmesh, "lagrange", r, "zero_trace")
    P = build_space(pmesh, "dg", r - 1, "mean_zero")
    w = V.restrict(pv.coeffs)
    res1 = curl_moments(S0, v) - assemble_curl_coupling(S0, V).T @ w
    # mean-zero test functions: remove the constant component of the residual
    res2 = assemble_load(P, div_v, DATA_DEGREE) - assemble_div_pressure(V, P) @ w
    m = assemble_mean(P)
    res2 = res2 - m * (m @ res2) / (m @ m)
    assert np.abs(res1).max() <= 1e-10
    assert np.abs(res2).max() <= 1e-10


@pytest.mark.parametrize("r", [1, 2])
def test_pvh_commutes_with_curl(pmesh, r):
    S0 = build_space(pmesh, "lagrange", r, "zero_trace")
    rho = project_elliptic_sigma(S0, u_sin, grad_u_sin)
    lhs = project_pvh(curl_u_sin, lambda x, y: 0 * x, pmesh, r)
    rhs = curl_operator(S0, lhs.space) @ rho.coeffs
    assert np.abs(lhs.coeffs - rhs).max() <= 1e-10


def uniform_callables(fn, n):
    """Pointwise value and divergence of an RT function on ``build_uniform_square(n)``."""
    mesh = fn.space.mesh

    def locate(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        i = np.clip(np.floor(x * n).astype(int), 0, n - 1)
        j = np.clip(np.floor(y * n).astype(int), 0, n - 1)
        upper = (y - j / n) > (x - i / n)
        cell = 2 * (j * n + i) + upper
        o = mesh.vertices[mesh.triangles[cell, 0]]
        inv = np.linalg.inv(mesh.jacobians[cell])
        ref = np.einsum("...ij,...j->...i", inv, np.stack([x, y], axis=-1) - o)
        return cell, ref

    def values(x, y, derivative):
        cell, ref = locate(x, y)
        flat_c, flat_r = cell.ravel(), ref.reshape(-1, 2)
        out = [fn.at(flat_r[k:k + 1], slice(c, c + 1), derivative) for k, c in enumerate(flat_c)]
        return out, cell.shape

    def v(x, y):
        out, shape = values(x, y, False)
        vals = np.array([o[0, 0] for o in out]).reshape(shape + (2,))
        return vals[..., 0], vals[..., 1]

    def div_v(x, y):
        out, shape = values(x, y, True)
        return np.array([o[1][0, 0] for o in out]).reshape(shape)
    return v, div_v


def test_pvh_is_identity_on_v0():
    n = 2
    mesh = build_uniform_square(n)
    V = build_space(mesh, "rt", 1, "zero_normal")
    w = FeFunction(V, V.extend(np.random.default_rng(0).standard_normal(V.dim)))
    v, div_v = uniform_callables(w, n)
    pv = project_pvh(v, div_v, mesh, 1, qdeg=4)
    assert np.abs(pv.coeffs - w.coeffs).max() <= 1e-10


def test_pvh_div_rate():
    levels = (8, 16, 32, 64)

    def v(x, y):
        return u_sin(x, y), u_sin(x, y)

    def div_v(x, y):
        gx, gy = grad_u_sin(x, y)
        return gx + gy
    errs = [l2_error(project_pvh(v, div_v, build_uniform_square(n), 2), div_v, "div")
            for n in levels]
    assert abs(observed_rate(errs, levels) - 2.0) <= 0.15


# -- Hodge decomposition ------------------------------------------------

@pytest.mark.parametrize("r", [1, 2])
def test_hodge_random(r):
    mesh = build_uniform_square(4)
    V = build_space(mesh, "rt", r, "zero_normal")
    w = FeFunction(V, V.extend(np.random.default_rng(r).standard_normal(V.dim)))
    parts = discrete_hodge_decompose(w)
    assert l2_norm(parts.curl_rho + parts.grad_phi - w) <= 1e-10
    M = assemble_mass(build_space(mesh, "rt", r))
    assert abs(parts.curl_rho.coeffs @ M @ parts.grad_phi.coeffs) <= 1e-10
    rho, phi = parts
    assert rho.space.constraint == "zero_trace" and phi.space.constraint == "mean_zero"


def test_hodge_of_curl_has_no_gradient(pmesh):
    S0 = build_space(pmesh, "lagrange", 2, "zero_trace")
    V = build_space(pmesh, "rt", 2, "zero_normal")
    rho = FeFunction(S0, S0.extend(np.random.default_rng(1).standard_normal(S0.dim)))
    parts = discrete_hodge_decompose(FeFunction(V, curl_operator(S0, V) @ rho.coeffs))
    assert np.abs(parts.phi.coeffs).max() <= 1e-10
    assert np.abs(parts.rho.coeffs - rho.coeffs).max() <= 1e-10


def test_hodge_of_gradient_has_no_curl(pmesh):
    V = build_space(pmesh, "rt", 2, "zero_normal")
    P = build_space(pmesh, "dg", 1, "mean_zero")
    phi = project_l2(P, lambda x, y: cos(3 * x) * y)
    parts = discrete_hodge_decompose(discrete_gradient(phi, V))
    assert np.abs(parts.rho.coeffs).max() <= 1e-10
    assert l2_norm(parts.phi - phi) <= 1e-10


def test_hodge_rejects_unconstrained(pmesh):
    V = build_space(pmesh, "rt", 1)
    with pytest.raises(SpaceError):
        discrete_hodge_decompose(FeFunction(V))


@pytest.mark.parametrize("r", [1, 2])
def test_discrete_poincare_ratio_stable(r):
    # sup ||phi|| / ||grad0_h phi|| over mean-zero phi, on n = 2, 4, 8
    ratios = []
    for n in (2, 4, 8):
        m = build_uniform_square(n)
        V = build_space(m, "rt", r, "zero_normal")
        P = build_space(m, "dg", r - 1)
        M = assemble_mass(V).toarray()
        B = assemble_div_pressure(V, P).toarray()
        Mp = assemble_mass(P).toarray()
        G = B @ np.linalg.solve(M, B.T)
        Z = sl.null_space(assemble_mean(P)[None, :])
        lam = sl.eigh(Z.T @ G @ Z, Z.T @ Mp @ Z, eigvals_only=True)
        ratios.append(1.0 / np.sqrt(lam.min()))
    assert max(ratios) <= 1.2 * min(ratios)
