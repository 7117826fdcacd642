"""Self-check suites run by ``mixedfem verify``.

``projections``
    commuting identities, orthogonality of ``P_{V0}``, discrete Hodge
    decomposition and projection error rates.
``sequences``
    exact-sequence dimensions and ranks, divergence-free Stokes velocity,
    zero data giving zero solutions, the Dirichlet-mode witness that
    ``curl Sigma_h`` is not contained in ``V0``.
``golden-tables``
    the r = 2 convergence tables against the published values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import (
    assemble_curl_coupling,
    assemble_div_pressure,
    assemble_divdiv,
    assemble_load,
    assemble_mass,
)
from .golden import TABLES
from .linalg import dense_rank_and_nullspace
from .mesh import build_uniform_square, perturb_interior
from .problems import BC_MODES, solve_biharmonic_cr, solve_stokes_vvp, solve_vector_laplacian
from .projections import (
    DATA_DEGREE,
    curl_moments,
    curl_operator,
    discrete_hodge_decompose,
    interpolate_rt_canonical,
    l2_error,
    l2_norm,
    project_elliptic_sigma,
    project_l2,
    project_pvh,
)
from .refelem import quadrature
from .space import FeFunction, build_space
from .study import run_study

__all__ = ["Check", "SUITES", "run_suite", "smooth_field", "observed_rate"]

IDENTITY_TOL = 1e-9
RATE_TOL = 0.15

sin, cos, pi = np.sin, np.cos, np.pi


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}".rstrip()


def observed_rate(errors, levels):
    """Least-squares slope of ``-log e`` against ``log n``."""
    slope = np.polyfit(np.log(levels), np.log(errors), 1)[0]
    return float(-slope)


def smooth_field(seed):
    """Random smooth field with zero normal trace on the unit square.

    Returns ``(v, div_v)`` as callables of ``(x, y)``.
    """
    a = np.random.default_rng(seed).uniform(-1.0, 1.0, 8)

    def gx(x, y):
        return a[0] + a[1] * x + a[2] * y + a[3] * cos(2 * x * y)

    def gy(x, y):
        return a[4] + a[5] * x + a[6] * y + a[7] * sin(x + 2 * y)

    def v(x, y):
        return sin(pi * x) * gx(x, y), sin(pi * y) * gy(x, y)

    def div_v(x, y):
        dgx = a[1] - 2 * y * a[3] * sin(2 * x * y)
        dgy = a[6] + 2 * a[7] * cos(x + 2 * y)
        return (pi * cos(pi * x) * gx(x, y) + sin(pi * x) * dgx
                + pi * cos(pi * y) * gy(x, y) + sin(pi * y) * dgy)
    return v, div_v


def _bubble(x, y):
    return sin(pi * x) * sin(pi * y) * (1 + x * y * y)


def _bubble_grad(x, y):
    w = 1 + x * y * y
    return (pi * cos(pi * x) * sin(pi * y) * w + sin(pi * x) * sin(pi * y) * y * y,
            pi * sin(pi * x) * cos(pi * y) * w + sin(pi * x) * sin(pi * y) * 2 * x * y)


def _bubble_curl(x, y):
    gx, gy = _bubble_grad(x, y)
    return gy, -gx


def _identity_meshes():
    for n in (4, 8):
        yield f"n={n}", build_uniform_square(n)
        yield f"n={n}p", perturb_interior(build_uniform_square(n), 0.25, seed=n)


def projection_checks(rates=True):
    """Commuting identities, orthogonality, Hodge splitting and (optionally) rates."""
    out = []
    for label, mesh in _identity_meshes():
        for r in (1, 2):
            tag = f"{label},r={r}"
            v, div_v = smooth_field(r + mesh.n_vertices)
            S = build_space(mesh, "dg", r - 1)
            Pdiv = project_l2(S, div_v)

            pi_v = interpolate_rt_canonical(build_space(mesh, "rt", r), v)
            e = _dg_distance(pi_v, Pdiv)
            out.append(Check(f"div Pi_h v = P_S div v [{tag}]", e <= IDENTITY_TOL, f"{e:.1e}"))

            pv = project_pvh(v, div_v, mesh, r)
            e = _dg_distance(pv, Pdiv)
            out.append(Check(f"div P_V0 v = P_S div v [{tag}]", e <= IDENTITY_TOL, f"{e:.1e}"))

            S0 = build_space(mesh, "lagrange", r, "zero_trace")
            rho = project_elliptic_sigma(S0, _bubble, _bubble_grad)
            lhs = project_pvh(_bubble_curl, lambda x, y: 0.0 * x, mesh, r)
            rhs = FeFunction(lhs.space, curl_operator(S0, lhs.space) @ rho.coeffs)
            e = l2_norm(lhs - rhs)
            out.append(Check(f"P_V0 curl U = curl P_Sigma0 U [{tag}]", e <= IDENTITY_TOL,
                             f"{e:.1e}"))

            V = pv.space
            res1 = curl_moments(S0, v) - assemble_curl_coupling(S0, V).T @ V.restrict(pv.coeffs)
            P = build_space(mesh, "dg", r - 1, "mean_zero")
            res2 = assemble_load(P, div_v, DATA_DEGREE) - assemble_div_pressure(V, P) @ V.restrict(pv.coeffs)
            e = max(np.abs(res1).max(), np.abs(res2).max())
            out.append(Check(f"P_V0 orthogonality [{tag}]", e <= 1e-10, f"{e:.1e}"))

    mesh = build_uniform_square(4)
    for r in (1, 2):
        V = build_space(mesh, "rt", r, "zero_normal")
        rng = np.random.default_rng(r)
        w = FeFunction(V, V.extend(rng.standard_normal(V.dim)))
        parts = discrete_hodge_decompose(w)
        rec = l2_norm(parts.curl_rho + parts.grad_phi - w)
        M = assemble_mass(build_space(mesh, "rt", r))
        orth = abs(parts.curl_rho.coeffs @ (M @ parts.grad_phi.coeffs))
        out.append(Check(f"Hodge reconstruction [n=4,r={r}]", rec <= 1e-10, f"{rec:.1e}"))
        out.append(Check(f"Hodge orthogonality [n=4,r={r}]", orth <= 1e-10, f"{orth:.1e}"))

    if rates:
        out += projection_rate_checks()
    return out


def _dg_distance(v_fn, s_fn):
    """L2 distance between ``div v_fn`` and the discontinuous ``s_fn``."""
    mesh = v_fn.space.mesh
    rule = quadrature(2 * v_fn.space.degree + 2)
    _, d = v_fn.at(rule.points, derivative=True)
    s = s_fn.at(rule.points)
    w = np.abs(mesh.dets)[:, None] * rule.weights[None, :]
    return float(np.sqrt(np.sum(w * (d - s) ** 2)))


PROJECTION_LEVELS = (8, 16, 32, 64)


def projection_rates():
    """Observed L2 rates of the four projections on uniform meshes.

    Returns ``{name: (rate, expected)}``.
    """
    def u(x, y):
        return sin(pi * x) * sin(pi * y)

    def grad_u(x, y):
        return pi * cos(pi * x) * sin(pi * y), pi * sin(pi * x) * cos(pi * y)

    def curl_u(x, y):
        gx, gy = grad_u(x, y)
        return gy, -gx

    def vdiag(x, y):
        return u(x, y), u(x, y)

    def div_vdiag(x, y):
        gx, gy = grad_u(x, y)
        return gx + gy

    def s(x, y):
        return sin(pi * x)

    meshes = [build_uniform_square(n) for n in PROJECTION_LEVELS]
    errs = {k: [] for k in ("P_S", "P_Sigma0", "Pi_V", "P_V0_div")}
    for m in meshes:
        errs["P_S"].append(l2_error(project_l2(build_space(m, "dg", 1), s), s))
        S0 = build_space(m, "lagrange", 2, "zero_trace")
        errs["P_Sigma0"].append(l2_error(project_elliptic_sigma(S0, u, grad_u), u))
        errs["Pi_V"].append(l2_error(interpolate_rt_canonical(build_space(m, "rt", 2), curl_u),
                                     curl_u))
        errs["P_V0_div"].append(l2_error(project_pvh(vdiag, div_vdiag, m, 2), div_vdiag, "div"))
    expected = {"P_S": 2.0, "P_Sigma0": 3.0, "Pi_V": 2.0, "P_V0_div": 2.0}
    return {k: (observed_rate(e, PROJECTION_LEVELS), expected[k]) for k, e in errs.items()}


def projection_rate_checks():
    return [Check(f"rate {k}", abs(rate - exp) <= RATE_TOL, f"{rate:.3f} (expected {exp})")
            for k, (rate, exp) in projection_rates().items()]


def sequence_dimensions(mesh, r):
    S0 = build_space(mesh, "lagrange", r, "zero_trace")
    V0 = build_space(mesh, "rt", r, "zero_normal")
    P = build_space(mesh, "dg", r - 1, "mean_zero")
    return V0.dim, S0.dim, P.dim


def sequence_checks():
    out = []
    bad = []
    for n in (1, 2, 3, 5, 8):
        for kind in ("uniform", "perturbed"):
            mesh = build_uniform_square(n)
            if kind == "perturbed":
                mesh = perturb_interior(mesh, 0.25, seed=n)
            for r in (1, 2, 3, 4):
                dv, ds, dp = sequence_dimensions(mesh, r)
                if dv != ds + dp:
                    bad.append(f"n={n},{kind},r={r}: {dv} != {ds}+{dp}")
    out.append(Check("dim V0 = dim Sigma0 + dim S_hat", not bad, "; ".join(bad)))

    mesh = build_uniform_square(2)
    for r in (1, 2):
        V0 = build_space(mesh, "rt", r, "zero_normal")
        S0 = build_space(mesh, "lagrange", r, "zero_trace")
        S = build_space(mesh, "dg", r - 1)
        rank, _ = dense_rank_and_nullspace(assemble_div_pressure(V0, S))
        out.append(Check(f"div block rank = dim S_hat [n=2,r={r}]", rank == S.ndofs - 1,
                         f"{rank} vs {S.ndofs - 1}"))
        _, null = dense_rank_and_nullspace(assemble_divdiv(V0))
        out.append(Check(f"divdiv nullity = dim Sigma0 [n=2,r={r}]",
                         null.shape[1] == S0.dim, f"{null.shape[1]} vs {S0.dim}"))
        curl = curl_operator(S0, V0)[V0.free_dofs][:, S0.free_dofs]
        rank, _ = dense_rank_and_nullspace(curl)
        out.append(Check(f"curl injective on Sigma0 [n=2,r={r}]", rank == S0.dim,
                         f"{rank} vs {S0.dim}"))
        dc = np.abs((assemble_div_pressure(V0, S) @ curl).toarray()).max()
        out.append(Check(f"div curl = 0 [n=2,r={r}]", dc <= 1e-12, f"{dc:.1e}"))

    out.append(dirichlet_witness())

    mesh = perturb_interior(build_uniform_square(6), 0.25, seed=3)
    for r in (1, 2):
        v, _ = smooth_field(r)
        sol = solve_stokes_vvp(mesh, r, v)
        d = l2_norm(sol.u_h, "div")
        out.append(Check(f"Stokes div u_h = 0 [r={r}]", d <= 1e-10, f"{d:.1e}"))
        mean = abs(assemble_load(sol.p_h.space, lambda x, y: 1.0 + 0 * x) @ sol.p_h.coeffs)
        out.append(Check(f"Stokes mean p_h = 0 [r={r}]", mean <= 1e-12, f"{mean:.1e}"))

    out += zero_data_checks(mesh)
    return out


def dirichlet_witness():
    """Some boundary-supported tau in Sigma_h has curl tau outside V0."""
    mesh = build_uniform_square(4)
    S = build_space(mesh, "lagrange", 2)
    V = build_space(mesh, "rt", 2)
    V0 = build_space(mesh, "rt", 2, "zero_normal")
    curl = curl_operator(S, V)
    boundary = np.flatnonzero(mesh.boundary_vertices)
    residual = np.abs(curl[V0.constrained_dofs][:, boundary].toarray()).max(axis=0)
    return Check("curl Sigma_h not in V0 (Dirichlet witness)", residual.max() > 1e-3,
                 f"max boundary-normal residual {residual.max():.2e}")


def zero_data_checks(mesh):
    out = []

    def zero_vec(x, y):
        return 0.0 * x, 0.0 * y

    def zero(x, y):
        return 0.0 * x
    for bc in BC_MODES:
        sol = solve_vector_laplacian(mesh, 2, bc, zero_vec)
        m = max(np.abs(sol.sigma_h.coeffs).max(), np.abs(sol.u_h.coeffs).max())
        out.append(Check(f"f=0 gives zero solution [vlap {bc}]", m == 0.0, f"{m:.1e}"))
    sol = solve_biharmonic_cr(mesh, 2, zero)
    m = max(np.abs(sol.sigma_h.coeffs).max(), np.abs(sol.U_h.coeffs).max())
    out.append(Check("f=0 gives zero solution [biharmonic]", m == 0.0, f"{m:.1e}"))
    sol = solve_stokes_vvp(mesh, 2, zero_vec)
    m = max(np.abs(f.coeffs).max() for f in (sol.sigma_h, sol.u_h, sol.p_h))
    out.append(Check("f=0 gives zero solution [stokes]", m == 0.0, f"{m:.1e}"))
    return out


def golden_checks(max_level=None, relax=2.0):
    """Compare studies with the published tables.

    With ``max_level`` only levels up to it are compared; the rate bands are
    then multiplied by ``relax`` because coarser rows sit further from the
    asymptotic rate.
    """
    out = []
    for table in TABLES.values():
        levels = [n for n in table.levels if max_level is None or n <= max_level]
        if not levels:
            continue
        capped = len(levels) < len(table.levels)
        report = run_study(table.problem, table.bc_mode, table.degree,
                           [table.rate_level] + levels)
        for i, n in enumerate(levels, start=1):
            for j, norm in enumerate(table.norms):
                got, ref = report.levels[i].errors[norm], table.errors[i - 1][j]
                rel = got / ref - 1.0
                out.append(Check(f"{table.name} n={n} {norm}", abs(rel) <= table.error_rtol,
                                 f"{got:.3e} vs {ref:.2e} ({rel:+.1%})"))
        last = len(levels)
        for j, norm in enumerate(table.norms):
            rate = report.rate(last, norm)
            ref = table.rate_rows[last - 1][j]
            tol = table.rate_atol[j] * (relax if capped else 1.0)
            ok = rate is not None and math.isfinite(rate) and abs(rate - ref) <= tol
            out.append(Check(f"{table.name} rate {norm} n={levels[-1]}", ok,
                             f"{rate:.2f} vs {ref:.2f} (+-{tol:.2f})"))
    return out


SUITES = {
    "projections": projection_checks,
    "sequences": sequence_checks,
    "golden-tables": golden_checks,
}


def run_suite(name, **kwargs):
    return SUITES[name](**kwargs)
