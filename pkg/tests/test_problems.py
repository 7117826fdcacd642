import numpy as np
import pytest

from mixedfem.assembly import assemble_mean
from mixedfem.cases import get_case
from mixedfem.mesh import build_uniform_square, perturb_interior
from mixedfem.problems import (
    solve_biharmonic_cr,
    solve_stokes_vvp,
    solve_vector_laplacian,
    vector_laplace_spaces,
)
from mixedfem.projections import l2_error, l2_norm
from mixedfem.verify import smooth_field


def zero_vec(x, y):
    return 0.0 * x, 0.0 * y


@pytest.fixture(scope="module")
def mesh():
    return perturb_interior(build_uniform_square(5), 0.25, seed=2)


@pytest.mark.parametrize("bc", ["electric", "magnetic", "dirichlet"])
def test_vlap_zero_load(mesh, bc):
    sol = solve_vector_laplacian(mesh, 2, bc, zero_vec)
    assert np.all(sol.sigma_h.coeffs == 0) and np.all(sol.u_h.coeffs == 0)


def test_biharmonic_zero_load(mesh):
    sol = solve_biharmonic_cr(mesh, 2, lambda x, y: 0.0 * x)
    assert np.all(sol.sigma_h.coeffs == 0) and np.all(sol.U_h.coeffs == 0)


def test_stokes_zero_load(mesh):
    sol = solve_stokes_vvp(mesh, 2, zero_vec)
    for f in (sol.sigma_h, sol.u_h, sol.p_h):
        assert np.all(f.coeffs == 0)


def test_spaces_per_bc(mesh):
    S, V = vector_laplace_spaces(mesh, 1, "electric")
    assert S.constraint is None and V.constraint is None
    S, V = vector_laplace_spaces(mesh, 1, "magnetic")
    assert S.constraint == "zero_trace" and V.constraint == "zero_normal"
    S, V = vector_laplace_spaces(mesh, 1, "dirichlet")
    assert S.constraint is None and V.constraint == "zero_normal"
    with pytest.raises(ValueError):
        vector_laplace_spaces(mesh, 1, "neumann")


def test_magnetic_sigma_has_zero_trace(mesh):
    sol = solve_vector_laplacian(mesh, 2, "magnetic", get_case("magnetic_trig").f)
    S = sol.sigma_h.space
    assert np.all(sol.sigma_h.coeffs[S.constrained_dofs] == 0)
    assert np.abs(sol.sigma_h.coeffs).max() > 0


@pytest.mark.parametrize("r", [1, 2, 3])
def test_stokes_divergence_free_and_mean_zero(mesh, r):
    v, _ = smooth_field(10 + r)
    sol = solve_stokes_vvp(mesh, r, v)
    assert l2_norm(sol.u_h, "div") <= 1e-10
    assert abs(assemble_mean(sol.p_h.space) @ sol.p_h.coeffs) <= 1e-12
    assert np.all(sol.u_h.coeffs[sol.u_h.space.constrained_dofs] == 0)


@pytest.mark.parametrize("bc", ["electric", "magnetic", "dirichlet"])
def test_vlap_errors_decrease(bc):
    case = get_case(f"{bc}_trig")
    errs = []
    for n in (4, 8):
        sol = solve_vector_laplacian(build_uniform_square(n), 2, bc, case.f)
        errs.append(l2_error(sol.u_h, case.u))
    assert errs[1] < errs[0] / 3


def test_biharmonic_sigma_approximates_minus_laplacian():
    case = get_case("clamped_sin2")
    errs = []
    for n in (4, 8, 16):
        sol = solve_biharmonic_cr(build_uniform_square(n), 2, case.f)
        errs.append(l2_error(sol.sigma_h, case.sigma))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.05 * l2_error(sol.sigma_h.space.interpolate(case.sigma) * 0.0, case.sigma)


def test_stokes_solution_close_on_moderate_mesh():
    case = get_case("stokes_poly")
    sol = solve_stokes_vvp(build_uniform_square(8), 2, case.f)
    assert l2_error(sol.u_h, case.u) == pytest.approx(3.26e-4, rel=0.05)
