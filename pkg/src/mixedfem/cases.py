"""Manufactured-solution catalog.

Exact fields are written once as sympy expressions; loads and derivatives
are derived symbolically and turned into numpy callables.  ``validate_load``
re-derives the PDE residual by finite differences of the exact fields so a
slip in the symbolic setup is caught before a study runs.
"""
from __future__ import annotations

import numpy as np
import sympy as sym

__all__ = ["ManufacturedCase", "CASES", "get_case", "derive_load", "validate_load",
           "LoadValidationError"]

x, y = sym.symbols("x y", real=True)
pi = sym.pi


class LoadValidationError(AssertionError):
    pass


def _curl(s):
    return (sym.diff(s, y), -sym.diff(s, x))


def _rot(u):
    return sym.diff(u[1], x) - sym.diff(u[0], y)


def _div(u):
    return sym.diff(u[0], x) + sym.diff(u[1], y)


def _grad(s):
    return (sym.diff(s, x), sym.diff(s, y))


def _lap(s):
    return sym.diff(s, x, 2) + sym.diff(s, y, 2)


def _vector_fn(exprs):
    f = sym.lambdify((x, y), list(exprs), "numpy")

    def wrapped(xx, yy):
        out = f(xx, yy)
        return tuple(np.broadcast_to(np.asarray(c, dtype=float), np.shape(xx)) for c in out)
    return wrapped


def _scalar_fn(expr):
    f = sym.lambdify((x, y), expr, "numpy")

    def wrapped(xx, yy):
        return np.broadcast_to(np.asarray(f(xx, yy), dtype=float), np.shape(xx))
    return wrapped


class ManufacturedCase:
    """Exact solution of one problem with callables for every field.

    ``problem`` is ``"vlap"``, ``"biharmonic"`` or ``"stokes"``.  Symbolic
    inputs go in ``u_expr`` (pair), ``p_expr`` or ``U_expr``; the derived
    expressions live in ``exprs`` and matching numpy callables ``f(x, y)``
    are attributes: ``u``, ``div_u``, ``sigma`` (= rot u, or -lap U for the
    biharmonic), ``curl_sigma``, ``p``, ``U``, ``grad_U`` and the load ``f``.
    """

    def __init__(self, name, problem, bc_mode, u_expr=None, p_expr=None, U_expr=None):
        self.name = name
        self.problem = problem
        self.bc_mode = bc_mode
        self.u_expr = None if u_expr is None else tuple(u_expr)
        self.p_expr = p_expr
        self.U_expr = U_expr
        e = {}
        if problem == "biharmonic":
            e["U"] = U_expr
            e["grad_U"] = _grad(U_expr)
            e["sigma"] = -_lap(U_expr)
        else:
            e["u"] = self.u_expr
            e["div_u"] = _div(self.u_expr)
            e["sigma"] = _rot(self.u_expr)
            if p_expr is not None:
                e["p"] = p_expr
        e["curl_sigma"] = _curl(e["sigma"])
        e["f"] = derive_load(self)
        self.exprs = e
        for key, val in e.items():
            setattr(self, key, _vector_fn(val) if isinstance(val, tuple) else _scalar_fn(val))

    @property
    def has_pressure(self):
        return self.p_expr is not None

    def __repr__(self):
        return f"ManufacturedCase({self.name!r}, {self.problem!r}, {self.bc_mode!r})"


def derive_load(case):
    """Symbolic load for the case's PDE.

    vector Laplacian ``f = curl rot u - grad div u``; Stokes adds ``grad p``;
    biharmonic ``g = lap^2 U``.
    """
    if case.problem == "biharmonic":
        return sym.simplify(_lap(_lap(case.U_expr)))
    u = case.u_expr
    cr = _curl(_rot(u))
    gd = _grad(_div(u))
    f = [cr[i] - gd[i] for i in range(2)]
    if case.problem == "stokes":
        gp = _grad(case.p_expr)
        f = [f[i] + gp[i] for i in range(2)]
    return tuple(sym.simplify(c) for c in f)


def _fd_laplacian(fn, xx, yy, h=1e-3):
    # fourth-order central differences
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
    offs = np.arange(-2, 3) * h
    dxx = sum(ci * np.asarray(fn(xx + o, yy)) for ci, o in zip(c, offs))
    dyy = sum(ci * np.asarray(fn(xx, yy + o)) for ci, o in zip(c, offs))
    return dxx + dyy


def _fd_derivative(fn, xx, yy, axis, h=1e-4):
    c = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * h)
    offs = np.array([-2, -1, 1, 2]) * h
    if axis == 0:
        return sum(ci * np.asarray(fn(xx + o, yy)) for ci, o in zip(c, offs))
    return sum(ci * np.asarray(fn(xx, yy + o)) for ci, o in zip(c, offs))


def validate_load(case, n_points=100, rtol=1e-6, seed=0):
    """Compare the symbolic load with finite differences of the exact fields.

    Uses ``curl rot u - grad div u = -lap u`` componentwise (plus ``grad p``),
    and for the biharmonic checks ``sigma = -lap U`` and ``g = -lap sigma``.
    Raises :class:`LoadValidationError` on mismatch.
    """
    rng = np.random.default_rng(seed)
    pts = 0.05 + 0.9 * rng.random((n_points, 2))
    xx, yy = pts[:, 0], pts[:, 1]
    if case.problem == "biharmonic":
        raw_U = sym.lambdify((x, y), case.U_expr, "numpy")
        raw_s = sym.lambdify((x, y), case.exprs["sigma"], "numpy")
        checks = [(-_fd_laplacian(raw_U, xx, yy), case.sigma(xx, yy)),
                  (-_fd_laplacian(raw_s, xx, yy), case.f(xx, yy))]
    else:
        f = case.f(xx, yy)
        checks = []
        for i in range(2):
            raw = sym.lambdify((x, y), case.u_expr[i], "numpy")
            expected = -_fd_laplacian(raw, xx, yy)
            if case.has_pressure:
                raw_p = sym.lambdify((x, y), case.p_expr, "numpy")
                expected = expected + _fd_derivative(raw_p, xx, yy, i)
            checks.append((expected, f[i]))
    for expected, got in checks:
        expected = np.broadcast_to(expected, np.shape(got))
        scale = max(1.0, np.abs(expected).max())
        err = np.abs(expected - got).max() / scale
        if err > rtol:
            raise LoadValidationError(f"{case.name}: load mismatch {err:.2e}")
    return True


sx, cx = sym.sin(pi * x), sym.cos(pi * x)
sy, cy = sym.sin(pi * y), sym.cos(pi * y)

CASES = {
    c.name: c for c in [
        ManufacturedCase("electric_trig", "vlap", "electric", u_expr=(cx * sy, 2 * sx * cy)),
        ManufacturedCase("magnetic_trig", "vlap", "magnetic", u_expr=(sx * cy, 2 * cx * sy)),
        ManufacturedCase("dirichlet_trig", "vlap", "dirichlet", u_expr=(sx * sy, sx * sy)),
        ManufacturedCase(
            "stokes_poly", "stokes", "dirichlet",
            u_expr=(-2 * x**2 * (x - 1)**2 * y * (2 * y - 1) * (y - 1),
                    2 * y**2 * (y - 1)**2 * x * (2 * x - 1) * (x - 1)),
            p_expr=(x - sym.Rational(1, 2))**5 + (y - sym.Rational(1, 2))**5),
        ManufacturedCase("clamped_sin2", "biharmonic", "dirichlet", U_expr=sx**2 * sy**2),
    ]
}

# case used when only (problem, bc) is given
DEFAULT_CASE = {
    ("vlap", "electric"): "electric_trig",
    ("vlap", "magnetic"): "magnetic_trig",
    ("vlap", "dirichlet"): "dirichlet_trig",
    ("stokes", "dirichlet"): "stokes_poly",
    ("biharmonic", "dirichlet"): "clamped_sin2",
}


def get_case(name):
    try:
        return CASES[name]
    except KeyError:
        raise KeyError(f"unknown case {name!r}; known: {sorted(CASES)}") from None
