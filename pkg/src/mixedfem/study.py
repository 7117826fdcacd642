"""Convergence studies against manufactured solutions."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cases import DEFAULT_CASE, get_case, validate_load
from .mesh import build_uniform_square, perturb_interior
from .problems import solve_biharmonic_cr, solve_stokes_vvp, solve_vector_laplacian
from .refelem import quadrature

__all__ = [
    "NORMS",
    "StudyError",
    "LevelRecord",
    "ConvergenceReport",
    "make_mesh",
    "solve_case",
    "error_norms",
    "run_study",
    "emit_table",
]

log = logging.getLogger(__name__)

# canonical column order and short names used in tables
NORMS = ("L2_u", "L2_div_u", "L2_sigma", "L2_curl_sigma", "H1_U", "L2_p")
SHORT = {"L2_u": "u", "L2_div_u": "divu", "L2_sigma": "sigma",
         "L2_curl_sigma": "curlsigma", "H1_U": "U", "L2_p": "p"}
LABEL = {"L2_u": "‖u−u_h‖", "L2_div_u": "‖div(u−u_h)‖", "L2_sigma": "‖σ−σ_h‖",
         "L2_curl_sigma": "‖curl(σ−σ_h)‖", "H1_U": "‖U−U_h‖₁", "L2_p": "‖p−p_h‖"}

PROBLEM_NORMS = {
    "vlap": ("L2_u", "L2_div_u", "L2_sigma", "L2_curl_sigma"),
    "stokes": ("L2_u", "L2_div_u", "L2_sigma", "L2_curl_sigma", "L2_p"),
    "biharmonic": ("H1_U", "L2_sigma", "L2_curl_sigma"),
}

PERTURB_AMPLITUDE = 0.25
# errors below this are roundoff; no rate is reported for them
ROUNDOFF = 1e-12


class StudyError(RuntimeError):
    pass


def make_mesh(kind, n, seed=0):
    """``"uniform"`` or ``"perturbed"`` mesh with ``n`` subdivisions per side."""
    mesh = build_uniform_square(n)
    if kind == "uniform":
        return mesh
    if kind == "perturbed":
        return perturb_interior(mesh, PERTURB_AMPLITUDE, seed)
    raise ValueError(f"unknown mesh kind {kind!r}")


def solve_case(problem, bc_mode, r, mesh, case):
    if problem == "vlap":
        return solve_vector_laplacian(mesh, r, bc_mode, case.f)
    if problem == "stokes":
        return solve_stokes_vvp(mesh, r, case.f)
    if problem == "biharmonic":
        return solve_biharmonic_cr(mesh, r, case.f)
    raise ValueError(f"unknown problem {problem!r}")


def error_norms(solution, case, which=None, qdeg=None):
    """L2-type errors of a discrete solution against ``case``.

    Each norm is the square root of the element-summed quadrature (degree
    ``2 r + 6`` by default) of the squared pointwise error.  ``H1_U`` is the
    full H1 norm.
    """
    sigma_h = solution.sigma_h
    r = sigma_h.space.degree
    mesh = sigma_h.space.mesh
    which = tuple(which or PROBLEM_NORMS[case.problem])
    rule = quadrature(qdeg or 2 * r + 6)
    sums = dict.fromkeys(which, 0.0)
    for cells in sigma_h.space.chunks():
        X = mesh.map_to_physical(rule.points)[cells]
        x, y = X[..., 0], X[..., 1]
        w = np.abs(mesh.dets[cells])[:, None] * rule.weights[None, :]
        if "L2_sigma" in which or "L2_curl_sigma" in which:
            s, gs = sigma_h.at(rule.points, cells, derivative=True)
            if "L2_sigma" in which:
                sums["L2_sigma"] += np.sum(w * (s - case.sigma(x, y)) ** 2)
            if "L2_curl_sigma" in which:
                cx, cy = case.curl_sigma(x, y)
                sums["L2_curl_sigma"] += np.sum(
                    w * ((gs[..., 1] - cx) ** 2 + (-gs[..., 0] - cy) ** 2))
        if "L2_u" in which or "L2_div_u" in which:
            u, du = solution.u_h.at(rule.points, cells, derivative=True)
            if "L2_u" in which:
                ux, uy = case.u(x, y)
                sums["L2_u"] += np.sum(w * ((u[..., 0] - ux) ** 2 + (u[..., 1] - uy) ** 2))
            if "L2_div_u" in which:
                sums["L2_div_u"] += np.sum(w * (du - case.div_u(x, y)) ** 2)
        if "L2_p" in which:
            p = solution.p_h.at(rule.points, cells)
            sums["L2_p"] += np.sum(w * (p - case.p(x, y)) ** 2)
        if "H1_U" in which:
            U, gU = solution.U_h.at(rule.points, cells, derivative=True)
            gx, gy = case.grad_U(x, y)
            sums["H1_U"] += np.sum(w * ((U - case.U(x, y)) ** 2
                                        + (gU[..., 0] - gx) ** 2 + (gU[..., 1] - gy) ** 2))
    return {k: math.sqrt(v) for k, v in sums.items()}


@dataclass
class LevelRecord:
    n: int
    h: float
    errors: dict


@dataclass
class ConvergenceReport:
    case: str
    problem: str
    bc_mode: str
    degree: int
    mesh_kind: str
    norms: list
    levels: list = field(default_factory=list)

    def rate(self, i, norm):
        """Observed order between level ``i - 1`` and ``i``; None on the first row."""
        if i == 0:
            return None
        c, f = self.levels[i - 1], self.levels[i]
        ec, ef = c.errors[norm], f.errors[norm]
        if ec < ROUNDOFF or ef < ROUNDOFF:
            return None
        return math.log(ec / ef) / math.log(f.n / c.n)

    def rates(self, norm):
        return [self.rate(i, norm) for i in range(len(self.levels))]

    def errors(self, norm):
        return [lv.errors[norm] for lv in self.levels]

    def final_rates(self):
        return {k: self.rate(len(self.levels) - 1, k) for k in self.norms}

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["levels"] = [LevelRecord(**lv) for lv in d.get("levels", [])]
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def run_study(problem, bc_mode, r, levels, mesh_kind="uniform", case=None, seed=0):
    """Solve on each level (coarse to fine) and collect errors and rates."""
    levels = [int(n) for n in levels]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be increasing")
    if case is None:
        case = DEFAULT_CASE[(problem, bc_mode)]
    case = get_case(case) if isinstance(case, str) else case
    validate_load(case)
    norms = list(PROBLEM_NORMS[problem])
    report = ConvergenceReport(case.name, problem, bc_mode, r, mesh_kind, norms)
    for n in levels:
        mesh = make_mesh(mesh_kind, n, seed)
        try:
            sol = solve_case(problem, bc_mode, r, mesh, case)
        except Exception as exc:
            raise StudyError(f"{case.name}, r={r}, level n={n}: {exc}") from exc
        errs = error_norms(sol, case, norms)
        report.levels.append(LevelRecord(n, mesh.h_max, errs))
        log.info("n=%d %s", n, " ".join(f"{SHORT[k]}={v:.3e}" for k, v in errs.items()))
    return report


def _columns(report):
    return [k for k in NORMS if k in report.norms]


def emit_table(report, fmt="csv"):
    """CSV or Markdown table; errors as ``%.2e``, rates as ``%.2f``.

    Rates are blank on the first row and wherever an error is at roundoff.
    """
    cols = _columns(report)
    rows = []
    for i, lv in enumerate(report.levels):
        row = [str(lv.n), f"{lv.h:.4g}"]
        for k in cols:
            rate = report.rate(i, k)
            row += [f"{lv.errors[k]:.2e}", "" if rate is None else f"{rate:.2f}"]
        rows.append(row)
    if fmt == "csv":
        header = ["n", "h"]
        for k in cols:
            header += [f"err_{SHORT[k]}", f"rate_{SHORT[k]}"]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        header = ["n", "h"]
        for k in cols:
            header += [LABEL[k], "rate"]
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
