"""Sparse direct solves and the Picard fixed-point iteration."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from nsdelta.assembly import (LinearSystem, assemble_diffusion, assemble_divergence,
                              build_system, momentum_rhs)
from nsdelta.spaces import DiscreteField, FunctionSpace

log = logging.getLogger(__name__)

_RESIDUAL_TOL = 1e-10
# increments beyond this are treated as divergence of the fixed-point map
_BLOWUP = 1e12


class SingularSystemError(RuntimeError):
    """The saddle-point matrix could not be factored."""


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_picard_iters: int = 50
    linear_solver: str = "direct_lu"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_picard_iters) < 1:
            raise ValueError("max_picard_iters must be at least 1")
        if self.linear_solver != "direct_lu":
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")


@dataclass
class SolveReport:
    picard_iterations: int
    final_increment: float
    converged: bool
    increments: list = field(default_factory=list)
    multiplier: float = 0.0  # pressure-mean Lagrange multiplier, if present


def _block_names(space: FunctionSpace | None, idx):
    if space is None:
        return sorted({"matrix"})
    names = set()
    for i in np.atleast_1d(idx):
        if i < space.n_velocity:
            names.add("velocity")
        elif i < space.n_velocity + space.n_pressure:
            names.add("pressure")
        else:
            names.add("pressure-mean multiplier")
    return sorted(names)


def solve_matrix(A, b, space: FunctionSpace | None = None) -> np.ndarray:
    """Solve ``A x = b`` by sparse LU and verify the relative residual."""
    A = sp.csc_matrix(A)
    b = np.asarray(b, float)
    if A.shape[0] != A.shape[1] or A.shape[0] != len(b):
        raise ValueError(f"incompatible system: matrix {A.shape}, rhs {b.shape}")
    empty_rows = np.flatnonzero(np.diff(A.tocsr().indptr) == 0)
    empty_cols = np.flatnonzero(np.diff(A.indptr) == 0)
    if len(empty_rows) or len(empty_cols):
        idx = np.concatenate([empty_rows, empty_cols])
        raise SingularSystemError(
            f"structurally singular matrix: empty rows/columns in the {', '.join(_block_names(space, idx))} block")
    try:
        lu = splu(A)
    except RuntimeError as exc:
        raise SingularSystemError(f"sparse LU failed ({exc}) in the "
                                  f"{', '.join(_block_names(space, np.arange(A.shape[0])))} system") from exc
    x = lu.solve(b)
    r = A @ x - b
    scale = sp.linalg.norm(A, np.inf) * np.abs(x).max(initial=0.0) + np.abs(b).max(initial=0.0)
    res = np.abs(r).max(initial=0.0)
    if not np.all(np.isfinite(x)) or (scale > 0 and res > _RESIDUAL_TOL * scale):
        bad = np.flatnonzero(np.abs(r) > _RESIDUAL_TOL * max(scale, 1e-300))
        raise SingularSystemError(
            f"numerically singular matrix (relative residual {res / max(scale, 1e-300):.2e}); "
            f"worst rows in the {', '.join(_block_names(space, bad[:10]))} block")
    return x


def solve_linear(system: LinearSystem) -> np.ndarray:
    return solve_matrix(system.matrix, system.rhs, system.space)


def split_solution(space: FunctionSpace, x):
    u = DiscreteField(space, x[:space.n_velocity].copy(), "velocity")
    p = DiscreteField(space, x[space.n_velocity:space.n_velocity + space.n_pressure].copy(), "pressure")
    return u, p


def stokes_initial_guess(space: FunctionSpace, sources=(), bc=None, body_force=None):
    """Discrete Stokes solution (convection dropped). ``bc`` overrides ``space.bc``."""
    if bc is not None and bc is not space.bc:
        space = FunctionSpace(space.mesh, space.family, bc)
    return split_solution(space, solve_linear(build_system(space, None, sources, body_force)))


def picard_solve(space: FunctionSpace, sources=(), bc=None, config: SolverConfig | None = None,
                 body_force=None):
    """Fixed-point iteration with lagged convection, started from Stokes.

    Step i solves the linear system with convection lagged at u^{i-1}.
    It is written in defect-correction form: the increment solves the
    Picard matrix against the current residual.

    Stops when the Euclidean norm of the stacked (u, p) coefficient increment
    is at most ``config.tol``. Non-convergence is reported, not raised.

    Returns
    -------
    (u, p), SolveReport
    """
    config = config or SolverConfig()
    if bc is not None and bc is not space.bc:
        space = FunctionSpace(space.mesh, space.family, bc)
    A = assemble_diffusion(space)
    B = assemble_divergence(space)
    f = momentum_rhs(space, sources, body_force)
    nu = space.n_velocity + space.n_pressure
    x = solve_linear(build_system(space, None, A=A, B=B, f=f))
    increments = []
    converged = False
    it = 0
    for it in range(1, config.max_picard_iters + 1):
        w = DiscreteField(space, x[:space.n_velocity], "velocity")
        system = build_system(space, w, A=A, B=B, f=f)
        # solve for the increment from the current defect: the same Picard
        # step, but its rounding error scales with the increment, not with x
        dx = solve_matrix(system.matrix, system.rhs - system.matrix @ x, space)
        inc = float(np.linalg.norm(dx[:nu]))
        increments.append(inc)
        x = x + dx
        if not np.isfinite(inc) or inc > _BLOWUP:
            log.warning("Picard iteration diverged (increment %.3e)", inc)
            break
        if inc <= config.tol:
            converged = True
            break
    if not converged:
        log.warning("Picard iteration stopped after %d steps, increment %.3e", it, increments[-1])
    mult = float(x[nu]) if space.has_mean_constraint else 0.0
    report = SolveReport(it, increments[-1] if increments else 0.0, converged, increments, mult)
    return split_solution(space, x), report


def nonlinear_residual(space: FunctionSpace, u: DiscreteField, p: DiscreteField, sources=(),
                       body_force=None, multiplier: float = 0.0) -> float:
    """Max-norm residual of the full nonlinear discrete system at (u, p)."""
    system = build_system(space, u, sources, body_force)
    x = np.concatenate([u.coefficients, p.coefficients])
    if space.has_mean_constraint:
        x = np.append(x, multiplier)
    r = system.matrix @ x - system.rhs
    return float(np.abs(r).max(initial=0.0))
