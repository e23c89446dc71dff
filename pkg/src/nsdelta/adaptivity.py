"""Solve, estimate, mark and refine."""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from nsdelta.domains import DomainShape, build_initial_mesh
from nsdelta.estimator import IndicatorReport, compute_indicators
from nsdelta.mesh import refine
from nsdelta.quadrature import check_alpha
from nsdelta.solver import SolveReport, SolverConfig, picard_solve
from nsdelta.spaces import HOMOGENEOUS, BoundaryCondition, FunctionSpace

log = logging.getLogger(__name__)

RUN_LOG_COLUMNS = ("iter", "n_cells", "n_vertices", "ndof", "estimator",
                   "term_bulk", "term_div", "term_jump", "term_dirac", "picard_iters")


@dataclass
class ProblemSpec:
    """Data of one adaptive experiment.

    ``sources`` is a sequence of ``(z, F)`` pairs. ``mode`` selects the
    single- or multi-source indicator (default: by number of sources).
    ``time_limit`` (seconds) stops the loop before a new solve once the
    wall time spent so far exceeds it.
    """

    shape: DomainShape
    sources: list
    alpha: float = 1.5
    family: str = "taylor_hood"
    bc: BoundaryCondition = HOMOGENEOUS
    solver: SolverConfig = field(default_factory=SolverConfig)
    max_refinements: int = 15
    mode: str | None = None
    ndof_cap: int = 200_000
    time_limit: float | None = None

    def __post_init__(self):
        check_alpha(self.alpha)
        self.sources = [(np.asarray(z, float).reshape(2), np.asarray(F, float).reshape(2))
                        for z, F in self.sources]
        if not self.sources:
            raise ValueError("at least one source is required")
        if int(self.max_refinements) < 0:
            raise ValueError("max_refinements must be non-negative")


@dataclass
class IterationRecord:
    iteration: int
    n_cells: int
    n_vertices: int
    ndof: int
    estimator: float
    term_sums: dict
    picard: SolveReport

    def row(self):
        t = self.term_sums
        return [self.iteration, self.n_cells, self.n_vertices, self.ndof, repr(self.estimator),
                repr(t["bulk"]), repr(t["div"]), repr(t["jump"]), repr(t["dirac"]),
                self.picard.picard_iterations]


@dataclass
class AdaptiveRun:
    problem: ProblemSpec
    iterations: list = field(default_factory=list)
    space: FunctionSpace | None = None
    fields: tuple | None = None
    report: IndicatorReport | None = None
    status: str = "running"
    message: str = ""

    @property
    def ndofs(self) -> np.ndarray:
        return np.array([r.ndof for r in self.iterations])

    @property
    def estimators(self) -> np.ndarray:
        return np.array([r.estimator for r in self.iterations])

    @property
    def mesh(self):
        return None if self.space is None else self.space.mesh

    def write_log(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RUN_LOG_COLUMNS)
            for r in self.iterations:
                w.writerow(r.row())


def mark(values) -> np.ndarray:
    """Cells whose indicator exceeds half the largest one (strictly).

    ``values`` is an :class:`IndicatorReport` or an array of nonnegative
    indicators. Returns sorted cell indices; empty if all indicators vanish.
    """
    if isinstance(values, IndicatorReport):
        values = values.indicators
    values = np.asarray(values, float)
    if values.size == 0:
        raise ValueError("no indicators to mark")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValueError("indicators must be finite and nonnegative")
    top = values.max()
    if top == 0.0:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(values > 0.5 * top)


def adapt(problem: ProblemSpec, callback=None, mesh=None) -> AdaptiveRun:
    """Run the adaptive loop for ``problem.max_refinements`` refinements.

    Records ``max_refinements + 1`` solve/estimate steps unless the run stops
    early: on Picard non-convergence (the failing step is recorded and the
    run halts), on vanishing indicators, when Ndof exceeds the cap, or when
    the optional time limit is exceeded.
    ``callback(iteration, space, fields, report)`` is called after every
    estimate.
    """
    run = AdaptiveRun(problem)
    start = time.perf_counter()
    mesh = mesh if mesh is not None else build_initial_mesh(problem.shape)
    for it in range(problem.max_refinements + 1):
        space = FunctionSpace(mesh, problem.family, problem.bc)
        if space.ndof > problem.ndof_cap:
            run.status = "ndof_cap"
            run.message = f"Ndof {space.ndof} exceeds the cap {problem.ndof_cap}"
            break
        elapsed = time.perf_counter() - start
        if problem.time_limit is not None and elapsed > problem.time_limit:
            run.status = "time_limit"
            run.message = f"stopped after {elapsed:.1f} s (limit {problem.time_limit:g} s)"
            break
        fields, sreport = picard_solve(space, problem.sources, config=problem.solver)
        report = compute_indicators(space, fields, problem.sources, problem.alpha, problem.mode)
        run.iterations.append(IterationRecord(it, mesh.n_cells, mesh.n_vertices, space.ndof,
                                              report.global_estimator, report.term_sums(), sreport))
        run.space, run.fields, run.report = space, fields, report
        log.info("iter %d: %d cells, ndof %d, estimator %.4e, picard %d",
                 it, mesh.n_cells, space.ndof, report.global_estimator, sreport.picard_iterations)
        if callback is not None:
            callback(it, space, fields, report)
        if not sreport.converged:
            run.status = "picard_failed"
            run.message = (f"Picard iteration did not converge at step {it} "
                           f"(increment {sreport.final_increment:.3e})")
            return run
        if it == problem.max_refinements:
            break
        marked = mark(report)
        if len(marked) == 0:
            run.status = "zero_indicators"
            run.message = "all indicators vanish"
            return run
        mesh = refine(mesh, marked)
    if run.status == "running":
        run.status = "completed"
    return run


def convergence_slope(run, window: int = 8) -> float:
    """Least-squares slope of log(estimator) against log(Ndof) over the last ``window`` steps.

    ``run`` is an :class:`AdaptiveRun` or a pair ``(ndofs, estimators)``.
    """
    if isinstance(run, AdaptiveRun):
        ndof, est = run.ndofs, run.estimators
    else:
        ndof, est = (np.asarray(a, float) for a in run)
    window = int(window)
    if window < 2:
        raise ValueError("window must be at least 2")
    if len(ndof) < window + 1:
        raise ValueError(f"need at least {window + 1} iterations, have {len(ndof)}")
    x = np.log(np.asarray(ndof[-window:], float))
    y = np.log(np.asarray(est[-window:], float))
    return float(np.polyfit(x, y, 1)[0])
