"""Primal-dual interior-point driver (FastAST) with Newton and L-BFGS directions.

Each iteration takes a damped step on the barrier problem ``min h_t(u)``,
recovers the primal point ``mu = (v, x, u)`` and dual point
``lambda = (tau, 2(x - y), tau w)``, tightens the lower bound whenever the
dual point passes the sampled membership oracle, and raises ``t`` so that the
next target gap is ``eta / gamma``.
"""

import enum
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg

from . import cones, toeplitz
from .cones import DualPoint, PrimalPoint
from .objective import ObjectiveContext, ast_weight

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    GAP_ABS = "gap_abs"
    GAP_REL = "gap_rel"
    MAX_ITERS = "max_iters"
    LINE_SEARCH_STALL = "line_search_stall"
    HESSIAN_FAILURE = "hessian_failure"

    @property
    def converged(self):
        return self in (Status.GAP_ABS, Status.GAP_REL)


class NotSolvable(ValueError):
    pass


class InitializationError(RuntimeError):
    pass


class IndefiniteHessian(RuntimeError):
    pass


@dataclass
class SolverConfig:
    variant: str = "lbfgs"
    memory: Optional[int] = None  # None means 2N-1
    armijo: float = 0.05
    gamma: float = 2.0
    eps_abs: float = 1e-4
    eps_rel: float = 1e-4
    max_iters: int = 1000
    backtrack_factor: float = 0.5
    max_backtracks: int = 60
    dual_tol: float = cones.DEFAULT_TOL
    grid_size: Optional[int] = None
    max_doublings: int = 64

    def __post_init__(self):
        if self.variant not in ("newton", "lbfgs"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 0 < self.armijo < 1:
            raise ValueError("armijo constant must lie in (0, 1)")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.eps_abs < 0 or self.eps_rel < 0:
            raise ValueError("tolerances must be non-negative")
        if self.max_iters < 1 or self.max_backtracks < 1:
            raise ValueError("iteration limits must be positive")
        if self.memory is not None and self.memory < 0:
            raise ValueError("memory must be non-negative")

    @classmethod
    def newton(cls, **overrides):
        params = dict(variant="newton", gamma=10.0, eps_abs=1e-7, eps_rel=1e-7, max_iters=200)
        params.update(overrides)
        return cls(**params)

    @classmethod
    def lbfgs(cls, **overrides):
        params = dict(variant="lbfgs", gamma=2.0, eps_abs=1e-4, eps_rel=1e-4, max_iters=1000)
        params.update(overrides)
        return cls(**params)

    @classmethod
    def for_variant(cls, variant, **overrides):
        return cls.newton(**overrides) if variant == "newton" else cls.lbfgs(**overrides)


@dataclass
class IterationRecord:
    iteration: int
    f_obj: float
    gap: float
    f_lb: float
    t: float
    step_alpha: float
    dual_feasible: bool
    wall_time: float


@dataclass
class SolverResult:
    primal: PrimalPoint
    dual: DualPoint
    f_obj: float
    f_lb: float
    gap: float
    status: Status
    iterations: int
    t: float
    trace: List[IterationRecord] = field(default_factory=list)

    @property
    def x(self):
        return self.primal.x


@dataclass
class LineSearchResult:
    alpha: float
    point: object  # ObjectivePoint at the accepted u
    stalled: bool = False
    backtracks: int = 0


def check_solvable(tau, w, grid_size=None):
    """The objective is bounded below on ``K`` iff ``tau = 0`` or ``tau > 0`` and ``w`` in ``C*``."""
    if tau == 0:
        return True
    if tau < 0:
        return False
    return cones.in_dual_autocorr(w, grid_size=grid_size)


def primal_objective(mu, y, tau, w):
    r = mu.x - y
    return float(np.real(np.vdot(r, r)) + tau * (mu.v + w @ mu.u))


def dual_objective(lam, y):
    return float(-0.25 * np.real(np.vdot(lam.s, lam.s)) - np.real(np.vdot(y, lam.s)))


def recover_primal(point, t):
    """Central-path primal point for the ``u`` of ``point`` at barrier parameter ``t``.

    ``t = inf`` gives the boundary point with the smallest feasible ``v``.
    """
    tau = point.ctx.tau
    x = toeplitz.matvec(point.u, point.phi)
    # x^H T^{-1} x = phi^H T phi = phi^H x
    quad = float(np.real(np.vdot(point.phi, x)))
    v = quad + (1.0 / (tau * t) if np.isfinite(t) else 0.0)
    return PrimalPoint(v=v, x=x, u=point.u)


def recover_dual(x, y, tau, w):
    return DualPoint(rho=tau, s=2.0 * (x - y), z=tau * np.asarray(w, dtype=float))


def update_barrier(t, eta, gamma, n):
    if not eta > 0:
        return t
    return max(t, gamma * (n + 1) / eta)


def newton_direction(point, t):
    H = point.hessian_full(t)
    grad = point.gradient(t)
    try:
        factor = scipy.linalg.cho_factor(H)
    except np.linalg.LinAlgError as exc:
        raise IndefiniteHessian(f"Hessian is not numerically positive definite at t={t:.3g}") from exc
    return -scipy.linalg.cho_solve(factor, grad)


def lbfgs_direction(history, grad, t, hdiag):
    """Two-loop recursion with curvature pairs ``psi_k = q_k + Q_k / t`` rebuilt at the current ``t``.

    ``history`` holds ``(r_k, q_k, Q_k)`` oldest first. Pairs whose curvature
    ``r_k^T psi_k`` is not positive are skipped for this call only.
    """
    d = -np.asarray(grad, dtype=float)
    pairs = []
    for r, q, Q in history:
        psi = q + Q / t
        curv = r @ psi
        if curv > 0:
            pairs.append((r, psi, curv))
    sigmas = []
    for r, psi, curv in reversed(pairs):
        sigma = (r @ d) / curv
        d -= sigma * psi
        sigmas.append(sigma)
    d /= hdiag
    for (r, psi, curv), sigma in zip(pairs, reversed(sigmas)):
        beta = (psi @ d) / curv
        d += r * (sigma - beta)
    return d


def line_search(ctx, point, du, t, armijo=0.05, factor=0.5, max_backtracks=60, want_cholesky=False):
    """Backtracking from ``alpha = 1`` until the trial is in ``int C`` and satisfies Armijo."""
    if not np.any(du):
        return LineSearchResult(alpha=1.0, point=point)
    h0 = point.h(t)
    slope = float(du @ point.gradient(t))
    alpha = 1.0
    for k in range(max_backtracks + 1):
        trial = ctx.try_at(point.u + alpha * du, want_cholesky)
        if trial is not None and trial.h(t) <= h0 + armijo * alpha * slope:
            return LineSearchResult(alpha=alpha, point=trial, backtracks=k)
        alpha *= factor
    return LineSearchResult(alpha=alpha / factor, point=point, stalled=True, backtracks=max_backtracks)


NEWTON_ZONE = 0.25  # scaled Newton decrement t * |du^T grad| below which full steps are tried first


def gradient_residual(point, t):
    """``||grad h_t||`` relative to ``max(1, ||tau w||, ||tau T*(phi phi^H)||, ||grad G|| / t)``."""
    tau = point.ctx.tau
    scale = max(1.0, np.linalg.norm(tau * point.ctx.w), np.linalg.norm(point.grad_g - tau * point.ctx.w),
                np.linalg.norm(point.grad_G) / t)
    return float(np.linalg.norm(point.gradient(t)) / scale)


def center(ctx, u, t, tol=1e-10, max_iters=100):
    """Minimize ``h_t`` at fixed ``t`` by damped Newton steps, starting from ``u`` in ``int C``.

    Stops when ``||grad h_t||`` falls below ``tol`` times the size of the terms
    that cancel in it (see :func:`gradient_residual`), or when no step makes
    progress. Returns the final :class:`~fastast.objective.ObjectivePoint`.
    """
    point = ctx.at(u, want_cholesky=True)
    for _ in range(max_iters):
        grad = point.gradient(t)
        if gradient_residual(point, t) <= tol:
            return point
        du = newton_direction(point, t)
        # Close to the minimizer the Armijo test is swamped by rounding in h_t, so
        # pure Newton steps are taken while they keep reducing the gradient.
        if -t * (du @ grad) < NEWTON_ZONE:
            trial = ctx.try_at(point.u + du, want_cholesky=True)
            if trial is not None and np.linalg.norm(trial.gradient(t)) < np.linalg.norm(grad):
                point = trial
                continue
        ls = line_search(ctx, point, du, t, want_cholesky=True)
        if ls.stalled or ls.alpha < 1e-12:
            break
        point = ls.point
    log.info("centering at t=%.3g stopped at relative gradient residual %.3g", t, gradient_residual(point, t))
    return point


@dataclass
class Initialization:
    point: object
    t: float
    primal: PrimalPoint
    dual: DualPoint
    doublings: int


def initialize(ctx, gamma, max_doublings=64, dual_tol=cones.DEFAULT_TOL, grid_size=None, want_cholesky=False):
    """Find ``u_0`` whose recovered dual point lies in ``K*``, and the first barrier parameter."""
    n = ctx.n
    if not cones.spectrum_min(ctx.w, grid_size) > 0:
        raise NotSolvable("initialization needs w in the interior of C*")
    u = np.zeros(2 * n - 1)
    energy = float(np.real(np.vdot(ctx.y, ctx.y)))
    u[0] = 10.0 * energy / n if energy > 0 else 1.0
    for k in range(max_doublings + 1):
        point = ctx.at(u, want_cholesky)
        mu = recover_primal(point, np.inf)
        lam = recover_dual(mu.x, ctx.y, ctx.tau, ctx.w)
        if cones.in_dual_cone(lam, dual_tol, grid_size):
            eta = cones.inner(lam, mu)
            if not eta > 0:
                raise InitializationError(f"non-positive initial gap {eta:.3g}")
            t = gamma * (n + 1) / eta
            return Initialization(point=point, t=t, primal=recover_primal(point, t), dual=lam, doublings=k)
        u = u.copy()
        u[0] *= 2.0
    raise InitializationError(f"no dual feasible point after {max_doublings} doublings")


def solve(y, tau, w=None, config=None, callback: Optional[Callable] = None):
    """Solve the AST conic program for observation ``y``.

    ``callback(record, primal, dual)`` is invoked after every iteration.
    """
    y = np.asarray(y, dtype=complex)
    n = y.size
    w = ast_weight(n) if w is None else np.asarray(w, dtype=float)
    config = SolverConfig() if config is None else config
    if not tau > 0 or not check_solvable(tau, w, config.grid_size):
        raise NotSolvable(f"problem is unbounded below for tau={tau} and the given w")

    newton = config.variant == "newton"
    memory = 2 * n - 1 if config.memory is None else config.memory
    ctx = ObjectiveContext(y, tau, w)
    start = time.perf_counter()

    init = initialize(ctx, config.gamma, config.max_doublings, config.dual_tol, config.grid_size, newton)
    point, t = init.point, init.t
    f_lb = dual_objective(init.dual, y)
    mu, lam = init.primal, init.dual
    f_obj = primal_objective(mu, y, tau, w)
    gap = f_obj - f_lb
    history = deque(maxlen=max(memory, 0)) if memory > 0 else deque(maxlen=0)
    trace = []
    status = Status.MAX_ITERS
    iteration = 0

    for iteration in range(1, config.max_iters + 1):
        grad = point.gradient(t)
        if newton:
            try:
                du = newton_direction(point, t)
            except IndefiniteHessian as exc:
                log.warning("%s", exc)
                status = Status.HESSIAN_FAILURE
                iteration -= 1
                break
        else:
            hdiag = point.hessian_diag_approx(t)
            du = lbfgs_direction(history, grad, t, hdiag)
            if not du @ grad < 0:
                log.debug("iteration %d: L-BFGS direction is not descent; resetting memory", iteration)
                history.clear()
                du = -grad / hdiag

        ls = line_search(ctx, point, du, t, config.armijo, config.backtrack_factor,
                         config.max_backtracks, newton)
        if ls.stalled and history:
            log.debug("iteration %d: line search stalled; retrying with empty memory", iteration)
            history.clear()
            du = -grad / point.hessian_diag_approx(t)
            ls = line_search(ctx, point, du, t, config.armijo, config.backtrack_factor,
                             config.max_backtracks, newton)
        if ls.stalled:
            status = Status.LINE_SEARCH_STALL
            iteration -= 1
            break

        new = ls.point
        if not newton and history.maxlen:
            history.append((new.u - point.u, new.grad_g - point.grad_g, new.grad_G - point.grad_G))
        point = new

        mu = recover_primal(point, t)
        lam = recover_dual(mu.x, y, tau, w)
        feasible = cones.in_dual_cone(lam, config.dual_tol, config.grid_size)
        if feasible:
            f_lb = max(f_lb, dual_objective(lam, y))
        f_obj = primal_objective(mu, y, tau, w)
        gap = f_obj - f_lb
        record = IterationRecord(iteration=iteration, f_obj=f_obj, gap=gap, f_lb=f_lb, t=t,
                                 step_alpha=ls.alpha, dual_feasible=feasible,
                                 wall_time=time.perf_counter() - start)
        trace.append(record)
        if callback is not None:
            callback(record, mu, lam)

        if gap < config.eps_abs:
            status = Status.GAP_ABS
            break
        if f_obj > 0 and gap / f_obj < config.eps_rel:
            status = Status.GAP_REL
            break
        t = update_barrier(t, gap, config.gamma, n)

    return SolverResult(primal=mu, dual=lam, f_obj=f_obj, f_lb=f_lb, gap=gap, status=status,
                        iterations=iteration, t=t, trace=trace)
