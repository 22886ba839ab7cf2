"""Penalty-homotopy Boolean QP over the relaxed box [0, 1]^n.

The Boolean requirement x in {0,1}^n is handled through the complementarity
penalty phi(x) = x'(1 - x), which is zero exactly at Boolean points.  Each
round minimizes the convex QP with the penalty replaced by its first-order
model rho * (1 - 2*x_hat)' x (the quadratic part of the penalty is dropped so
the subproblem stays convex), takes an Armijo step toward that minimizer and
escalates rho geometrically until the complementarity tolerance is met.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import numpy as np

from .qp import QpProblem, QpSolution, solve_qp

__all__ = [
    "BqpConfig",
    "BqpIterate",
    "BqpResult",
    "penalty_phi",
    "penalty_grad",
    "global_search",
    "local_search",
    "armijo_step",
    "solve_bqp",
]


@dataclass(frozen=True)
class BqpConfig:
    rho0: float = 1.0
    beta: float = 2.0
    eps_comp: float = 1e-10
    max_penalty: float = 2.0 ** 32
    armijo_c1: float = 1e-4
    backtrack_factor: float = 0.5
    min_step: float = 1e-12
    max_outer: int = 64
    qp_tol: float = 1e-10

    def __post_init__(self) -> None:
        if not self.beta > 1.0:
            raise ValueError("beta must be > 1")
        if not self.rho0 > 0:
            raise ValueError("rho0 must be > 0")
        if not self.eps_comp > 0:
            raise ValueError("eps_comp must be > 0")


@dataclass
class BqpIterate:
    rho: float
    objective: float
    complementarity: float
    step_length: float
    qp_iterations: int


@dataclass
class BqpResult:
    x_star: np.ndarray
    trace: list[BqpIterate]
    status: str  # "success" | "complementarity_not_met" | qp failure status
    complementarity: float
    objective: float


def penalty_phi(x: np.ndarray) -> float:
    """Complementarity measure sum_i x_i (1 - x_i)."""
    x = np.asarray(x, dtype=float)
    return float(x @ (1.0 - x))


def penalty_grad(x: np.ndarray) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(x, dtype=float)


def _boxed(qp: QpProblem) -> QpProblem:
    return replace(qp, lower=np.zeros(qp.n), upper=np.ones(qp.n))


def global_search(qp: QpProblem, tol: float = 1e-10) -> QpSolution:
    """Minimize the plain QP over the box, complementarity ignored."""
    return solve_qp(_boxed(qp), tol=tol)


def local_search(qp: QpProblem, x_hat: np.ndarray, rho: float, tol: float = 1e-10) -> QpSolution:
    """Minimize the QP with the linearized penalty folded into the linear term."""
    tilted = replace(
        _boxed(qp), g=qp.g + rho * penalty_grad(x_hat)
    )
    return solve_qp(tilted, tol=tol)


def _merit(qp: QpProblem, x: np.ndarray, rho: float) -> float:
    return qp.objective(x) + rho * penalty_phi(x)


def _merit_grad(qp: QpProblem, x: np.ndarray, rho: float) -> np.ndarray:
    return qp.Q @ x + qp.g + rho * penalty_grad(x)


def armijo_step(qp: QpProblem, x_hat: np.ndarray, x_tilde: np.ndarray, rho: float, cfg: BqpConfig) -> float:
    """Largest halved step satisfying the Armijo decrease on the exact merit.

    Falls back to cfg.min_step when the direction is non-descent or the
    backtracking exhausts.
    """
    d = x_tilde - x_hat
    slope = float(_merit_grad(qp, x_hat, rho) @ d)
    # A zero slope still admits progress when the merit is concave along d
    # (penalty saddle); fall back to plain decrease instead of giving up.
    slope = min(slope, 0.0)
    base = _merit(qp, x_hat, rho)
    alpha = 1.0
    while alpha >= cfg.min_step:
        if _merit(qp, x_hat + alpha * d, rho) <= base + cfg.armijo_c1 * alpha * slope:
            return alpha
        alpha *= cfg.backtrack_factor
    return cfg.min_step


def _snap_boolean(qp: QpProblem, x: np.ndarray, feas_tol: float = 1e-8) -> np.ndarray:
    """Round near-Boolean coordinates exactly onto {0,1} when the general
    inequality rows stay satisfied; mirrors the exact-bound activity an
    active-set solver would report."""
    snapped = np.round(x)
    if np.max(np.abs(snapped - x), initial=0.0) > 1e-6:
        return x
    if qp.m and np.any(qp.A @ snapped - qp.u > feas_tol):
        return x
    return snapped


def solve_bqp(qp: QpProblem, cfg: BqpConfig | None = None) -> BqpResult:
    """Run the full penalty homotopy; the global search executes exactly once.

    Termination checks |phi| after the line-search update; a stalled line
    search still escalates rho so the homotopy cannot deadlock.
    """
    if cfg is None:
        cfg = BqpConfig()
    boxed = _boxed(qp)
    sol = global_search(qp, tol=cfg.qp_tol)
    if sol.status != "optimal":
        return BqpResult(sol.x_star, [], sol.status, penalty_phi(sol.x_star), boxed.objective(sol.x_star))
    x_hat = sol.x_star
    rho = cfg.rho0
    trace: list[BqpIterate] = []
    status = "complementarity_not_met"

    if penalty_phi(x_hat) <= cfg.eps_comp:
        x_hat = _snap_boolean(boxed, x_hat)
        return BqpResult(x_hat, trace, "success", penalty_phi(x_hat), boxed.objective(x_hat))

    for _ in range(cfg.max_outer):
        # The tilted linear term grows like rho, so the subproblem tolerance
        # scales with it; the achieved x-space accuracy stays ~qp_tol.
        sol = local_search(qp, x_hat, rho, tol=cfg.qp_tol * max(1.0, rho))
        if sol.status != "optimal":
            status = sol.status
            break
        x_tilde = sol.x_star
        # At the penalty saddle (coordinates exactly 1/2 with zero penalty
        # gradient) apply a deterministic tie-break on the linear term.
        stuck = (np.abs(x_tilde - 0.5) <= 1e-9) & (np.abs(x_hat - 0.5) <= 1e-9)
        if np.any(stuck):
            perturbed = replace(
                boxed, g=qp.g + rho * penalty_grad(x_hat) + 1e-7 * stuck
            )
            sol = solve_qp(perturbed, tol=cfg.qp_tol)
            if sol.status == "optimal":
                x_tilde = sol.x_star
        alpha = armijo_step(qp, x_hat, x_tilde, rho, cfg)
        x_hat = x_hat + alpha * (x_tilde - x_hat)
        comp = penalty_phi(x_hat)
        trace.append(
            BqpIterate(rho, boxed.objective(x_hat), comp, alpha, sol.iterations)
        )
        if comp <= cfg.eps_comp:
            status = "success"
            break
        if rho * cfg.beta > cfg.max_penalty:
            status = "complementarity_not_met"
            break
        rho *= cfg.beta

    if status in ("success", "complementarity_not_met"):
        snapped = _snap_boolean(boxed, x_hat)
        if penalty_phi(snapped) <= cfg.eps_comp:
            x_hat = snapped
            status = "success"
    return BqpResult(x_hat, trace, status, penalty_phi(x_hat), boxed.objective(x_hat))
