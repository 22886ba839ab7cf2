"""Log-barrier interior-point solver for smooth inequality-constrained NLPs.

Problem form: min f(z)  s.t.  c(z) <= 0 (m general constraints), lo <= z <= up.
The barrier subproblems are minimized by Newton's method with Armijo
backtracking; an eigenvalue shift keeps the Newton system positive definite
so descent also holds for nonconvex penalized instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable
import numpy as np
import scipy.linalg

__all__ = [
    "NlpProblem",
    "NlpSolution",
    "InfeasibleProblemError",
    "find_strictly_feasible",
    "solve_barrier",
]

HESSIAN_EIG_FLOOR = 1e-8
MIN_STEP = 1e-14
ARMIJO_C1 = 1e-4


class InfeasibleProblemError(RuntimeError):
    """No strictly feasible point was found; carries the worst constraint."""

    def __init__(self, message: str, constraint_index: int | None = None, violation: float | None = None):
        super().__init__(message)
        self.constraint_index = constraint_index
        self.violation = violation


@dataclass
class NlpProblem:
    """Callback bundle for one NLP instance.

    constraints_hess(z, w) must return sum_i w_i * hess(c_i)(z); it may be
    None when all constraints are affine.
    """

    n: int
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    m: int = 0
    constraints: Callable[[np.ndarray], np.ndarray] | None = None
    constraints_jac: Callable[[np.ndarray], np.ndarray] | None = None
    constraints_hess: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.n,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.n,)).copy()
        if self.m > 0 and (self.constraints is None or self.constraints_jac is None):
            raise ValueError("m > 0 requires constraint value and Jacobian callbacks")

    def cons(self, z: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return np.zeros(0)
        return np.atleast_1d(np.asarray(self.constraints(z), dtype=float))


@dataclass
class NlpSolution:
    z_star: np.ndarray
    duals: np.ndarray
    status: str  # "optimal" | "stalled" | "max_iter"
    iterations: int
    mu_final: float
    kkt_residual: float


def _interior_midpoint(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    both = np.isfinite(lower) & np.isfinite(upper)
    z = np.where(both, 0.5 * (lower + upper), 0.0)
    z = np.where(~both & np.isfinite(lower), lower + 1.0, z)
    z = np.where(~both & np.isfinite(upper), upper - 1.0, z)
    return z


def _strictly_inside(prob: NlpProblem, z: np.ndarray, margin: float = 0.0) -> bool:
    lo_fin = np.isfinite(prob.lower)
    up_fin = np.isfinite(prob.upper)
    if np.any(z[lo_fin] <= prob.lower[lo_fin] + margin):
        return False
    if np.any(z[up_fin] >= prob.upper[up_fin] - margin):
        return False
    if prob.m and np.any(prob.cons(z) >= -margin):
        return False
    return True


def find_strictly_feasible(prob: NlpProblem, z0: np.ndarray | None = None) -> np.ndarray:
    """Return a strictly feasible point, or raise InfeasibleProblemError.

    A supplied z0 is used when it is already strictly feasible.  Otherwise a
    phase-1 slack minimization (min s s.t. c_i(z) - s <= 0) runs from the box
    midpoint, which is strictly feasible for the augmented problem by
    construction.
    """
    if z0 is not None:
        z0 = np.asarray(z0, dtype=float)
        if _strictly_inside(prob, z0):
            return z0
    mid = _interior_midpoint(prob.lower, prob.upper)
    if prob.m == 0:
        return mid
    if _strictly_inside(prob, mid):
        return mid

    n = prob.n

    def aug_obj(y):
        return float(y[n])

    def aug_grad(y):
        g = np.zeros(n + 1)
        g[n] = 1.0
        return g

    def aug_hess(y):
        return np.zeros((n + 1, n + 1))

    def aug_cons(y):
        return prob.cons(y[:n]) - y[n]

    def aug_jac(y):
        J = np.zeros((prob.m, n + 1))
        J[:, :n] = np.asarray(prob.constraints_jac(y[:n]), dtype=float).reshape(prob.m, n)
        J[:, n] = -1.0
        return J

    def aug_chess(y, w):
        H = np.zeros((n + 1, n + 1))
        if prob.constraints_hess is not None:
            H[:n, :n] = prob.constraints_hess(y[:n], w)
        return H

    s0 = float(np.max(prob.cons(mid))) + 1.0
    aug = NlpProblem(
        n=n + 1,
        objective=aug_obj,
        gradient=aug_grad,
        hessian=aug_hess,
        lower=np.concatenate((prob.lower, [-np.inf])),
        upper=np.concatenate((prob.upper, [np.inf])),
        m=prob.m,
        constraints=aug_cons,
        constraints_jac=aug_jac,
        constraints_hess=aug_chess,
    )
    sol = solve_barrier(aug, tol=1e-8, z0=np.concatenate((mid, [s0])))
    z, s = sol.z_star[:n], float(sol.z_star[prob.n])
    if s < -1e-10 and _strictly_inside(prob, z):
        return z
    values = prob.cons(z)
    worst = int(np.argmax(values))
    raise InfeasibleProblemError(
        f"no strictly feasible point: constraint {worst} violated by {values[worst]:.3e}",
        constraint_index=worst,
        violation=float(values[worst]),
    )


def _barrier_terms(prob: NlpProblem, z: np.ndarray, mu: float):
    """Value, gradient and Hessian contributions of all barrier terms, or None
    when z is outside the open feasible region."""
    lo_gap = z - prob.lower
    up_gap = prob.upper - z
    lo_fin = np.isfinite(prob.lower)
    up_fin = np.isfinite(prob.upper)
    if np.any(lo_gap[lo_fin] <= 0) or np.any(up_gap[up_fin] <= 0):
        return None
    value = 0.0
    grad = np.zeros(prob.n)
    hess_diag = np.zeros(prob.n)
    if np.any(lo_fin):
        value -= mu * float(np.sum(np.log(lo_gap[lo_fin])))
        grad[lo_fin] -= mu / lo_gap[lo_fin]
        hess_diag[lo_fin] += mu / lo_gap[lo_fin] ** 2
    if np.any(up_fin):
        value -= mu * float(np.sum(np.log(up_gap[up_fin])))
        grad[up_fin] += mu / up_gap[up_fin]
        hess_diag[up_fin] += mu / up_gap[up_fin] ** 2
    slack = None
    if prob.m:
        slack = -prob.cons(z)
        if np.any(slack <= 0):
            return None
        value -= mu * float(np.sum(np.log(slack)))
    return value, grad, hess_diag, slack


def _barrier_value(prob: NlpProblem, z: np.ndarray, mu: float) -> float:
    terms = _barrier_terms(prob, z, mu)
    if terms is None:
        return np.inf
    return prob.objective(z) + terms[0]


def _shift_to_pd(H: np.ndarray, floor: float = HESSIAN_EIG_FLOOR):
    """Factorization of H + tau*I with tau chosen so min eigenvalue >= floor."""
    n = H.shape[0]
    eye = np.eye(n)
    try:
        return scipy.linalg.cho_factor(H + floor * eye, lower=True)
    except scipy.linalg.LinAlgError:
        pass
    min_eig = float(scipy.linalg.eigvalsh(H, subset_by_index=(0, 0))[0])
    # Start from the exact shift; grow geometrically when rounding at the
    # scale of ||H|| still leaves the factorization indefinite.
    tau = max(floor - min_eig, floor)
    for _ in range(60):
        try:
            return scipy.linalg.cho_factor(H + tau * eye, lower=True)
        except scipy.linalg.LinAlgError:
            tau = 10.0 * tau + floor
    raise scipy.linalg.LinAlgError("could not regularize the Newton system")


def solve_barrier(
    prob: NlpProblem,
    tol: float = 1e-8,
    mu0: float = 1.0,
    mu_factor: float = 10.0,
    z0: np.ndarray | None = None,
    max_newton_per_mu: int = 200,
) -> NlpSolution:
    """Outer barrier loop shrinking mu down to tol/10, inner damped Newton.

    Duals are recovered as mu/slack at the final iterate; the accepted inner
    steps are monotone in the barrier objective by the Armijo rule.
    """
    z = np.asarray(
        find_strictly_feasible(prob, z0) if z0 is None or not _strictly_inside(prob, np.asarray(z0, float)) else z0,
        dtype=float,
    ).copy()
    mu = float(mu0)
    mu_min = tol * 0.1
    total_iters = 0
    status = "optimal"

    while True:
        converged_inner = False
        for _ in range(max_newton_per_mu):
            terms = _barrier_terms(prob, z, mu)
            if terms is None:
                raise RuntimeError("barrier iterate left the feasible interior")
            _, bgrad, bhess_diag, slack = terms
            grad = prob.gradient(z) + bgrad
            if prob.m:
                J = np.asarray(prob.constraints_jac(z), dtype=float).reshape(prob.m, prob.n)
                grad = grad + J.T @ (mu / slack)
            if np.max(np.abs(grad)) <= max(mu, tol):
                converged_inner = True
                break
            H = prob.hessian(z) + np.diag(bhess_diag)
            if prob.m:
                H = H + (J.T * (mu / slack ** 2)) @ J
                if prob.constraints_hess is not None:
                    H = H + prob.constraints_hess(z, mu / slack)
            cf = _shift_to_pd(0.5 * (H + H.T))
            step = scipy.linalg.cho_solve(cf, -grad)
            base = prob.objective(z) + terms[0]
            slope = float(grad @ step)
            alpha = 1.0
            accepted = False
            while alpha >= MIN_STEP:
                trial = z + alpha * step
                if _barrier_value(prob, trial, mu) <= base + ARMIJO_C1 * alpha * slope:
                    z = trial
                    accepted = True
                    break
                alpha *= 0.5
            total_iters += 1
            if not accepted:
                status = "stalled"
                break
            if alpha * float(np.max(np.abs(step))) <= 1e-15 * (1.0 + float(np.max(np.abs(z)))):
                # The update is below representable resolution; further Newton
                # iterations cannot move the iterate.
                converged_inner = True
                break
        if status == "stalled":
            break
        if not converged_inner:
            status = "max_iter"
            break
        if mu <= mu_min:
            break
        mu = max(mu / mu_factor, mu_min)

    if prob.m:
        slack = -prob.cons(z)
        duals = mu / np.maximum(slack, np.finfo(float).tiny)
    else:
        duals = np.zeros(0)
    kkt = _kkt_residual(prob, z, duals, mu)
    return NlpSolution(z, duals, status, total_iters, mu, kkt)


def _kkt_residual(prob: NlpProblem, z: np.ndarray, duals: np.ndarray, mu: float) -> float:
    """Stationarity of the original problem with barrier-recovered bound duals."""
    grad = prob.gradient(z)
    if prob.m:
        J = np.asarray(prob.constraints_jac(z), dtype=float).reshape(prob.m, prob.n)
        grad = grad + J.T @ duals
    lo_fin = np.isfinite(prob.lower)
    up_fin = np.isfinite(prob.upper)
    nu_lo = np.where(lo_fin, mu / np.maximum(z - prob.lower, np.finfo(float).tiny), 0.0)
    nu_up = np.where(up_fin, mu / np.maximum(prob.upper - z, np.finfo(float).tiny), 0.0)
    res = float(np.max(np.abs(grad - nu_lo + nu_up), initial=0.0))
    if prob.m:
        res = max(res, float(np.max(prob.cons(z), initial=0.0)))
    return res
