import numpy as np
import pytest

from adsbqp.nlp import (
    InfeasibleProblemError,
    NlpProblem,
    find_strictly_feasible,
    solve_barrier,
)
from adsbqp.qp import QpProblem, solve_qp


def linear_objective_problem():
    # min z s.t. z >= 1 inside [-10, 10]: optimum at the constraint.
    return NlpProblem(
        n=1,
        objective=lambda z: float(z[0]),
        gradient=lambda z: np.array([1.0]),
        hessian=lambda z: np.zeros((1, 1)),
        lower=np.array([-10.0]),
        upper=np.array([10.0]),
        m=1,
        constraints=lambda z: np.array([1.0 - z[0]]),
        constraints_jac=lambda z: np.array([[-1.0]]),
        constraints_hess=None,
    )


def test_active_constraint_and_dual_recovery():
    sol = solve_barrier(linear_objective_problem())
    assert sol.status == "optimal"
    assert sol.z_star[0] == pytest.approx(1.0, abs=1e-6)
    assert sol.duals[0] == pytest.approx(1.0, rel=1e-5)


def test_box_only_problem_minimizes_inside():
    nlp = NlpProblem(
        n=2,
        objective=lambda z: float((z[0] - 0.3) ** 2 + (z[1] + 2.0) ** 2),
        gradient=lambda z: np.array([2.0 * (z[0] - 0.3), 2.0 * (z[1] + 2.0)]),
        hessian=lambda z: 2.0 * np.eye(2),
        lower=np.zeros(2),
        upper=np.ones(2),
    )
    sol = solve_barrier(nlp)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.z_star, [0.3, 0.0], atol=1e-6)


def test_agrees_with_qp_solver_on_a_convex_qp():
    rng = np.random.default_rng(1)
    n = 4
    B = rng.normal(size=(n, n)) / np.sqrt(n)
    Q = B @ B.T + np.eye(n)
    g = rng.normal(size=n)
    qp = QpProblem(Q=Q, g=g, A=np.zeros((0, n)), u=np.zeros(0), lower=0.0, upper=1.0)
    ref = solve_qp(qp)
    nlp = NlpProblem(
        n=n,
        objective=lambda z: float(0.5 * z @ Q @ z + g @ z),
        gradient=lambda z: Q @ z + g,
        hessian=lambda z: Q,
        lower=np.zeros(n),
        upper=np.ones(n),
    )
    sol = solve_barrier(nlp)
    assert sol.status == "optimal"
    assert qp.objective(sol.z_star) == pytest.approx(qp.objective(ref.x_star), abs=1e-7)


def test_nonconvex_objective_is_handled_by_the_eigenvalue_shift():
    # Concave objective over the box: minima sit at the box corners.
    nlp = NlpProblem(
        n=2,
        objective=lambda z: float(-(z - 0.4) @ (z - 0.4)),
        gradient=lambda z: -2.0 * (z - 0.4),
        hessian=lambda z: -2.0 * np.eye(2),
        lower=np.zeros(2),
        upper=np.ones(2),
    )
    sol = solve_barrier(nlp, z0=np.array([0.7, 0.2]))
    assert sol.status == "optimal"
    # Global corner: both coordinates at 1 (distance 0.6 from 0.4 beats 0.4).
    np.testing.assert_allclose(sol.z_star, [1.0, 1.0], atol=1e-6)


def test_find_strictly_feasible_prefers_given_point():
    nlp = linear_objective_problem()
    z0 = np.array([3.0])
    np.testing.assert_array_equal(find_strictly_feasible(nlp, z0), z0)


def test_find_strictly_feasible_phase_one_search():
    # Box midpoint (0) violates z >= 1, so phase 1 has to move.
    nlp = linear_objective_problem()
    z = find_strictly_feasible(nlp)
    assert z[0] > 1.0


def test_find_strictly_feasible_raises_on_empty_interior():
    nlp = NlpProblem(
        n=1,
        objective=lambda z: float(z[0]),
        gradient=lambda z: np.array([1.0]),
        hessian=lambda z: np.zeros((1, 1)),
        lower=np.array([0.0]),
        upper=np.array([1.0]),
        m=1,
        constraints=lambda z: np.array([2.0 - z[0]]),  # needs z >= 2
        constraints_jac=lambda z: np.array([[-1.0]]),
        constraints_hess=None,
    )
    with pytest.raises(InfeasibleProblemError) as err:
        find_strictly_feasible(nlp)
    assert err.value.violation is not None and err.value.violation > 0


def test_constraint_callbacks_are_required_when_m_positive():
    with pytest.raises(ValueError):
        NlpProblem(
            n=1,
            objective=lambda z: 0.0,
            gradient=lambda z: np.zeros(1),
            hessian=lambda z: np.zeros((1, 1)),
            lower=np.zeros(1),
            upper=np.ones(1),
            m=1,
        )


def test_curved_constraint_with_hessian_callback():
    # min x + y s.t. x^2 + y^2 <= 1: optimum at (-1/sqrt2, -1/sqrt2).
    nlp = NlpProblem(
        n=2,
        objective=lambda z: float(z.sum()),
        gradient=lambda z: np.ones(2),
        hessian=lambda z: np.zeros((2, 2)),
        lower=np.full(2, -2.0),
        upper=np.full(2, 2.0),
        m=1,
        constraints=lambda z: np.array([z @ z - 1.0]),
        constraints_jac=lambda z: 2.0 * z[None, :],
        constraints_hess=lambda z, w: 2.0 * w[0] * np.eye(2),
    )
    sol = solve_barrier(nlp, z0=np.zeros(2))
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.z_star, -np.ones(2) / np.sqrt(2.0), atol=1e-5)
