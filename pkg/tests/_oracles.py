"""Slow-but-sure reference implementations used to cross-check the solvers.

Everything here trades speed for being independently verifiable: projected
gradient with Dykstra projections for QPs, central finite differences for
derivatives, and brute-force enumeration for Boolean problems.
"""

import numpy as np


def fd_gradient(f, x, h=1e-6):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def fd_jacobian(g, x, h=1e-6):
    """Central-difference Jacobian of a vector function (rows = outputs)."""
    x = np.asarray(x, dtype=float)
    g0 = np.asarray(g(x), dtype=float)
    J = np.zeros((g0.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        J[:, i] = (np.asarray(g(x + e)) - np.asarray(g(x - e))) / (2.0 * h)
    return J


def dykstra_project(y, C, d, lower, upper, cycles=60):
    """Projection onto {x: Cx <= d, lower <= x <= upper} by Dykstra's method."""
    m = C.shape[0]
    x = np.asarray(y, dtype=float).copy()
    corrections = [np.zeros_like(x) for _ in range(m + 1)]
    for _ in range(cycles):
        for idx in range(m + 1):
            z = x + corrections[idx]
            if idx == 0:
                x_new = np.clip(z, lower, upper)
            else:
                row = C[idx - 1]
                violation = float(row @ z - d[idx - 1])
                if violation > 0.0:
                    x_new = z - (violation / float(row @ row)) * row
                else:
                    x_new = z
            corrections[idx] = z - x_new
            x = x_new
    return x


def projected_gradient_qp(Q, g, C, d, lower, upper, iters=3000, cycles=40):
    """Long-run projected gradient for min 0.5 x'Qx + g'x over the polytope.

    Step size 1/L with L the largest eigenvalue of Q; the projection is
    Dykstra onto the box intersected with the halfspaces.
    """
    Q = np.asarray(Q, dtype=float)
    g = np.asarray(g, dtype=float)
    n = g.size
    C = np.asarray(C, dtype=float).reshape(-1, n)
    d = np.asarray(d, dtype=float).reshape(-1)
    L = float(np.linalg.eigvalsh(Q)[-1])
    step = 1.0 / max(L, 1e-12)
    lo = np.broadcast_to(np.asarray(lower, dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(upper, dtype=float), (n,))
    x = dykstra_project(np.zeros(n), C, d, lo, hi, cycles=cycles)
    for _ in range(iters):
        x = dykstra_project(x - step * (Q @ x + g), C, d, lo, hi, cycles=cycles)
    return x


def enumerate_boolean_qp(Q, g, C, d):
    """Best Boolean point of the QP objective subject to Cx <= d."""
    n = np.asarray(g).size
    best_obj, best_x = np.inf, None
    for mask in range(2 ** n):
        x = np.array([(mask >> i) & 1 for i in range(n)], dtype=float)
        if C.shape[0] and np.any(C @ x - d > 1e-9):
            continue
        obj = float(0.5 * x @ Q @ x + g @ x)
        if obj < best_obj:
            best_obj, best_x = obj, x
    return best_obj, best_x
