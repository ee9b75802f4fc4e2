"""Independent reference implementations used as test oracles."""

import numpy as np
import pytest


def dense_incidence_t(g):
    """Row e of D^T: +1 at the smaller endpoint, -1 at the larger one."""
    mat = np.zeros((g.p, g.n))
    for e, (u, v) in enumerate(g.edges):
        mat[e, min(u, v)] = 1.0
        mat[e, max(u, v)] = -1.0
    return mat


def dense_rho(g):
    pinv = np.linalg.pinv(dense_incidence_t(g))
    return float(np.linalg.norm(pinv, axis=0).max())


def tv1d_taut_string(y, lam):
    """Exact minimizer of 0.5||y - x||^2 + lam * sum |x_{k+1} - x_k|.

    Condat's direct algorithm (taut string in the primal-dual form), O(n) in
    practice and exact up to rounding.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    x = np.empty(n)
    k = k0 = kplus = kminus = 0
    umin, umax = lam, -lam
    vmin, vmax = y[0] - lam, y[0] + lam
    while True:
        while k == n - 1:
            if umin < 0.0:
                x[k0:kminus + 1] = vmin
                k0 = kminus + 1
                k = kminus = k0
                vmin = y[k]
                umin = lam
                umax = vmin + umin - vmax
            elif umax > 0.0:
                x[k0:kplus + 1] = vmax
                k0 = kplus + 1
                k = kplus = k0
                vmax = y[k]
                umax = -lam
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                x[k0:k + 1] = vmin
                return x
        umin += y[k + 1] - vmin
        umax += y[k + 1] - vmax
        if umin < -lam:
            x[k0:kminus + 1] = vmin
            k0 = kminus + 1
            k = kplus = kminus = k0
            vmin = y[k]
            vmax = vmin + 2 * lam
            umin, umax = lam, -lam
        elif umax > lam:
            x[k0:kplus + 1] = vmax
            k0 = kplus + 1
            k = kplus = kminus = k0
            vmax = y[k]
            vmin = vmax - 2 * lam
            umin, umax = lam, -lam
        else:
            k += 1
            if umin >= lam:
                kminus = k
                vmin += (umin - lam) / (kminus - k0 + 1)
                umin = lam
            if umax <= -lam:
                kplus = k
                vmax += (umax + lam) / (kplus - k0 + 1)
                umax = -lam


def cvx_sorted_l1(z, lambdas):
    """Sorted-l1 norm as a cvxpy expression: sum_k (l_k - l_{k+1}) * top-k sum of |z|."""
    import cvxpy as cp

    lam = np.asarray(lambdas, dtype=float)
    steps = lam - np.append(lam[1:], 0.0)
    terms = [steps[k] * cp.sum_largest(cp.abs(z), k + 1) for k in range(len(lam)) if steps[k] > 0]
    return sum(terms) if terms else 0


def cvx_prox_slope(u, lambdas, t):
    import cvxpy as cp

    z = cp.Variable(len(u))
    prob = cp.Problem(cp.Minimize(0.5 * cp.sum_squares(u - z) + t * cvx_sorted_l1(z, lambdas)))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return np.asarray(z.value)


def random_weights(rng, p, zeros=True):
    lam = np.sort(rng.exponential(size=p))[::-1]
    if zeros and p > 1 and rng.random() < 0.3:
        lam[rng.integers(1, p):] = 0.0
    return lam


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# (criterion, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")
