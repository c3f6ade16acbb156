"""NumPy implementations of the hot kernel loops.

This module is the fallback used when the compiled ``_ckernels`` extension
is unavailable. Both modules expose the same functions with the same
signatures; ``fracstep.kernels`` picks one at import time.
"""

import numpy as np

# |h/m| below which the b-integral is summed as a series (the closed form
# cancels catastrophically there)
SERIES_SWITCH = 0.5
_SERIES_MAX = 400


def _pow_diff(r1, w, q):
    """(r1 + w)**q - r1**q without cancellation, for r1 > 0, w >= 0."""
    return r1 ** q * np.expm1(q * np.log1p(w / r1))


def b_integral(r1, w, beta):
    """int_{r1}^{r1+w} r^(-beta) (m - r) dr with m the interval midpoint."""
    r1 = np.asarray(r1, dtype=float)
    w = np.asarray(w, dtype=float)
    r1, w = np.broadcast_arrays(r1, w)
    out = np.empty(r1.shape)
    m = r1 + 0.5 * w
    x = 0.5 * w / m
    series = x <= SERIES_SWITCH
    closed = ~series
    if np.any(closed):
        rc, wc, mc = r1[closed], w[closed], m[closed]
        out[closed] = (mc * _pow_diff(rc, wc, 1.0 - beta) / (1.0 - beta)
                       - _pow_diff(rc, wc, 2.0 - beta) / (2.0 - beta))
    if np.any(series):
        xs, ms = x[series], m[series]
        x2 = xs * xs
        # odd j: binom(-beta, j) x^(j+2) / (j+2)
        coef = -beta  # binom(-beta, 1)
        xp = xs ** 3
        total = coef * xp / 3.0
        j = 1
        while j < _SERIES_MAX:
            coef *= (-beta - j) * (-beta - j - 1) / ((j + 1) * (j + 2))
            j += 2
            xp = xp * x2
            term = coef * xp / (j + 2)
            total = total + term
            if np.all(np.abs(term) <= 1e-18 * np.abs(total)):
                break
        out[series] = -2.0 * ms ** (2.0 - beta) * total
    return out


def ab_row(nodes, theta, beta, n, gamma_2mb, gamma_1mb):
    """Coefficients a^{(n)}_{n-k} (k=1..n) and b^{(n)}_{n-k} (k=1..n-1).

    Returned in order of increasing k.
    """
    t = nodes
    tau = np.diff(t[: n + 1])
    t_off = t[n] - theta * tau[n - 1]
    a = np.empty(n)
    if n > 1:
        r1 = t_off - t[1:n]
        a[: n - 1] = _pow_diff(r1, tau[: n - 1], 1.0 - beta) / (tau[: n - 1] * gamma_2mb)
    a[n - 1] = ((1.0 - theta) * tau[n - 1]) ** (1.0 - beta) / (tau[n - 1] * gamma_2mb)
    if n > 1:
        r1 = t_off - t[1:n]
        integral = b_integral(r1, tau[: n - 1], beta)
        b = 2.0 * integral / (tau[: n - 1] * (tau[: n - 1] + tau[1:n]) * gamma_1mb)
    else:
        b = np.empty(0)
    return a, b


def assemble_row(a, b, ratios):
    """Alikhanov coefficients A^{(n)}_{n-k}, k=1..n, from the a/b parts."""
    n = a.size
    A = a.copy()
    if n > 1:
        A[: n - 1] -= b
        # rho_{k-1} b_{n-k+1} for k = 2..n
        A[1:] += ratios[: n - 1] * b
    return A


def alikhanov_table(nodes, theta, beta, nmax, gamma_2mb, gamma_1mb):
    """Dense lower-triangular table, row n-1 holds A^{(n)}_{n-k} at column k-1."""
    tab = np.zeros((nmax, nmax))
    ratios = np.diff(nodes)[:-1] / np.diff(nodes)[1:]
    for n in range(1, nmax + 1):
        a, b = ab_row(nodes, theta, beta, n, gamma_2mb, gamma_1mb)
        tab[n - 1, :n] = assemble_row(a, b, ratios)
    return tab


def complementary_table(table, nmax):
    """Rows of P^{(n)}_{n-j} solving sum_{j=k}^n P^{(n)}_{n-j} A^{(j)}_{j-k} = 1."""
    P = np.zeros((nmax, nmax))
    diag = np.array([table[j, j] for j in range(nmax)])  # A^{(j)}_0
    for n in range(1, nmax + 1):
        row = P[n - 1]
        for k in range(n, 0, -1):
            # columns j = k+1..n of table[:, k-1] are A^{(j)}_{j-k}
            acc = np.dot(row[k:n], table[k:n, k - 1])
            row[k - 1] = (1.0 - acc) / diag[k - 1]
    return P


def soe_cell_weights(s, tau):
    """Per-exponential factors for one cell of length tau.

    Returns (exp(-s tau), int_0^tau e^{-s u} du, int_0^tau (tau/2 - u) e^{-s u} du).
    """
    s = np.asarray(s, dtype=float)
    z = s * tau
    decay = np.exp(-z)
    e0 = np.empty_like(z)
    g = np.empty_like(z)
    small = z < 1.0
    big = ~small
    zb = z[big]
    e0[big] = -np.expm1(-zb) / zb
    g[big] = 0.5 * e0[big] - (1.0 - decay[big] * (1.0 + zb)) / (zb * zb)
    zs = z[small]
    # e0 = sum (-z)^j/(j+1)!,  g = sum (-z)^j/j! * (-j / (2 (j+1)(j+2)))
    fac = np.ones_like(zs)
    e0s = np.ones_like(zs)
    gs = np.zeros_like(zs)
    for j in range(1, 22):
        fac = fac * (-zs) / j
        e0s = e0s + fac / (j + 1)
        gs = gs + fac * (-j / (2.0 * (j + 1) * (j + 2)))
    e0[small] = e0s
    g[small] = gs
    return decay, e0 * tau, g * tau * tau


def soe_update(U, decay, e0, g, c1, c2):
    """In place: U[i] = decay[i] U[i] + e0[i] c1 + g[i] c2."""
    U *= decay[:, None]
    U += np.outer(e0, c1)
    U += np.outer(g, c2)
    return U


def soe_history(U, factor):
    """sum_i factor[i] U[i]."""
    return factor @ U
