"""Nonuniform Alikhanov (L2-1sigma) kernels, complementary kernels and SOE.

The discrete Caputo derivative of order beta at the offset point
t_{n-theta} (theta = beta/2) is

    (D_tau^beta g)^{n-theta} = sum_{k=1}^n A^{(n)}_{n-k} (g^k - g^{k-1}).

Rows are stored with entry ``k-1`` holding ``A^{(n)}_{n-k}``, i.e. in
order of increasing k; ``row[-1]`` is the leading coefficient A^{(n)}_0.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn, roots_jacobi, roots_legendre

from .errors import ConvergenceFailure, PreconditionError
from .timegrid import TimeMesh

# FRACSTEP_BACKEND=python forces the NumPy fallback even when the
# compiled extension is importable
_backend = None
if os.environ.get("FRACSTEP_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _backend
    except ImportError:  # pragma: no cover - depends on the build
        _backend = None
if _backend is None:
    from . import _kernels_py as _backend
BACKEND = "python" if _backend.__name__.endswith("_kernels_py") else "cython"

PI_A = 11.0 / 4.0


def omega_weight(mu: float, t):
    """omega_mu(t) = t^(mu-1) / Gamma(mu)."""
    t = np.asarray(t, dtype=float)
    if mu <= 0:
        raise PreconditionError(f"mu must be positive, got {mu!r}")
    if np.any(t <= 0):
        raise PreconditionError("omega_weight is defined for t > 0 only")
    out = t ** (mu - 1.0) / gamma_fn(mu)
    return float(out) if out.ndim == 0 else out


def _check_theta(mesh: TimeMesh, beta: float):
    if not 0.0 < beta < 1.0:
        raise PreconditionError(f"beta must lie in (0, 1), got {beta!r}")
    if not math.isclose(mesh.theta, beta / 2.0, rel_tol=0, abs_tol=1e-14):
        raise PreconditionError(f"mesh theta={mesh.theta} but beta/2={beta / 2}")


@dataclass(frozen=True)
class KernelRow:
    n: int
    beta: float
    coeffs: np.ndarray

    @property
    def leading(self) -> float:
        return float(self.coeffs[-1])


def ab_parts(mesh: TimeMesh, beta: float, n: int):
    """The a^{(n)}_{n-k} (k=1..n) and b^{(n)}_{n-k} (k=1..n-1) integrals."""
    _check_theta(mesh, beta)
    if not 1 <= n <= mesh.N:
        raise PreconditionError(f"step index {n} outside 1..{mesh.N}")
    a, b = _backend.ab_row(mesh.nodes, mesh.theta, beta, n,
                           gamma_fn(2.0 - beta), gamma_fn(1.0 - beta))
    return np.asarray(a), np.asarray(b)


def alikhanov_row(mesh: TimeMesh, beta: float, n: int) -> KernelRow:
    a, b = ab_parts(mesh, beta, n)
    coeffs = _backend.assemble_row(a, b, mesh.ratios)
    return KernelRow(n, beta, np.asarray(coeffs))


class KernelTable:
    """All Alikhanov rows 1..N of a mesh, computed once."""

    def __init__(self, mesh: TimeMesh, beta: float, nmax: int | None = None):
        _check_theta(mesh, beta)
        self.mesh = mesh
        self.beta = beta
        self.nmax = mesh.N if nmax is None else int(nmax)
        self.dense = np.asarray(_backend.alikhanov_table(
            mesh.nodes, mesh.theta, beta, self.nmax,
            gamma_fn(2.0 - beta), gamma_fn(1.0 - beta)))
        self._P = None

    def row(self, n: int) -> KernelRow:
        return KernelRow(n, self.beta, self.dense[n - 1, :n].copy())

    def coeffs(self, n: int) -> np.ndarray:
        """View of A^{(n)}_{n-k}, k = 1..n."""
        return self.dense[n - 1, :n]

    def leading(self, n: int) -> float:
        return float(self.dense[n - 1, n - 1])

    def complementary(self) -> np.ndarray:
        """Dense table with row n-1, column j-1 holding P^{(n)}_{n-j}."""
        if self._P is None:
            self._P = np.asarray(_backend.complementary_table(self.dense, self.nmax))
        return self._P


def discrete_caputo(row: KernelRow, history) -> float | np.ndarray:
    """sum_k A^{(n)}_{n-k} (g^k - g^{k-1}) for history g^0..g^n.

    ``history`` may be 1-D (scalar levels) or 2-D (levels along axis 0).
    """
    g = np.asarray(history, dtype=float)
    if g.shape[0] != row.n + 1:
        raise PreconditionError(f"history has {g.shape[0]} levels, row needs {row.n + 1}")
    diffs = np.diff(g, axis=0)
    out = row.coeffs @ diffs
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ComplementaryRow:
    n: int
    coeffs: np.ndarray  # P^{(n)}_{n-j}, j = 1..n


def complementary_row(table: KernelTable, n: int) -> ComplementaryRow:
    P = table.complementary()
    return ComplementaryRow(n, P[n - 1, :n].copy())


def orthogonality_residual(table: KernelTable, n: int) -> float:
    """max_k |sum_{j=k}^n P^{(n)}_{n-j} A^{(j)}_{j-k} - 1|."""
    P = table.complementary()[n - 1, :n]
    # column k-1 of the dense A-table holds A^{(j)}_{j-k} in row j-1
    sums = P @ table.dense[:n, :n]
    return float(np.max(np.abs(sums - 1.0)))


def complementary_bounds_ok(table: KernelTable, n: int, rtol: float = 1e-12) -> bool:
    """0 <= P^{(n)}_{n-j} <= pi_A Gamma(2-beta) tau_j^beta and
    sum_j P^{(n)}_{n-j} omega_{1-beta}(t_j) <= pi_A."""
    beta = table.beta
    P = table.complementary()[n - 1, :n]
    tau = table.mesh.steps[:n]
    upper = PI_A * gamma_fn(2.0 - beta) * tau ** beta
    if np.any(P < -rtol * upper) or np.any(P > upper * (1 + rtol)):
        return False
    total = float(P @ omega_weight(1.0 - beta, table.mesh.nodes[1:n + 1]))
    return total <= PI_A * (1 + rtol)


def a1_monotone(row: KernelRow) -> bool:
    """A^{(n)}_0 >= A^{(n)}_1 >= ... >= A^{(n)}_{n-1} > 0."""
    c = row.coeffs
    return bool(c[0] > 0 and np.all(np.diff(c) >= -1e-14 * np.abs(c[1:])))


def a2_lower_bound(mesh: TimeMesh, row: KernelRow, pi_a: float = PI_A) -> bool:
    """A^{(n)}_{n-k} >= (1/pi_A) (1/tau_k) int_{t_{k-1}}^{t_k} omega_{1-beta}(t_n - s) ds."""
    n, beta = row.n, row.beta
    t = mesh.nodes
    tau = mesh.steps[:n]
    r1 = t[n] - t[1:n + 1]
    q = 1.0 - beta
    diff = np.where(r1 > 0, r1 ** q * np.expm1(q * np.log1p(tau / np.where(r1 > 0, r1, 1.0))),
                    tau ** q)
    avg = diff / (tau * gamma_fn(2.0 - beta))
    return bool(np.all(row.coeffs >= avg / pi_a * (1 - 1e-13)))


# --------------------------------------------------------------------------
# sum-of-exponentials approximation of t^(-beta) on [delta_t, T]


@dataclass(frozen=True)
class SoeApprox:
    beta: float
    epsilon: float
    delta_t: float
    T: float
    nodes: np.ndarray
    weights: np.ndarray
    max_rel_error: float = field(default=float("nan"))

    @property
    def n_terms(self) -> int:
        return self.nodes.size

    def __call__(self, t):
        """Approximation of t^(-beta)."""
        t = np.asarray(t, dtype=float)
        return np.exp(-np.multiply.outer(t, self.nodes)) @ self.weights

    def relative_error(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        exact = t ** (-self.beta)
        return np.abs(self(t) - exact) / exact


def _soe_rule(beta, delta_t, T, order, tail):
    """Gauss-Jacobi on [0, 1/T] plus Gauss-Legendre on dyadic s-intervals."""
    g = gamma_fn(beta)
    s_lo = 1.0 / T
    s_hi = tail / delta_t
    xj, wj = roots_jacobi(order, 0.0, beta - 1.0)
    nodes = [0.5 * s_lo * (1.0 + xj)]
    weights = [(0.5 * s_lo) ** beta * wj / g]
    xl, wl = roots_legendre(order)
    lo = s_lo
    while lo < s_hi:
        hi = 2.0 * lo
        s = lo + 0.5 * (hi - lo) * (1.0 + xl)
        nodes.append(s)
        weights.append(0.5 * (hi - lo) * wl * s ** (beta - 1.0) / g)
        lo = hi
    return np.concatenate(nodes), np.concatenate(weights)


def _prune(nodes, weights, beta, delta_t, T, budget):
    # worst relative contribution of term i over [delta_t, T]: max t^beta w e^{-s t}
    tstar = np.clip(beta / nodes, delta_t, T)
    contrib = weights * tstar ** beta * np.exp(-nodes * tstar)
    order = np.argsort(contrib)
    cum = np.cumsum(contrib[order])
    drop = order[cum <= budget]
    keep = np.ones(nodes.size, dtype=bool)
    keep[drop] = False
    return nodes[keep], weights[keep]


def soe_build(beta: float, epsilon: float, delta_t: float, T: float,
              max_order: int = 40, n_samples: int = 4000) -> SoeApprox:
    """Exponential sum with |sum w_i e^{-s_i t} - t^-beta| <= eps t^-beta on [delta_t, T].

    The quadrature order grows until the bound holds on a dense log-spaced
    sample of [delta_t, T].
    """
    if not 0 < delta_t < T:
        raise PreconditionError(f"need 0 < delta_t < T, got delta_t={delta_t}, T={T}")
    if not 0 < epsilon < 1:
        raise PreconditionError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < beta < 1:
        raise PreconditionError(f"beta must lie in (0, 1), got {beta}")
    tail = math.log(1.0 / epsilon) + 6.0
    samples = np.geomspace(delta_t, T, n_samples)
    exact = samples ** (-beta)
    worst = float("inf")
    for order in range(4, max_order + 1):
        nodes, weights = _soe_rule(beta, delta_t, T, order, tail)
        nodes, weights = _prune(nodes, weights, beta, delta_t, T, 0.1 * epsilon)
        approx = np.exp(-np.multiply.outer(samples, nodes)) @ weights
        worst = float(np.max(np.abs(approx - exact) / exact))
        if worst <= 0.5 * epsilon:
            return SoeApprox(beta, epsilon, delta_t, T, nodes, weights, worst)
    raise ConvergenceFailure(
        f"SOE for beta={beta} missed eps={epsilon:g} at order {max_order} "
        f"(reached {worst:.3e})")


# --------------------------------------------------------------------------
# time-stepping evaluators of the discrete Caputo operator on vectors


class DirectCaputo:
    """Stores all increments and evaluates the full convolution sum."""

    def __init__(self, table: KernelTable, size: int):
        self.table = table
        self._diffs = np.zeros((table.nmax, size))
        self.n = 0  # number of increments pushed so far

    def leading(self, n: int) -> float:
        return self.table.leading(n)

    def history(self, n: int) -> np.ndarray:
        """sum_{k=1}^{n-1} A^{(n)}_{n-k} (g^k - g^{k-1})."""
        if n != self.n + 1:
            raise PreconditionError(f"history({n}) requested after {self.n} pushes")
        if n == 1:
            return np.zeros(self._diffs.shape[1])
        return self.table.coeffs(n)[: n - 1] @ self._diffs[: n - 1]

    def push(self, diff: np.ndarray):
        self._diffs[self.n] = diff
        self.n += 1


class FastCaputo:
    """SOE evaluation: exact local part on the last two cells, exponential
    accumulators for cells 1..n-2.

    With phi_k(s) the piecewise-quadratic correction used by the Alikhanov
    coefficients on cell k, the accumulator for exponent s_i after m cells is
    U_i^(m) = sum_{k<=m} int_{cell k} e^{-s_i (t_m - s)} phi_k(s) ds.
    """

    def __init__(self, mesh: TimeMesh, beta: float, soe: SoeApprox, size: int):
        _check_theta(mesh, beta)
        self.mesh = mesh
        self.beta = beta
        self.soe = soe
        self.scale = soe.weights / gamma_fn(1.0 - beta)
        self.U = np.zeros((soe.n_terms, size))
        self._g2 = gamma_fn(2.0 - beta)
        self._g1 = gamma_fn(1.0 - beta)
        self._prev = None      # g^{n-1} - g^{n-2}
        self._last = None      # g^n - g^{n-1} (most recent push)
        self._cells = 0        # cells folded into U
        self.n = 0
        self._local = {}

    def _local_coeffs(self, n):
        c = self._local.get(n)
        if c is None:
            a, b = _backend.ab_row(self.mesh.nodes, self.mesh.theta, self.beta, n,
                                         self._g2, self._g1)
            if n == 1:
                c = (a[-1], 0.0)
            else:
                c = (a[-1] + self.mesh.rho(n - 1) * b[-1], a[-2] - b[-1])
            self._local[n] = c
        return c

    def leading(self, n: int) -> float:
        return float(self._local_coeffs(n)[0])

    def history(self, n: int) -> np.ndarray:
        if n != self.n + 1:
            raise PreconditionError(f"history({n}) requested after {self.n} pushes")
        if n == 1:
            return np.zeros(self.U.shape[1])
        out = self._local_coeffs(n)[1] * self._last
        if n >= 3:
            t = self.mesh.nodes
            lag = t[n] - self.mesh.theta * self.mesh.tau(n) - t[n - 2]
            factor = self.scale * np.exp(-self.soe.nodes * lag)
            out = out + _backend.soe_history(self.U, factor)
        return out

    def push(self, diff: np.ndarray):
        diff = np.asarray(diff, dtype=float)
        self.n += 1
        if self._last is not None:
            # cell k = n-1 is complete once the increment on cell n is known
            k = self.n - 1
            tau_k = self.mesh.tau(k)
            tau_next = self.mesh.tau(k + 1)
            c1 = self._last / tau_k
            c2 = (2.0 / (tau_k * (tau_k + tau_next))) * (self.mesh.rho(k) * diff - self._last)
            decay, e0, g = _backend.soe_cell_weights(self.soe.nodes, tau_k)
            _backend.soe_update(self.U, decay, e0, g, c1, c2)
            self._cells = k
        self._last = diff.copy()


def fast_caputo_step(fast: FastCaputo, increment: np.ndarray):
    """Push the newest increment g^n - g^{n-1} and return (D_tau^beta g)^{n-theta}."""
    n = fast.n + 1
    hist = fast.history(n)
    value = fast.leading(n) * np.asarray(increment, dtype=float) + hist
    fast.push(increment)
    return value, fast


# --------------------------------------------------------------------------
# weighted quadratic-form inequality


def _quadratic_form_sides(mesh, table, beta, q_seq, z_seq, n):
    theta = mesh.theta
    z = np.asarray(z_seq, dtype=float)
    q = np.asarray(q_seq, dtype=float)
    coeffs = table.coeffs(n) if isinstance(table, KernelTable) else table.coeffs
    dz = np.diff(z[: n + 1], axis=0)
    caputo = coeffs @ dz
    z_off = (1.0 - theta) * z[n] + theta * z[n - 1]
    lhs = float(z_off @ (q[n] * caputo))
    energy = np.einsum("ki,ki->k", z[: n + 1], q[: n + 1] * z[: n + 1])
    rhs = 0.5 * float(coeffs @ np.diff(energy))
    scale = float(np.abs(coeffs) @ (np.abs(np.diff(energy)) + np.abs(energy[1:])))
    return lhs, rhs, scale


def check_quadratic_form_inequality(mesh: TimeMesh, table, q_seq, z_seq, n: int,
                                    rtol: float = 1e-11) -> bool:
    """Check (z^{n-theta})^T Q^(n) (D z)^{n-theta} >= 1/2 sum_k A_{n-k} grad[(z^k)^T Q^(k) z^k].

    ``q_seq`` holds the diagonals of Q^(0..n) (shape (n+1, m)), ``z_seq``
    the vectors z^0..z^n. Raises PreconditionError if Q is not positive and
    entrywise non-increasing or if the mesh ratio exceeds 7/4.
    """
    q = np.asarray(q_seq, dtype=float)
    z = np.asarray(z_seq, dtype=float)
    if q.ndim != 2 or z.ndim != 2 or q.shape[0] < n + 1 or z.shape[0] < n + 1:
        raise PreconditionError("q_seq and z_seq need n+1 levels of equal length vectors")
    if np.any(q[: n + 1] <= 0):
        raise PreconditionError("Q diagonals must be positive")
    if np.any(np.diff(q[: n + 1], axis=0) > 0):
        raise PreconditionError("Q must be non-increasing in time entrywise")
    if mesh.ratios[: max(n - 1, 0)].size and mesh.ratios[: n - 1].max() > 7.0 / 4.0:
        raise PreconditionError("step ratio exceeds 7/4")
    lhs, rhs, scale = _quadratic_form_sides(mesh, table, None, q, z, n)
    return lhs >= rhs - rtol * scale
