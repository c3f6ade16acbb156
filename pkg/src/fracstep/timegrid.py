"""Nonuniform time partitions 0 = t_0 < t_1 < ... < t_N = T."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonMonotoneNodes, PreconditionError

#: step-ratio ceiling under which the kernel properties are guaranteed
RATIO_LIMIT = 7.0 / 4.0


@dataclass(frozen=True)
class TimeMesh:
    nodes: np.ndarray
    theta: float
    steps: np.ndarray = field(init=False, repr=False)
    ratios: np.ndarray = field(init=False, repr=False)
    offset_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise NonMonotoneNodes("need at least two nodes")
        if nodes[0] != 0.0:
            raise NonMonotoneNodes(f"first node must be 0, got {nodes[0]!r}")
        steps = np.diff(nodes)
        if np.any(steps <= 0) or not np.all(np.isfinite(steps)):
            k = int(np.argmax(~(steps > 0))) + 1
            raise NonMonotoneNodes(f"step tau_{k} = {steps[k - 1]!r} is not positive")
        if not 0.0 < self.theta < 1.0:
            raise PreconditionError(f"theta must lie in (0, 1), got {self.theta!r}")
        nodes.setflags(write=False)
        steps.setflags(write=False)
        ratios = steps[:-1] / steps[1:]
        ratios.setflags(write=False)
        # t_{n-theta} = (1-theta) t_n + theta t_{n-1}
        offset = (1.0 - self.theta) * nodes[1:] + self.theta * nodes[:-1]
        offset.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "ratios", ratios)
        object.__setattr__(self, "offset_nodes", offset)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def max_step(self) -> float:
        return float(self.steps.max())

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else 0.0

    @property
    def ratio_ok(self) -> bool:
        """True when every rho_k = tau_k/tau_{k+1} is at most 7/4."""
        return self.max_ratio <= RATIO_LIMIT

    def tau(self, k: int) -> float:
        """Step size tau_k (1-based, as in the scheme)."""
        return float(self.steps[k - 1])

    def rho(self, k: int) -> float:
        return float(self.ratios[k - 1])

    def t_offset(self, n: int) -> float:
        return float(self.offset_nodes[n - 1])

    def with_theta(self, theta: float) -> "TimeMesh":
        return TimeMesh(self.nodes, theta)


def build_graded(N: int, T: float, gamma: float, theta: float) -> TimeMesh:
    """Graded mesh t_k = T (k/N)^gamma."""
    if int(N) != N or N < 1:
        raise PreconditionError(f"N must be a positive integer, got {N!r}")
    if not T > 0:
        raise PreconditionError(f"T must be positive, got {T!r}")
    if not gamma >= 1:
        raise PreconditionError(f"gamma must be >= 1, got {gamma!r}")
    k = np.arange(1, N + 1, dtype=float)
    nodes = np.empty(N + 1)
    nodes[0] = 0.0
    nodes[1:] = T * np.exp(gamma * np.log(k / N))
    nodes[-1] = T
    return TimeMesh(nodes, theta)


def build_custom(nodes, theta: float) -> TimeMesh:
    return TimeMesh(np.array(nodes, dtype=float), theta)


@dataclass(frozen=True)
class MAReport:
    """Outcome of checking the weak mesh assumption on a concrete mesh.

    ``constants`` holds the smallest constant for each of the three
    inequalities; ``c_gamma_estimate`` is their maximum.
    """

    gamma: float
    constants: tuple[float, float, float]
    ceiling: float
    satisfied: tuple[bool, bool, bool]

    @property
    def c_gamma_estimate(self) -> float:
        return max(self.constants)

    @property
    def all_satisfied(self) -> bool:
        return all(self.satisfied)


def validate_ma(mesh: TimeMesh, gamma: float, ceiling: float = 10.0) -> MAReport:
    """Minimal C_gamma for the three mesh conditions, and pass flags at ``ceiling``.

    The conditions are
      (i)   tau_k <= C tau min{1, t_k^(1-1/gamma)},      1 <= k <= N
      (ii)  t_k <= C t_{k-1},                           2 <= k <= N
      (iii) tau_k/t_k <= C tau_{k-1}/t_{k-1},           2 <= k <= N
    """
    if not gamma >= 1:
        raise PreconditionError(f"gamma must be >= 1, got {gamma!r}")
    t = mesh.nodes
    tau = mesh.steps
    tau_max = tau.max()
    c1 = float(np.max(tau / (tau_max * np.minimum(1.0, t[1:] ** (1.0 - 1.0 / gamma)))))
    if mesh.N >= 2:
        c2 = float(np.max(t[2:] / t[1:-1]))
        rel = tau / t[1:]
        c3 = float(np.max(rel[1:] / rel[:-1]))
    else:
        c2 = c3 = 1.0
    constants = (c1, c2, c3)
    return MAReport(gamma, constants, ceiling, tuple(c <= ceiling for c in constants))
