"""Variable coefficients of the elliptic operator and the positive weight fields.

The operator is

    A u = a1 u_xx + a2 u_yy + b1 u_x + b2 u_y + b3 u,

and it is rewritten with p = d e^{-C_p t}/(a1 a2), p1 = p a1, p2 = p a2 as

    A u = p^{-1}[(p1 u_x)_x + (p2 u_y)_y] + p3 u_x + p4 u_y + b3 u,

with p3 = b1 - p^{-1}(p1)_x and p4 = b2 - p^{-1}(p2)_y.
All fields are vectorised callables of (x, y, t) (``d`` of (x, y)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import MissingPartial

Field = Callable[..., np.ndarray]

# fourth-order central difference weights for f'(0) on offsets -2..2
_FD4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _fd4(f: Field, axis: int, step: float) -> Field:
    def deriv(*args):
        args = [np.asarray(a, dtype=float) for a in args]
        out = 0.0
        for w, off in zip(_FD4, (-2, -1, 0, 1, 2)):
            if w == 0.0:
                continue
            shifted = list(args)
            shifted[axis] = args[axis] + off * step
            out = out + w * f(*shifted)
        return out / step
    return deriv


def _bcast(value, *args):
    return np.broadcast_to(np.asarray(value, dtype=float),
                           np.broadcast(*[np.asarray(a) for a in args]).shape).copy()


@dataclass
class CoefficientSet:
    """Coefficients a1, a2, b1, b2, b3, the constant C_p and the factor d(x, y).

    Partial derivatives left as ``None`` are replaced by fourth-order central
    differences with step ``fd_step`` unless ``fd_fallback`` is False.
    """

    a1: Field
    a2: Field
    b1: Field
    b2: Field
    b3: Field
    c_p: float
    d: Field
    d_x: Optional[Field] = None
    d_y: Optional[Field] = None
    a1_y: Optional[Field] = None
    a2_x: Optional[Field] = None
    a1_t: Optional[Field] = None
    a2_t: Optional[Field] = None
    name: str = "custom"
    fd_fallback: bool = True
    fd_step: float = 1e-3

    _AXES = {"d_x": ("d", 0), "d_y": ("d", 1), "a1_y": ("a1", 1),
             "a2_x": ("a2", 0), "a1_t": ("a1", 2), "a2_t": ("a2", 2)}

    def partial(self, name: str) -> Field:
        f = getattr(self, name)
        if f is not None:
            return f
        if not self.fd_fallback:
            raise MissingPartial(f"coefficient partial {name!r} not supplied")
        base, axis = self._AXES[name]
        return _fd4(getattr(self, base), axis, self.fd_step)

    def with_overrides(self, **kw) -> "CoefficientSet":
        params = {k: getattr(self, k) for k in self.__dataclass_fields__}
        params.update(kw)
        return CoefficientSet(**params)

    def elliptic(self, u, u_x, u_y, u_xx, u_yy, x, y, t):
        """Pointwise A u from the derivatives of u."""
        return (self.a1(x, y, t) * u_xx + self.a2(x, y, t) * u_yy
                + self.b1(x, y, t) * u_x + self.b2(x, y, t) * u_y
                + self.b3(x, y, t) * u)


@dataclass
class AuxFields:
    coeffs: CoefficientSet
    _dx: Field = field(init=False, repr=False)
    _dy: Field = field(init=False, repr=False)
    _a1y: Field = field(init=False, repr=False)
    _a2x: Field = field(init=False, repr=False)

    def __post_init__(self):
        c = self.coeffs
        self._dx = c.partial("d_x")
        self._dy = c.partial("d_y")
        self._a1y = c.partial("a1_y")
        self._a2x = c.partial("a2_x")

    def _decay(self, x, y, t):
        return self.coeffs.d(x, y) * np.exp(-self.coeffs.c_p * np.asarray(t, dtype=float))

    def p(self, x, y, t):
        c = self.coeffs
        return self._decay(x, y, t) / (c.a1(x, y, t) * c.a2(x, y, t))

    def p1(self, x, y, t):
        return self._decay(x, y, t) / self.coeffs.a2(x, y, t)

    def p2(self, x, y, t):
        return self._decay(x, y, t) / self.coeffs.a1(x, y, t)

    def p3(self, x, y, t):
        # p^{-1} (p1)_x = a1 (d_x/d - (a2)_x/a2)
        c = self.coeffs
        return c.b1(x, y, t) - c.a1(x, y, t) * (
            self._dx(x, y) / c.d(x, y) - self._a2x(x, y, t) / c.a2(x, y, t))

    def p4(self, x, y, t):
        c = self.coeffs
        return c.b2(x, y, t) - c.a2(x, y, t) * (
            self._dy(x, y) / c.d(x, y) - self._a1y(x, y, t) / c.a1(x, y, t))

    def p1_x(self, x, y, t):
        """(p1)_x = e^{-C_p t} (d_x a2 - d (a2)_x) / a2^2."""
        c = self.coeffs
        a2 = c.a2(x, y, t)
        return np.exp(-c.c_p * np.asarray(t, dtype=float)) * (
            self._dx(x, y) * a2 - c.d(x, y) * self._a2x(x, y, t)) / a2 ** 2

    def p2_y(self, x, y, t):
        c = self.coeffs
        a1 = c.a1(x, y, t)
        return np.exp(-c.c_p * np.asarray(t, dtype=float)) * (
            self._dy(x, y) * a1 - c.d(x, y) * self._a1y(x, y, t)) / a1 ** 2


def build_aux(coeffs: CoefficientSet) -> AuxFields:
    return AuxFields(coeffs)


# --------------------------------------------------------------------------
# sampling-based checks


def _lattice(domain, T, density):
    xl, xr, yl, yr = domain
    # open interval in space, closed in time
    x = np.linspace(xl, xr, density + 2)[1:-1]
    y = np.linspace(yl, yr, density + 2)[1:-1]
    t = np.linspace(0.0, T, density)
    return np.meshgrid(x, y, t, indexing="ij")


def estimate_cp(coeffs: CoefficientSet, sample_density: int = 41,
                domain=(0.0, 1.0, 0.0, 1.0), T: float = 1.0) -> float:
    """Sampled sup of |(a1)_t/a1| + |(a2)_t/a2| (a lower bound on the true sup)."""
    X, Y, Tt = _lattice(domain, T, sample_density)
    a1t = coeffs.partial("a1_t")(X, Y, Tt)
    a2t = coeffs.partial("a2_t")(X, Y, Tt)
    val = np.abs(a1t / coeffs.a1(X, Y, Tt)) + np.abs(a2t / coeffs.a2(X, Y, Tt))
    return float(np.max(val))


@dataclass
class CheckResult:
    passed: bool
    value: float
    worst_point: tuple
    informational: bool = False  # reported but not part of all_pass

    def __bool__(self):
        return self.passed


@dataclass
class AssumptionReport:
    checks: dict

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks.values() if not c.informational)

    def __getitem__(self, key) -> CheckResult:
        return self.checks[key]


def _worst(values, X, Y, Tt, use_max=True):
    idx = np.unravel_index(np.argmax(values) if use_max else np.argmin(values), values.shape)
    return float(values[idx]), (float(X[idx]), float(Y[idx]), float(Tt[idx]))


def verify_assumptions(coeffs: CoefficientSet, tolerance: float = 1e-12,
                       domain=(0.0, 1.0, 0.0, 1.0), T: float = 1.0,
                       sample_density: int = 41) -> AssumptionReport:
    """Sample the coefficient assumptions on a tensor lattice.

    Checks reported:
      ``positivity``  min(a1, a2) > 0
      ``monotone``    p, p1, p2 non-increasing in t, i.e. each of
                      -(a1)_t/a1, -(a2)_t/a2, -(a1 a2)_t/(a1 a2) is <= C_p
      ``cp_bound``    |(a1)_t/a1| + |(a2)_t/a2| <= C_p (the literal bound;
                      informational, since only the monotonicity it implies
                      is used and the shipped benchmark set exceeds it)
      ``b1``/``b2``/``b3``  sampled sup |b_l| is finite (value = the sup)
    """
    X, Y, Tt = _lattice(domain, T, sample_density)
    a1 = coeffs.a1(X, Y, Tt)
    a2 = coeffs.a2(X, Y, Tt)
    checks = {}
    amin = np.minimum(a1, a2)
    v, pt = _worst(amin, X, Y, Tt, use_max=False)
    checks["positivity"] = CheckResult(bool(v > 0), v, pt)

    # a zero coefficient already fails positivity; keep the ratios quiet
    with np.errstate(divide="ignore", invalid="ignore"):
        l1 = coeffs.partial("a1_t")(X, Y, Tt) / a1
        l2 = coeffs.partial("a2_t")(X, Y, Tt) / a2
    need = np.maximum(np.maximum(-l1, -l2), -(l1 + l2))
    v, pt = _worst(need, X, Y, Tt)
    checks["monotone"] = CheckResult(bool(v <= coeffs.c_p + tolerance), v, pt)

    v, pt = _worst(np.abs(l1) + np.abs(l2), X, Y, Tt)
    checks["cp_bound"] = CheckResult(bool(v <= coeffs.c_p + tolerance), v, pt, informational=True)

    for name in ("b1", "b2", "b3"):
        vals = np.abs(_bcast(getattr(coeffs, name)(X, Y, Tt), X))
        v, pt = _worst(vals, X, Y, Tt)
        checks[name] = CheckResult(bool(np.isfinite(v)), v, pt)
    return AssumptionReport(checks)


# --------------------------------------------------------------------------
# presets


def _benchmark_set() -> CoefficientSet:
    exp, sin, cos = np.exp, np.sin, np.cos

    def a1(x, y, t):
        return exp(x + y) * (1.0 + cos(t))

    def a2(x, y, t):
        return exp((x + y) * t) * (1.0 + t ** 1.5)

    def d(x, y):
        return exp(sin(x + y))

    def d_xy(x, y):
        return cos(x + y) * exp(sin(x + y))

    return CoefficientSet(
        a1=a1,
        a2=a2,
        b1=lambda x, y, t: sin(x * y * t),
        b2=lambda x, y, t: cos(x * y * t),
        b3=lambda x, y, t: (x ** 2 + y ** 2) * t,
        c_p=3.0,
        d=d,
        d_x=d_xy,
        d_y=d_xy,
        a1_y=a1,
        a2_x=lambda x, y, t: t * a2(x, y, t),
        a1_t=lambda x, y, t: -exp(x + y) * sin(t),
        a2_t=lambda x, y, t: exp((x + y) * t) * ((x + y) * (1.0 + t ** 1.5) + 1.5 * np.sqrt(t)),
        name="paper_section5",
    )


def _const(value):
    return lambda x, y, t: _bcast(value, x, y, t)


def _const2(value):
    return lambda x, y: _bcast(value, x, y)


def _identity() -> CoefficientSet:
    zero = _const(0.0)
    return CoefficientSet(a1=_const(1.0), a2=_const(1.0), b1=zero, b2=zero, b3=zero,
                          c_p=0.0, d=_const2(1.0), d_x=_const2(0.0), d_y=_const2(0.0),
                          a1_y=zero, a2_x=zero, a1_t=zero, a2_t=zero, name="identity")


def _constant() -> CoefficientSet:
    zero = _const(0.0)
    return CoefficientSet(a1=_const(2.0), a2=_const(1.0), b1=_const(1.0), b2=_const(-1.0),
                          b3=_const(-1.0), c_p=0.0, d=_const2(1.0), d_x=_const2(0.0),
                          d_y=_const2(0.0), a1_y=zero, a2_x=zero, a1_t=zero, a2_t=zero,
                          name="constant")


PRESETS = {
    "paper_section5": _benchmark_set,
    "constant": _constant,
    "identity": _identity,
}


def preset(name: str, d: str | None = None) -> CoefficientSet:
    """Named coefficient set; ``d`` optionally selects 'one', 'esin' or 'ecos'."""
    try:
        coeffs = PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown coefficient preset {name!r}; choose from {sorted(PRESETS)}")
    if d is None:
        return coeffs
    if d == "one":
        return coeffs.with_overrides(d=_const2(1.0), d_x=_const2(0.0), d_y=_const2(0.0))
    if d == "esin":
        f = lambda x, y: np.exp(np.sin(x + y))
        g = lambda x, y: np.cos(x + y) * np.exp(np.sin(x + y))
        return coeffs.with_overrides(d=f, d_x=g, d_y=g)
    if d == "ecos":
        f = lambda x, y: np.exp(np.cos(x + y))
        g = lambda x, y: -np.sin(x + y) * np.exp(np.cos(x + y))
        return coeffs.with_overrides(d=f, d_x=g, d_y=g)
    raise KeyError(f"unknown d choice {d!r}")
