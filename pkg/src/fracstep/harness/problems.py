"""Manufactured test problems on the unit square with the variable coefficients
of the benchmark set (``paper_section5`` preset)."""

import numpy as np
from scipy.special import gamma as G

from ..coefficients import CoefficientSet, preset
from ..errors import PreconditionError
from ..steppers import ProblemSpec

PI = np.pi


def bump(x, y):
    return np.sin(PI * x) * np.sin(PI * y)


def bump_elliptic(coeffs: CoefficientSet, x, y, t):
    """A applied to sin(pi x) sin(pi y), evaluated analytically."""
    s = bump(x, y)
    s_x = PI * np.cos(PI * x) * np.sin(PI * y)
    s_y = PI * np.sin(PI * x) * np.cos(PI * y)
    return coeffs.elliptic(s, s_x, s_y, -PI ** 2 * s, -PI ** 2 * s, x, y, t)


def manufactured_subdiffusion(alpha: float, coeffs: CoefficientSet | None = None) -> ProblemSpec:
    """u = sin(pi x) sin(pi y) (1 + t + t^alpha), 0 < alpha < 1."""
    if not 0 < alpha < 1:
        raise PreconditionError(f"alpha must lie in (0, 1), got {alpha}")
    c = coeffs or preset("paper_section5")
    g1, g2 = G(alpha + 1.0), G(2.0 - alpha)

    def time_part(t):
        return 1.0 + t + t ** alpha

    def exact(x, y, t):
        return bump(x, y) * time_part(t)

    def source(x, y, t):
        # Caputo derivative of the time factor: Gamma(alpha+1) + t^{1-alpha}/Gamma(2-alpha)
        return (bump(x, y) * (g1 + t ** (1.0 - alpha) / g2)
                - bump_elliptic(c, x, y, t) * time_part(t))

    return ProblemSpec("subdiffusion", alpha, c, source=source, phi=bump, exact=exact,
                       sigma={"sigma1": alpha}, name="manufactured_subdiffusion")


def manufactured_diffwave(alpha: float, coeffs: CoefficientSet | None = None,
                          analytic_psi: bool = True) -> ProblemSpec:
    """u = sin(pi x) sin(pi y) (1 + t + t^alpha), 1 < alpha < 2, phi = psi = bump.

    With ``analytic_psi`` (default) the Psi term is the exact A(t psi) at the
    grid points; otherwise the discrete operator is applied to t psi_h. The
    analytic form is the one that reproduces the published spatial table.
    """
    if not 1 < alpha < 2:
        raise PreconditionError(f"alpha must lie in (1, 2), got {alpha}")
    c = coeffs or preset("paper_section5")
    g1 = G(alpha + 1.0)

    def time_part(t):
        return 1.0 + t + t ** alpha

    def exact(x, y, t):
        return bump(x, y) * time_part(t)

    def source(x, y, t):
        return g1 * bump(x, y) - bump_elliptic(c, x, y, t) * time_part(t)

    a_tpsi = (lambda x, y, t: t * bump_elliptic(c, x, y, t)) if analytic_psi else None
    return ProblemSpec("diffusionwave", alpha, c, source=source, phi=bump, psi=bump,
                       exact=exact, a_tpsi=a_tpsi,
                       sigma={"sigma2": alpha, "sigma3": alpha / 2.0},
                       name="manufactured_diffwave")


def gamma_opt(kind: str, alpha: float) -> float:
    return 2.0 / alpha if kind == "subdiffusion" else 4.0 / alpha


def manufactured(kind: str, alpha: float, **kw) -> ProblemSpec:
    if kind == "subdiffusion":
        return manufactured_subdiffusion(alpha, **kw)
    if kind == "diffusionwave":
        return manufactured_diffwave(alpha, **kw)
    raise PreconditionError(f"unknown problem kind {kind!r}")
