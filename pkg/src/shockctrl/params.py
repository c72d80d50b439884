"""Problem parameters for the shock-linearized advection-diffusion control problem.

The stationary profile is U(x) = -tanh(x/(2*eps)) on (-L, L); the control acts
through the left Dirichlet value.  The two-phase scheme needs a horizon above
t_star = 4*sqrt(3)*L, and then uses tau = (T - t_star)/2 for the first phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import HorizonTooShort


@dataclass(frozen=True)
class ProblemParams:
    """Viscosity, half-length, horizon and the scheme's derived constants.

    T may be omitted for purely spectral work; operations that need a horizon
    raise if it is missing.  m is the dissipation fraction of the second phase
    (1/2 minimizes the cost exponent), kappa_mult > 1 the multiplier margin of
    the bi-orthogonal construction.
    """

    eps: float
    L: float = 1.0
    T: float | None = None
    m: float = 0.5
    kappa_mult: float = 6.0

    def __post_init__(self):
        if not (self.eps > 0):
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not (self.L > 0):
            raise ValueError(f"L must be positive, got {self.L}")
        if self.T is not None and not (self.T > 0):
            raise ValueError(f"T must be positive, got {self.T}")
        if not (0 < self.m < 1):
            raise ValueError(f"m must lie in (0,1), got {self.m}")
        if not (self.kappa_mult > 1):
            raise ValueError(f"kappa_mult must exceed 1, got {self.kappa_mult}")

    @property
    def t_star(self) -> float:
        """Minimum two-phase horizon 4*sqrt(3)*L."""
        return 4.0 * math.sqrt(3.0) * self.L

    @property
    def horizon(self) -> float:
        if self.T is None:
            raise HorizonTooShort("no horizon T was set")
        return self.T

    @property
    def tau(self) -> float:
        """Phase-1 duration (T - t_star)/2; requires T > t_star."""
        T = self.horizon
        if T <= self.t_star:
            raise HorizonTooShort("two-phase scheme needs T > 4*sqrt(3)*L",
                                  T=T, t_star=self.t_star)
        return 0.5 * (T - self.t_star)

    @property
    def t_hat(self) -> float:
        """Second-phase length T - tau."""
        return self.horizon - self.tau

    @property
    def t_tilde(self) -> float:
        """Centered moment interval length (1 - m) * t_hat."""
        return (1.0 - self.m) * self.t_hat

    def with_horizon(self, T: float) -> "ProblemParams":
        return ProblemParams(eps=self.eps, L=self.L, T=T, m=self.m,
                             kappa_mult=self.kappa_mult)
