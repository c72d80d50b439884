"""Exception types shared across the package.

Each carries a short machine-readable slug so CLI output and logs stay greppable.
"""


class ShockCtrlError(Exception):
    slug = "shockctrl-error"

    def __init__(self, message="", **info):
        self.info = info
        if info:
            message = f"{message} ({', '.join(f'{k}={v}' for k, v in info.items())})"
        super().__init__(f"[{self.slug}] {message}")


class GroundRootNotBracketed(ShockCtrlError):
    """No sign change for the ground eigenvalue equation; eps too large for
    double evaluation of the tanh terms."""
    slug = "ground-root-not-bracketed"


class SpectrumInvariantViolation(ShockCtrlError):
    slug = "spectrum-invariant-violation"


class QuadratureNotConverged(ShockCtrlError):
    slug = "quadrature-not-converged"


class GridTooCoarse(ShockCtrlError):
    slug = "grid-too-coarse"


class MultiplierEvalOverflow(ShockCtrlError):
    slug = "multiplier-eval-overflow"


class FamilyRejected(ShockCtrlError):
    slug = "family-rejected"


class GramIllConditioned(ShockCtrlError):
    slug = "gram-ill-conditioned"


class CoefficientBoundViolation(ShockCtrlError):
    slug = "coefficient-bound-violation"


class ModeTruncationInsufficient(ShockCtrlError):
    slug = "mode-truncation-insufficient"


class StepTooCoarse(ShockCtrlError):
    slug = "step-too-coarse"


class HorizonTooShort(ShockCtrlError):
    slug = "horizon-too-short"


class CostBoundViolation(ShockCtrlError):
    slug = "cost-bound-violation"
