from typing import List, Optional, Sequence


class CavityAntennaError(Exception):
    """
    Base class for every error raised by cavityantenna
    """


class ValidationError(CavityAntennaError, ValueError):
    """
    Invalid input: a stack, material, config or data set that breaks an invariant
    """
    def __init__(self, message: str, violations: Optional[Sequence[str]] = None):
        self.violations: List[str] = list(violations or [])
        if self.violations:
            message = f"{message}: " + '; '.join(self.violations)
        super().__init__(message)


class OutOfRangeError(CavityAntennaError, ValueError):
    """Wavelength outside the tabulated range of a material"""
    def __init__(self, material: str, wavelength_nm: float, lower_nm: float, upper_nm: float):
        self.material = material
        self.wavelength_nm = wavelength_nm
        super().__init__(
            f"material '{material}' is tabulated for {lower_nm:g}-{upper_nm:g} nm, "
            f"requested {wavelength_nm:g} nm"
        )


class DomainError(CavityAntennaError, ValueError):
    """Argument outside the domain of an operation"""


class NotALeakyModeError(DomainError):
    pass


class NoMirrorError(DomainError):
    pass


class OpenResonanceError(CavityAntennaError, ValueError):
    """Half maximum of a resonance is not crossed on one of its flanks"""


class AmbiguityError(CavityAntennaError, ValueError):
    """
    Several solutions of comparable quality; `candidates` lists them
    """
    def __init__(self, message: str, candidates: Sequence[float]):
        self.candidates = [float(c) for c in candidates]
        super().__init__(f"{message}: candidates {', '.join(f'{c:.1f}' for c in self.candidates)}")


class ConvergenceError(CavityAntennaError, RuntimeError):
    """Numerical non-convergence"""
    def __init__(self, message: str, n_eff: Optional[float] = None):
        self.n_eff = n_eff
        super().__init__(message)


class FitFailure(ConvergenceError):
    def __init__(self, message: str, residual_norm: float):
        self.residual_norm = float(residual_norm)
        super().__init__(f"{message} (residual norm {self.residual_norm:.4g})")


class UnresolvedPeakWarning(UserWarning):
    """A resonance peak stays narrower than the finest sampling step"""
    def __init__(self, n_eff: float):
        self.n_eff = float(n_eff)
        super().__init__(f"unresolved peak at n_eff = {self.n_eff:.6f}")


class NegativeDensityWarning(UserWarning):
    """Channel densities below zero inside the propagating region of the host"""
    def __init__(self, n_eff: Sequence[float]):
        self.n_eff = [float(x) for x in n_eff]
        super().__init__(f"negative channel density at {len(self.n_eff)} n_eff values "
                         f"in [{min(self.n_eff):.6f}, {max(self.n_eff):.6f}]")


class ClampedValueWarning(UserWarning):
    pass


class FitAdjustmentWarning(UserWarning):
    """A fit parameter was fixed after the first pass"""


class ExitStatus:
    OK = 0
    VALIDATION_ERROR = 1
    NON_CONVERGENCE = 2


def exit_status_for(error: BaseException) -> int:
    """Process exit status for an exception escaping a command"""
    if isinstance(error, ConvergenceError):
        return ExitStatus.NON_CONVERGENCE
    return ExitStatus.VALIDATION_ERROR
