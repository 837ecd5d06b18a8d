from typing import Optional


class EggbeaterError(Exception):
    """
    Base error for the toolkit

    Carries an exit code and a human readable detail, the same way an HTTP
    error carries a status code and a detail message. Controllers return
    `exit_code` to the shell.
    """

    exit_code: int = 4

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class InvalidInput(EggbeaterError):
    """Non-finite coordinates, degenerate loops, malformed arguments"""
    exit_code = 2


class InvalidParams(EggbeaterError):
    """Eggbeater parameters outside their admissible range"""
    exit_code = 2


class InvalidProfile(EggbeaterError):
    """Profile construction violated one of its constraints"""
    exit_code = 2


class ClassMismatch(EggbeaterError):
    """Trajectory and reference loop lie in different homotopy classes"""
    exit_code = 2


class CertificateUnavailable(EggbeaterError):
    """The non-autonomy certificate cannot be issued"""
    exit_code = 3


class BrokenLift(EggbeaterError):
    """Sampled lift is discontinuous or does not close up"""
    exit_code = 4


class IntegrationFailure(EggbeaterError):
    """Perturbed-field integrator gave up"""
    exit_code = 4


class InsufficientSpectrum(EggbeaterError):
    """Fewer than two action values"""
    exit_code = 4


class IncompleteEnumeration(EggbeaterError):
    """Wrap enumeration bound too small to be conclusive"""
    exit_code = 4
