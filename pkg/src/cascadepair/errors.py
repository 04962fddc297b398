"""Exception types raised across the toolkit."""


class CascadeError(Exception):
    """Base class for toolkit errors."""


class UnknownModeError(CascadeError, KeyError):
    def __init__(self, mode, known=()):
        self.mode = mode
        self.known = tuple(known)
        super().__init__(f"unknown mode {mode!r}; known modes: {', '.join(self.known) or 'none'}")

    def __str__(self):
        return self.args[0]


class WavelengthRangeError(CascadeError, ValueError):
    def __init__(self, mode, wavelength_nm, interval):
        self.mode = mode
        self.wavelength_nm = wavelength_nm
        self.interval = interval
        super().__init__(
            f"wavelength {wavelength_nm!r} nm outside validity interval "
            f"[{interval[0]}, {interval[1]}] nm of mode {mode!r}"
        )


class RootFindingError(CascadeError, ValueError):
    """No isolated phase-matching root could be located."""


class MultipleRootsError(RootFindingError):
    """Several sign changes of the mismatch were found; ``roots`` lists them all."""

    def __init__(self, roots):
        self.roots = list(roots)
        super().__init__(f"{len(self.roots)} phase-matching roots found: {self.roots}")


class InfeasibleError(CascadeError, ValueError):
    """Constraint set admits no solution."""


class IntegrationError(CascadeError, ArithmeticError):
    """Coupled-wave integration produced a non-finite state."""


class MemoryCapError(CascadeError, MemoryError):
    """Monte Carlo run would exceed the configured event budget."""


class ConfigError(CascadeError, ValueError):
    """Invalid experiment configuration.

    ``errors`` is a list of ``{"field": ..., "message": ...}`` records.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{e['field']}: {e['message']}" for e in self.errors]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
