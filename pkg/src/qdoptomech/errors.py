"""Exception types raised by the simulator."""


class SimulationError(Exception):
    """Base class for every error the package raises on purpose."""


class ParameterError(SimulationError, ValueError):
    """One or more parameter invariants are violated.

    ``problems`` holds one message per violated invariant.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class InstabilityError(SimulationError):
    """A trajectory left the configured magnitude bound."""

    def __init__(self, message, time):
        self.time = time
        super().__init__(f"instability detected at t={time:.6g}: {message}")


class ResonanceError(SimulationError, ZeroDivisionError):
    def __init__(self, message, n=None):
        self.n = n
        super().__init__(f"resonant denominator: {message}")


class IncommensurateStepError(SimulationError, ValueError):
    def __init__(self, message):
        super().__init__(f"incommensurate step: {message}")


class GridMismatchError(SimulationError, ValueError):
    def __init__(self, message):
        super().__init__(f"grid mismatch: {message}")


class UnphysicalStateError(SimulationError):
    def __init__(self, message, time=None):
        self.time = time
        where = "" if time is None else f" at t={time:.6g}"
        super().__init__(f"unphysical block{where}: {message}")


class NonRealReconstructionError(SimulationError):
    pass


class ConfigError(SimulationError, ValueError):
    """Configuration file could not be parsed or validated."""

    def __init__(self, message, path=None, key=None, line=None, problems=None):
        self.problems = list(problems) if problems else [message]
        self.path = path
        self.key = key
        self.line = line
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
