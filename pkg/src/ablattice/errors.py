"""Exception types shared across the package."""


class ZeroFieldRegionError(ValueError):
    """The matter field is (numerically) zero somewhere it must not be.

    Carries the offending lattice sites so callers can report them.
    """

    def __init__(self, sites, threshold):
        self.sites = sorted(sites)
        self.threshold = threshold
        shown = ", ".join(str(s) for s in self.sites[:8])
        more = "" if len(self.sites) <= 8 else f" (+{len(self.sites) - 8} more)"
        super().__init__(
            f"|psi| <= {threshold:.3e} at sites: {shown}{more}"
        )


class NotContractibleError(ValueError):
    """A loop winds around excised sites and cannot be filled by plaquettes."""


class NotSupportedError(ValueError):
    """Operation not defined for this lattice (e.g. periodic topology)."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class NoWitnessError(ValueError):
    """No non-separability witness exists for the given cover."""


class GluingMismatchError(ValueError):
    """Two field restrictions disagree on their overlap."""

    def __init__(self, message, bad_sites=(), bad_links=()):
        self.bad_sites = list(bad_sites)
        self.bad_links = list(bad_links)
        super().__init__(message)


class ExperimentFailureError(RuntimeError):
    """An interference run produced no usable signal."""


class FormatError(ValueError):
    """A serialized field file is corrupt or has the wrong version."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class ConfigError(ValueError):
    """An experiment configuration file is malformed."""
