"""Exception types shared across the solver."""


class HelmscatError(Exception):
    """Base class for all solver errors."""


class DomainError(HelmscatError, ValueError):
    """Argument outside the domain of a special function."""


class SingularityError(HelmscatError, ValueError):
    """Kernel evaluated at (numerically) coincident points."""


class GeometryError(HelmscatError):
    """Invalid discretization or scatterer layout."""


class ConfigError(HelmscatError, ValueError):
    """Experiment configuration failed validation.

    ``errors`` holds one message per offending field.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
