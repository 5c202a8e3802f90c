class HMDDError(Exception):
    pass


class ConfigurationError(HMDDError, ValueError):
    """Bad user input: mesh splits, study configs, problem data."""


class InvalidGeometryError(HMDDError, ValueError):
    """A mapping with non-positive Jacobian determinant or a degenerate facet."""


class SolverError(HMDDError, RuntimeError):
    pass
