"""Exception types shared across the package."""


class GraphError(ValueError):
    """Malformed graph data (bad involution, dangling endpoint, parse error)."""


class InputError(ValueError):
    """Bad user input: unreadable file, invalid config value, etc."""


class ResourceLimitError(RuntimeError):
    """A configured cap (walk length, matrix size, search budget) was exceeded."""


class NumericalError(RuntimeError):
    """An iterative numerical routine failed to converge."""


class CertificationError(RuntimeError):
    """A search could not certify completeness of its answer."""
