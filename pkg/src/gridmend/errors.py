"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid model configuration (parameters, tables, curves)."""


class NetworkError(ValueError):
    """Invalid network topology data."""


class MultipleRootsError(NetworkError):
    pass


class DanglingParentError(NetworkError):
    pass


class CycleError(NetworkError):
    pass


class SimulationContractError(RuntimeError):
    """A simulator precondition was violated by the caller (e.g. a policy)."""


class InstanceTooLargeError(RuntimeError):
    """Exact enumeration refused because the estimated search tree is too big."""
