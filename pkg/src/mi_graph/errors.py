"""Exception hierarchy shared by all mi_graph modules."""


class MiGraphError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(MiGraphError, ValueError):
    pass


class DatasetError(MiGraphError, ValueError):
    pass


class RaggedRowError(DatasetError):
    pass


class NonFiniteValueError(DatasetError):
    pass


class EmptyDatasetError(DatasetError):
    pass


class GraphError(MiGraphError, ValueError):
    pass


class EstimatorError(MiGraphError, ValueError):
    pass


class DegenerateSampleError(EstimatorError):
    """A k-th neighbour distance is zero even after jitter."""


class CITestError(MiGraphError):
    pass


class DegenerateInputError(CITestError, ValueError):
    pass


class SingularCovarianceError(CITestError):
    pass


class InsufficientSamplesError(CITestError, ValueError):
    pass


class GeneratorError(MiGraphError):
    pass


class PrecisionConstructionError(GeneratorError):
    pass


class SingularSampleError(GeneratorError):
    pass
