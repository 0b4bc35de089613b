"""Exception hierarchy shared by all vibron2d modules."""


class VibronError(Exception):
    """Base class for library errors."""


class InvalidArgumentError(VibronError, ValueError):
    pass


class DegenerateSpectrumError(VibronError):
    """Two eigenvalues coincide where the computation needs a simple spectrum."""


class ConvergenceError(VibronError):
    pass


class FlatCurveError(VibronError):
    pass


class SingularNormalEquationsError(VibronError):
    """The fit Jacobian is rank deficient (redundant parameters)."""


class ConfigError(VibronError):
    pass


class DataError(VibronError):
    pass
