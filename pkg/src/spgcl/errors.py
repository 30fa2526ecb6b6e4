"""Exception hierarchy. Each class carries the message prefix the CLI prints."""


class SpgclError(Exception):
    code = "E_VALUE"

    def __str__(self):
        return f"{self.code}: {super().__str__()}"


class InputError(SpgclError):
    """Malformed file contents or values that cannot be parsed."""

    code = "E_PARSE"


class ShapeError(SpgclError):
    code = "E_SHAPE"


class ConfigError(SpgclError):
    code = "E_CONFIG"


class NumericalError(SpgclError):
    code = "E_NUMERIC"
