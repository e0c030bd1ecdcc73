# Grados/exceptions.py


class RetigpError(Exception):
    """Error base del proyecto; exit_status es el código de salida del comando."""
    exit_status = 1


class InputError(RetigpError, ValueError):
    exit_status = 1


class ParseError(InputError):
    """Error al leer un CSV de características. line es la línea del archivo (1 = cabecera)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"línea {line}: {message}"
        super().__init__(message)


class ModelLoadError(InputError):
    pass


class VersionError(ModelLoadError):
    pass


class ChecksumError(ModelLoadError):
    pass


class NumericalError(RetigpError, ArithmeticError):
    exit_status = 2

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class OptimizationError(NumericalError):
    pass
