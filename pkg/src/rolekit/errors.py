"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class RolekitError(Exception):
    exit_code = 1


class InputError(RolekitError, ValueError):
    """Malformed input file, invalid parameter or unusable graph."""

    exit_code = 1


class ZeroDegreeError(InputError):
    def __init__(self, node, kind, index_base=0):
        self.node = node
        self.kind = kind
        super().__init__(
            f"node {node + index_base} has zero {kind}-degree; "
            "transition matrices are undefined (use augment_loops, or --loops auto)"
        )


class ConvergenceError(RolekitError, ArithmeticError):
    exit_code = 2


class ScaleCapError(RolekitError):
    exit_code = 3
