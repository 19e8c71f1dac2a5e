from typing import Optional, Sequence


class LpadError(Exception):
    """Base exception for all errors raised by the lpad library."""

    pass


class ConfigurationError(LpadError):
    """
    Raised for an invalid configuration object or configuration file.

    This category of exceptions indicates a problem with how a model, a
    network, a dataset split or a run is configured, rather than with the
    numbers flowing through it at runtime. The message always names the
    offending key and the violated constraint.

    Example:
        .. code-block:: python

            # window_len=60 is not divisible by 2**blocks_per_branch=4.
            NetConfig(in_channels=7, window_len=60, blocks_per_branch=2, latent_dim=16)
    """

    pass


class UnknownKeyError(ConfigurationError):
    """
    Raised when a run configuration file contains a key that is not recognized.

    Example:
        .. code-block:: text

            # run.cfg
            bata = 10    # -> UnknownKeyError: unknown key 'bata'
    """

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"unknown key '{key}'")


class ShapeError(LpadError):
    """
    Raised when the extents of an array do not match what an operation expects.

    The message names the operation and the offending extents so that the
    failing layer can be located without a debugger.

    Example:
        .. code-block:: python

            # linear expects the last input axis to equal in_features=4.
            linear(Tensor(np.zeros((2, 3))), weight=Tensor(np.zeros((5, 4))))
    """

    def __init__(self, op: str, message: str, extents: Optional[Sequence] = None):
        self.op = op
        self.extents = tuple(extents) if extents is not None else None
        detail = f" (extents: {self.extents})" if self.extents is not None else ""
        super().__init__(f"{op}: {message}{detail}")


class DomainError(LpadError, ValueError):
    """
    Raised when a value lies outside the mathematical domain of a function.

    Examples include a nonpositive standard deviation handed to the Gaussian
    reparameterization, a nonpositive concrete temperature, a probability
    outside the open unit interval, or binary cross-entropy on data outside
    ``[0, 1]``.
    """

    pass


class UsageError(LpadError):
    """
    Raised when the library is called in the wrong order or the wrong mode.

    Example:
        .. code-block:: python

            graph = Graph(lambda inputs: {"y": sigmoid(inputs["x"])})
            backward(graph, seed)  # -> UsageError: evaluate was never run
    """

    pass


class NonFiniteError(LpadError, ArithmeticError):
    """
    Raised when a computation produces NaN or infinity.

    Attributes:
        index: Flat coordinate index at which the non-finite value appeared,
            when it can be attributed to a single coordinate.
        term: Name of the loss term or operation that produced it.
    """

    def __init__(
        self, message: str, index: Optional[int] = None, term: Optional[str] = None
    ):
        self.index = index
        self.term = term
        super().__init__(message)


class DivergenceError(NonFiniteError):
    """
    Raised when training aborts because the loss became non-finite.

    Attributes:
        checkpoint_path: Path of the checkpoint holding the last parameters for
            which the loss was finite, or ``None`` if no output path was set.
    """

    def __init__(
        self,
        message: str,
        checkpoint_path=None,
        term: Optional[str] = None,
    ):
        super().__init__(message, term=term)
        self.checkpoint_path = checkpoint_path


class ParseError(LpadError):
    """
    Raised when an input file cannot be parsed.

    Attributes:
        row: 1-based data row number (header excluded) at which parsing failed,
            or ``None`` when the problem concerns the file as a whole.
    """

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(f"{prefix}{message}")


class EnumerationLimitError(LpadError):
    """Raised when an exact enumeration would exceed its size bound."""

    pass


class CheckpointError(LpadError):
    """Raised when a checkpoint file is malformed or of an unknown version."""

    pass
