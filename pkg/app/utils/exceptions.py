"""The module defines the exception classes raised across the toolkit."""


class ScabError(Exception):
    """
    ScabError is the base class for every error raised deliberately by the toolkit.
    The command-line driver catches it, logs the message and exits with a non-zero status.

    Attributes:
        message (str): Explanation of the error.
    """

    def __init__(self, message: str = "Toolkit error") -> None:
        """
        Initializes the error with a human-readable message.

        Args:
            message (str): A human-readable string explaining the error.
        """
        self.message = message
        super().__init__(self.message)

    def __str__(self) -> str:
        """
        Returns a string representation of the exception, prefixed with the exception class name.

        Returns:
            str: The string representation of the exception.
        """
        return f"{self.__class__.__name__}: {self.message}"


class InvalidArgumentError(ScabError, ValueError):
    """Exception raised when an operation receives an argument outside its documented domain."""


class FormatError(ScabError):
    """
    Exception raised when an on-disk artifact is malformed: a broken header, a size that disagrees
    with the declared shape, an unknown dtype or a missing key.

    Attributes:
        path (str): The offending file.
    """

    def __init__(self, path: str, reason: str) -> None:
        self.path = str(path)
        super().__init__(f"{self.path}: {reason}")


class TrainingDivergedError(ScabError):
    """Exception raised when a loss term becomes non-finite during training."""

    def __init__(self, term: str, epoch: int, value: float) -> None:
        self.term = term
        self.epoch = epoch
        super().__init__(f"loss term '{term}' is non-finite ({value}) at epoch {epoch}")


class MissingArtifactError(ScabError, FileNotFoundError):
    """Exception raised when a run directory lacks an artifact needed to evaluate or report it."""
