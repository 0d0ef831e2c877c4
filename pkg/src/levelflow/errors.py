"""Exception hierarchy shared by all levelflow modules."""


class LevelflowError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(LevelflowError):
    """A caller-supplied value violates a documented precondition."""


class FieldFormatError(InvalidInputError):
    """A field file is malformed; carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DegenerateRegionError(LevelflowError):
    """One of the two regions carries (numerically) no mass."""


class DivergenceError(LevelflowError):
    """An iterative scheme blew up or failed to settle; carries the step index."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step
