"""Exception types shared across the package.

Every error raised by the library is a subclass of :class:`RankDistillError`,
so callers (and the CLI) can catch one base type.
"""


class RankDistillError(Exception):
    """Base class for all library errors."""


# --- data ---------------------------------------------------------------

class MalformedLine(RankDistillError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"malformed line {line_no}" + (f": {detail}" if detail else ""))


class NegativeLabel(RankDistillError):
    def __init__(self, line_no: int):
        self.line_no = line_no
        super().__init__(f"negative label on line {line_no}")


class EmptyDataset(RankDistillError):
    pass


class InvalidConfig(RankDistillError):
    pass


class InvalidFractions(RankDistillError):
    pass


# --- model --------------------------------------------------------------

class InvalidDims(RankDistillError):
    pass


class ShapeMismatch(RankDistillError):
    pass


class CorruptModelFile(RankDistillError):
    pass


# --- losses -------------------------------------------------------------

class LengthMismatch(RankDistillError):
    pass


class DomainError(RankDistillError):
    pass


# --- distillation / training --------------------------------------------

class AlignmentError(RankDistillError):
    def __init__(self, qid, detail: str = ""):
        self.qid = qid
        super().__init__(f"teacher scores misaligned for qid {qid!r}" + (f": {detail}" if detail else ""))


class NonFiniteLoss(RankDistillError):
    def __init__(self, epoch: int, batch: int):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"loss became non-finite at epoch {epoch}, batch {batch}")


# --- theory -------------------------------------------------------------

class InvalidCounts(RankDistillError):
    pass
