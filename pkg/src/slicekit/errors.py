"""Exception hierarchy shared by all slicekit modules."""


class SliceKitError(Exception):
    """Base class for all toolkit errors."""


# --- dataset loading / validation ---

class BadMagic(SliceKitError):
    def __init__(self, path, offset, found):
        self.path = path
        self.offset = offset
        self.found = found
        super().__init__(f"{path}: bad magic {found!r} at byte {offset}")


class TruncatedFile(SliceKitError):
    def __init__(self, path, offset, expected):
        self.path = path
        self.offset = offset
        self.expected = expected
        super().__init__(
            f"{path}: truncated at byte {offset}, expected {expected} more bytes"
        )


class TrailingBytes(SliceKitError):
    def __init__(self, path, offset, extra):
        self.path = path
        self.offset = offset
        self.extra = extra
        super().__init__(f"{path}: {extra} unexpected trailing bytes at offset {offset}")


class NonFiniteValue(SliceKitError):
    def __init__(self, path, offset):
        self.path = path
        self.offset = offset
        super().__init__(f"{path}: non-finite value at byte {offset}")


class MissingColumn(SliceKitError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"metadata is missing required column {column!r}")


class DuplicateSampleId(SliceKitError):
    def __init__(self, sample_id):
        self.sample_id = sample_id
        super().__init__(f"duplicate sample_id {sample_id!r}")


class ConfidenceOutOfRange(SliceKitError):
    def __init__(self, sample_id, value):
        self.sample_id = sample_id
        self.value = value
        super().__init__(f"sample {sample_id!r}: confidence {value} outside [0, 1]")


class BadLabel(SliceKitError):
    def __init__(self, sample_id, value):
        self.sample_id = sample_id
        self.value = value
        super().__init__(f"sample {sample_id!r}: label {value!r} not in {{0, 1}}")


class UnjoinedSample(SliceKitError):
    def __init__(self, sample_id):
        self.sample_id = sample_id
        super().__init__(f"sample {sample_id!r} present on only one side of the join")


class TooFewSamples(SliceKitError):
    pass


# --- reduction head ---

class SingleClassData(SliceKitError):
    pass


class DivergedLoss(SliceKitError):
    pass


class DimensionMismatch(SliceKitError):
    pass


# --- mixtures / clustering ---

class KExceedsN(SliceKitError):
    pass


class DegenerateComponent(SliceKitError):
    pass


class EmptyStratum(SliceKitError):
    pass


class EmptyCluster(SliceKitError):
    pass


# --- statistics ---

class EmptyInput(SliceKitError):
    pass


class SingleClassInput(SliceKitError):
    pass


# --- audits ---

class UnknownAttribute(SliceKitError):
    def __init__(self, attribute):
        self.attribute = attribute
        super().__init__(f"attribute {attribute!r} not in schema")


class UnknownSampleId(SliceKitError):
    def __init__(self, sample_id):
        self.sample_id = sample_id
        super().__init__(f"unknown sample_id {sample_id!r}")


class DegenerateGroup(SliceKitError):
    pass


# --- synthetic generators ---

class InvalidSpec(SliceKitError):
    pass
