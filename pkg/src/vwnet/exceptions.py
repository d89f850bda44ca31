"""Exception hierarchy shared by every vwnet module."""


class VWNetError(Exception):
    """Base class for errors raised by vwnet."""


class DimensionError(VWNetError, ValueError):
    """Operand shapes do not conform."""


class ContractError(VWNetError, RuntimeError):
    """A caller broke an API precondition, e.g. passed a stale forward cache."""


class DataError(VWNetError, ValueError):
    """Input data could not be parsed or is unusable."""


class SchemaError(DataError):
    """The CSV header is missing a column or names an unknown one."""


class RowError(DataError):
    """A data row holds a value that cannot be parsed."""

    def __init__(self, row, field, value, reason=""):
        self.row = row
        self.field = field
        self.value = value
        msg = f"row {row}, field {field!r}: cannot parse {value!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class EmptyDatasetError(DataError):
    """No usable rows remain."""


class ModelFormatError(DataError):
    """A model file is malformed; ``offset`` is the byte position of the fault."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")
