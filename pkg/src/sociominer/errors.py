"""Exception types raised across sociominer.

Every exception derives from :class:`SociominerError`. Subclasses of
:class:`InputError` signal bad input or configuration and map to CLI exit
code 2; anything else is treated as an internal error (exit code 1).
"""


class SociominerError(Exception):
    pass


class InputError(SociominerError):
    """Bad input data or configuration."""


# ---- ingestion ---------------------------------------------------------

class MalformedRecord(InputError):
    def __init__(self, line_no, reason=""):
        self.line_no = line_no
        self.reason = reason
        msg = f"malformed git-log record at line {line_no}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class UnparseableDate(InputError):
    def __init__(self, line_no, value=""):
        self.line_no = line_no
        self.value = value
        super().__init__(f"unparseable date {value!r} at line {line_no}")


class MalformedMbox(InputError):
    pass


class MissingHeader(InputError):
    def __init__(self, message_index, header):
        self.message_index = message_index
        self.header = header
        super().__init__(f"message {message_index} has no {header}: header")


# ---- identities --------------------------------------------------------

class ConflictingOverride(InputError):
    def __init__(self, group, pair):
        self.group = sorted(group)
        self.pair = tuple(sorted(pair))
        super().__init__(
            f"merge group {self.group} joins {self.pair[0]} and {self.pair[1]}, "
            "which are listed as never_merge"
        )


# ---- traits ------------------------------------------------------------

class IneligibleCorpus(InputError):
    pass


class UnknownTrait(InputError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"unknown trait key {key!r}")


class TransportError(SociominerError):
    pass


class ServiceError(SociominerError):
    def __init__(self, status, body=""):
        self.status = status
        self.body = body
        super().__init__(f"trait service returned HTTP {status}")


class SchemaError(SociominerError):
    pass


# ---- clustering --------------------------------------------------------

class InvalidK(InputError):
    pass


class IsolatedRows(InputError):
    def __init__(self, ids):
        self.ids = list(ids)
        super().__init__(f"rows with zero degree: {self.ids}")


class CurveTooShort(InputError):
    pass


# ---- analysis / pipeline -----------------------------------------------

class InvalidN(InputError):
    pass


class MissingStage(InputError):
    def __init__(self, filename):
        self.filename = filename
        super().__init__(f"missing prerequisite {filename!r}; run the producing stage first")


class ConfigError(InputError):
    pass
