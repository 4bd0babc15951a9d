"""Exception hierarchy shared by every stage of the pipeline."""


class MnemoError(Exception):
    """Base class for all package errors."""


class UnknownSymbol(MnemoError, ValueError):
    def __init__(self, position, fragment):
        self.position = position
        self.fragment = fragment
        super().__init__(f"no inventory symbol matches {fragment!r} at position {position}")


class EmptySequence(MnemoError, ValueError):
    pass


class ZeroNorm(MnemoError, ValueError):
    pass


class NoRuleApplicable(MnemoError, ValueError):
    def __init__(self, symbol):
        self.symbol = symbol
        super().__init__(f"no identity mapping or rule for symbol {symbol!r}")


class EmptyReference(MnemoError, ValueError):
    pass


class EmptyList(MnemoError, ValueError):
    pass


class ParseError(MnemoError, ValueError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class InventoryError(MnemoError, ValueError):
    def __init__(self, line, symbol):
        self.line = line
        self.symbol = symbol
        super().__init__(f"line {line}: symbol {symbol!r} is not in the inventory")


class DuplicateEntry(MnemoError, ValueError):
    def __init__(self, line, key=None):
        self.line = line
        self.key = key
        super().__init__(f"line {line}: duplicate entry {key!r}")


class IllegalCluster(MnemoError, ValueError):
    def __init__(self, position, reason="illegal consonant cluster"):
        self.position = position
        super().__init__(f"{reason} at position {position}")


class NoNucleus(MnemoError, ValueError):
    pass


class StreamMismatch(MnemoError, ValueError):
    pass


class EmptyLexicon(MnemoError, ValueError):
    pass


class ClientError(MnemoError, RuntimeError):
    pass


class AllCandidatesInvalid(MnemoError, ValueError):
    def __init__(self, reasons):
        self.reasons = list(reasons)
        super().__init__(f"every completion was rejected: {self.reasons}")


class EmbedderError(MnemoError, ValueError):
    pass


class LengthMismatch(MnemoError, ValueError):
    pass


class ChecksumError(MnemoError, RuntimeError):
    pass


class ConfigError(MnemoError, ValueError):
    pass
