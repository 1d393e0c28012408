"""Exception hierarchy shared across the toolkit."""


class Subs2NetError(Exception):
    """Base class for all toolkit errors."""


class EmptyDocument(Subs2NetError):
    pass


class EncodingError(Subs2NetError):
    pass


class MissingColumn(Subs2NetError):
    pass


class EmptyCorpus(Subs2NetError):
    pass


class UnknownVertex(Subs2NetError, KeyError):
    pass


class UnsupportedFormat(Subs2NetError, ValueError):
    pass


class EmptyInput(Subs2NetError, ValueError):
    pass


class EmptySample(Subs2NetError, ValueError):
    pass


class SingleClassDataset(Subs2NetError, ValueError):
    pass


class TooFewExamples(Subs2NetError, ValueError):
    pass


class SchemaMismatch(Subs2NetError, ValueError):
    pass


class SingleClassTestSet(Subs2NetError, ValueError):
    pass


class KTooLarge(Subs2NetError, ValueError):
    pass


class EmptyReference(Subs2NetError, ValueError):
    pass


class ManifestError(Subs2NetError):
    pass
