class ExtractorError(Exception):
    exit_code = 3


class UnknownArchitecture(ExtractorError):
    exit_code = 2


class UndecodableImage(ExtractorError):
    """Raised internally; the job loop downgrades it to a warning and skips."""

    exit_code = 2


class EmptyJob(ExtractorError):
    exit_code = 2
