"""Exception hierarchy shared by every module."""


class JpegIdError(Exception):
    pass


class UnsupportedFormat(JpegIdError):
    """The stream is valid JPEG but uses a coding process we do not handle."""


class CorruptStream(JpegIdError):
    pass


class DimensionOverflow(JpegIdError):
    pass


class OutOfRange(JpegIdError, ValueError):
    pass


class UpscaleUnsupported(JpegIdError, ValueError):
    pass


class ShapeMismatch(JpegIdError, ValueError):
    pass


class ParamsMismatch(JpegIdError, ValueError):
    """Enrollment and query feature parameters differ."""


class DuplicateId(JpegIdError):
    pass


class NotFound(JpegIdError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class IoFailure(JpegIdError, OSError):
    pass


class VersionMismatch(JpegIdError):
    pass
