"""Identify double-compressed and resized JPEG images from luminance DC coefficients."""

from jpegid.errors import (
    CorruptStream,
    DimensionOverflow,
    DuplicateId,
    IoFailure,
    JpegIdError,
    NotFound,
    OutOfRange,
    ParamsMismatch,
    ShapeMismatch,
    UnsupportedFormat,
    UpscaleUnsupported,
    VersionMismatch,
)
from jpegid.jpeg_parse import DcPlane, parse_jpeg
from jpegid.jpeg_sim import PixelImage, QuantTables, decode, encode, resize_area, scale_tables
from jpegid.dc_feature import FeatureParams, FeatureVector, calibrate_delta, calibrate_th, extract
from jpegid.resize_map import EstimatedFeature, estimate
from jpegid.matcher import EvalReport, MatchDecision, MatchParams, evaluate, match
from jpegid.feature_store import FeatureRecord, FeatureStore

__version__ = "0.1.0"

__all__ = [
    "CorruptStream",
    "DcPlane",
    "DimensionOverflow",
    "DuplicateId",
    "EstimatedFeature",
    "EvalReport",
    "FeatureParams",
    "FeatureRecord",
    "FeatureStore",
    "FeatureVector",
    "IoFailure",
    "JpegIdError",
    "MatchDecision",
    "MatchParams",
    "NotFound",
    "OutOfRange",
    "ParamsMismatch",
    "PixelImage",
    "QuantTables",
    "ShapeMismatch",
    "UnsupportedFormat",
    "UpscaleUnsupported",
    "VersionMismatch",
    "calibrate_delta",
    "calibrate_th",
    "decode",
    "encode",
    "estimate",
    "evaluate",
    "extract",
    "match",
    "parse_jpeg",
    "resize_area",
    "scale_tables",
]
