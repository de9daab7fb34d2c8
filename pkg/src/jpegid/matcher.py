"""Same-original decisions by an early-exit sign test, and corpus evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from jpegid.dc_feature import FeatureVector
from jpegid.errors import ParamsMismatch, ShapeMismatch
from jpegid.resize_map import EstimatedFeature, estimate

SIGN_POLICIES = ("strict", "zero_wildcard")


@dataclass(frozen=True)
class MatchParams:
    """``d_enrolled``/``d_query``: components with larger magnitude are skipped.

    ``sign_policy='strict'`` treats a zero against a nonzero as a conflict;
    ``'zero_wildcard'`` only rejects strictly opposite signs.
    ``skip_large=False`` disables magnitude skipping (ablation only).
    """

    d_enrolled: float = 4.0
    d_query: float = 4.0
    sign_policy: str = "zero_wildcard"
    skip_large: bool = True

    def __post_init__(self):
        if self.d_enrolled < 0 or self.d_query < 0:
            raise ValueError("skip thresholds must be >= 0")
        if self.sign_policy not in SIGN_POLICIES:
            raise ValueError(f"sign_policy must be one of {SIGN_POLICIES}")


@dataclass(frozen=True)
class MatchDecision:
    verdict: str
    conflict_index: int | None
    compared: int
    skipped: int

    @property
    def same(self) -> bool:
        return self.verdict == "same"


@dataclass(frozen=True)
class EvalReport:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 1.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 1.0

    def __add__(self, other: "EvalReport") -> "EvalReport":
        return EvalReport(self.tp + other.tp, self.fp + other.fp,
                          self.fn + other.fn, self.tn + other.tn)

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "precision": self.precision, "recall": self.recall}


def _values(x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.v
    if isinstance(x, EstimatedFeature):
        return x.d
    return np.asarray(x)


def match(enrolled, query, params: MatchParams | None = None) -> MatchDecision:
    """Compare an enrolled (or estimated) feature against a query feature.

    Components where either magnitude exceeds its threshold are skipped; the
    first compared component with conflicting signs decides "different".
    ``compared`` and ``skipped`` are counted over the whole vector.
    """
    params = params or MatchParams()
    e = np.asarray(_values(enrolled), dtype=np.float64)
    q = np.asarray(_values(query), dtype=np.float64)
    if e.shape != q.shape or e.ndim != 1:
        raise ShapeMismatch(f"feature lengths differ: {e.size} vs {q.size}")
    if params.skip_large:
        skip = (np.abs(e) > params.d_enrolled) | (np.abs(q) > params.d_query)
    else:
        skip = np.zeros(e.shape, dtype=bool)
    se, sq = np.sign(e), np.sign(q)
    if params.sign_policy == "strict":
        clash = se != sq
    else:
        clash = (se * sq) < 0
    conflicts = np.flatnonzero(clash & ~skip)
    skipped = int(skip.sum())
    compared = e.size - skipped
    if conflicts.size:
        return MatchDecision("different", int(conflicts[0]), compared, skipped)
    return MatchDecision("same", None, compared, skipped)


def _records(db):
    return list(db.scan()) if hasattr(db, "scan") else list(db)


class _Estimates:
    """Per-(record, query size) cache of resize estimates."""

    def __init__(self):
        self._cache = {}

    def get(self, record, width: int, height: int):
        f = record.feature
        if (f.width_px, f.height_px) == (width, height):
            return f.v
        key = (record.image_id, width, height)
        if key not in self._cache:
            self._cache[key] = estimate(f, width, height).d
        return self._cache[key]


def identify(query: FeatureVector, db, params: MatchParams | None = None,
             force: bool = False, _estimates: _Estimates | None = None) -> list[str]:
    """Ids of every enrolled record judged to share the query's original."""
    params = params or MatchParams()
    est = _estimates or _Estimates()
    hits = []
    for rec in _records(db):
        if rec.feature.params != query.params and not force:
            raise ParamsMismatch(
                f"record {rec.image_id!r} enrolled with {rec.feature.params}, query uses {query.params}"
            )
        if query.width_px > rec.feature.width_px or query.height_px > rec.feature.height_px:
            continue
        enrolled = est.get(rec, query.width_px, query.height_px)
        if match(enrolled, query, params).same:
            hits.append(rec.image_id)
    return hits


def evaluate(db, queries: Sequence[tuple[FeatureVector, str]],
             params: MatchParams | None = None) -> EvalReport:
    """Tally pairwise decisions of every query against every enrolled record.

    A record whose image_id equals the query's origin id is a true match.
    Enrolled images smaller than the query cannot be estimated and count as
    "different".
    """
    records = _records(db)
    est = _Estimates()
    tp = fp = fn = tn = 0
    for query, origin in queries:
        hits = set(identify(query, records, params, _estimates=est))
        for rec in records:
            genuine = rec.image_id == origin
            same = rec.image_id in hits
            if genuine and same:
                tp += 1
            elif same:
                fp += 1
            elif genuine:
                fn += 1
            else:
                tn += 1
    return EvalReport(tp, fp, fn, tn)
