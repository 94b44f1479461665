"""Estimators that rebuild per-input predictive distributions from a stream."""

from __future__ import annotations

import collections
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Mapping

from .core import (
    DomainError,
    InputId,
    OutcomeDistribution,
    OutcomeSpace,
    PredictionRecord,
    PredictionStream,
    id_sort_key,
)

RECID = "recid"
NO_RECID = "no_recid"
COMPAS_SPACE = OutcomeSpace((NO_RECID, RECID))


@dataclass(frozen=True)
class EstimatedModel:
    """Estimated predictive distribution for each observed input id."""

    dists: Mapping

    def __post_init__(self) -> None:
        if not self.dists:
            raise DomainError("an estimated model needs at least one input")
        for k, d in self.dists.items():
            if not isinstance(d, OutcomeDistribution):
                raise DomainError(f"model entry for {k!r} is not an OutcomeDistribution")
        object.__setattr__(self, "dists", MappingProxyType(dict(self.dists)))

    def __getitem__(self, input_id: InputId) -> OutcomeDistribution:
        return self.dists[input_id]

    def __len__(self) -> int:
        return len(self.dists)

    def domain(self) -> set:
        return set(self.dists)

    def to_json(self) -> dict:
        return {"dists": [[k, self.dists[k].to_json()] for k in sorted(self.dists, key=id_sort_key)]}

    @classmethod
    def from_json(cls, data: Mapping) -> "EstimatedModel":
        return cls({k: OutcomeDistribution.from_json(d) for k, d in data["dists"]})


def empirical_mle_estimator(stream: PredictionStream) -> EstimatedModel:
    """Relative frequency of each sampled output, per input id."""
    if not isinstance(stream, PredictionStream):
        raise DomainError("expected a PredictionStream")
    counts: dict = collections.defaultdict(collections.Counter)
    for r in stream.records:
        if r.sampled_output is None:
            raise DomainError(f"record for {r.input_id!r} has no sampled output")
        counts[r.input_id][r.sampled_output] += 1
    dists = {}
    for input_id, c in counts.items():
        n = sum(c.values())
        dists[input_id] = OutcomeDistribution(stream.space, tuple(c[y] / n for y in stream.space.labels))
    return EstimatedModel(dists)


def decile_to_probability(decile: float) -> float:
    """Map a COMPAS decile (integer 0..10) to an estimated probability of re-offending."""
    if isinstance(decile, bool) or decile is None:
        raise DomainError(f"decile must be an integer in [0, 10], got {decile!r}")
    if isinstance(decile, float):
        if not decile.is_integer():
            raise DomainError(f"decile must be an integer in [0, 10], got {decile!r}")
        decile = int(decile)
    if not isinstance(decile, int) or not 0 <= decile <= 10:
        raise DomainError(f"decile must be an integer in [0, 10], got {decile!r}")
    if decile == 0:
        return 0.0001
    if decile == 10:
        return 0.9999
    return 0.1 * decile


def uniquify_ids(stream: PredictionStream) -> PredictionStream:
    """Give every record its own evaluation unit.

    Ids that occur more than once are suffixed with ``#<record index>``;
    a stream with unique ids is returned unchanged.
    """
    counts = collections.Counter(r.input_id for r in stream.records)
    if all(n == 1 for n in counts.values()):
        return stream
    taken = set(counts)
    records = []
    for i, r in enumerate(stream.records):
        if counts[r.input_id] > 1:
            new_id = f"{r.input_id}#{i}"
            if new_id in taken:
                raise DomainError(f"synthesized id {new_id!r} collides with an existing id")
            taken.add(new_id)
            r = PredictionRecord(new_id, r.ground_truth, r.sampled_output, r.raw_score, r.group)
        records.append(r)
    return PredictionStream(stream.space, tuple(records))


def compas_decile_estimator(stream: PredictionStream) -> EstimatedModel:
    """Per-record probability of re-offending from the recorded decile score.

    Records with duplicated input ids are treated as distinct units (see
    ``uniquify_ids``); apply the same function before deriving ground truth
    or the input distribution so the domains agree.
    """
    if not isinstance(stream, PredictionStream):
        raise DomainError("expected a PredictionStream")
    if set(stream.space.labels) != {RECID, NO_RECID} or len(stream.space) != 2:
        raise DomainError(f"the decile estimator needs outcome space {COMPAS_SPACE.labels!r}")
    stream = uniquify_ids(stream)
    dists = {}
    for r in stream.records:
        if r.raw_score is None:
            raise DomainError(f"record {r.input_id!r} has no decile score")
        p_recid = decile_to_probability(r.raw_score)
        dists[r.input_id] = OutcomeDistribution.from_mapping(
            stream.space, {RECID: p_recid, NO_RECID: 1.0 - p_recid}
        )
    return EstimatedModel(dists)


ESTIMATORS: dict[str, Callable[[PredictionStream], EstimatedModel]] = {
    "mle": empirical_mle_estimator,
    "compas-decile": compas_decile_estimator,
}


def get_estimator(name: str) -> Callable[[PredictionStream], EstimatedModel]:
    try:
        return ESTIMATORS[name]
    except KeyError:
        raise DomainError(f"unknown estimator {name!r}; expected one of {sorted(ESTIMATORS)}") from None
