"""Domain types shared across the package.

Everything here is immutable after construction. Each type has a canonical
JSON form (``to_json`` / ``from_json``) used as the CLI interchange format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Hashable, Iterable, Mapping, Optional, Sequence

NORMALIZATION_TOL = 1e-9

Label = Hashable
InputId = Hashable


class FairAggError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FairAggError, ValueError):
    """An argument lies outside the domain of an operation."""


class ZeroProbabilityError(FairAggError, ArithmeticError):
    """The logarithmic score was asked for ln(0)."""


class EmptyPositiveClassError(DomainError):
    """A group has no ground-truth positives, so its FNR is undefined."""


class UnsupportedMeasureError(FairAggError):
    """A fairness measure kind has no implementation."""


class UtilityUndefinedError(FairAggError, ArithmeticError):
    """A reciprocal utility was evaluated at a measure value of zero."""


def id_sort_key(key: Any) -> tuple:
    # mixed int/str ids must still sort deterministically
    return (type(key).__name__, key)


class CompensatedSum:
    """Neumaier's variant of Kahan summation.

    Keeps a running compensation term so that long sums of similar-magnitude
    floats are reproducible and accurate regardless of length.
    """

    __slots__ = ("total", "compensation")

    def __init__(self) -> None:
        self.total = 0.0
        self.compensation = 0.0

    def add(self, value: float) -> None:
        t = self.total + value
        if abs(self.total) >= abs(value):
            self.compensation += (self.total - t) + value
        else:
            self.compensation += (value - t) + self.total
        self.total = t

    @property
    def value(self) -> float:
        return self.total + self.compensation


def compensated_sum(values: Iterable[float]) -> float:
    acc = CompensatedSum()
    for v in values:
        acc.add(v)
    return acc.value


def _frozen_map(data: Mapping) -> Mapping:
    return MappingProxyType(dict(data))


@dataclass(frozen=True)
class OutcomeSpace:
    labels: tuple

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise DomainError("an outcome space needs at least two labels")
        if len(set(labels)) != len(labels):
            raise DomainError(f"duplicate outcome labels in {labels!r}")

    def __contains__(self, label: Label) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: Label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DomainError(f"label {label!r} is not in outcome space {self.labels!r}") from None

    def to_json(self) -> dict:
        return {"labels": list(self.labels)}

    @classmethod
    def from_json(cls, data: Mapping) -> "OutcomeSpace":
        return cls(tuple(data["labels"]))


@dataclass(frozen=True)
class OutcomeDistribution:
    """A probability vector over a finite outcome space, aligned with ``space.labels``."""

    space: OutcomeSpace
    probs: tuple

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if len(probs) != len(self.space):
            raise DomainError(
                f"expected {len(self.space)} probabilities, got {len(probs)}"
            )
        for p in probs:
            if not math.isfinite(p) or p < 0.0 or p > 1.0:
                raise DomainError(f"probability {p!r} is outside [0, 1]")
        total = math.fsum(probs)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"probabilities sum to {total!r}, not 1")

    @classmethod
    def from_mapping(cls, space: OutcomeSpace, probs: Mapping[Label, float]) -> "OutcomeDistribution":
        unknown = set(probs) - set(space.labels)
        if unknown:
            raise DomainError(f"labels {sorted(map(repr, unknown))} not in outcome space")
        return cls(space, tuple(probs.get(label, 0.0) for label in space.labels))

    def prob(self, label: Label) -> float:
        return self.probs[self.space.index(label)]

    def as_dict(self) -> dict:
        return dict(zip(self.space.labels, self.probs))

    def to_json(self) -> dict:
        return {"space": self.space.to_json(), "probs": list(self.probs)}

    @classmethod
    def from_json(cls, data: Mapping) -> "OutcomeDistribution":
        return cls(OutcomeSpace.from_json(data["space"]), tuple(data["probs"]))


def point_mass(space: OutcomeSpace, label: Label) -> OutcomeDistribution:
    """The deterministic prediction that puts all mass on ``label``."""
    idx = space.index(label)
    return OutcomeDistribution(space, tuple(1.0 if i == idx else 0.0 for i in range(len(space))))


@dataclass(frozen=True)
class PredictionRecord:
    input_id: InputId
    ground_truth: Label
    sampled_output: Optional[Label] = None
    raw_score: Optional[float] = None
    group: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "input_id": self.input_id,
            "sampled_output": self.sampled_output,
            "raw_score": self.raw_score,
            "ground_truth": self.ground_truth,
            "group": self.group,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "PredictionRecord":
        return cls(
            input_id=data["input_id"],
            ground_truth=data["ground_truth"],
            sampled_output=data.get("sampled_output"),
            raw_score=data.get("raw_score"),
            group=data.get("group"),
        )


@dataclass(frozen=True)
class PredictionStream:
    space: OutcomeSpace
    records: tuple

    def __post_init__(self) -> None:
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        if not records:
            raise DomainError("a prediction stream must contain at least one record")
        for r in records:
            if r.ground_truth not in self.space:
                raise DomainError(f"ground truth {r.ground_truth!r} of {r.input_id!r} not in outcome space")
            if r.sampled_output is not None and r.sampled_output not in self.space:
                raise DomainError(f"sampled output {r.sampled_output!r} of {r.input_id!r} not in outcome space")

    def __len__(self) -> int:
        return len(self.records)

    def input_ids(self) -> list:
        """Distinct input ids in first-seen order."""
        return list(dict.fromkeys(r.input_id for r in self.records))

    def ground_truth(self) -> Mapping:
        """The ground-truth function F as a map input_id -> label."""
        truth: dict = {}
        for r in self.records:
            seen = truth.setdefault(r.input_id, r.ground_truth)
            if seen != r.ground_truth:
                raise DomainError(f"input {r.input_id!r} has conflicting ground truth {seen!r} / {r.ground_truth!r}")
        return _frozen_map(truth)

    def to_json(self) -> dict:
        return {"space": self.space.to_json(), "records": [r.to_json() for r in self.records]}

    @classmethod
    def from_json(cls, data: Mapping) -> "PredictionStream":
        return cls(
            OutcomeSpace.from_json(data["space"]),
            tuple(PredictionRecord.from_json(r) for r in data["records"]),
        )


@dataclass(frozen=True)
class InputDistribution:
    """The weighting P over observed inputs."""

    weights: Mapping

    def __post_init__(self) -> None:
        weights = dict(self.weights)
        if not weights:
            raise DomainError("an input distribution needs at least one input")
        for k, w in weights.items():
            if not math.isfinite(w) or w < 0.0:
                raise DomainError(f"weight {w!r} for input {k!r} is negative or not finite")
        total = math.fsum(weights.values())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"input weights sum to {total!r}, not 1")
        object.__setattr__(self, "weights", _frozen_map(weights))

    def __getitem__(self, input_id: InputId) -> float:
        return self.weights[input_id]

    def domain(self) -> set:
        return set(self.weights)

    def check_stream(self, stream: PredictionStream) -> None:
        if self.domain() != set(stream.input_ids()):
            raise DomainError("input distribution domain differs from the stream's input ids")

    def to_json(self) -> dict:
        return {"weights": [[k, self.weights[k]] for k in sorted(self.weights, key=id_sort_key)]}

    @classmethod
    def from_json(cls, data: Mapping) -> "InputDistribution":
        return cls({k: w for k, w in data["weights"]})


def uniform_input_distribution(stream: PredictionStream) -> InputDistribution:
    """Equal weight on every distinct input id of ``stream``."""
    if not isinstance(stream, PredictionStream) or not stream.records:
        raise DomainError("cannot build a uniform distribution over an empty stream")
    ids = stream.input_ids()
    w = 1.0 / len(ids)
    return InputDistribution({k: w for k in ids})


@dataclass(frozen=True)
class GroupPartition:
    """Assignment of inputs to groups, plus which label counts as positive.

    ``groups`` lists the distinguished tags compared by a two-group measure;
    other tags may appear in ``group_of`` and are simply carried along.
    """

    group_of: Mapping
    groups: tuple
    positive_label: Label

    def __post_init__(self) -> None:
        object.__setattr__(self, "group_of", _frozen_map(self.group_of))
        groups = tuple(self.groups)
        object.__setattr__(self, "groups", groups)
        if len(groups) < 2 or len(set(groups)) != len(groups):
            raise DomainError(f"need at least two distinct distinguished groups, got {groups!r}")
        present = set(self.group_of.values())
        for g in groups:
            if g not in present:
                raise DomainError(f"group {g!r} has no members")

    def members(self, group: str) -> list:
        return [k for k, g in self.group_of.items() if g == group]

    def check_stream(self, stream: PredictionStream) -> None:
        missing = [k for k in stream.input_ids() if k not in self.group_of]
        if missing:
            raise DomainError(f"{len(missing)} input(s) have no group, e.g. {missing[0]!r}")
        if stream.space.labels and self.positive_label not in stream.space:
            raise DomainError(f"positive label {self.positive_label!r} not in outcome space")

    @classmethod
    def from_stream(cls, stream: PredictionStream, groups: Sequence[str], positive_label: Label) -> "GroupPartition":
        """Build a partition from the ``group`` tag carried on each record."""
        group_of: dict = {}
        for r in stream.records:
            if r.group is None:
                raise DomainError(f"record {r.input_id!r} has no group tag")
            seen = group_of.setdefault(r.input_id, r.group)
            if seen != r.group:
                raise DomainError(f"input {r.input_id!r} is assigned to groups {seen!r} and {r.group!r}")
        partition = cls(group_of, tuple(groups), positive_label)
        partition.check_stream(stream)
        return partition

    def to_json(self) -> dict:
        return {
            "group_of": [[k, self.group_of[k]] for k in sorted(self.group_of, key=id_sort_key)],
            "groups": list(self.groups),
            "positive_label": self.positive_label,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "GroupPartition":
        return cls({k: g for k, g in data["group_of"]}, tuple(data["groups"]), data["positive_label"])


@dataclass(frozen=True)
class MeasureVector:
    """Values of Q accuracy measures followed by T fairness measures."""

    entries: tuple
    accuracy_count: int
    fairness_count: int

    def __post_init__(self) -> None:
        entries = tuple((str(m), float(v)) for m, v in self.entries)
        object.__setattr__(self, "entries", entries)
        ids = [m for m, _ in entries]
        if len(set(ids)) != len(ids):
            raise DomainError(f"duplicate measure ids in {ids!r}")
        if self.accuracy_count < 0 or self.fairness_count < 0:
            raise DomainError("measure counts must be non-negative")
        if len(entries) != self.accuracy_count + self.fairness_count:
            raise DomainError(
                f"{len(entries)} entries but Q + T = {self.accuracy_count + self.fairness_count}"
            )

    @property
    def measure_ids(self) -> tuple:
        return tuple(m for m, _ in self.entries)

    def __getitem__(self, measure_id: str) -> float:
        for m, v in self.entries:
            if m == measure_id:
                return v
        raise KeyError(measure_id)

    def as_dict(self) -> dict:
        return dict(self.entries)

    def to_json(self) -> dict:
        return {
            "entries": [[m, v] for m, v in self.entries],
            "accuracy_count": self.accuracy_count,
            "fairness_count": self.fairness_count,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "MeasureVector":
        return cls(tuple((m, v) for m, v in data["entries"]), data["accuracy_count"], data["fairness_count"])


UTILITY_KINDS = ("linear", "reciprocal-abs", "log-reciprocal-abs", "piecewise")


@dataclass(frozen=True)
class UtilitySpec:
    """A monotone utility over a single measure value.

    ``piecewise`` takes ``xs`` (strictly increasing) and ``ys`` (non-decreasing)
    and interpolates linearly between knots; the other kinds take no
    parameters.
    """

    kind: str
    xs: tuple = ()
    ys: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in UTILITY_KINDS:
            raise DomainError(f"unknown utility kind {self.kind!r}; expected one of {UTILITY_KINDS}")
        xs = tuple(float(x) for x in self.xs)
        ys = tuple(float(y) for y in self.ys)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if self.kind == "piecewise":
            if len(xs) < 2 or len(xs) != len(ys):
                raise DomainError("a piecewise utility needs matching xs/ys with at least two knots")
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise DomainError("piecewise xs must be strictly increasing")
            if any(b < a for a, b in zip(ys, ys[1:])):
                raise DomainError("piecewise ys must be non-decreasing")
        elif xs or ys:
            raise DomainError(f"utility kind {self.kind!r} takes no table")

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "piecewise":
            out["xs"] = list(self.xs)
            out["ys"] = list(self.ys)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "UtilitySpec":
        return cls(data["kind"], tuple(data.get("xs", ())), tuple(data.get("ys", ())))


@dataclass(frozen=True)
class AggregationSpec:
    """Constant ``alpha`` plus a weight and a utility per measure id."""

    weights: Mapping
    utilities: Mapping
    alpha: float = 0.0
    simplex: bool = False

    def __post_init__(self) -> None:
        weights = {str(k): float(v) for k, v in dict(self.weights).items()}
        utilities = dict(self.utilities)
        if set(weights) != set(utilities):
            raise DomainError("weights and utilities must cover the same measure ids")
        for k, u in utilities.items():
            if not isinstance(u, UtilitySpec):
                raise DomainError(f"utility for {k!r} is not a UtilitySpec")
        if not all(math.isfinite(w) for w in weights.values()) or not math.isfinite(self.alpha):
            raise DomainError("weights and alpha must be finite")
        if self.simplex:
            if any(w <= 0.0 for w in weights.values()):
                raise DomainError("simplex weights must all be strictly positive")
            total = math.fsum(weights.values())
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise DomainError(f"simplex weights sum to {total!r}, not 1")
        object.__setattr__(self, "weights", _frozen_map(weights))
        object.__setattr__(self, "utilities", _frozen_map(utilities))
        object.__setattr__(self, "alpha", float(self.alpha))

    def check_covers(self, v: MeasureVector) -> None:
        if set(self.weights) != set(v.measure_ids):
            raise DomainError(
                f"aggregation covers {sorted(self.weights)} but the vector has {list(v.measure_ids)}"
            )

    def to_json(self) -> dict:
        keys = sorted(self.weights)
        return {
            "alpha": self.alpha,
            "weights": {k: self.weights[k] for k in keys},
            "utilities": {k: self.utilities[k].to_json() for k in keys},
            "simplex": self.simplex,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "AggregationSpec":
        return cls(
            weights=dict(data["weights"]),
            utilities={k: UtilitySpec.from_json(u) for k, u in data["utilities"].items()},
            alpha=data.get("alpha", 0.0),
            simplex=data.get("simplex", False),
        )


@dataclass(frozen=True)
class FiniteLottery:
    """A finitely supported distribution over measure vectors."""

    support: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        support = tuple((v, float(p)) for v, p in self.support)
        object.__setattr__(self, "support", support)
        if not support:
            raise DomainError("a lottery needs at least one support point")
        schema = support[0][0].measure_ids
        for v, p in support:
            if not isinstance(v, MeasureVector):
                raise DomainError("lottery support points must be MeasureVectors")
            if v.measure_ids != schema:
                raise DomainError("all support vectors must share one measure schema")
            if not math.isfinite(p) or p < 0.0:
                raise DomainError(f"lottery probability {p!r} is negative or not finite")
        total = math.fsum(p for _, p in support)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"lottery probabilities sum to {total!r}, not 1")

    @property
    def measure_ids(self) -> tuple:
        return self.support[0][0].measure_ids

    @classmethod
    def point(cls, v: MeasureVector) -> "FiniteLottery":
        return cls(((v, 1.0),))

    def to_json(self) -> dict:
        return {"support": [[v.to_json(), p] for v, p in self.support]}

    @classmethod
    def from_json(cls, data: Mapping) -> "FiniteLottery":
        return cls(tuple((MeasureVector.from_json(v), p) for v, p in data["support"]))
