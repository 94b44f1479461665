"""Group-fairness measures over an estimated model.

The ground-truth positive class is ``partition.positive_label``; every other
label is the negative class. For COMPAS the positive class is "did not
re-offend", so a false negative is probability mass on re-offending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

from .core import (
    CompensatedSum,
    DomainError,
    EmptyPositiveClassError,
    GroupPartition,
    InputDistribution,
    UnsupportedMeasureError,
    id_sort_key,
)
from .estimation import EstimatedModel

MEASURE_KINDS = ("eqopp",)


@dataclass(frozen=True)
class FairnessMeasureSpec:
    """Which fairness measure to compute and the instructions it needs.

    ``opaque_payload`` is reserved for measures whose instructions do not fit a
    group partition; nothing interprets it yet.
    """

    kind: str
    instructions: GroupPartition
    opaque_payload: Optional[bytes] = None


def _negative_mass(dist, positive_label) -> float:
    return math.fsum(q for label, q in zip(dist.space.labels, dist.probs) if label != positive_label)


def group_fnr(
    model: EstimatedModel,
    truth: Mapping,
    p: InputDistribution,
    partition: GroupPartition,
    group: str,
) -> float:
    """P-weighted mean negative-class probability over the group's true positives."""
    if group not in partition.groups:
        raise DomainError(f"{group!r} is not one of the distinguished groups {partition.groups!r}")
    ids = model.domain()
    if ids != set(truth) or ids != p.domain():
        raise DomainError("model, ground truth and input distribution must share one input-id domain")
    missing = ids - set(partition.group_of)
    if missing:
        raise DomainError(f"{len(missing)} input(s) are not assigned to any group")

    positives = sorted(
        (k for k in ids if partition.group_of[k] == group and truth[k] == partition.positive_label),
        key=id_sort_key,
    )
    mass = CompensatedSum()
    weighted = CompensatedSum()
    for k in positives:
        mass.add(p[k])
        weighted.add(p[k] * _negative_mass(model[k], partition.positive_label))
    if not positives or mass.value <= 0.0:
        raise EmptyPositiveClassError(f"group {group!r} has no ground-truth positives with positive weight")
    return min(1.0, max(0.0, weighted.value / mass.value))


def eq_opp(model: EstimatedModel, truth: Mapping, p: InputDistribution, partition: GroupPartition) -> float:
    """Negated absolute gap between the first two distinguished groups' FNRs."""
    g1, g2 = partition.groups[:2]
    return -abs(group_fnr(model, truth, p, partition, g1) - group_fnr(model, truth, p, partition, g2))


def evaluate_fairness(spec: FairnessMeasureSpec, model: EstimatedModel, truth: Mapping, p: InputDistribution) -> float:
    if spec.kind == "eqopp":
        if len(spec.instructions.groups) != 2:
            raise DomainError("eqopp compares exactly two distinguished groups")
        return eq_opp(model, truth, p, spec.instructions)
    raise UnsupportedMeasureError(f"fairness measure {spec.kind!r} is not implemented")


def fairness_report(spec: FairnessMeasureSpec, model: EstimatedModel, truth: Mapping, p: InputDistribution) -> dict:
    value = evaluate_fairness(spec, model, truth, p)
    fnrs = {g: group_fnr(model, truth, p, spec.instructions, g) for g in spec.instructions.groups}
    return {"measure": spec.kind, "value": value, "fnr_by_group": fnrs}
