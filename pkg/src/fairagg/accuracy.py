"""Estimated accuracy: the input-weighted expected score of a model."""

from __future__ import annotations

from typing import Mapping, Union

from .core import CompensatedSum, DomainError, InputDistribution, id_sort_key
from .estimation import EstimatedModel
from .scoring import ScoreFn, ScoringRule


def _check_domains(model: EstimatedModel, truth: Mapping, p: InputDistribution) -> list:
    ids = model.domain()
    if ids != set(truth) or ids != p.domain():
        raise DomainError("model, ground truth and input distribution must share one input-id domain")
    return sorted(ids, key=id_sort_key)


def estimated_accuracy(
    rule: Union[ScoringRule, ScoreFn],
    model: EstimatedModel,
    truth: Mapping,
    p: InputDistribution,
) -> float:
    """Sum over inputs of P(x) * s(model(x), truth(x)).

    Terms are added in sorted input-id order with compensated summation so the
    result does not depend on dict ordering. A directly specified model (no
    sampling) gives the true rather than estimated accuracy.
    """
    score = rule.score if isinstance(rule, ScoringRule) else rule
    acc = CompensatedSum()
    for input_id in _check_domains(model, truth, p):
        acc.add(p[input_id] * score(model[input_id], truth[input_id]))
    return acc.value


def accuracy_report(rule: ScoringRule, model: EstimatedModel, truth: Mapping, p: InputDistribution) -> dict:
    return {"rule": rule.value, "value": estimated_accuracy(rule, model, truth, p), "n_inputs": len(model)}
