"""Strictly proper scoring rules, oriented so that larger is more accurate."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .core import DomainError, Label, OutcomeDistribution, OutcomeSpace, ZeroProbabilityError

LOG_FLOOR = 1e-10


class ScoringRule(str, enum.Enum):
    BRIER = "brier"
    LOG = "log"
    SPHERICAL = "spherical"

    @property
    def score(self) -> Callable[[OutcomeDistribution, Label], float]:
        return _RULES[self]

    @classmethod
    def parse(cls, name: str) -> "ScoringRule":
        try:
            return cls(name)
        except ValueError:
            raise DomainError(f"unknown scoring rule {name!r}; expected brier, log or spherical") from None


def brier_score(p: OutcomeDistribution, y: Label) -> float:
    """Negated squared distance between ``p`` and the indicator of ``y``. Range [-2, 0]."""
    idx = p.space.index(y)
    return -math.fsum((q - (1.0 if i == idx else 0.0)) ** 2 for i, q in enumerate(p.probs))


def log_score(p: OutcomeDistribution, y: Label, floor: Optional[float] = None) -> float:
    """Natural log of the probability given to the realised outcome.

    Raises ZeroProbabilityError when that probability is 0, unless ``floor``
    is given (exploratory use only), in which case it is clamped to ``floor``.
    """
    q = p.prob(y)
    if q <= 0.0:
        if floor is None:
            raise ZeroProbabilityError(f"outcome {y!r} has probability 0; ln(0) is undefined")
        q = floor
    return math.log(q)


def spherical_score(p: OutcomeDistribution, y: Label) -> float:
    """p(y) / ||p||_2. Range [0, 1], equal to 1 only for the point mass on ``y``."""
    q = p.prob(y)
    return q / math.sqrt(math.fsum(x * x for x in p.probs))


_RULES = {
    ScoringRule.BRIER: brier_score,
    ScoringRule.LOG: log_score,
    ScoringRule.SPHERICAL: spherical_score,
}

ScoreFn = Callable[[OutcomeDistribution, Label], float]


@dataclass(frozen=True)
class ProprietyReport:
    is_proper: bool
    worst_violation: float
    n_points: int


def simplex_lattice(dim: int, steps: int, interior: bool = False) -> list[tuple[int, ...]]:
    """Integer compositions of ``steps`` into ``dim`` parts, in lexicographic order.

    With ``interior`` every part is at least 1.
    """
    lo = 1 if interior else 0
    out = []
    for head in itertools.product(range(lo, steps + 1), repeat=dim - 1):
        last = steps - sum(head)
        if last >= lo:
            out.append(head + (last,))
    return out


def check_strict_propriety(
    rule: Union[ScoringRule, ScoreFn],
    space: OutcomeSpace,
    grid_step: float,
    tol: float = 1e-12,
) -> ProprietyReport:
    """Brute-force strict propriety check on a simplex grid.

    For every grid forecast ``q`` the expected score under ``q`` of every grid
    report ``p`` is computed; the rule passes when every ``p != q`` scores
    below ``q`` by more than ``tol``. ``worst_violation`` is the largest
    ``E_q[s(p)] - E_q[s(q)]`` over ``p != q`` (negative for a proper rule).
    The log rule uses interior points only, where it is finite.
    """
    if not 0.0 < grid_step <= 0.1:
        raise DomainError(f"grid_step must lie in (0, 0.1], got {grid_step!r}")
    if len(space) not in (2, 3):
        raise DomainError(f"propriety check supports 2 or 3 outcomes, got {len(space)}")
    steps = round(1.0 / grid_step)
    if abs(steps * grid_step - 1.0) > 1e-9:
        raise DomainError(f"1/grid_step must be an integer, got {1.0 / grid_step!r}")

    score = rule.score if isinstance(rule, ScoringRule) else rule
    interior = rule is ScoringRule.LOG
    lattice = simplex_lattice(len(space), steps, interior=interior)
    dists = [OutcomeDistribution(space, tuple(c / steps for c in comp)) for comp in lattice]

    # scores[i, j] = s(p_i, y_j); forecasts q share the grid with reports p
    scores = np.array([[score(p, y) for y in space.labels] for p in dists])
    probs = np.array([d.probs for d in dists])
    expected = probs @ scores.T  # expected[k, i] = E_{q_k}[s(p_i)]
    excess = expected - np.diag(expected)[:, None]
    np.fill_diagonal(excess, -np.inf)
    worst = float(excess.max())
    return ProprietyReport(is_proper=worst < -tol, worst_violation=worst, n_points=len(dists))
