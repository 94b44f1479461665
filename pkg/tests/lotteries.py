"""Construct lottery pairs whose per-measure expected utilities agree exactly."""

from __future__ import annotations

import numpy as np

from fairagg.core import AggregationSpec, FiniteLottery, MeasureVector, UtilitySpec

MEASURES = ("brier", "log", "spherical", "eqopp", "dp")
LO, HI = -2.0, -0.05


def random_utility(rng: np.random.Generator) -> UtilitySpec:
    kind = rng.choice(["linear", "reciprocal-abs", "log-reciprocal-abs", "piecewise"])
    if kind != "piecewise":
        return UtilitySpec(str(kind))
    inner = np.sort(rng.uniform(LO, HI, size=int(rng.integers(0, 4))))
    xs = np.unique(np.concatenate([[LO], inner, [HI]]))
    ys = np.cumsum(rng.uniform(0.0, 3.0, size=len(xs)))
    return UtilitySpec("piecewise", tuple(xs), tuple(ys))


def random_spec(rng: np.random.Generator, ids) -> AggregationSpec:
    return AggregationSpec(
        weights={m: float(rng.uniform(-2.0, 2.0)) for m in ids},
        utilities={m: random_utility(rng) for m in ids},
        alpha=float(rng.uniform(-5.0, 5.0)),
    )


def indifferent_pair(rng: np.random.Generator, ids, q: int = 1):
    """Two lotteries with identical per-measure marginals but different joint support.

    Both put mass 1/n on each of n support points; the second lottery applies
    an independent permutation per coordinate, so every single-measure
    expectation is the same sum in a different order.
    """
    n = int(rng.integers(2, 7))
    values = rng.uniform(LO, HI, size=(n, len(ids)))
    permuted = values.copy()
    for j in range(len(ids)):
        permuted[:, j] = values[rng.permutation(n), j]

    def lottery(rows):
        return FiniteLottery(tuple(
            (MeasureVector(tuple(zip(ids, map(float, row))), q, len(ids) - q), 1.0 / n) for row in rows
        ))

    return lottery(values), lottery(permuted)
