"""Utilities over measure values and their Harsanyi-style linear aggregation.

Overall(v) = alpha + sum_M w_M * u_M(v_M). Being affine in the per-measure
utilities, it satisfies ex ante Pareto indifference: lotteries that every
single-measure utility ranks equal are ranked equal overall.
"""

from __future__ import annotations

import bisect
import io
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union
from xml.sax.saxutils import escape

from .core import (
    AggregationSpec,
    CompensatedSum,
    DomainError,
    FiniteLottery,
    MeasureVector,
    UtilitySpec,
    UtilityUndefinedError,
)
from .scoring import simplex_lattice

RECIPROCAL_KINDS = ("reciprocal-abs", "log-reciprocal-abs")


def utility_eval(spec: UtilitySpec, r: float) -> float:
    if spec.kind == "linear":
        return float(r)
    if spec.kind in RECIPROCAL_KINDS:
        if r == 0.0:
            raise UtilityUndefinedError(f"{spec.kind} utility is undefined at a measure value of 0")
        inv = 1.0 / abs(r)
        return inv if spec.kind == "reciprocal-abs" else math.log(inv)
    # piecewise: linear interpolation, undefined outside the table
    xs, ys = spec.xs, spec.ys
    if not xs[0] <= r <= xs[-1]:
        raise DomainError(f"{r!r} is outside the piecewise utility's range [{xs[0]}, {xs[-1]}]")
    i = bisect.bisect_right(xs, r) - 1
    if i >= len(xs) - 1:
        return ys[-1]
    t = (r - xs[i]) / (xs[i + 1] - xs[i])
    return ys[i] + t * (ys[i + 1] - ys[i])


def validate_utilities(utilities: Mapping[str, UtilitySpec], v: MeasureVector) -> None:
    """Reject reciprocal utilities paired with a measure value of exactly zero."""
    for m, value in v.entries:
        u = utilities.get(m)
        if u is None:
            raise DomainError(f"no utility given for measure {m!r}")
        if u.kind in RECIPROCAL_KINDS and value == 0.0:
            raise UtilityUndefinedError(
                f"measure {m!r} is 0, where {u.kind} is undefined; use a linear or piecewise utility"
            )


def overall(spec: AggregationSpec, v: MeasureVector) -> float:
    spec.check_covers(v)
    acc = CompensatedSum()
    acc.add(spec.alpha)
    for m, value in v.entries:
        acc.add(spec.weights[m] * utility_eval(spec.utilities[m], value))
    return acc.value


def expected_utility(
    lottery: FiniteLottery,
    spec: Union[UtilitySpec, AggregationSpec],
    measure_id: Optional[str] = None,
) -> float:
    """Expectation over ``lottery`` of one measure's utility or of Overall.

    With a UtilitySpec, ``measure_id`` names the coordinate it reads. With an
    AggregationSpec, ``measure_id`` selects that measure's utility; without
    it the expectation of Overall is returned.
    """
    if isinstance(spec, UtilitySpec):
        if measure_id is None:
            raise DomainError("a single utility needs the measure_id it applies to")
        if measure_id not in lottery.measure_ids:
            raise DomainError(f"measure {measure_id!r} not in the lottery's schema")
        f = lambda v: utility_eval(spec, v[measure_id])  # noqa: E731
    elif measure_id is not None:
        if measure_id not in spec.utilities or measure_id not in lottery.measure_ids:
            raise DomainError(f"measure {measure_id!r} not covered by both spec and lottery")
        u = spec.utilities[measure_id]
        f = lambda v: utility_eval(u, v[measure_id])  # noqa: E731
    else:
        f = lambda v: overall(spec, v)  # noqa: E731
    acc = CompensatedSum()
    for v, prob in lottery.support:
        acc.add(prob * f(v))
    return acc.value


@dataclass(frozen=True)
class ParetoReport:
    premise_holds: bool
    conclusion_holds: bool
    per_measure_gaps: tuple
    overall_gap: float


def check_pareto_indifference(
    mu: FiniteLottery, nu: FiniteLottery, spec: AggregationSpec, tol: float = 1e-9
) -> ParetoReport:
    """Test the indifference premise per measure and the overall conclusion.

    The conclusion tolerance is ``(sum |w_M| + 1) * tol`` so that premise gaps
    up to ``tol`` cannot by themselves break the conclusion.
    """
    if mu.measure_ids != nu.measure_ids or set(mu.measure_ids) != set(spec.weights):
        raise DomainError("lotteries and aggregation spec must share one measure schema")
    gaps = tuple(
        (m, abs(expected_utility(mu, spec, m) - expected_utility(nu, spec, m))) for m in mu.measure_ids
    )
    overall_gap = abs(expected_utility(mu, spec) - expected_utility(nu, spec))
    bound = math.fsum(abs(w) for w in spec.weights.values()) * tol + tol
    return ParetoReport(
        premise_holds=all(g <= tol for _, g in gaps),
        conclusion_holds=overall_gap <= bound,
        per_measure_gaps=gaps,
        overall_gap=overall_gap,
    )


@dataclass(frozen=True)
class SimplexGrid:
    """Strictly positive barycentric lattice points with denominator ``resolution``."""

    resolution: int
    dim: int
    points: tuple

    @classmethod
    def build(cls, resolution: int, dim: int = 3) -> "SimplexGrid":
        if not isinstance(resolution, int) or resolution < 2:
            raise DomainError(f"resolution must be an integer >= 2, got {resolution!r}")
        if dim < 2:
            raise DomainError("a weight simplex needs at least two measures")
        if resolution < dim:
            raise DomainError(f"resolution {resolution} leaves no strictly positive points in {dim} dimensions")
        pts = tuple(tuple(c / resolution for c in comp) for comp in simplex_lattice(dim, resolution, interior=True))
        return cls(resolution, dim, pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SweepResult:
    measure_ids: tuple
    resolution: int
    points: tuple
    values: tuple
    argmax_index: int
    corner_limits: Mapping

    @property
    def argmax_weights(self) -> tuple:
        return self.points[self.argmax_index]

    @property
    def argmax_value(self) -> float:
        return self.values[self.argmax_index]

    def summary(self) -> dict:
        return {
            "measures": list(self.measure_ids),
            "resolution": self.resolution,
            "n_points": len(self.points),
            "argmax": {m: w for m, w in zip(self.measure_ids, self.argmax_weights)},
            "argmax_value": self.argmax_value,
            "min_value": min(self.values),
            "corner_limits": dict(self.corner_limits),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join([f"w_{m}" for m in self.measure_ids] + ["overall"]) + "\n")
        for w, val in zip(self.points, self.values):
            buf.write(",".join(f"{x:.6f}" for x in (*w, val)) + "\n")
        return buf.getvalue()


def simplex_sweep(
    v: MeasureVector,
    utilities: Mapping[str, UtilitySpec],
    resolution: int,
    alpha: float = 0.0,
) -> SweepResult:
    """Evaluate Overall at every strictly positive weight vector on the grid.

    Ties for the maximum go to the lexicographically smallest weight vector.
    Corner limits are the values approached as all weight moves onto a single
    measure, i.e. ``alpha + u_M(v_M)``.
    """
    validate_utilities(utilities, v)
    ids = v.measure_ids
    utils = [utility_eval(utilities[m], v[m]) for m in ids]
    grid = SimplexGrid.build(resolution, len(ids))
    values = []
    for w in grid.points:
        acc = CompensatedSum()
        acc.add(alpha)
        for wi, ui in zip(w, utils):
            acc.add(wi * ui)
        values.append(acc.value)
    best = 0
    for i, val in enumerate(values):
        if val > values[best] or (val == values[best] and grid.points[i] < grid.points[best]):
            best = i
    corners = {m: alpha + u for m, u in zip(ids, utils)}
    return SweepResult(ids, resolution, grid.points, tuple(values), best, corners)


_PALETTE = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)]


def _colour(t: float) -> str:
    t = min(1.0, max(0.0, t))
    pos = t * (len(_PALETTE) - 1)
    i = min(int(pos), len(_PALETTE) - 2)
    f = pos - i
    a, b = _PALETTE[i], _PALETTE[i + 1]
    return "#%02x%02x%02x" % tuple(round(x + f * (y - x)) for x, y in zip(a, b))


def ternary_svg(result: SweepResult, title: str = "", size: int = 480) -> str:
    """Self-contained SVG heatmap of a three-measure sweep."""
    if len(result.measure_ids) != 3:
        raise DomainError("the ternary heatmap needs exactly three measures")
    pad = 60
    side = size - 2 * pad
    height = side * math.sqrt(3) / 2
    lo, hi = min(result.values), max(result.values)
    span = hi - lo if hi > lo else 1.0
    r = side / result.resolution * 0.6

    def xy(w: Sequence[float]) -> tuple:
        # corner 0 bottom-left, corner 1 bottom-right, corner 2 top
        x = pad + side * (w[1] + w[2] / 2)
        y = pad + height * (1 - w[2]) + 20
        return x, y

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{size / 2:.1f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for w, val in zip(result.points, result.values):
        x, y = xy(w)
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" fill="{_colour((val - lo) / span)}"/>')
    corners = [xy(c) for c in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
    out.append(
        '<polygon points="%s" fill="none" stroke="black"/>'
        % " ".join(f"{x:.2f},{y:.2f}" for x, y in corners)
    )
    anchors = [("end", -6, 16), ("start", 6, 16), ("middle", 0, -8)]
    for (x, y), m, (anchor, dx, dy) in zip(corners, result.measure_ids, anchors):
        out.append(f'<text x="{x + dx:.2f}" y="{y + dy:.2f}" text-anchor="{anchor}" font-size="12">w_{escape(m)}</text>')
    mx, my = xy(result.argmax_weights)
    out.append(f'<circle cx="{mx:.2f}" cy="{my:.2f}" r="{r * 1.8:.2f}" fill="none" stroke="red"/>')
    out.append(
        f'<text x="{pad}" y="{size - 12}" font-size="11">min {lo:.4f}  max {hi:.4f} '
        f'(argmax {", ".join(f"{w:.2f}" for w in result.argmax_weights)})</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
