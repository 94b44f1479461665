import math

import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import BINARY, TERNARY, distributions
from fairagg.core import DomainError, OutcomeDistribution, OutcomeSpace, ZeroProbabilityError, point_mass
from fairagg.scoring import (
    ScoringRule,
    brier_score,
    check_strict_propriety,
    log_score,
    simplex_lattice,
    spherical_score,
)

UNIFORM = OutcomeDistribution(BINARY, (0.5, 0.5))
SKEWED = OutcomeDistribution(BINARY, (0.2, 0.8))


def spherical_unsquared(p, y):
    """The spherical score with an unsquared denominator; its denominator is always 1."""
    return p.prob(y) / math.sqrt(math.fsum(p.probs))


class TestBrier:
    def test_perfect(self):
        assert brier_score(point_mass(BINARY, 1), 1) == 0.0

    def test_uniform(self):
        assert brier_score(UNIFORM, 1) == -0.5

    def test_skewed(self):
        assert brier_score(SKEWED, 1) == pytest.approx(-0.08, abs=1e-15)
        assert brier_score(SKEWED, 1) == pytest.approx(float(oracles.brier({0: 0.2, 1: 0.8}, 1)), abs=1e-15)

    def test_unknown_label(self):
        with pytest.raises(DomainError):
            brier_score(UNIFORM, 2)

    @given(distributions(TERNARY), st.sampled_from(TERNARY.labels))
    def test_bounds(self, p, y):
        s = brier_score(p, y)
        assert -2.0 <= s <= 0.0
        assert (s == 0.0) == (p == point_mass(TERNARY, y))


class TestLog:
    def test_perfect(self):
        assert log_score(point_mass(BINARY, 0), 0) == 0.0

    def test_uniform(self):
        assert log_score(UNIFORM, 1) == pytest.approx(-0.6931471805599453, abs=1e-15)

    def test_zero_probability(self):
        p = OutcomeDistribution(BINARY, (1.0, 0.0))
        with pytest.raises(ZeroProbabilityError):
            log_score(p, 1)
        assert not isinstance(ZeroProbabilityError("x"), DomainError)

    def test_floor_mode(self):
        p = OutcomeDistribution(BINARY, (1.0, 0.0))
        assert log_score(p, 1, floor=1e-10) == math.log(1e-10)

    @given(st.floats(0.001, 0.999), st.floats(0.001, 0.999))
    def test_monotone_in_p_y(self, a, b):
        if a == b:
            return
        lo, hi = sorted((a, b))
        s_lo = log_score(OutcomeDistribution(BINARY, (1 - lo, lo)), 1)
        s_hi = log_score(OutcomeDistribution(BINARY, (1 - hi, hi)), 1)
        assert s_lo < s_hi


class TestSpherical:
    def test_perfect(self):
        assert spherical_score(point_mass(TERNARY, "c"), "c") == 1.0

    def test_uniform(self):
        assert spherical_score(UNIFORM, 0) == pytest.approx(0.7071067811865476, abs=1e-15)

    def test_skewed(self):
        assert spherical_score(SKEWED, 1) == pytest.approx(0.9701425001453319, abs=1e-15)

    @given(distributions(TERNARY), st.sampled_from(TERNARY.labels))
    def test_bounds(self, p, y):
        s = spherical_score(p, y)
        assert 0.0 <= s <= 1.0 + 1e-15
        if p == point_mass(TERNARY, y):
            assert s == 1.0
        else:
            assert s < 1.0


@given(distributions(TERNARY, min_prob=1e-3), st.sampled_from(TERNARY.labels), st.permutations(range(3)))
def test_label_permutation_equivariance(p, y, perm):
    relabel = {lab: ("p", "q", "r")[i] for lab, i in zip(TERNARY.labels, perm)}
    space = OutcomeSpace(tuple(relabel[lab] for lab in TERNARY.labels))
    q = OutcomeDistribution(space, p.probs)
    for rule in ScoringRule:
        assert rule.score(q, relabel[y]) == pytest.approx(rule.score(p, y), abs=1e-15)


def test_rule_parse():
    assert ScoringRule.parse("log") is ScoringRule.LOG
    with pytest.raises(DomainError):
        ScoringRule.parse("crps")


class TestLattice:
    def test_counts(self):
        assert len(simplex_lattice(3, 20)) == math.comb(22, 2)
        assert len(simplex_lattice(3, 20, interior=True)) == math.comb(19, 2)
        assert len(simplex_lattice(2, 20)) == 21


class TestStrictPropriety:
    @pytest.mark.parametrize("rule", list(ScoringRule))
    @pytest.mark.parametrize("space", [BINARY, TERNARY], ids=["binary", "ternary"])
    def test_shipped_rules_are_proper(self, rule, space):
        report = check_strict_propriety(rule, space, 0.05)
        assert report.is_proper
        assert report.worst_violation < 0.0

    def test_unsquared_spherical_fails(self):
        report = check_strict_propriety(spherical_unsquared, BINARY, 0.05)
        assert not report.is_proper
        # q = (0.5, 0.5) vs a point-mass report: 0.5 - 0.5 = 0 at best; skewed q gains
        assert report.worst_violation > 0.1

    def test_constant_rule_is_not_strict(self):
        report = check_strict_propriety(lambda p, y: 0.0, BINARY, 0.1)
        assert not report.is_proper
        assert report.worst_violation == 0.0

    def test_argument_checks(self):
        with pytest.raises(DomainError):
            check_strict_propriety(ScoringRule.BRIER, OutcomeSpace(tuple("abcd")), 0.05)
        with pytest.raises(DomainError):
            check_strict_propriety(ScoringRule.BRIER, BINARY, 0.2)
        with pytest.raises(DomainError):
            check_strict_propriety(ScoringRule.BRIER, BINARY, 0.03)
