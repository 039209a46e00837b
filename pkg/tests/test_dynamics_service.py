"""
Unit tests for the Dynamics Service.
Tests orbits, derivatives, the fixed-point classification, radii and witness points.
"""
import pytest
import sys
from fractions import Fraction
from pathlib import Path

from hypothesis import assume, given, settings as hypothesis_settings
from hypothesis import strategies as st

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.core.errors import (
    DegenerateParamsError,
    InvalidParametersError,
    PoleHitError,
    PreconditionError,
    WrongCaseError,
)
from app.models.dynamics import (
    BasinOutcome,
    CaseTag,
    FixedPoint,
    GammaCondition,
    MapParams,
    RegionRole,
    SphereFamily,
    Stability,
    StopRule,
    TerminalKind,
    classify_valuations,
    tag_realizable,
)
from app.models.padic import INFINITY, UltrametricRegion
from app.services.dynamics_service import DynamicsService, get_dynamics_service

BUILTIN_CASES = [
    (5, 5, 1, CaseTag.REPELLING_1A),
    (3, 1, 3, CaseTag.INDIFFERENT_2A),
    (5, 1, 3, CaseTag.INDIFFERENT_2B),
    (3, 1, 4, CaseTag.INDIFFERENT_2B),
    (2, 1, 3, CaseTag.INDIFFERENT_2C),
    (2, 1, 4, CaseTag.ATTRACTING_3A),
    (2, 1, 6, CaseTag.ATTRACTING_3B),
    (3, 1, 5, CaseTag.ATTRACTING_3B),
]

small_nonzero = st.fractions(min_value=-1000, max_value=1000, max_denominator=1000).filter(lambda f: f != 0)


@pytest.fixture
def service():
    """Fresh dynamics service."""
    import app.services.dynamics_service as dynamics_module
    dynamics_module._dynamics_service = None
    yield get_dynamics_service()
    dynamics_module._dynamics_service = None


class TestMapParams:
    """Tests for parameter validation and derived points."""

    def test_rejects_degenerate_parameters(self):
        """Test that a = 0, b = 0 and a = b are rejected."""
        for a, b in [(0, 1), (1, 0), (2, 2)]:
            with pytest.raises(InvalidParametersError):
                MapParams.of(5, a, b)

    def test_pole_and_fixed_points(self):
        """Test P = -1/b, x1 = 0 and x2 = 1/(a - b)."""
        m = MapParams.of(5, 5, 1)
        assert m.pole == -1
        assert m.x1 == 0
        assert m.x2 == Fraction(1, 4)
        assert (m.val_a, m.val_b, m.val_a_minus_b) == (1, 0, 0)

    def test_infinite_valuation_of_2a_minus_b(self):
        """Test b = 2a, where 2a - b vanishes."""
        m = MapParams.of(3, 1, 2)
        assert m.val_2a_minus_b == INFINITY


class TestOrbits:
    """Tests for evaluation and iteration."""

    def test_fixed_points_are_fixed(self, service):
        """Test f(x1) = x1 and f(x2) = x2 exactly."""
        m = MapParams.of(3, 1, 3)
        assert service.apply(m, m.x1) == 0
        assert service.apply(m, m.x2) == m.x2

    def test_apply_at_pole(self, service):
        """Test that evaluating at the pole raises."""
        m = MapParams.of(3, 1, 3)
        with pytest.raises(PoleHitError):
            service.apply(m, m.pole)

    def test_orbit_from_pole(self, service):
        """Test that an orbit starting at the pole stops at step 0."""
        m = MapParams.of(3, 1, 3)
        trajectory = service.iterate(m, m.pole, 10)
        assert trajectory.terminal_event.kind is TerminalKind.POLE_HIT
        assert str(trajectory.terminal_event) == "PoleHit(0)"
        assert trajectory.steps == 0

    def test_orbit_of_x2_is_constant(self, service):
        """Test that the orbit of x2 never moves."""
        m = MapParams.of(3, 1, 3)
        trajectory = service.iterate(m, m.x2, 5)
        assert all(point == m.x2 for point in trajectory.points)
        assert trajectory.terminal_event.kind is TerminalKind.COMPLETED
        assert trajectory.exact

    def test_exact_orbit(self, service):
        """Test points[k+1] = f(points[k]) for an exact orbit."""
        m = MapParams.of(5, 5, 1)
        trajectory = service.iterate(m, m.context(Fraction(2, 5)), 4, exact=True)
        for before, after in zip(trajectory.points, trajectory.points[1:]):
            assert after == service.apply(m, before)

    def test_convergence_stop(self, service):
        """Test that valuations double from x = 3 and the orbit stops at valuation 32."""
        m = MapParams.of(3, 1, 3)
        trajectory = service.iterate(m, m.context(3), 50, StopRule.converge_to(m.x1, 30))
        assert [v.value for v in trajectory.valuations] == [1, 2, 4, 8, 16, 32]
        assert str(trajectory.terminal_event) == "ConvergedTo(x1, 5)"

    def test_region_stop_rules(self, service):
        """Test that enters fires at the first point in the ball and leaves at the first point outside."""
        m = MapParams.of(3, 1, 3)
        entered = service.iterate(m, m.context(3), 50, StopRule.enters(UltrametricRegion.closed_ball(m.x1, 4)))
        assert entered.terminal_event.kind is TerminalKind.STOPPED
        assert str(entered.terminal_event) == "Stopped(2)"
        assert entered.steps == 2

        left = service.iterate(m, m.context(3), 50, StopRule.leaves(UltrametricRegion.sphere(m.x1, 1)))
        assert str(left.terminal_event) == "Stopped(1)"

    def test_rejects_empty_orbit(self, service):
        """Test that n_max must be positive."""
        m = MapParams.of(3, 1, 3)
        with pytest.raises(PreconditionError):
            service.iterate(m, m.x1, 0)


class TestDerivatives:
    """Tests for multipliers and derivative closed forms."""

    def test_multipliers(self, service):
        """Test f'(x1) = 0 and f'(x2) = (2a - b)/a."""
        m = MapParams.of(3, 1, 3)
        assert service.multiplier(m, FixedPoint.X1) == 0
        assert service.multiplier(m, FixedPoint.X2) == -1

    def test_second_derivative_at_x1(self, service):
        """Test f''(0) = 2a."""
        m = MapParams.of(3, 1, 3)
        assert service.nth_derivative_at_fixed_points(m, 2, FixedPoint.X1) == 2

    def test_closed_forms_up_to_order_eight(self, service):
        """Test that every closed form matches the general derivative."""
        m = MapParams.of(7, Fraction(3, 7), 14)
        for n in range(2, 9):
            for which in FixedPoint:
                value = service.nth_derivative_at_fixed_points(m, n, which)
                point = m.x1 if which is FixedPoint.X1 else m.x2
                assert value == service.derivative(m, point, n)

    def test_order_below_two_rejected(self, service):
        """Test that closed forms start at n = 2."""
        with pytest.raises(PreconditionError):
            service.nth_derivative_at_fixed_points(MapParams.of(3, 1, 3), 1, FixedPoint.X1)

    @hypothesis_settings(max_examples=100, deadline=None)
    @given(st.sampled_from([2, 3, 5, 7]), small_nonzero, small_nonzero, small_nonzero)
    def test_delta_identities(self, p, a, b, x):
        """Test that the three product identities have zero residual."""
        assume(a != b and b * x + 1 != 0)
        residuals = DynamicsService().delta_identities(MapParams.of(p, a, b), MapParams.of(p, a, b).context(x))
        assert residuals.all_zero


class TestClassification:
    """Tests for the case split."""

    @pytest.mark.parametrize("p,a,b,tag", BUILTIN_CASES)
    def test_builtin_cases(self, service, p, a, b, tag):
        """Test the tag of every demonstration instance."""
        classification = service.classify(MapParams.of(p, a, b))
        assert classification.tag is tag
        assert classification.realizable_in_qp

    def test_symbolic_unrealizable_case(self):
        """Test that v(b) = 1/2 at p = 2 reaches Attracting_3c."""
        tag = classify_valuations(2, 0, Fraction(1, 2), Fraction(1, 2))
        assert tag is CaseTag.ATTRACTING_3C
        assert tag.stability is Stability.ATTRACTING
        assert not tag_realizable(tag, 2)

    def test_inconsistent_valuations(self):
        """Test that impossible valuation triples are rejected."""
        with pytest.raises(InvalidParametersError):
            classify_valuations(3, 0, 1, 1)

    @hypothesis_settings(max_examples=200, deadline=None)
    @given(st.sampled_from([2, 3, 5, 7]), small_nonzero, small_nonzero)
    def test_tag_matches_multiplier(self, p, a, b):
        """Test that the tag's stability is the multiplier trichotomy."""
        assume(a != b)
        m = MapParams.of(p, a, b)
        classification = DynamicsService().classify(m)
        v = ((2 * m.a - m.b) / m.a).valuation
        expected = Stability.REPELLING if v < 0 else Stability.INDIFFERENT if v == 0 else Stability.ATTRACTING
        assert classification.stability is expected


class TestRepellingCase:
    """Tests for the repelling case p = 5, a = 5, b = 1."""

    def test_scaling_law(self, service):
        """Test v(f(x)) = v(x) + v(a) - v(b) beyond r0."""
        m = MapParams.of(5, 5, 1)
        assert service.scaling_check(m, m.context(Fraction(1, 5)))
        assert service.scaling_check(m, m.context(Fraction(3, 125)))

    def test_scaling_preconditions(self, service):
        """Test the norm and case preconditions."""
        with pytest.raises(PreconditionError):
            service.scaling_check(MapParams.of(5, 5, 1), MapParams.of(5, 5, 1).context(1))
        with pytest.raises(WrongCaseError):
            service.scaling_check(MapParams.of(3, 1, 3), MapParams.of(3, 1, 3).context(Fraction(1, 3)))

    def test_radius_sequences(self, service):
        """Test the r_n and l_n exponents."""
        sequences = service.radius_sequences(MapParams.of(5, 5, 1), 3)
        assert sequences.r_exponents == (0, -1, -2, -3)
        assert sequences.l_exponents[0] == INFINITY
        assert [v.value for v in sequences.l_exponents[1:]] == [0, 1, 2]

    def test_exceptional_spheres(self, service):
        """Test sphere hits about x1 and about the pole."""
        m = MapParams.of(5, 5, 1)
        hit = service.on_exceptional_sphere(m, m.context(Fraction(1, 25)))
        assert (hit.family, hit.index) == (SphereFamily.R, 2)
        hit = service.on_exceptional_sphere(m, m.context(25))
        assert (hit.family, hit.index) == (SphereFamily.L, 1)
        assert str(service.on_exceptional_sphere(m, m.pole)) == "l_0"

    def test_b_set_events(self, service):
        """Test that every step of an orbit is checked against the spheres."""
        m = MapParams.of(5, 5, 1)
        trajectory = service.iterate(m, m.context(Fraction(1, 25)), 3, exact=True)
        events = service.b_set_events(m, trajectory)
        assert [event.step for event in events] == [1, 2, 3]

    def test_repeller(self, service):
        """Test that points near x2 move away from it."""
        assert service.repeller_check(MapParams.of(5, 5, 1), 20, 0) == 0

    def test_basin_convergence(self, service):
        """Test that orbits of several magnitudes reach x1."""
        m = MapParams.of(5, 5, 1)
        for x in [Fraction(1, 125), Fraction(2, 5), Fraction(7), Fraction(5)]:
            assert service.basin_test(m, m.context(x)).outcome is BasinOutcome.CONVERGED_X1


class TestRadii:
    """Tests for the symbolic radius conditions."""

    @pytest.mark.parametrize("p,a,b,condition,exponent,attained", [
        (3, 1, 3, GammaCondition.GAMMA1, 0, False),
        (5, 5, 1, GammaCondition.GAMMA1, 0, True),
        (5, 1, 3, GammaCondition.GAMMA2, 0, False),
        (3, 1, 4, GammaCondition.GAMMA2, -1, True),
        (2, 1, 4, GammaCondition.GAMMA3, 0, False),
        (3, 1, 5, GammaCondition.GAMMA3, 0, False),
    ])
    def test_gamma_radius(self, service, p, a, b, condition, exponent, attained):
        """Test the symbolic radius and its brute-force agreement."""
        radius = service.gamma_radius(MapParams.of(p, a, b), condition)
        assert radius.exponent == exponent
        assert radius.attained is attained
        assert radius.agrees

    def test_gamma_wrong_case(self, service):
        """Test that Siegel radii need an indifferent x2."""
        with pytest.raises(WrongCaseError):
            service.gamma_radius(MapParams.of(5, 5, 1), GammaCondition.GAMMA2)
        with pytest.raises(WrongCaseError):
            service.gamma_radius(MapParams.of(3, 1, 3), GammaCondition.GAMMA3)

    def test_region_reports(self, service):
        """Test the prescribed regions of three cases."""
        siegel = service.region_report(MapParams.of(3, 1, 3))
        assert siegel.x2_role is RegionRole.SIEGEL_DISK
        assert siegel.x2_region.exponent == 0
        assert siegel.attractor_x1.exponent == 0

        repelling = service.region_report(MapParams.of(5, 5, 1))
        assert repelling.x2_role is RegionRole.REPELLER_NONE
        assert repelling.x2_region is None
        assert repelling.exceptional_spheres is not None

        attracting = service.region_report(MapParams.of(3, 1, 5))
        assert attracting.x2_role is RegionRole.ATTRACTOR
        assert attracting.x2_region.exponent == 0


class TestSiegelAndBasins:
    """Tests for the orbit experiments."""

    def test_siegel_spheres_are_invariant(self, service):
        """Test that no sampled orbit leaves its sphere about x2."""
        m = MapParams.of(3, 1, 3)
        for exponent in (1, 2):
            assert service.siegel_invariance_test(m, exponent, samples=10, iterations=20, seed=0).violations == 0

    def test_siegel_preconditions(self, service):
        """Test the case and radius preconditions."""
        with pytest.raises(PreconditionError):
            service.siegel_invariance_test(MapParams.of(3, 1, 3), 0, samples=1, iterations=1, seed=0)
        with pytest.raises(WrongCaseError):
            service.siegel_invariance_test(MapParams.of(5, 5, 1), 3, samples=1, iterations=1, seed=0)

    def test_basin_outcomes(self, service):
        """Test convergence to x1, staying at x2 and a pole hit."""
        m = MapParams.of(3, 1, 3)
        converged = service.basin_test(m, m.context(3))
        assert converged.outcome is BasinOutcome.CONVERGED_X1
        assert converged.steps == 5
        assert service.basin_test(m, m.x2).outcome is BasinOutcome.CONVERGED_X2
        pole = service.basin_test(m, m.pole)
        assert pole.outcome is BasinOutcome.ESCAPED
        assert pole.pole_hit

    def test_attracting_x2(self, service):
        """Test that a point near an attracting x2 converges to it."""
        m = MapParams.of(3, 1, 5)
        assert service.basin_test(m, m.x2 + 3).outcome is BasinOutcome.CONVERGED_X2


class TestPeriodicPoints:
    """Tests for preimages and 2-cycles."""

    def test_preimages(self, service):
        """Test that lifted preimages map onto the target."""
        m = MapParams.of(3, 1, 3)
        y = m.context(1)
        roots = service.preimages(m, y)
        assert len(roots) == 2
        for r in roots:
            assert (service.apply(m, r) - y).valuation >= 60

    def test_factorization_residual(self, service):
        """Test the factorization of f^2(x) - x coefficient by coefficient."""
        assert not any(service.period2_factorization_residual(MapParams.of(5, Fraction(2, 5), 7)))

    def test_period2_points(self, service):
        """Test that a 2-cycle exists for a = 1, b = 2 over Q_7."""
        m = MapParams.of(7, 1, 2)
        points = service.period2_points(m)
        assert len(points) == 2
        for r in points:
            assert service.period2_check(m, r) == (True, True)

    def test_period2_degenerate(self, service):
        """Test that a + b = 0 has no 2-cycle."""
        with pytest.raises(DegenerateParamsError):
            service.period2_points(MapParams.of(5, 1, -1))

    def test_exceptional_set_witnesses(self, service):
        """Test pole preimages, the x2 preimage and the 2-cycle for p = 5, a = 5, b = 1."""
        witnesses = service.exceptional_set_witnesses(MapParams.of(5, 5, 1))
        assert len(witnesses.omega) == 2
        assert witnesses.psi == [Fraction(-1, 5)]
        assert len(witnesses.sigma) == 2
        assert witnesses.disjoint


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
