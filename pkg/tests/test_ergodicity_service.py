"""
Unit tests for the Ergodicity Service.
"""
import pytest
import sys
from fractions import Fraction
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.core.errors import InvalidParametersError, PreconditionError, UnsupportedPrimeError
from app.models.ergodicity import BallVariant, ErgodicityVerdict, ResidueModel, SphereInstance
from app.models.padic import UltrametricRegion
from app.services.ergodicity_service import get_ergodicity_service
from app.services.padic_service import get_padic_service


class TestSphereInstance:
    """Tests for instance validation."""

    def test_derived_points(self):
        """Test x2, the pole and the r0 exponent for p = 5, b = 5, m = 1."""
        inst = SphereInstance.of(5, 5, 1)
        assert inst.x2 == Fraction(-1, 4)
        assert inst.pole == Fraction(-1, 5)
        assert inst.r0_exponent == 2

    def test_rejects_p_two(self):
        """Test that p = 2 is unsupported."""
        with pytest.raises(UnsupportedPrimeError):
            SphereInstance.of(2, 2, 1)

    def test_rejects_invalid_parameters(self):
        """Test |b| = 1 and m = 0."""
        with pytest.raises(InvalidParametersError):
            SphereInstance.of(5, 1, 1)
        with pytest.raises(InvalidParametersError):
            SphereInstance.of(5, 5, 0)


class TestErgodicityService:
    """Tests for the sphere checks and the invariant-set construction."""

    @pytest.fixture(autouse=True)
    def setup(self):
        """Reset the ergodicity service singleton."""
        import app.services.ergodicity_service as ergodicity_module
        ergodicity_module._ergodicity_service = None
        self.service = get_ergodicity_service()
        self.inst = SphereInstance.of(5, 5, 1)
        yield
        ergodicity_module._ergodicity_service = None

    def test_sphere_residues(self):
        """Test the residue count of a sphere."""
        assert len(self.service.sphere_residues(5, 0, 1, 2)) == 4
        assert len(self.service.residue_model(self.inst, 4).residues) == 100

    def test_sphere_residues_need_k_above_m(self):
        """Test that k must exceed m."""
        with pytest.raises(PreconditionError):
            self.service.sphere_residues(5, 0, 2, 2)

    def test_cycle_structure(self):
        """Test cycle lengths of a hand-made permutation."""
        model = ResidueModel(p=5, k=1, residues=(0, 1, 2, 3, 4), transition={0: 1, 1: 0, 2: 3, 3: 4, 4: 2})
        assert self.service.cycle_structure(model) == [2, 3]

    def test_squaring_model_cycles(self):
        """Test that x^2 on S_{1/3}(1) mod 3^4 is a single cycle of length 18."""
        assert self.service.cycle_structure(self.service.squaring_model(3, 1, 4)) == [18]

    def test_residue_soundness(self):
        """Test that the residue transition commutes with reduction."""
        padic = get_padic_service(self.inst.context)
        model = self.service.residue_model(self.inst, 4)
        points = [padic.sample_sphere(self.inst.sphere, 0, index) for index in range(30)]
        assert self.service.residue_soundness(self.inst, model, points) == 0

    def test_displacement(self):
        """Test v(f(y) - y) = m at the canonical point."""
        y = self.service.canonical_point(self.inst)
        assert y == Fraction(19, 4)
        result = self.service.displacement_check(self.inst, y)
        assert result.valuation == 1
        assert result.holds

    def test_displacement_off_sphere(self):
        """Test that points off the sphere are rejected."""
        with pytest.raises(PreconditionError):
            self.service.displacement_check(self.inst, self.inst.x2 + 25)

    def test_ball_image(self):
        """Test that a small ball maps onto the ball about the image of its center."""
        ball = UltrametricRegion.open_ball(self.service.canonical_point(self.inst), 2)
        result = self.service.ball_image_check(self.inst, ball, 4)
        assert result.holds
        assert result.image_size == result.target_size == 5

    def test_ball_image_preconditions(self):
        """Test the radius and resolution preconditions."""
        y = self.service.canonical_point(self.inst)
        with pytest.raises(PreconditionError):
            self.service.ball_image_check(self.inst, UltrametricRegion.open_ball(y, 1), 4)
        with pytest.raises(PreconditionError):
            self.service.ball_image_check(self.inst, UltrametricRegion.open_ball(y, 2), 3)

    def test_second_iterate_identity(self):
        """Test that only the corrected form of the identity vanishes."""
        residual = self.service.second_iterate_identity_check(self.inst, self.inst.context(1))
        assert residual.corrected == 0
        assert residual.printed != 0

    def test_return_distance_exceeds_r0_for_p_five(self):
        """Test that f^2(y) stays at distance rho from y when p = 5."""
        y = self.service.canonical_point(self.inst)
        result = self.service.return_distance_check(self.inst, y)
        assert result.valuation == 1
        assert not result.satisfies_leq
        assert not result.strict

    def test_return_distance_within_r0_for_b_three(self):
        """Test |f^2(y) - y| < r0 on sampled points of p = 3, b = 3, m = 1."""
        inst = SphereInstance.of(3, 3, 1)
        padic = get_padic_service(inst.context)
        for index in range(20):
            y = padic.sample_sphere(inst.sphere, 1, index)
            assert self.service.return_distance_check(inst, y).strict

    def test_invariant_set_measures(self):
        """Test the exact measures of both ball variants and of the sphere."""
        y = self.service.canonical_point(self.inst)
        closed = self.service.build_invariant_set(self.inst, y, BallVariant.CLOSED_BALLS)
        opened = self.service.build_invariant_set(self.inst, y, BallVariant.OPEN_BALLS)
        assert closed.measure.value == Fraction(2, 25)
        assert closed.sphere_measure.value == Fraction(4, 25)
        assert opened.measure.value == Fraction(2, 125)
        assert closed.proper and not closed.saturates

    def test_invariant_set_membership(self):
        """Test that the candidate holds y, f(y) and their closed-ball neighbours but not x2."""
        y = self.service.canonical_point(self.inst)
        candidate = self.service.build_invariant_set(self.inst, y, BallVariant.CLOSED_BALLS)
        assert candidate.contains(y)
        assert candidate.contains(self.service._f(self.inst, y))
        assert candidate.contains(y + 25)
        assert not candidate.contains(self.inst.x2)

    def test_residue_count_measure(self):
        """Test that counting residues reproduces the exact measure."""
        y = self.service.canonical_point(self.inst)
        candidate = self.service.build_invariant_set(self.inst, y, BallVariant.CLOSED_BALLS)
        result = self.service.invariance_check(self.inst, candidate, 4)
        assert result.member_count == 50
        assert result.residue_measure == Fraction(2, 25)
        assert not result.forward_closed
        assert result.violations

    def test_single_ball_is_not_invariant(self):
        """Test that one ball alone is moved onto the other."""
        inst = SphereInstance.of(3, 3, 1)
        y = self.service.canonical_point(inst)
        candidate = self.service.build_invariant_set(inst, y, BallVariant.OPEN_BALLS)
        single = self.service.single_ball_candidate(candidate, inst)
        assert single.measure.value == Fraction(1, 27)
        assert self.service.invariance_check(inst, candidate).forward_closed
        assert not self.service.invariance_check(inst, single).forward_closed

    def test_invariance_resolution(self):
        """Test that k must be at least the r0 exponent plus 2."""
        y = self.service.canonical_point(self.inst)
        candidate = self.service.build_invariant_set(self.inst, y, BallVariant.CLOSED_BALLS)
        with pytest.raises(PreconditionError):
            self.service.invariance_check(self.inst, candidate, 3)

    def test_no_witness_for_p_five(self):
        """Test that p = 5, b = 5, m = 1 has no witness and the sweep agrees with the return distance."""
        report = self.service.ergodicity_verdict(self.inst, seeds=(0,), k=4, samples=20)
        assert report.verdict is ErgodicityVerdict.NO_WITNESS_AT_THIS_RESOLUTION
        assert report.witness is None
        assert report.sphere_checks.passed
        assert report.sphere_checks.return_distance_violations == 20
        assert report.sphere_checks.printed_identity_failures > 0
        assert report.closure_matches_return_distance

    def test_no_witness_for_b_nine(self):
        """Test p = 3, b = 9 at the default resolution."""
        inst = SphereInstance.of(3, 9, 1)
        report = self.service.ergodicity_verdict(inst, samples=10)
        assert report.residue_exponent == 6
        assert report.return_distance.valuation == 2
        assert report.verdict is ErgodicityVerdict.NO_WITNESS_AT_THIS_RESOLUTION
        closed = report.variant(BallVariant.CLOSED_BALLS).candidate
        assert closed.measure.value == Fraction(2, 27)
        assert closed.sphere_measure.value == Fraction(6, 27)
        assert report.closure_matches_return_distance

    def test_open_variant_when_closed_saturates(self):
        """Test p = 3, b = 3, where the closed balls fill the sphere and the open balls are a witness."""
        inst = SphereInstance.of(3, 3, 1)
        report = self.service.ergodicity_verdict(inst, samples=10)
        closed = report.variant(BallVariant.CLOSED_BALLS)
        opened = report.variant(BallVariant.OPEN_BALLS)
        assert closed.candidate.saturates
        assert not closed.witness
        assert opened.witness
        assert opened.candidate.measure.value == Fraction(2, 27)
        assert report.verdict is ErgodicityVerdict.NON_ERGODIC_WITNESS_FOUND
        assert report.witness.candidate.y == Fraction(5, 2)
        assert report.sphere_checks.passed
        assert report.closure_matches_return_distance

    def test_witness_for_b_twelve(self):
        """Test p = 3, b = 12, where v(f^2(y) - y) = 4."""
        report = self.service.ergodicity_verdict(SphereInstance.of(3, 12, 1), samples=10)
        assert report.return_distance.valuation == 4
        assert report.verdict is ErgodicityVerdict.NON_ERGODIC_WITNESS_FOUND

    def test_verdict_is_seed_independent(self):
        """Test that the verdict does not depend on the sampling seed."""
        inst = SphereInstance.of(3, 3, 1)
        first = self.service.ergodicity_verdict(inst, seeds=(1,), samples=5)
        second = self.service.ergodicity_verdict(inst, seeds=(7,), samples=5)
        assert first.verdict is second.verdict

    def test_conjugation(self):
        """Test a f(x/a) = x^2 / (b x + a)."""
        context = self.inst.context
        assert self.service.conjugation_check(context(2), context(5), context(1)) == 0
        assert self.service.conjugation_check(context(3), context(5), context(Fraction(2, 7))) == 0
        with pytest.raises(InvalidParametersError):
            self.service.conjugation_check(context(0), context(5), context(1))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
