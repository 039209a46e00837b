"""
Unit tests for the Verification Service.
Runs every suite with small sample counts.
"""
import pytest
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.core.errors import InvalidParametersError, WrongCaseError
from app.models.ergodicity import ErgodicityVerdict, SphereInstance
from app.models.schemas import ExperimentConfig, SuiteName
from app.services.verification_service import ERGODICITY_INSTANCES, get_verification_service


def _by_check(records, check):
    return [record for record in records if record.check == check]


class TestVerificationService:
    """Test cases for the verification suites."""

    @pytest.fixture(autouse=True)
    def setup(self):
        """Reset the verification service singleton."""
        import app.services.verification_service as verification_module
        verification_module._verification_service = None
        self.service = get_verification_service()
        yield
        verification_module._verification_service = None

    def test_identities_suite(self):
        """Test that every identity check passes."""
        records = self.service.run(ExperimentConfig(suite=SuiteName.IDENTITIES, samples=5))
        assert records
        assert all(record.suite == "identities" for record in records)
        assert [r.check for r in records if not r.passed] == []
        assert len(_by_check(records, "norm_axioms")) == 5
        assert len(_by_check(records, "second_iterate_identity")) == len(ERGODICITY_INSTANCES)

    def test_exceptional_sets_of_repelling_instance(self):
        """Test the witness counts recorded for p = 5, a = 5, b = 1."""
        records = self.service.run(ExperimentConfig(suite=SuiteName.IDENTITIES, samples=2))
        repelling = next(r for r in _by_check(records, "exceptional_sets") if r.instance == "repelling")
        assert repelling.outputs["pole_preimages"] == "2"
        assert repelling.outputs["x2_preimages"] == "1"
        assert repelling.outputs["period2_points"] == "2"
        assert repelling.outputs["disjoint"] == "true"

    def test_classification_suite(self):
        """Test tags and radius cross-checks of the built-ins."""
        records = self.service.run(ExperimentConfig(suite=SuiteName.CLASSIFICATION, samples=20))
        assert all(record.passed for record in records)
        tags = {r.instance: r.outputs["tag"] for r in _by_check(records, "case_tag")}
        assert tags["repelling"] == "Repelling_1a"
        assert tags["siegel_close_parameters"] == "Indifferent_2b"
        assert tags["attracting_dyadic"] == "Attracting_3a"
        assert _by_check(records, "unrealizable_case")[0].outputs["tag"] == "Attracting_3c"

    def test_classification_with_config_map(self):
        """Test that a configured map is classified alongside the built-ins."""
        config = ExperimentConfig(suite=SuiteName.CLASSIFICATION, samples=5, p=7, a="1", b="2")
        records = self.service.run(config)
        extra = [r for r in _by_check(records, "case_tag") if r.instance == "p=7,a=1,b=2"]
        assert len(extra) == 1
        assert extra[0].passed

    def test_siegel_suite(self):
        """Test sphere invariance about x2 and convergence to x1 for p = 3, a = 1, b = 3."""
        config = ExperimentConfig(suite=SuiteName.SIEGEL, samples=5, iterations=20)
        records = self.service.run(config)
        spheres = _by_check(records, "sphere_invariance")
        assert [r.inputs["sphere_exponent"] for r in spheres] == ["1", "2", "3", "4", "5"]
        assert all(record.passed for record in records)

    def test_siegel_single_sphere(self):
        """Test that --sphere-exp selects one sphere."""
        config = ExperimentConfig(suite=SuiteName.SIEGEL, samples=5, iterations=10, sphere_exponent=2)
        spheres = _by_check(self.service.run(config), "sphere_invariance")
        assert len(spheres) == 1
        assert spheres[0].passed

    def test_siegel_suite_rejects_map_without_siegel_disk(self):
        """Test that a repelling map raises WrongCaseError before any sphere is sampled."""
        config = ExperimentConfig(suite=SuiteName.SIEGEL, p=5, a="5", b="1", samples=2)
        with pytest.raises(WrongCaseError):
            self.service.run(config)

    def test_basins_suite(self):
        """Test the repelling and attracting instances."""
        records = self.service.run(ExperimentConfig(suite=SuiteName.BASINS, samples=10))
        checks = {(r.instance, r.check) for r in records}
        assert ("p=5,a=5,b=1", "scaling_law") in checks
        assert ("attracting", "x2_basin") in checks
        assert all(record.passed for record in records)

    def test_ergodicity_suite(self):
        """Test the verdicts of the built-in sphere instances."""
        records = self.service.run(ExperimentConfig(suite=SuiteName.ERGODICITY, samples=10))
        assert [r.check for r in records if not r.passed] == []
        verdicts = {r.instance: r.outputs["verdict"] for r in _by_check(records, "verdict")}
        assert verdicts["p=3,b=3,m=1"] == ErgodicityVerdict.NON_ERGODIC_WITNESS_FOUND.value
        assert verdicts["p=3,b=12,m=1"] == ErgodicityVerdict.NON_ERGODIC_WITNESS_FOUND.value
        assert verdicts["p=5,b=5,m=1"] == ErgodicityVerdict.NO_WITNESS_AT_THIS_RESOLUTION.value
        assert verdicts["p=3,b=9,m=1"] == ErgodicityVerdict.NO_WITNESS_AT_THIS_RESOLUTION.value
        assert _by_check(records, "squaring_cycles")[0].outputs["cycle_lengths"] == "18"

    def test_ergodicity_records_for_configured_instance(self):
        """Test p = 5, b = 5, m = 1, k = 4: the checks pass and no witness exists."""
        config = ExperimentConfig(suite=SuiteName.ERGODICITY, p=5, b="5", sphere_exponent=1,
                                  residue_exponent=4, samples=10)
        records = self.service.ergodicity_records(SphereInstance.of(5, 5, 1), config)
        assert all(record.passed for record in records)
        closed = _by_check(records, "invariant_set_closed")[0]
        assert closed.outputs["measure"] == "2/25"
        assert closed.outputs["sphere_measure"] == "4/25"
        assert closed.outputs["forward_closed"] == "false"
        distance = _by_check(records, "return_distance")[0]
        assert distance.outputs["valuation"] == "1"
        assert distance.outputs["sampled_violations"] == "10"
        verdict = _by_check(records, "verdict")[0]
        assert verdict.outputs["verdict"] == ErgodicityVerdict.NO_WITNESS_AT_THIS_RESOLUTION.value
        assert verdict.outputs["witness_variant"] == "none"

    def test_sphere_exponent_zero_is_not_defaulted(self):
        """Test that m = 0 reaches the instance check instead of becoming m = 1."""
        assert ExperimentConfig().resolved_sphere_exponent == 1
        assert ExperimentConfig(sphere_exponent=0).resolved_sphere_exponent == 0
        config = ExperimentConfig(suite=SuiteName.ERGODICITY, p=5, b="5", sphere_exponent=0, samples=2)
        with pytest.raises(InvalidParametersError):
            self.service.run(config)

    def test_expected_verdict_mismatch_fails(self):
        """Test that a wrong expected verdict fails the verdict record."""
        config = ExperimentConfig(suite=SuiteName.ERGODICITY, samples=5)
        records = self.service.ergodicity_records(
            SphereInstance.of(5, 5, 1), config, ErgodicityVerdict.NON_ERGODIC_WITNESS_FOUND
        )
        assert not _by_check(records, "verdict")[0].passed

    def test_runs_are_deterministic(self):
        """Test that the same configuration gives identical records."""
        config = ExperimentConfig(suite=SuiteName.BASINS, samples=5, seed=3)
        first = [record.model_dump() for record in self.service.run(config)]
        second = [record.model_dump() for record in self.service.run(config)]
        assert first == second


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
