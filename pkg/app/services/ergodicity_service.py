"""
Ergodicity Service.
Residue models, ball and return-distance checks, invariant sets and the non-ergodicity verdict
for f(x) = x^2 / (b x + 1) on a sphere about its indifferent fixed point.
"""

import logging
from dataclasses import replace
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Set

from app.core.config import settings
from app.core.errors import (
    DisjointnessFailureError,
    InvalidParametersError,
    PoleHitError,
    PreconditionError,
    ResidueModelInvalidError,
)
from app.models.ergodicity import (
    BallImageResult,
    BallVariant,
    DisplacementResult,
    ErgodicityReport,
    ErgodicityVerdict,
    IdentityResidual,
    InvarianceResult,
    InvariantSetCandidate,
    SphereCheckSummary,
    ResidueModel,
    ReturnDistanceResult,
    SphereInstance,
    VariantOutcome,
)
from app.models.padic import PadicRational, RegionKind, UltrametricRegion
from app.services.dynamics_service import get_dynamics_service
from app.services.padic_service import get_padic_service

logger = logging.getLogger(__name__)


class ErgodicityService:
    """
    Checks on the sphere S_rho(x2) of the normalized map.
    Residue sweeps are exhaustive over the classes of the sphere modulo p^k.
    """

    def __init__(self):
        """Initialize the ergodicity service."""
        self.dynamics = get_dynamics_service()
        self.residue_guard = settings.RESIDUE_GUARD
        self.sphere_samples = settings.SPHERE_SAMPLES
        logger.info("Ergodicity Service initialized")

    def _f(self, inst: SphereInstance, x: PadicRational) -> PadicRational:
        return self.dynamics.apply(inst.map_params, x)

    def _require_on_sphere(self, inst: SphereInstance, y: PadicRational) -> None:
        if not inst.sphere.contains(y):
            raise PreconditionError(f"{y} is not on {inst.sphere}")

    # ------------------------------------------------------------------
    # Residue models
    # ------------------------------------------------------------------

    @staticmethod
    def sphere_residues(p: int, center: int, m: int, k: int) -> List[int]:
        """Residues c + p^m u mod p^k, u a unit modulo p^(k-m)."""
        if k <= m:
            raise PreconditionError(f"residue exponent {k} must exceed sphere exponent {m}")
        modulus = p ** k
        step = p ** m
        return sorted(
            (center + step * u) % modulus
            for u in range(1, p ** (k - m))
            if u % p
        )

    def build_model(
        self,
        p: int,
        k: int,
        residues: Iterable[int],
        step: Callable[[int], int]
    ) -> ResidueModel:
        residues = tuple(residues)
        transition = {r: step(r) for r in residues}
        return ResidueModel(p=p, k=k, residues=residues, transition=transition)

    def residue_model(self, inst: SphereInstance, k: int) -> ResidueModel:
        """
        Residue model of S_rho(x2) modulo p^k with T(x) = x^2 (b x + 1)^(-1).

        Raises:
            ResidueModelInvalidError: b x + 1 is not a unit for some residue
        """
        p = inst.p
        modulus = p ** k
        b_res = inst.b.residue(k)
        residues = self.sphere_residues(p, inst.x2.residue(k), inst.rho_exponent, k)

        def step(x: int) -> int:
            denominator = (b_res * x + 1) % modulus
            if denominator % p == 0:
                raise ResidueModelInvalidError(f"b x + 1 is not a unit at residue {x} mod {p}^{k}")
            return x * x * pow(denominator, -1, modulus) % modulus

        model = self.build_model(p, k, residues, step)
        logger.debug(f"Residue model of {inst} at k={k}: {len(model.residues)} classes")
        return model

    def squaring_model(self, p: int, m: int, k: int) -> ResidueModel:
        """Residue model of g(x) = x^2 on S_{p^-m}(1)."""
        modulus = p ** k
        return self.build_model(
            p, k, self.sphere_residues(p, 1, m, k), lambda x: x * x % modulus
        )

    @staticmethod
    def cycle_structure(model: ResidueModel) -> List[int]:
        """Sorted lengths of the cycles of the transition restricted to the modelled residues."""
        lengths = []
        settled: Set[int] = set()
        for start in model.residues:
            path = {}
            current = start
            while current not in settled and current not in path and current in model.transition:
                path[current] = len(path)
                current = model.transition[current]
            if current in path:
                lengths.append(len(path) - path[current])
            settled.update(path)
        return sorted(lengths)

    def residue_soundness(self, inst: SphereInstance, model: ResidueModel, points: Sequence[PadicRational]) -> int:
        """Number of points with residue(f(x)) != T(residue(x))."""
        mismatches = 0
        for x in points:
            expected = model.transition.get(x.residue(model.k))
            if self._f(inst, x).residue(model.k) != expected:
                mismatches += 1
        return mismatches

    @staticmethod
    def _members(model: ResidueModel, regions: Sequence[UltrametricRegion]) -> Set[int]:
        context = regions[0].context
        return {
            r for r in model.residues
            if any(region.contains(context(r)) for region in regions)
        }

    # ------------------------------------------------------------------
    # Sphere checks
    # ------------------------------------------------------------------

    def ball_image_check(self, inst: SphereInstance, ball: UltrametricRegion, k: int) -> BallImageResult:
        """
        Compare f(B) with the ball of the same radius about f(center) over the residue model.

        Raises:
            PreconditionError: B is not a ball inside the sphere with radius < rho, or k is too small
        """
        if ball.kind == RegionKind.SPHERE:
            raise PreconditionError("ball_image_check needs a ball")
        self._require_on_sphere(inst, ball.center)
        if ball.exponent <= inst.rho_exponent:
            raise PreconditionError(f"ball radius must be below rho (exponent {ball.exponent} <= {inst.rho_exponent})")
        if k < ball.exponent + 2:
            raise PreconditionError(f"residue exponent {k} cannot resolve {ball}")

        model = self.residue_model(inst, k)
        image_center = self._f(inst, ball.center)
        target_ball = UltrametricRegion(ball.kind, image_center, ball.exponent)
        image = {model.transition[r] for r in self._members(model, [ball])}
        target = self._members(model, [target_ball])
        return BallImageResult(
            ball=ball,
            image_size=len(image),
            target_size=len(target),
            missing=len(target - image),
            extra=len(image - target),
            center_image_ok=image_center.residue(k) in image,
        )

    def displacement_check(self, inst: SphereInstance, y: PadicRational) -> DisplacementResult:
        """v(f(y) - y) must equal m for y on the sphere."""
        self._require_on_sphere(inst, y)
        valuation = (self._f(inst, y) - y).valuation
        return DisplacementResult(y=y, valuation=valuation, holds=valuation == inst.rho_exponent)

    def second_iterate_identity_check(self, inst: SphereInstance, x: PadicRational) -> IdentityResidual:
        """
        Residuals of (f^2(x) - x)(x - P) = ((1-b)/b) [ f(x)(x+1) / ((f(x) - P) b) + x ] (x - x2).

        The printed variant divides by (x - P) b instead of (f(x) - P) b and is
        reported alongside; only the corrected form is an identity.

        Raises:
            PoleHitError: x = P or f(x) = P
        """
        b, pole, x2 = inst.b, inst.pole, inst.x2
        fx = self._f(inst, x)
        ffx = self._f(inst, fx)
        lhs = (ffx - x) * (x - pole)
        factor = (1 - b) / b
        corrected = lhs - factor * (fx * (x + 1) / ((fx - pole) * b) + x) * (x - x2)
        printed = lhs - factor * (fx / ((x - pole) * b) * (x + 1) + x) * (x - x2)
        return IdentityResidual(x=x, corrected=corrected.value, printed=printed.value)

    def return_distance_check(self, inst: SphereInstance, y: PadicRational) -> ReturnDistanceResult:
        """v(f^2(y) - y) against the exponent of r0 = rho |b|_p."""
        self._require_on_sphere(inst, y)
        valuation = (self._f(inst, self._f(inst, y)) - y).valuation
        return ReturnDistanceResult(
            y=y,
            valuation=valuation,
            satisfies_leq=valuation >= inst.r0_exponent,
            strict=valuation > inst.r0_exponent,
        )

    # ------------------------------------------------------------------
    # Invariant sets
    # ------------------------------------------------------------------

    def canonical_point(self, inst: SphereInstance) -> PadicRational:
        """y = x2 + p^m, the seed-independent center of the witness."""
        return inst.x2 + inst.p ** inst.rho_exponent

    def build_invariant_set(
        self,
        inst: SphereInstance,
        y: PadicRational,
        variant: BallVariant
    ) -> InvariantSetCandidate:
        """
        A = B_r0(y) u B_r0(f(y)) with exact measures.

        Raises:
            DisjointnessFailureError: the two balls meet
        """
        displacement = self.displacement_check(inst, y)
        if not displacement.holds:
            logger.error(f"Balls about {y} and f(y) intersect for {inst}: v(f(y)-y) = {displacement.valuation}")
            raise DisjointnessFailureError(f"v(f(y) - y) = {displacement.valuation} != {inst.rho_exponent}")

        kind = RegionKind.OPEN_BALL if variant is BallVariant.OPEN_BALLS else RegionKind.CLOSED_BALL
        balls = (
            UltrametricRegion(kind, y, inst.r0_exponent),
            UltrametricRegion(kind, self._f(inst, y), inst.r0_exponent),
        )
        padic = get_padic_service(inst.context)
        return InvariantSetCandidate(
            y=y,
            variant=variant,
            balls=balls,
            measure=sum((padic.measure(ball) for ball in balls[1:]), padic.measure(balls[0])),
            sphere_measure=padic.measure(inst.sphere),
        )

    def single_ball_candidate(self, candidate: InvariantSetCandidate, inst: SphereInstance) -> InvariantSetCandidate:
        """The first ball of a candidate alone; not forward-closed since f moves it onto the second."""
        padic = get_padic_service(inst.context)
        return replace(candidate, balls=candidate.balls[:1], measure=padic.measure(candidate.balls[0]))

    def invariance_check(
        self,
        inst: SphereInstance,
        candidate: InvariantSetCandidate,
        k: Optional[int] = None
    ) -> InvarianceResult:
        """
        Forward closure of a candidate: every residue of A maps into A.

        Raises:
            PreconditionError: k < r0 exponent + 2
        """
        k = inst.default_residue_exponent if k is None else k
        if k < inst.r0_exponent + 2:
            raise PreconditionError(f"residue exponent {k} must be >= {inst.r0_exponent + 2}")

        model = self.residue_model(inst, k)
        members = self._members(model, candidate.balls)
        violations = sorted(
            (r, model.transition[r]) for r in members if model.transition[r] not in members
        )
        residue_measure = len(members) * model.cell_measure
        if residue_measure != candidate.measure.value:
            logger.warning(
                f"Residue-count measure {residue_measure} differs from {candidate.measure} for {inst}"
            )
        logger.info(
            f"Invariance ({candidate.variant.value}) for {inst}: "
            f"{len(members)} classes, {len(violations)} violations"
        )
        return InvarianceResult(
            variant=candidate.variant,
            forward_closed=not violations,
            violations=violations,
            member_count=len(members),
            residue_measure=residue_measure,
        )

    # ------------------------------------------------------------------
    # Verdict
    # ------------------------------------------------------------------

    def _sample_sphere_checks(self, inst: SphereInstance, seeds: Sequence[int], samples: int, k: int) -> SphereCheckSummary:
        padic = get_padic_service(inst.context)
        model = self.residue_model(inst, k)
        ball_exponent = inst.rho_exponent + 1

        points = []
        counts = dict(displacement=0, identity=0, printed=0, leq=0, strict=0, ball=0)
        for seed in seeds:
            for index in range(samples):
                y = padic.sample_sphere(inst.sphere, seed, index)
                points.append(y)
                if not self.displacement_check(inst, y).holds:
                    counts["displacement"] += 1
                residual = self.second_iterate_identity_check(inst, y)
                counts["identity"] += residual.corrected != 0
                counts["printed"] += residual.printed != 0
                distance = self.return_distance_check(inst, y)
                counts["leq"] += not distance.satisfies_leq
                counts["strict"] += distance.strict

            ball = UltrametricRegion.open_ball(padic.sample_sphere(inst.sphere, seed, samples), ball_exponent)
            if k >= ball_exponent + 2 and not self.ball_image_check(inst, ball, k).holds:
                counts["ball"] += 1

        return SphereCheckSummary(
            samples=len(points),
            displacement_failures=counts["displacement"],
            identity_failures=counts["identity"],
            printed_identity_failures=counts["printed"],
            return_distance_violations=counts["leq"],
            return_distance_strict=counts["strict"],
            ball_image_failures=counts["ball"],
            residue_mismatches=self.residue_soundness(inst, model, points),
        )

    def ergodicity_verdict(
        self,
        inst: SphereInstance,
        seeds: Sequence[int] = (0,),
        k: Optional[int] = None,
        samples: Optional[int] = None
    ) -> ErgodicityReport:
        """
        Run the sphere checks, build both ball variants about x2 + p^m and test them.

        The verdict is NonErgodicWitnessFound iff some variant is forward-closed
        with 0 < mu(A) < mu(S_rho(x2)).

        Args:
            inst: Instance
            seeds: Seeds for the sampled checks
            k: Residue exponent (default r0 exponent + RESIDUE_GUARD)
            samples: Samples per seed (default SPHERE_SAMPLES)

        Returns:
            ErgodicityReport with full diagnostics
        """
        k = inst.r0_exponent + self.residue_guard if k is None else k
        samples = self.sphere_samples if samples is None else samples
        logger.info(f"Ergodicity run for {inst}, k={k}, seeds={list(seeds)}")

        checks = self._sample_sphere_checks(inst, seeds, samples, k)
        y = self.canonical_point(inst)
        outcomes = []
        for variant in (BallVariant.CLOSED_BALLS, BallVariant.OPEN_BALLS):
            candidate = self.build_invariant_set(inst, y, variant)
            if candidate.saturates:
                logger.warning(f"{variant.value} variant fills the whole sphere for {inst}")
            outcomes.append(VariantOutcome(candidate, self.invariance_check(inst, candidate, k)))

        verdict = (
            ErgodicityVerdict.NON_ERGODIC_WITNESS_FOUND
            if any(outcome.witness for outcome in outcomes)
            else ErgodicityVerdict.NO_WITNESS_AT_THIS_RESOLUTION
        )
        return_distance = self.return_distance_check(inst, y)
        if not return_distance.satisfies_leq:
            logger.warning(
                f"|f^2(y) - y| exceeds r0 at y = {y} for {inst}: valuation {return_distance.valuation} "
                f"< {inst.r0_exponent}"
            )
        cycles = self.cycle_structure(self.residue_model(inst, k))
        logger.info(f"Verdict for {inst}: {verdict.value}")
        return ErgodicityReport(
            instance=inst,
            residue_exponent=k,
            seeds=tuple(seeds),
            sphere_checks=checks,
            return_distance=return_distance,
            variants=tuple(outcomes),
            cycle_lengths=tuple(cycles),
            verdict=verdict,
        )

    # ------------------------------------------------------------------
    # Conjugation
    # ------------------------------------------------------------------

    def conjugation_check(self, a: PadicRational, b: PadicRational, x: PadicRational) -> Fraction:
        """
        Residual of a f(x / a) - x^2 / (b x + a), f the normalized map x^2 / (b x + 1).

        Raises:
            InvalidParametersError: a = 0
            PoleHitError: x = -a / b
        """
        if a.is_zero:
            raise InvalidParametersError("the scaling S(x) = a x needs a != 0")
        if (b * x + a).is_zero:
            raise PoleHitError(f"x = {x} is the pole of x^2/(b x + a)")
        preimage = x / a
        conjugated = a * (preimage * preimage / (b * preimage + 1))
        direct = x * x / (b * x + a)
        return (conjugated - direct).value


# Singleton instance
_ergodicity_service: Optional[ErgodicityService] = None


def get_ergodicity_service() -> ErgodicityService:
    """
    Get or create the ergodicity service singleton.

    Returns:
        ErgodicityService instance
    """
    global _ergodicity_service
    if _ergodicity_service is None:
        _ergodicity_service = ErgodicityService()
    return _ergodicity_service
