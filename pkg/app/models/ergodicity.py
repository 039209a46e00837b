"""
Value types for the normalized map f(x) = x^2 / (b x + 1) on a sphere about x2.
Instances, residue models, invariant-set candidates and the ergodicity report.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Tuple

from app.core.errors import InvalidParametersError, UnsupportedPrimeError
from app.models.dynamics import MapParams
from app.models.padic import (
    ExtValuation,
    HaarMeasure,
    PadicRational,
    PrimeContext,
    RationalLike,
    UltrametricRegion,
)


@dataclass(frozen=True)
class SphereInstance:
    """
    The map x^2 / (b x + 1) with |b|_p < 1, studied on S_rho(x2), rho = p^(-m).

    Raises:
        UnsupportedPrimeError: p = 2
        InvalidParametersError: b = 0, |b|_p >= 1 or m < 1
    """

    context: PrimeContext
    b: PadicRational
    rho_exponent: int

    def __post_init__(self):
        if self.context.p == 2:
            raise UnsupportedPrimeError("the sphere construction needs p > 2")
        if self.b.is_zero or self.b.valuation < 1:
            raise InvalidParametersError(f"b must satisfy 0 < |b|_p < 1, got b = {self.b}")
        if self.rho_exponent < 1:
            raise InvalidParametersError(f"rho exponent must be >= 1, got {self.rho_exponent}")

    @classmethod
    def of(cls, p: int, b: RationalLike, rho_exponent: int, precision: Optional[int] = None) -> "SphereInstance":
        context = PrimeContext(p) if precision is None else PrimeContext(p, precision)
        return cls(context, context(b), rho_exponent)

    @property
    def p(self) -> int:
        return self.context.p

    @cached_property
    def map_params(self) -> MapParams:
        return MapParams(self.context(1), self.b)

    @property
    def x2(self) -> PadicRational:
        return self.map_params.x2

    @property
    def pole(self) -> PadicRational:
        return self.map_params.pole

    @property
    def r0_exponent(self) -> int:
        """r0 = rho |b|_p, so its exponent is m + v(b)."""
        return self.rho_exponent + self.b.valuation.value

    @property
    def sphere(self) -> UltrametricRegion:
        return UltrametricRegion.sphere(self.x2, self.rho_exponent)

    @property
    def default_residue_exponent(self) -> int:
        return self.r0_exponent + 3

    def __str__(self):
        return f"x^2/({self.b} x + 1) on S_{{{self.p}^-{self.rho_exponent}}}(x2) over Q_{self.p}"


class BallVariant(str, Enum):
    OPEN_BALLS = "open"
    CLOSED_BALLS = "closed"


@dataclass(frozen=True)
class InvariantSetCandidate:
    """A = B_r0(y) u B_r0(f(y)) with its exact Haar measure and that of the sphere."""

    y: PadicRational
    variant: BallVariant
    balls: Tuple[UltrametricRegion, ...]
    measure: HaarMeasure
    sphere_measure: HaarMeasure

    @property
    def ratio(self) -> Fraction:
        return self.measure.value / self.sphere_measure.value

    @property
    def saturates(self) -> bool:
        return self.sphere_measure <= self.measure

    @property
    def proper(self) -> bool:
        return HaarMeasure(Fraction(0)) < self.measure < self.sphere_measure

    def contains(self, x: PadicRational) -> bool:
        return any(ball.contains(x) for ball in self.balls)


@dataclass(frozen=True)
class ResidueModel:
    """
    A sphere modelled by its residues modulo p^k and the transition induced by the map.
    """

    p: int
    k: int
    residues: Tuple[int, ...]
    transition: Dict[int, int] = field(compare=False)

    @property
    def modulus(self) -> int:
        return self.p ** self.k

    @property
    def cell_measure(self) -> Fraction:
        """Haar measure of one residue class mod p^k."""
        return Fraction(1, self.modulus)


@dataclass(frozen=True)
class BallImageResult:
    """Residue comparison of f(B) against the ball of equal radius about f(center)."""

    ball: UltrametricRegion
    image_size: int
    target_size: int
    missing: int
    extra: int
    center_image_ok: bool

    @property
    def holds(self) -> bool:
        return self.missing == 0 and self.extra == 0 and self.center_image_ok


@dataclass(frozen=True)
class DisplacementResult:
    """v(f(y) - y) on the sphere; equals m when the two balls are disjoint."""

    y: PadicRational
    valuation: ExtValuation
    holds: bool


@dataclass(frozen=True)
class IdentityResidual:
    """Residual of the second-iterate identity, in its corrected and printed forms."""

    x: PadicRational
    corrected: Fraction
    printed: Fraction


@dataclass(frozen=True)
class ReturnDistanceResult:
    """v(f^2(y) - y) against the exponent of r0."""

    y: PadicRational
    valuation: ExtValuation
    satisfies_leq: bool
    strict: bool


@dataclass(frozen=True)
class InvarianceResult:
    """Forward closure of a candidate over the residue model."""

    variant: BallVariant
    forward_closed: bool
    violations: List[Tuple[int, int]]
    member_count: int
    residue_measure: Fraction


class ErgodicityVerdict(str, Enum):
    NON_ERGODIC_WITNESS_FOUND = "NonErgodicWitnessFound"
    NO_WITNESS_AT_THIS_RESOLUTION = "NoWitnessAtThisResolution"


@dataclass(frozen=True)
class VariantOutcome:
    candidate: InvariantSetCandidate
    invariance: InvarianceResult

    @property
    def witness(self) -> bool:
        return self.invariance.forward_closed and self.candidate.proper


@dataclass(frozen=True)
class SphereCheckSummary:
    """Aggregated sphere-sample checks."""

    samples: int
    displacement_failures: int
    identity_failures: int
    printed_identity_failures: int
    return_distance_violations: int
    return_distance_strict: int
    ball_image_failures: int
    residue_mismatches: int

    @property
    def passed(self) -> bool:
        """Ball images, displacement, the identity and residue soundness; the return-distance bound is reported apart."""
        return not any((
            self.displacement_failures,
            self.identity_failures,
            self.ball_image_failures,
            self.residue_mismatches,
        ))


@dataclass(frozen=True)
class ErgodicityReport:
    instance: SphereInstance
    residue_exponent: int
    seeds: Tuple[int, ...]
    sphere_checks: SphereCheckSummary
    return_distance: ReturnDistanceResult
    variants: Tuple[VariantOutcome, ...]
    cycle_lengths: Tuple[int, ...]
    verdict: ErgodicityVerdict

    @property
    def witness(self) -> Optional[VariantOutcome]:
        return next((outcome for outcome in self.variants if outcome.witness), None)

    def variant(self, variant: BallVariant) -> VariantOutcome:
        return next(outcome for outcome in self.variants if outcome.candidate.variant is variant)

    @property
    def closure_matches_return_distance(self) -> bool:
        """
        The residue sweep agrees with the exact return distance at the canonical point:
        closed balls are forward-closed iff |f^2(y) - y| <= r0, open balls iff it is < r0.
        """
        closed = self.variant(BallVariant.CLOSED_BALLS).invariance.forward_closed
        opened = self.variant(BallVariant.OPEN_BALLS).invariance.forward_closed
        return closed == self.return_distance.satisfies_leq and opened == self.return_distance.strict
