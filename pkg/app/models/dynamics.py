"""
Value types for the rational map f(x) = a x^2 / (b x + 1).
Parameters, the fixed-point classification, orbit records and radius results.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import List, Optional, Tuple, Union

from app.core.errors import ContextMismatchError, InvalidParametersError
from app.models.padic import (
    ExtValuation,
    PadicRational,
    PrimeContext,
    RationalLike,
    UltrametricRegion,
)

ValuationLike = Union[int, Fraction, ExtValuation]


@dataclass(frozen=True)
class MapParams:
    """
    The pair (a, b) defining f(x) = a x^2 / (b x + 1) on D = Q_p minus the pole.

    Raises:
        InvalidParametersError: a = 0, b = 0 or a = b
    """

    a: PadicRational
    b: PadicRational

    def __post_init__(self):
        if self.a.context != self.b.context:
            raise ContextMismatchError(f"{self.a.context} vs {self.b.context}")
        if self.a.is_zero or self.b.is_zero:
            raise InvalidParametersError(f"a and b must be non-zero, got a={self.a}, b={self.b}")
        if self.a == self.b:
            raise InvalidParametersError(f"a must differ from b, got a = b = {self.a}")

    @classmethod
    def of(cls, p: int, a: RationalLike, b: RationalLike, precision: Optional[int] = None) -> "MapParams":
        context = PrimeContext(p) if precision is None else PrimeContext(p, precision)
        return cls(context(a), context(b))

    @property
    def context(self) -> PrimeContext:
        return self.a.context

    @property
    def p(self) -> int:
        return self.a.context.p

    @cached_property
    def pole(self) -> PadicRational:
        """P = -1/b."""
        return -1 / self.b

    @property
    def x1(self) -> PadicRational:
        return self.a.context(0)

    @cached_property
    def x2(self) -> PadicRational:
        """The second fixed point 1/(a - b)."""
        return 1 / (self.a - self.b)

    def in_domain(self, x: PadicRational) -> bool:
        return x != self.pole

    @cached_property
    def val_a(self) -> int:
        return self.a.valuation.value

    @cached_property
    def val_b(self) -> int:
        return self.b.valuation.value

    @cached_property
    def val_a_minus_b(self) -> int:
        return (self.a - self.b).valuation.value

    @cached_property
    def val_2a_minus_b(self) -> ExtValuation:
        return (2 * self.a - self.b).valuation

    def __str__(self):
        return f"f(x) = ({self.a}) x^2 / (({self.b}) x + 1) over Q_{self.p}"


class FixedPoint(str, Enum):
    """The two fixed points x1 = 0 and x2 = 1/(a - b)."""
    X1 = "x1"
    X2 = "x2"


class Stability(str, Enum):
    """Nature of x2 from |f'(x2)|_p compared with 1."""
    REPELLING = "repelling"
    INDIFFERENT = "indifferent"
    ATTRACTING = "attracting"


class CaseTag(str, Enum):
    """Sub-case of the fixed-point classification, decided from |a|, |b| and |2a - b|."""
    REPELLING_1A = "Repelling_1a"
    INDIFFERENT_2A = "Indifferent_2a"
    INDIFFERENT_2B = "Indifferent_2b"
    INDIFFERENT_2C = "Indifferent_2c"
    ATTRACTING_3A = "Attracting_3a"
    ATTRACTING_3B = "Attracting_3b"
    ATTRACTING_3C = "Attracting_3c"

    @property
    def stability(self) -> Stability:
        if self is CaseTag.REPELLING_1A:
            return Stability.REPELLING
        if self.value.startswith("Indifferent"):
            return Stability.INDIFFERENT
        return Stability.ATTRACTING


def tag_realizable(tag: CaseTag, p: int) -> bool:
    """
    Whether a tag can occur for parameters in Q_p.

    3c needs |2a|_2 < |b|_2 < |a|_2, which the value group 2^Z cannot
    provide because |2a|_2 = |a|_2 / 2.
    """
    if tag is CaseTag.ATTRACTING_3C:
        return False
    if tag in (CaseTag.INDIFFERENT_2A, CaseTag.INDIFFERENT_2B):
        return p > 2
    if tag in (CaseTag.INDIFFERENT_2C, CaseTag.ATTRACTING_3A):
        return p == 2
    return True


def classify_valuations(p: int, val_a: ValuationLike, val_b: ValuationLike, val_d: ValuationLike) -> CaseTag:
    """
    Case split from the valuations of a, b and d = 2a - b.

    Valuations may be rational (norms of C_p), which is how the sub-cases
    that Q_p cannot realize are reached.

    Args:
        p: Prime
        val_a: v(a)
        val_b: v(b)
        val_d: v(2a - b)

    Returns:
        The unique CaseTag

    Raises:
        InvalidParametersError: the three valuations cannot come from one (a, b)
    """
    val_2a = val_a + (1 if p == 2 else 0)
    expected = min(val_2a, val_b)
    if (val_2a != val_b and val_d != expected) or (val_2a == val_b and val_d < expected):
        raise InvalidParametersError(
            f"inconsistent valuations v(a)={val_a}, v(b)={val_b}, v(2a-b)={val_d} for p={p}"
        )

    if val_b < val_a:
        return CaseTag.REPELLING_1A
    if val_d == val_a:
        if p == 2:
            return CaseTag.INDIFFERENT_2C
        return CaseTag.INDIFFERENT_2A if val_a < val_b else CaseTag.INDIFFERENT_2B
    if val_2a < val_b:
        return CaseTag.ATTRACTING_3A
    if val_2a == val_b:
        return CaseTag.ATTRACTING_3B
    return CaseTag.ATTRACTING_3C


@dataclass(frozen=True)
class CaseClassification:
    """A CaseTag together with the valuations it was decided from."""

    tag: CaseTag
    p: int
    val_a: ValuationLike
    val_b: ValuationLike
    val_2a_minus_b: ValuationLike

    @property
    def stability(self) -> Stability:
        return self.tag.stability

    @property
    def realizable_in_qp(self) -> bool:
        integral = all(
            isinstance(v, ExtValuation) or Fraction(v).denominator == 1
            for v in (self.val_a, self.val_b, self.val_2a_minus_b)
        )
        return integral and tag_realizable(self.tag, self.p)


class RegionRole(str, Enum):
    """What the prescribed region around x2 is."""
    ATTRACTOR = "attractor"
    SIEGEL_DISK = "siegel_disk"
    REPELLER_NONE = "repeller_none"


class SphereFamily(str, Enum):
    """Exceptional spheres of the repelling case: r_n about x1 and l_n about the pole."""
    R = "r"
    L = "l"


@dataclass(frozen=True)
class ExceptionalSphereHit:
    """x lies on the sphere of radius r_index about x1, or l_index about the pole."""

    family: SphereFamily
    index: int

    def __str__(self):
        return f"{self.family.value}_{self.index}"


@dataclass(frozen=True)
class RadiusSequences:
    """
    Sphere exponents of r_n = |b|^(n-1) / |a|^n and l_n (l_0 = 0, so its exponent is infinity).
    A radius p^(-e) is stored as its exponent e.
    """

    r_exponents: Tuple[int, ...]
    l_exponents: Tuple[ExtValuation, ...]

    @property
    def r0(self) -> int:
        return self.r_exponents[0]

    @property
    def r1(self) -> int:
        return self.r_exponents[1]


@dataclass(frozen=True)
class RegionReport:
    """Regions prescribed for a classified map."""

    classification: CaseClassification
    attractor_x1: UltrametricRegion
    x2_role: RegionRole
    x2_region: Optional[UltrametricRegion]
    exceptional_spheres: Optional[RadiusSequences] = None
    note: str = ""


class TerminalKind(str, Enum):
    COMPLETED = "completed"
    POLE_HIT = "pole_hit"
    CONVERGED = "converged"
    STOPPED = "stopped"


@dataclass(frozen=True)
class TerminalEvent:
    """How a trajectory ended; step indexes into Trajectory.points."""

    kind: TerminalKind
    step: Optional[int] = None
    target: Optional[FixedPoint] = None

    def __str__(self):
        if self.kind is TerminalKind.COMPLETED:
            return "Completed"
        if self.kind is TerminalKind.POLE_HIT:
            return f"PoleHit({self.step})"
        if self.kind is TerminalKind.CONVERGED:
            label = self.target.value if self.target else "target"
            return f"ConvergedTo({label}, {self.step})"
        return f"Stopped({self.step})"


class StopKind(str, Enum):
    NONE = "none"
    VALUATION_THRESHOLD = "valuation_threshold"
    ENTERS_REGION = "enters_region"
    LEAVES_REGION = "leaves_region"


@dataclass(frozen=True)
class StopRule:
    """Early-stopping rule for iterate()."""

    kind: StopKind = StopKind.NONE
    target: Optional[PadicRational] = None
    threshold: Optional[int] = None
    region: Optional[UltrametricRegion] = None

    @classmethod
    def none(cls) -> "StopRule":
        return cls()

    @classmethod
    def converge_to(cls, target: PadicRational, threshold: int) -> "StopRule":
        return cls(StopKind.VALUATION_THRESHOLD, target=target, threshold=threshold)

    @classmethod
    def enters(cls, region: UltrametricRegion) -> "StopRule":
        return cls(StopKind.ENTERS_REGION, region=region)

    @classmethod
    def leaves(cls, region: UltrametricRegion) -> "StopRule":
        return cls(StopKind.LEAVES_REGION, region=region)

    def fires(self, point: PadicRational) -> bool:
        if self.kind is StopKind.VALUATION_THRESHOLD:
            return (point - self.target).valuation >= self.threshold
        if self.kind is StopKind.ENTERS_REGION:
            return self.region.contains(point)
        if self.kind is StopKind.LEAVES_REGION:
            return not self.region.contains(point)
        return False


@dataclass(frozen=True)
class Trajectory:
    """
    Orbit x^(0), x^(1), ... with valuations of (point - reference).

    With exact=True every points[k+1] equals f(points[k]); otherwise images
    were rounded to N significant digits once their height grew too large.
    """

    start: PadicRational
    reference: PadicRational
    points: Tuple[PadicRational, ...]
    valuations: Tuple[ExtValuation, ...]
    terminal_event: TerminalEvent
    exact: bool = True

    @property
    def steps(self) -> int:
        return len(self.points) - 1


@dataclass(frozen=True)
class BSetEvent:
    """
    One step of an orbit checked against the exceptional spheres.

    indexed: |x^(n)| = r_n or |x^(n) - P| = l_n for this very n.
    on_any: x^(n) lies on some exceptional sphere.
    """

    step: int
    indexed: bool
    on_any: Optional[ExceptionalSphereHit]


class BasinOutcome(str, Enum):
    CONVERGED_X1 = "ConvergedX1"
    CONVERGED_X2 = "ConvergedX2"
    ESCAPED = "Escaped"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class BasinResult:
    outcome: BasinOutcome
    steps: int
    pole_hit: bool = False


@dataclass(frozen=True)
class DeltaResiduals:
    """Residuals (left minus right) of the three identities and the alternate form of the third."""

    delta1: Fraction
    delta2: Fraction
    delta3: Fraction
    delta3_alternate: Fraction

    @property
    def all_zero(self) -> bool:
        return not any((self.delta1, self.delta2, self.delta3, self.delta3_alternate))


class GammaCondition(str, Enum):
    """Radius conditions: x1 attractor, x2 Siegel disk, x2 attractor."""
    GAMMA1 = "gamma1"
    GAMMA2 = "gamma2"
    GAMMA3 = "gamma3"

    @property
    def fixed_point(self) -> FixedPoint:
        return FixedPoint.X1 if self is GammaCondition.GAMMA1 else FixedPoint.X2


@dataclass(frozen=True)
class GammaRadius:
    """
    Largest open ball satisfying a radius condition.

    critical is the infimum rho* of admissible -log_p r; attained says
    whether rho* itself is admissible. The returned ball is the open ball
    of exponent floor(rho*).
    """

    condition: GammaCondition
    critical: Fraction
    attained: bool
    exponent: int
    brute_exponent: int
    brute_attained: bool
    region: UltrametricRegion

    @property
    def agrees(self) -> bool:
        return self.exponent == self.brute_exponent and self.attained == self.brute_attained


@dataclass(frozen=True)
class SiegelTestResult:
    sphere_exponent: int
    samples: int
    iterations: int
    violations: int
    witnesses: List[PadicRational] = field(default_factory=list)


@dataclass(frozen=True)
class ExceptionalSetWitnesses:
    """
    Witness points for the sets of points reaching the pole (omega),
    reaching x2 (psi) and lying on a 2-cycle (sigma).
    An empty list means no witness of that kind exists over Q_p.
    """

    omega: List[PadicRational]
    psi: List[PadicRational]
    sigma: List[PadicRational]
    disjoint: bool
