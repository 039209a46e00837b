"""
Exact p-adic value types.
Rationals carried with a prime context, extended valuations, regions and Haar measures.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property, total_ordering
from typing import Optional, Tuple, Union

from sympy import isprime, multiplicity

from app.core.config import settings
from app.core.errors import (
    ContextMismatchError,
    InvalidPrimeError,
    PadicDivisionByZeroError,
    PreconditionError,
)

RationalLike = Union[int, Fraction, str]


@dataclass(frozen=True)
class PrimeContext:
    """A prime p together with the working precision N (digits)."""

    p: int
    precision: int = field(default_factory=lambda: settings.PRECISION_DIGITS)

    def __post_init__(self):
        if not isinstance(self.p, int) or self.p < 2 or not isprime(self.p):
            raise InvalidPrimeError(f"p must be a prime >= 2, got {self.p!r}")
        if self.precision < 1:
            raise InvalidPrimeError(f"precision must be >= 1, got {self.precision}")

    @property
    def modulus(self) -> int:
        """p^N."""
        return self.p ** self.precision

    def __call__(self, value: RationalLike) -> "PadicRational":
        return PadicRational.of(value, self)

    def __str__(self):
        return f"Q_{self.p} (N={self.precision})"


@total_ordering
@dataclass(frozen=True, eq=False)
class ExtValuation:
    """
    Integer valuation extended by +infinity (the valuation of zero).
    Compares and adds like an extended integer; also compares against plain ints.
    """

    value: Optional[int] = None

    @classmethod
    def finite(cls, v: int) -> "ExtValuation":
        return cls(int(v))

    @classmethod
    def infinity(cls) -> "ExtValuation":
        return INFINITY

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    @staticmethod
    def _coerce(other) -> Optional["ExtValuation"]:
        if isinstance(other, ExtValuation):
            return other
        if isinstance(other, int):
            return ExtValuation(other)
        return None

    def __eq__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self.value == other.value

    def __hash__(self):
        return hash(self.value) if self.value is not None else hash(("ExtValuation", None))

    def __lt__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.is_infinite:
            return False
        if other.is_infinite:
            return True
        return self.value < other.value

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.is_infinite or other.is_infinite:
            return INFINITY
        return ExtValuation(self.value + other.value)

    __radd__ = __add__

    def norm(self, p: int) -> Fraction:
        """Exact norm p^(-v); zero for infinity. Display only."""
        if self.is_infinite:
            return Fraction(0)
        return Fraction(p) ** (-self.value)

    def __str__(self):
        return "inf" if self.is_infinite else str(self.value)

    def __repr__(self):
        return f"ExtValuation({self})"


INFINITY = ExtValuation(None)


class NormOrder(str, Enum):
    """Result of comparing |x|_p with |y|_p."""
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"


def parse_rational(text: RationalLike) -> Fraction:
    """
    Parse "n", "n/d" or "p^v*u" (u may itself be "n/d") into a Fraction.
    A leading sign applies to the whole value: "-5^2" is -25.

    Raises:
        ValueError: text is not a rational in one of those forms
    """
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    cleaned = text.strip().replace(" ", "")
    if "^" in cleaned:
        sign = -1 if cleaned.startswith("-") else 1
        power, _, unit = cleaned.lstrip("+-").partition("*")
        base, _, exponent = power.partition("^")
        return sign * Fraction(int(base)) ** int(exponent) * Fraction(unit or "1")
    return Fraction(cleaned)


@dataclass(frozen=True, eq=False)
class PadicRational:
    """
    An exact rational number viewed in Q_p.

    The value is a reduced Fraction (positive denominator), so every norm
    decision is an exact integer comparison of valuations.
    """

    value: Fraction
    context: PrimeContext

    @classmethod
    def of(cls, value: Union[RationalLike, "PadicRational"], context: PrimeContext) -> "PadicRational":
        if isinstance(value, PadicRational):
            if value.context != context:
                raise ContextMismatchError(f"{value.context} vs {context}")
            return value
        return cls(parse_rational(value), context)

    @property
    def p(self) -> int:
        return self.context.p

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    @cached_property
    def valuation(self) -> ExtValuation:
        """Exact p-adic valuation; infinity for zero."""
        if self.value == 0:
            return INFINITY
        p = self.context.p
        num, den = self.value.numerator, self.value.denominator
        if num % p == 0:
            return ExtValuation(int(multiplicity(p, abs(num))))
        if den % p == 0:
            return ExtValuation(-int(multiplicity(p, den)))
        return ExtValuation(0)

    @property
    def norm(self) -> Fraction:
        """Exact norm |x|_p as a rational. Display only; decisions use valuation."""
        return self.valuation.norm(self.context.p)

    def unit_part(self) -> Fraction:
        """x / p^valuation(x), a p-adic unit (zero maps to zero)."""
        if self.is_zero:
            return Fraction(0)
        return self.value / Fraction(self.context.p) ** self.valuation.value

    def unit_residue(self, digits: int) -> int:
        """The unit part reduced modulo p^digits, in [0, p^digits)."""
        modulus = self.context.p ** digits
        unit = self.unit_part()
        return unit.numerator * pow(unit.denominator, -1, modulus) % modulus

    def residue(self, k: int) -> int:
        """
        x modulo p^k for an integral x (valuation >= 0).

        Raises:
            PreconditionError: x is not a p-adic integer
        """
        if self.valuation < 0:
            raise PreconditionError(f"{self} is not integral in Q_{self.p}")
        modulus = self.context.p ** k
        return self.value.numerator * pow(self.value.denominator, -1, modulus) % modulus

    def truncate(self, digits: Optional[int] = None) -> "PadicRational":
        """Round to `digits` significant p-adic digits: p^v * (u mod p^digits)."""
        if self.is_zero:
            return self
        digits = digits or self.context.precision
        v = self.valuation.value
        scale = Fraction(self.context.p) ** v
        return PadicRational(scale * self.unit_residue(digits), self.context)

    def _coerce(self, other) -> "PadicRational":
        if isinstance(other, PadicRational):
            if other.context != self.context:
                raise ContextMismatchError(f"{self.context} vs {other.context}")
            return other
        if isinstance(other, (int, Fraction)):
            return PadicRational(Fraction(other), self.context)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return PadicRational(self.value + other.value, self.context)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return PadicRational(self.value - other.value, self.context)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return PadicRational(other.value - self.value, self.context)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return PadicRational(self.value * other.value, self.context)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero:
            raise PadicDivisionByZeroError(f"division of {self} by zero in Q_{self.p}")
        return PadicRational(self.value / other.value, self.context)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __neg__(self):
        return PadicRational(-self.value, self.context)

    def __pow__(self, exponent: int):
        if exponent < 0 and self.is_zero:
            raise PadicDivisionByZeroError(f"zero to a negative power in Q_{self.p}")
        return PadicRational(self.value ** exponent, self.context)

    def __eq__(self, other):
        if isinstance(other, PadicRational):
            return self.context == other.context and self.value == other.value
        if isinstance(other, (int, Fraction)):
            return self.value == other
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __str__(self):
        return str(self.value)

    def __repr__(self):
        return f"PadicRational({self.value}, p={self.context.p})"


@dataclass(frozen=True)
class CanonicalExpansion:
    """x = p^gamma * sum(digits[j] p^j) modulo p^(gamma + N)."""

    gamma: int
    digits: Tuple[int, ...]

    def partial_sum(self, p: int) -> Fraction:
        total = sum(d * p ** j for j, d in enumerate(self.digits))
        return Fraction(p) ** self.gamma * total

    def __str__(self):
        shown = " ".join(str(d) for d in self.digits[:10])
        return f"p^{self.gamma} * ({shown} ...)"


class RegionKind(str, Enum):
    """Shape of an ultrametric region."""
    OPEN_BALL = "open_ball"
    CLOSED_BALL = "closed_ball"
    SPHERE = "sphere"


@dataclass(frozen=True)
class UltrametricRegion:
    """
    Ball or sphere of radius p^(-exponent) about a center.

    OpenBall   <=> valuation(x - c) >  exponent
    ClosedBall <=> valuation(x - c) >= exponent
    Sphere     <=> valuation(x - c) == exponent
    """

    kind: RegionKind
    center: PadicRational
    exponent: int

    @classmethod
    def open_ball(cls, center: PadicRational, exponent: int) -> "UltrametricRegion":
        return cls(RegionKind.OPEN_BALL, center, exponent)

    @classmethod
    def closed_ball(cls, center: PadicRational, exponent: int) -> "UltrametricRegion":
        return cls(RegionKind.CLOSED_BALL, center, exponent)

    @classmethod
    def sphere(cls, center: PadicRational, exponent: int) -> "UltrametricRegion":
        return cls(RegionKind.SPHERE, center, exponent)

    @property
    def context(self) -> PrimeContext:
        return self.center.context

    @property
    def min_valuation(self) -> int:
        """Smallest valuation of x - center over the region's points."""
        return self.exponent + 1 if self.kind == RegionKind.OPEN_BALL else self.exponent

    def contains(self, x: PadicRational) -> bool:
        v = (x - self.center).valuation
        if self.kind == RegionKind.OPEN_BALL:
            return v > self.exponent
        if self.kind == RegionKind.CLOSED_BALL:
            return v >= self.exponent
        return v == self.exponent

    def __str__(self):
        symbol = {"open_ball": "B", "closed_ball": "B-bar", "sphere": "S"}[self.kind.value]
        return f"{symbol}_{{{self.context.p}^{-self.exponent}}}({self.center})"


@dataclass(frozen=True)
class HaarMeasure:
    """Exact Haar measure, normalized so the closed unit ball has measure 1."""

    value: Fraction

    def __post_init__(self):
        if self.value < 0:
            raise PreconditionError(f"measure must be non-negative, got {self.value}")

    def __add__(self, other: "HaarMeasure") -> "HaarMeasure":
        return HaarMeasure(self.value + other.value)

    def __mul__(self, factor: int) -> "HaarMeasure":
        return HaarMeasure(self.value * factor)

    __rmul__ = __mul__

    def __lt__(self, other: "HaarMeasure") -> bool:
        return self.value < other.value

    def __le__(self, other: "HaarMeasure") -> bool:
        return self.value <= other.value

    def __str__(self):
        return str(self.value)
