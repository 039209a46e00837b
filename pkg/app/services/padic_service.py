"""
p-adic Arithmetic Service.
Valuations, canonical digits, Hensel-lifted roots, region geometry, Haar measure and sphere sampling in Q_p.
"""

import logging
from fractions import Fraction
from typing import Dict, List, Optional

from sympy import integer_nthroot
from sympy.ntheory import legendre_symbol, sqrt_mod

from app.core.errors import (
    ContextMismatchError,
    DegenerateLeadingCoefficientError,
    PreconditionError,
    UnsupportedPrimeError,
)
from app.core.seeding import make_rng
from app.models.padic import (
    CanonicalExpansion,
    ExtValuation,
    HaarMeasure,
    NormOrder,
    PadicRational,
    PrimeContext,
    RegionKind,
    UltrametricRegion,
)

logger = logging.getLogger(__name__)


class PadicService:
    """
    Arithmetic service bound to one prime context.
    All operations are pure; the service only carries p and the precision N.
    """

    def __init__(self, context: PrimeContext):
        """Initialize the service for a prime context."""
        self.context = context
        self.p = context.p
        self.precision = context.precision
        logger.debug(f"p-adic service initialized for {context}")

    def element(self, value) -> PadicRational:
        """Lift an int, Fraction or rational string into this context."""
        return PadicRational.of(value, self.context)

    def _check_context(self, *values: PadicRational) -> None:
        for value in values:
            if value.context != self.context:
                raise ContextMismatchError(f"{value.context} used with {self.context}")

    # ------------------------------------------------------------------
    # Valuation and arithmetic
    # ------------------------------------------------------------------

    def valuation(self, x: PadicRational) -> ExtValuation:
        """Exact valuation gamma(x); infinity iff x = 0."""
        self._check_context(x)
        return x.valuation

    def norm_compare(self, x: PadicRational, y: PadicRational) -> NormOrder:
        """
        Compare |x|_p with |y|_p through valuations (order reversed).

        Args:
            x: First operand
            y: Second operand

        Returns:
            NormOrder of |x|_p relative to |y|_p
        """
        self._check_context(x, y)
        vx, vy = x.valuation, y.valuation
        if vx == vy:
            return NormOrder.EQUAL
        return NormOrder.LESS if vx > vy else NormOrder.GREATER

    def add(self, x: PadicRational, y: PadicRational) -> PadicRational:
        return x + y

    def sub(self, x: PadicRational, y: PadicRational) -> PadicRational:
        return x - y

    def mul(self, x: PadicRational, y: PadicRational) -> PadicRational:
        return x * y

    def div(self, x: PadicRational, y: PadicRational) -> PadicRational:
        return x / y

    # ------------------------------------------------------------------
    # Digit expansion and roots
    # ------------------------------------------------------------------

    def canonical_digits(self, x: PadicRational) -> CanonicalExpansion:
        """
        Canonical series p^gamma (x_0 + x_1 p + ...) truncated at N digits.
        Zero returns gamma = 0 with all-zero digits.

        Args:
            x: Value to expand

        Returns:
            CanonicalExpansion with N digits
        """
        self._check_context(x)
        if x.is_zero:
            return CanonicalExpansion(gamma=0, digits=(0,) * self.precision)

        remaining = x.unit_residue(self.precision)
        digits = []
        for _ in range(self.precision):
            remaining, digit = divmod(remaining, self.p)
            digits.append(digit)
        return CanonicalExpansion(gamma=x.valuation.value, digits=tuple(digits))

    def _require_odd_prime(self, operation: str) -> None:
        if self.p == 2:
            raise UnsupportedPrimeError(f"{operation} is not supported for p = 2")

    def _lift_unit_root(self, unit: int, digits: int) -> int:
        """Newton/Hensel lift of a square root of a unit from mod p to mod p^digits."""
        root = int(sqrt_mod(unit % self.p, self.p))
        reached = 1
        while reached < digits:
            reached = min(2 * reached, digits)
            modulus = self.p ** reached
            root = (root - (root * root - unit) * pow(2 * root, -1, modulus)) % modulus
        return root

    @staticmethod
    def _exact_sqrt(value: Fraction) -> Optional[Fraction]:
        if value < 0:
            return None
        num_root, num_exact = integer_nthroot(value.numerator, 2)
        den_root, den_exact = integer_nthroot(value.denominator, 2)
        if num_exact and den_exact:
            return Fraction(int(num_root), int(den_root))
        return None

    def sqrt_hensel(self, x: PadicRational, digits: Optional[int] = None) -> Optional[PadicRational]:
        """
        Square root of x in Q_p.

        Exact rational squares give their exact root. Otherwise the root is a
        truncated Hensel lift r with valuation(r^2 - x) >= valuation(x) + digits.

        Args:
            x: Radicand
            digits: Lifting depth in significant digits (defaults to N)

        Returns:
            A root, or None when x is not a square in Q_p

        Raises:
            UnsupportedPrimeError: p = 2
        """
        self._require_odd_prime("sqrt_hensel")
        self._check_context(x)
        if x.is_zero:
            return x

        exact = self._exact_sqrt(x.value)
        if exact is not None:
            return self.element(exact)

        v = x.valuation.value
        if v % 2:
            return None
        digits = digits or self.precision
        unit = x.unit_residue(digits)
        if legendre_symbol(unit % self.p, self.p) != 1:
            return None

        root = self._lift_unit_root(unit, digits)
        return self.element(Fraction(self.p) ** (v // 2) * root)

    def solve_quadratic(
        self,
        A: PadicRational,
        B: PadicRational,
        C: PadicRational,
        extra_digits: int = 0
    ) -> List[PadicRational]:
        """
        Roots of A x^2 + B x + C in Q_p.

        The residual of a root equals (s^2 - disc) / 4A for the lifted square
        root s, so s is lifted by N + max(0, v(A) - v(disc)) + extra_digits
        digits and every residual has valuation >= N + extra_digits (no guard
        digits are lost). Rational roots are returned exactly; a zero
        discriminant gives the double root once.

        Args:
            A: Leading coefficient (non-zero)
            B: Linear coefficient
            C: Constant coefficient
            extra_digits: Additional lifting depth

        Returns:
            List of 0, 1 or 2 roots

        Raises:
            UnsupportedPrimeError: p = 2
            DegenerateLeadingCoefficientError: A = 0
        """
        self._require_odd_prime("solve_quadratic")
        self._check_context(A, B, C)
        if A.is_zero:
            raise DegenerateLeadingCoefficientError("leading coefficient is zero; use the linear path")

        disc = B * B - 4 * A * C
        if disc.is_zero:
            return [-B / (2 * A)]

        exact = self._exact_sqrt(disc.value)
        if exact is not None:
            s = self.element(exact)
        else:
            shortfall = max(0, A.valuation.value - disc.valuation.value)
            s = self.sqrt_hensel(disc, self.precision + shortfall + extra_digits)
            if s is None:
                return []

        return [(-B + s) / (2 * A), (-B - s) / (2 * A)]

    # ------------------------------------------------------------------
    # Region geometry and measure
    # ------------------------------------------------------------------

    def region_membership(self, region: UltrametricRegion, x: PadicRational) -> bool:
        """Exact membership via valuation comparison."""
        self._check_context(region.center, x)
        return region.contains(x)

    def same_region(self, first: UltrametricRegion, second: UltrametricRegion) -> bool:
        """
        Equality of two regions of equal kind and radius by the center-distance
        test: any point of a ball is a center of it.
        """
        self._check_context(first.center, second.center)
        if first.kind != second.kind or first.exponent != second.exponent:
            return False
        distance = (first.center - second.center).valuation
        if first.kind == RegionKind.CLOSED_BALL:
            return distance >= first.exponent
        return distance > first.exponent

    def contains_region(self, outer: UltrametricRegion, inner: UltrametricRegion) -> bool:
        """Whether a ball `inner` lies inside the region `outer`."""
        self._check_context(outer.center, inner.center)
        if inner.kind == RegionKind.SPHERE:
            raise PreconditionError("inner region must be a ball")
        if not outer.contains(inner.center):
            return False
        if outer.kind == RegionKind.SPHERE:
            return inner.min_valuation > outer.exponent
        return inner.min_valuation >= outer.min_valuation

    def measure(self, region: UltrametricRegion) -> HaarMeasure:
        """
        Haar measure with mu(closed unit ball) = 1.

        Returns:
            p^(-l) for a closed ball, p^(-l-1) for an open ball and
            p^(-l)(1 - 1/p) for a sphere of exponent l
        """
        p = Fraction(self.p)
        l = region.exponent
        if region.kind == RegionKind.CLOSED_BALL:
            return HaarMeasure(p ** -l)
        if region.kind == RegionKind.OPEN_BALL:
            return HaarMeasure(p ** (-l - 1))
        return HaarMeasure(p ** -l * (1 - 1 / p))

    def subdivide(self, region: UltrametricRegion) -> List[UltrametricRegion]:
        """Split a closed ball of exponent l into its p closed sub-balls of exponent l + 1."""
        if region.kind != RegionKind.CLOSED_BALL:
            raise PreconditionError("only closed balls are subdivided")
        step = Fraction(self.p) ** region.exponent
        return [
            UltrametricRegion.closed_ball(region.center + step * j, region.exponent + 1)
            for j in range(self.p)
        ]

    # ------------------------------------------------------------------
    # Sampling
    # ------------------------------------------------------------------

    def sample_unit(self, seed: int, *stream: int) -> int:
        """A unit u in [1, p^N) drawn digit-wise: first digit non-zero, the rest uniform."""
        rng = make_rng(seed, *stream)
        first = int(rng.integers(1, self.p))
        rest = rng.integers(0, self.p, size=self.precision - 1)
        unit = first
        for position, digit in enumerate(rest, start=1):
            unit += int(digit) * self.p ** position
        return unit

    def sample_sphere(self, sphere: UltrametricRegion, seed: int, *stream: int) -> PadicRational:
        """
        Draw c + p^m u with u a uniformly distributed unit modulo p^N.

        Args:
            sphere: Sphere S_{p^-m}(c)
            seed: Base seed
            stream: Extra integers selecting an independent stream

        Returns:
            A point on the sphere
        """
        if sphere.kind != RegionKind.SPHERE:
            raise PreconditionError("sample_sphere needs a sphere")
        self._check_context(sphere.center)
        unit = self.sample_unit(seed, *stream)
        return sphere.center + Fraction(self.p) ** sphere.exponent * unit

    def sample_ball(self, ball: UltrametricRegion, seed: int, *stream: int, depth: int = 3) -> PadicRational:
        """
        Draw a point of a ball from one of its `depth` outermost spheres.

        Args:
            ball: Open or closed ball
            seed: Base seed
            stream: Extra integers selecting an independent stream
            depth: Number of candidate spheres below the boundary

        Returns:
            A point of the ball other than its center
        """
        if ball.kind == RegionKind.SPHERE:
            raise PreconditionError("sample_ball needs a ball")
        rng = make_rng(seed, *stream, depth)
        shell = ball.min_valuation + int(rng.integers(0, depth))
        return self.sample_sphere(UltrametricRegion.sphere(ball.center, shell), seed, *stream)


# One service per prime context
_padic_services: Dict[PrimeContext, PadicService] = {}


def get_padic_service(context: PrimeContext) -> PadicService:
    """
    Get or create the p-adic service for a context.

    Args:
        context: Prime context

    Returns:
        PadicService instance
    """
    if context not in _padic_services:
        _padic_services[context] = PadicService(context)
    return _padic_services[context]
