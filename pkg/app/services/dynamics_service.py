"""
Dynamics Service.
Orbits, derivatives, classification, radius conditions and witness points of f(x) = a x^2 / (b x + 1).
"""

import logging
import math
from fractions import Fraction
from typing import List, Optional, Tuple

from sympy import Poly, Rational, symbols

from app.core.config import settings
from app.core.errors import (
    DegenerateParamsError,
    IdentityViolationError,
    PoleHitError,
    PreconditionError,
    WrongCaseError,
)
from app.models.dynamics import (
    BasinOutcome,
    BasinResult,
    BSetEvent,
    CaseClassification,
    CaseTag,
    DeltaResiduals,
    ExceptionalSetWitnesses,
    ExceptionalSphereHit,
    FixedPoint,
    GammaCondition,
    GammaRadius,
    MapParams,
    RadiusSequences,
    RegionReport,
    RegionRole,
    SiegelTestResult,
    SphereFamily,
    Stability,
    StopKind,
    StopRule,
    TerminalEvent,
    TerminalKind,
    Trajectory,
    classify_valuations,
)
from app.models.padic import INFINITY, ExtValuation, PadicRational, UltrametricRegion
from app.services.padic_service import get_padic_service

logger = logging.getLogger(__name__)

_x = symbols("x")

# Digits a lifted root may lose when checked by evaluating f forward
FORWARD_CHECK_LOSS = 4


def _sympy_rational(value: PadicRational) -> Rational:
    return Rational(value.value.numerator, value.value.denominator)


class DynamicsService:
    """
    Service for the rational map f(x) = a x^2 / (b x + 1).
    Every norm decision is an exact valuation comparison.
    """

    def __init__(self):
        """Initialize the dynamics service from settings."""
        self.convergence_threshold = settings.CONVERGENCE_THRESHOLD
        self.escape_window = settings.ESCAPE_WINDOW
        self.truncate_orbits = settings.TRUNCATE_ORBITS
        self.gamma_max_n = settings.GAMMA_MAX_N
        self.root_guard = settings.ROOT_GUARD_DIGITS
        logger.info("Dynamics Service initialized")

    # ------------------------------------------------------------------
    # Evaluation and orbits
    # ------------------------------------------------------------------

    def apply(self, m: MapParams, x: PadicRational) -> PadicRational:
        """
        Evaluate f(x) exactly.

        Raises:
            PoleHitError: x is the pole -1/b
        """
        if x == m.pole:
            raise PoleHitError(f"x = {x} is the pole of {m}")
        return m.a * x * x / (m.b * x + 1)

    @staticmethod
    def _round_image(x: PadicRational) -> Tuple[PadicRational, bool]:
        """Round x to N significant digits once its height exceeds p^(2N)."""
        bound = x.context.modulus ** 2
        if abs(x.value.numerator) <= bound and x.value.denominator <= bound:
            return x, False
        return x.truncate(), True

    def _step(self, m: MapParams, x: PadicRational, exact: bool) -> Tuple[PadicRational, bool]:
        image = self.apply(m, x)
        if exact or not self.truncate_orbits:
            return image, False
        return self._round_image(image)

    @staticmethod
    def _stop_event(m: MapParams, stop: StopRule, step: int) -> TerminalEvent:
        if stop.kind is StopKind.VALUATION_THRESHOLD:
            target = None
            if stop.target == m.x1:
                target = FixedPoint.X1
            elif stop.target == m.x2:
                target = FixedPoint.X2
            return TerminalEvent(TerminalKind.CONVERGED, step=step, target=target)
        return TerminalEvent(TerminalKind.STOPPED, step=step)

    def iterate(
        self,
        m: MapParams,
        x0: PadicRational,
        n_max: int,
        stop: Optional[StopRule] = None,
        reference: Optional[PadicRational] = None,
        exact: bool = False
    ) -> Trajectory:
        """
        Iterate f from x0 for at most n_max steps.

        Args:
            m: Map parameters
            x0: Starting point
            n_max: Maximum number of applications of f
            stop: Early-stopping rule (default: none)
            reference: Point the recorded valuations are measured from
                (default: the stop target, else x1)
            exact: Never round images

        Returns:
            Trajectory; a pole is recorded as its terminal event
        """
        if n_max < 1:
            raise PreconditionError(f"n_max must be >= 1, got {n_max}")
        stop = stop or StopRule.none()
        if reference is None:
            reference = stop.target if stop.kind is StopKind.VALUATION_THRESHOLD else m.x1

        points = [x0]
        rounded = False
        event = self._stop_event(m, stop, 0) if stop.fires(x0) else None
        step = 0
        while event is None and step < n_max:
            if points[-1] == m.pole:
                event = TerminalEvent(TerminalKind.POLE_HIT, step=step)
                break
            image, was_rounded = self._step(m, points[-1], exact)
            rounded = rounded or was_rounded
            points.append(image)
            step += 1
            if stop.fires(image):
                event = self._stop_event(m, stop, step)

        if event is None:
            event = TerminalEvent(TerminalKind.COMPLETED, step=step)
        logger.debug(f"Orbit of {x0} under {m}: {event} after {step} steps")
        return Trajectory(
            start=x0,
            reference=reference,
            points=tuple(points),
            valuations=tuple((point - reference).valuation for point in points),
            terminal_event=event,
            exact=not rounded,
        )

    # ------------------------------------------------------------------
    # Derivatives and multipliers
    # ------------------------------------------------------------------

    def derivative(self, m: MapParams, x: PadicRational, n: int = 1) -> PadicRational:
        """
        n-th derivative of f at x from the partial-fraction form of f.

        Args:
            m: Map parameters
            x: Point of evaluation (not the pole)
            n: Order, n >= 1

        Returns:
            f^(n)(x)
        """
        if n < 1:
            raise PreconditionError(f"derivative order must be >= 1, got {n}")
        if x == m.pole:
            raise PoleHitError(f"derivative at the pole of {m}")
        shifted = x + 1 / m.b
        if n == 1:
            return (m.a / m.b) * (1 - 1 / (m.b * m.b * shifted * shifted))
        return m.a / m.b ** 3 * ((-1) ** n * math.factorial(n)) / shifted ** (n + 1)

    def _fixed_point(self, m: MapParams, which: FixedPoint) -> PadicRational:
        return m.x1 if which is FixedPoint.X1 else m.x2

    def multiplier(self, m: MapParams, which: FixedPoint) -> PadicRational:
        """
        f'(x1) = 0 and f'(x2) = (2a - b) / a, checked against the general derivative.

        Raises:
            IdentityViolationError: closed form and general derivative disagree
        """
        closed = m.context(0) if which is FixedPoint.X1 else (2 * m.a - m.b) / m.a
        general = self.derivative(m, self._fixed_point(m, which), 1)
        if general != closed:
            logger.error(f"Multiplier mismatch at {which.value} for {m}: {closed} vs {general}")
            raise IdentityViolationError(f"multiplier at {which.value}: {closed} != {general}")
        return closed

    def nth_derivative_at_fixed_points(self, m: MapParams, n: int, which: FixedPoint) -> PadicRational:
        """
        Closed forms of f^(n) at the fixed points, n >= 2.

        x1: (-1)^n n! a b^(n-2)
        x2: (-1)^n n! a^(-n) b^(n-2) (a - b)^(n+1)
        """
        if n < 2:
            raise PreconditionError(f"n must be >= 2, got {n}")
        signed_factorial = (-1) ** n * math.factorial(n)
        if which is FixedPoint.X1:
            closed = m.a * m.b ** (n - 2) * signed_factorial
        else:
            closed = m.a ** (-n) * m.b ** (n - 2) * (m.a - m.b) ** (n + 1) * signed_factorial

        general = self.derivative(m, self._fixed_point(m, which), n)
        if general != closed:
            logger.error(f"Derivative mismatch n={n} at {which.value} for {m}")
            raise IdentityViolationError(f"d^{n}f({which.value}): closed form != general formula")
        return closed

    # ------------------------------------------------------------------
    # Classification and identities
    # ------------------------------------------------------------------

    @staticmethod
    def _stability_of(multiplier_valuation: ExtValuation) -> Stability:
        if multiplier_valuation < 0:
            return Stability.REPELLING
        if multiplier_valuation == 0:
            return Stability.INDIFFERENT
        return Stability.ATTRACTING

    def classify(self, m: MapParams) -> CaseClassification:
        """
        Classify x2 and pick the sub-case.

        Returns:
            CaseClassification whose stability matches |f'(x2)|_p against 1

        Raises:
            IdentityViolationError: the tag disagrees with the multiplier
        """
        tag = classify_valuations(m.p, m.val_a, m.val_b, m.val_2a_minus_b)
        classification = CaseClassification(tag, m.p, m.val_a, m.val_b, m.val_2a_minus_b)

        trichotomy = self._stability_of(self.multiplier(m, FixedPoint.X2).valuation)
        if trichotomy is not classification.stability:
            logger.error(f"Classification {tag.value} disagrees with multiplier ({trichotomy.value}) for {m}")
            raise IdentityViolationError(f"{tag.value} vs multiplier trichotomy {trichotomy.value}")
        logger.debug(f"{m} classified as {tag.value}")
        return classification

    def delta_identities(self, m: MapParams, x: PadicRational) -> DeltaResiduals:
        """
        Residuals of the three product identities and the alternate third one.

        f(x)(x - P)          = (a/b) x^2
        (f(x) - x)(x - P)    = ((a - b)/b) x (x - x2)
        (f(x) - x2)(x - P)   = (a/b)(x + 1/a)(x - x2)
        (f(x) - x2)(1 + (a - b) b / a (x - x2)) = (a - b)(x - x2)(x + 1/a)
        """
        fx = self.apply(m, x)
        pole, x2 = m.pole, m.x2
        ratio = m.a / m.b
        delta1 = fx * (x - pole) - ratio * x * x
        delta2 = (fx - x) * (x - pole) - (m.a - m.b) / m.b * x * (x - x2)
        delta3 = (fx - x2) * (x - pole) - ratio * (x + 1 / m.a) * (x - x2)
        alternate = (
            (fx - x2) * (1 + (m.a - m.b) * m.b / m.a * (x - x2))
            - (m.a - m.b) * (x - x2) * (x + 1 / m.a)
        )
        return DeltaResiduals(delta1.value, delta2.value, delta3.value, alternate.value)

    def scaling_check(self, m: MapParams, x: PadicRational) -> bool:
        """
        Repelling case, |x| > r0: v(f(x)) = v(x) + v(a) - v(b).

        Raises:
            WrongCaseError: the map is not in the repelling case
            PreconditionError: |x|_p <= r0
        """
        self._require_repelling(m)
        if not x.valuation < -m.val_b:
            raise PreconditionError(f"|x| must exceed r0 = p^{m.val_b}")
        return self.apply(m, x).valuation == x.valuation + (m.val_a - m.val_b)

    # ------------------------------------------------------------------
    # Radii
    # ------------------------------------------------------------------

    def _require_repelling(self, m: MapParams) -> None:
        tag = self.classify(m).tag
        if tag is not CaseTag.REPELLING_1A:
            raise WrongCaseError(f"{m} is {tag.value}, not Repelling_1a")

    def radius_sequences(self, m: MapParams, n_max: int) -> RadiusSequences:
        """
        Exponents of r_n (n = 0..n_max) and l_n (n = 0..n_max).

        r_n has exponent (n - 1) v(b) - n v(a); l_(n+1) has exponent
        n v(a) - (n + 1) v(b); l_0 = 0 has exponent infinity.
        """
        self._require_repelling(m)
        va, vb = m.val_a, m.val_b
        r_exponents = tuple((n - 1) * vb - n * va for n in range(n_max + 1))
        l_exponents = (INFINITY,) + tuple(ExtValuation(n * va - (n + 1) * vb) for n in range(n_max))
        return RadiusSequences(r_exponents, l_exponents)

    def on_exceptional_sphere(self, m: MapParams, x: PadicRational) -> Optional[ExceptionalSphereHit]:
        """
        Which r_n sphere about x1 (n >= 1) or l_n sphere about P (n >= 0) holds x, if any.
        """
        self._require_repelling(m)
        step = m.val_a - m.val_b
        if x == m.pole:
            return ExceptionalSphereHit(SphereFamily.L, 0)

        if not x.valuation.is_infinite:
            k = -m.val_b - x.valuation.value
            if k > 0 and k % step == 0:
                return ExceptionalSphereHit(SphereFamily.R, k // step)

        k = (x - m.pole).valuation.value + m.val_b
        if k >= 0 and k % step == 0:
            return ExceptionalSphereHit(SphereFamily.L, k // step + 1)
        return None

    def b_set_events(self, m: MapParams, trajectory: Trajectory) -> List[BSetEvent]:
        """
        Steps n >= 1 of an orbit at which |x^(n)| = r_n, |x^(n) - P| = l_n,
        or x^(n) lies on any exceptional sphere.
        """
        sequences = self.radius_sequences(m, trajectory.steps)
        events = []
        for n in range(1, len(trajectory.points)):
            point = trajectory.points[n]
            indexed = (
                point.valuation == sequences.r_exponents[n]
                or (point - m.pole).valuation == sequences.l_exponents[n]
            )
            hit = self.on_exceptional_sphere(m, point)
            if indexed or hit is not None:
                events.append(BSetEvent(step=n, indexed=indexed, on_any=hit))
        return events

    def _gamma_coefficients(self, m: MapParams, which: GammaCondition) -> List[Tuple[int, int]]:
        """(n, v(f^(n)(x*) / n!)) for n = 1..GAMMA_MAX_N; vanishing terms are dropped."""
        point = which.fixed_point
        coefficients = []
        for n in range(1, self.gamma_max_n + 1):
            if n == 1:
                if which is GammaCondition.GAMMA2:
                    continue
                coefficient = self.multiplier(m, point)
            else:
                coefficient = self.nth_derivative_at_fixed_points(m, n, point) / math.factorial(n)
            if not coefficient.is_zero:
                coefficients.append((n, coefficient.valuation.value))
        return coefficients

    def _brute_force_gamma(self, m: MapParams, which: GammaCondition) -> Fraction:
        """Smallest admissible -log_p r on a half-integer grid."""
        coefficients = self._gamma_coefficients(m, which)
        spread = max(abs(m.val_a), abs(m.val_b), abs(m.val_a_minus_b))
        span = 6 * spread + 10
        for twice in range(-2 * span, 2 * span + 1):
            rho = Fraction(twice, 2)
            if all(v + (n - 1) * rho > 0 for n, v in coefficients):
                return rho
        raise IdentityViolationError(f"no admissible radius for {which.value} within +-{span}")

    def gamma_radius(self, m: MapParams, which: GammaCondition) -> GammaRadius:
        """
        Largest ball guaranteed inside A(x1), SI(x2) or A(x2) by the radius conditions.

        A term of order n has norm |f^(n)(x*)/n!| r^(n-1), so with rho = -log_p r
        every term valuation v_n + (n - 1) rho must be positive. Symbolically:
        gamma1 needs rho >= -v(b) and rho > -v(a); gamma2/gamma3 need
        rho >= v(a) - v(b) - v(a - b) and rho > 2 v(a) - 3 v(a - b).

        Args:
            m: Map parameters
            which: Condition to evaluate

        Returns:
            GammaRadius with the symbolic result and its brute-force cross-check

        Raises:
            WrongCaseError: gamma2 without an indifferent x2, gamma3 without an attracting x2
        """
        stability = self.classify(m).stability
        if which is GammaCondition.GAMMA2 and stability is not Stability.INDIFFERENT:
            raise WrongCaseError(f"gamma2 needs an indifferent x2; {m} has a {stability.value} x2")
        if which is GammaCondition.GAMMA3 and stability is not Stability.ATTRACTING:
            raise WrongCaseError(f"gamma3 needs an attracting x2; {m} has a {stability.value} x2")

        va, vb, vab = m.val_a, m.val_b, m.val_a_minus_b
        if which is GammaCondition.GAMMA1:
            critical = Fraction(max(-vb, -va))
            attained = va > vb
            center = m.x1
        else:
            weak, strict = va - vb - vab, 2 * va - 3 * vab
            critical = Fraction(max(weak, strict))
            attained = weak > strict
            center = m.x2

        brute = self._brute_force_gamma(m, which)
        result = GammaRadius(
            condition=which,
            critical=critical,
            attained=attained,
            exponent=math.floor(critical),
            brute_exponent=math.floor(brute),
            brute_attained=brute.denominator == 1,
            region=UltrametricRegion.open_ball(center, math.floor(critical)),
        )
        if not result.agrees:
            logger.error(f"{which.value} for {m}: symbolic {critical} vs brute force {brute}")
        return result

    def region_report(self, m: MapParams, sequence_terms: int = 8) -> RegionReport:
        """
        Attractor and Siegel-disk balls prescribed for the map's case.

        Returns:
            RegionReport; the repelling case carries the exceptional spheres
        """
        classification = self.classify(m)
        tag = classification.tag
        r0, r1, r_ab = -m.val_b, -m.val_a, -m.val_a_minus_b

        if tag is CaseTag.REPELLING_1A:
            return RegionReport(
                classification=classification,
                attractor_x1=UltrametricRegion.open_ball(m.x1, r0),
                x2_role=RegionRole.REPELLER_NONE,
                x2_region=None,
                exceptional_spheres=self.radius_sequences(m, sequence_terms),
                note="A(x1) contains D minus the r_n spheres about x1 and the l_n spheres about P",
            )
        if tag is CaseTag.INDIFFERENT_2A:
            x1_exponent, role, x2_exponent = r1, RegionRole.SIEGEL_DISK, r1
        elif tag in (CaseTag.INDIFFERENT_2B, CaseTag.INDIFFERENT_2C):
            x1_exponent, role, x2_exponent = r0, RegionRole.SIEGEL_DISK, r_ab
        elif tag is CaseTag.ATTRACTING_3A or (tag is CaseTag.ATTRACTING_3B and m.p == 2):
            x1_exponent, role, x2_exponent = r1, RegionRole.ATTRACTOR, r1
        else:
            x1_exponent, role, x2_exponent = r0, RegionRole.ATTRACTOR, r0

        return RegionReport(
            classification=classification,
            attractor_x1=UltrametricRegion.open_ball(m.x1, x1_exponent),
            x2_role=role,
            x2_region=UltrametricRegion.open_ball(m.x2, x2_exponent),
        )

    # ------------------------------------------------------------------
    # Orbit experiments
    # ------------------------------------------------------------------

    def siegel_invariance_test(
        self,
        m: MapParams,
        sphere_exponent: int,
        samples: Optional[int] = None,
        iterations: Optional[int] = None,
        seed: Optional[int] = None
    ) -> SiegelTestResult:
        """
        Count sampled orbits that leave the sphere S(x2) of the given exponent.

        Raises:
            WrongCaseError: x2 has no Siegel disk
            PreconditionError: the sphere is not inside the Siegel disk
        """
        samples = settings.SIEGEL_SAMPLES if samples is None else samples
        iterations = settings.SIEGEL_ITERATIONS if iterations is None else iterations
        seed = settings.SEED if seed is None else seed

        report = self.region_report(m)
        if report.x2_role is not RegionRole.SIEGEL_DISK:
            raise WrongCaseError(f"x2 of {m} has no Siegel disk ({report.classification.tag.value})")
        if sphere_exponent <= report.x2_region.exponent:
            raise PreconditionError(
                f"sphere exponent {sphere_exponent} is not inside {report.x2_region}"
            )

        sphere = UltrametricRegion.sphere(m.x2, sphere_exponent)
        padic = get_padic_service(m.context)
        witnesses = []
        for index in range(samples):
            y = padic.sample_sphere(sphere, seed, sphere_exponent, index)
            trajectory = self.iterate(m, y, iterations, StopRule.leaves(sphere), reference=m.x2)
            if trajectory.terminal_event.kind is not TerminalKind.COMPLETED:
                witnesses.append(y)

        logger.info(f"Siegel test {sphere}: {len(witnesses)} exits in {samples} samples")
        return SiegelTestResult(sphere_exponent, samples, iterations, len(witnesses), witnesses)

    def _escaping(self, history: List[Tuple[ExtValuation, ExtValuation]]) -> bool:
        if len(history) <= self.escape_window:
            return False
        window = history[-(self.escape_window + 1):]
        return all(
            later[0] <= earlier[0] and later[1] <= earlier[1]
            for earlier, later in zip(window, window[1:])
        )

    def basin_test(
        self,
        m: MapParams,
        x: PadicRational,
        n_max: Optional[int] = None,
        valuation_threshold: Optional[int] = None
    ) -> BasinResult:
        """
        Decide where the orbit of x goes.

        ConvergedX1/X2 once v(x^(n) - x_i) reaches the threshold; Escaped when
        the distances to both fixed points did not decrease over a whole
        window (or the orbit hit the pole); Undecided after n_max steps.
        """
        n_max = settings.BASIN_ITERATIONS if n_max is None else n_max
        threshold = self.convergence_threshold if valuation_threshold is None else valuation_threshold

        current = x
        history = []
        for step in range(n_max + 1):
            v1 = (current - m.x1).valuation
            v2 = (current - m.x2).valuation
            if v1 >= threshold:
                return BasinResult(BasinOutcome.CONVERGED_X1, step)
            if v2 >= threshold:
                return BasinResult(BasinOutcome.CONVERGED_X2, step)
            history.append((v1, v2))
            if self._escaping(history):
                return BasinResult(BasinOutcome.ESCAPED, step)
            if step == n_max:
                break
            if current == m.pole:
                logger.debug(f"Orbit of {x} hit the pole at step {step}")
                return BasinResult(BasinOutcome.ESCAPED, step, pole_hit=True)
            current, _ = self._step(m, current, exact=False)
        return BasinResult(BasinOutcome.UNDECIDED, n_max)

    def repeller_check(self, m: MapParams, samples: int, seed: int) -> int:
        """
        Repelling case: sample a small sphere about x2 and count points that
        do not move away from x2 under one step.
        """
        self._require_repelling(m)
        val_d = m.val_2a_minus_b.value
        exponent = max(
            m.val_a - m.val_a_minus_b - m.val_b,
            val_d - m.val_a - m.val_a_minus_b,
        ) + 1
        sphere = UltrametricRegion.sphere(m.x2, exponent)
        padic = get_padic_service(m.context)
        failures = 0
        for index in range(samples):
            x = padic.sample_sphere(sphere, seed, index)
            if not (self.apply(m, x) - m.x2).valuation < exponent:
                failures += 1
        return failures

    # ------------------------------------------------------------------
    # Preimages and periodic points
    # ------------------------------------------------------------------

    def _guard_digits(self, m: MapParams) -> int:
        spread = max(abs(m.val_a), abs(m.val_b), abs(m.val_a_minus_b))
        if not (m.a + m.b).is_zero:
            spread = max(spread, abs((m.a + m.b).valuation.value))
        return self.root_guard + 4 * spread

    def preimages(self, m: MapParams, y: PadicRational) -> List[PadicRational]:
        """
        Solutions of f(x) = y, i.e. a x^2 - b y x - y = 0.

        Raises:
            UnsupportedPrimeError: p = 2
        """
        padic = get_padic_service(m.context)
        return padic.solve_quadratic(m.a, -m.b * y, -y, extra_digits=self._guard_digits(m))

    def period2_factorization_residual(self, m: MapParams) -> List[Fraction]:
        """
        Coefficients of ((a-b)x - 1)(a(a+b)x^2 + (a+b)x + 1) - (a(a^2-b^2)x^3 - b(a+b)x^2 - 2bx - 1).
        """
        a, b = _sympy_rational(m.a), _sympy_rational(m.b)
        fixed_factor = Poly((a - b) * _x - 1, _x, domain="QQ")
        quotient = Poly(a * (a + b) * _x ** 2 + (a + b) * _x + 1, _x, domain="QQ")
        cubic = Poly(a * (a ** 2 - b ** 2) * _x ** 3 - b * (a + b) * _x ** 2 - 2 * b * _x - 1, _x, domain="QQ")
        residual = fixed_factor * quotient - cubic
        return [Fraction(int(c.p), int(c.q)) for c in residual.all_coeffs()]

    def period2_points(self, m: MapParams) -> List[PadicRational]:
        """
        Points of exact period 2: roots of a(a+b)x^2 + (a+b)x + 1.

        Raises:
            DegenerateParamsError: a + b = 0 or b = 3a
            IdentityViolationError: the factorization of f^2(x) - x fails
            UnsupportedPrimeError: p = 2
        """
        total = m.a + m.b
        if total.is_zero:
            raise DegenerateParamsError(f"a + b = 0 for {m}: no 2-cycle")
        if m.b == 3 * m.a:
            # discriminant (a+b)(b-3a) vanishes; the double root is x2
            raise DegenerateParamsError(f"b = 3a for {m}: the 2-cycle collapses onto x2")
        if any(self.period2_factorization_residual(m)):
            logger.error(f"Period-2 factorization failed for {m}")
            raise IdentityViolationError("period-2 factorization residual is not zero")
        padic = get_padic_service(m.context)
        return padic.solve_quadratic(m.a * total, total, m.context(1), extra_digits=self._guard_digits(m))

    def period2_check(self, m: MapParams, r: PadicRational) -> Tuple[bool, bool]:
        """(f^2(r) = r to N - 4 digits, f(r) != r at that precision)."""
        tolerance = m.context.precision - FORWARD_CHECK_LOSS
        image = self.apply(m, r)
        closes = (self.apply(m, image) - r).valuation >= tolerance
        distinct = (image - r).valuation < tolerance
        return closes, distinct

    def exceptional_set_witnesses(self, m: MapParams) -> ExceptionalSetWitnesses:
        """
        Witnesses for points that reach the pole, points that reach x2, and 2-cycles.

        Raises:
            IdentityViolationError: a witness fails its forward check
        """
        tolerance = m.context.precision - FORWARD_CHECK_LOSS
        omega = self.preimages(m, m.pole)
        psi_point = -1 / m.a
        psi = [psi_point] if psi_point != m.x2 else []
        try:
            sigma = self.period2_points(m)
        except DegenerateParamsError:
            sigma = []

        checks = [(self.apply(m, w) - m.pole).valuation >= tolerance for w in omega]
        checks += [self.apply(m, w) == m.x2 for w in psi]
        checks += [all(self.period2_check(m, s)) for s in sigma]
        if not all(checks):
            logger.error(f"Witness forward check failed for {m}")
            raise IdentityViolationError(f"exceptional-set witness failed for {m}")

        groups = [omega, psi, sigma]
        disjoint = all(
            (u - w).valuation < tolerance
            for i, first in enumerate(groups)
            for second in groups[i + 1:]
            for u in first
            for w in second
        )
        return ExceptionalSetWitnesses(omega=omega, psi=psi, sigma=sigma, disjoint=disjoint)


# Singleton instance
_dynamics_service: Optional[DynamicsService] = None


def get_dynamics_service() -> DynamicsService:
    """
    Get or create the dynamics service singleton.

    Returns:
        DynamicsService instance
    """
    global _dynamics_service
    if _dynamics_service is None:
        _dynamics_service = DynamicsService()
    return _dynamics_service
