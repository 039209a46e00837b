"""
Instance Service.
Built-in demonstration maps, one per realizable case, and seeded random parameters and points.
"""

import logging
from fractions import Fraction
from typing import Dict, List, Optional

from app.core.config import settings
from app.core.errors import InvalidParametersError
from app.core.seeding import draw_int, make_rng
from app.models.dynamics import CaseTag, MapParams
from app.models.padic import PadicRational, PrimeContext
from app.models.schemas import InstanceInfo

logger = logging.getLogger(__name__)


BUILTIN_INSTANCES: List[InstanceInfo] = [
    InstanceInfo(
        name="repelling", p=5, a="5", b="1", case=CaseTag.REPELLING_1A.value,
        provenance="x1 attracts the domain off the exceptional spheres; x2 repels",
    ),
    InstanceInfo(
        name="siegel_disk", p=3, a="1", b="3", case=CaseTag.INDIFFERENT_2A.value,
        provenance="Siegel disk of radius 1/|a| about x2 when |a| > |b|",
    ),
    InstanceInfo(
        name="siegel_equal_norms", p=5, a="1", b="3", case=CaseTag.INDIFFERENT_2B.value,
        provenance="Siegel disk about x2 with |a - b| = |b|",
    ),
    InstanceInfo(
        name="siegel_close_parameters", p=3, a="1", b="4", case=CaseTag.INDIFFERENT_2B.value,
        provenance="Siegel disk about x2 with |a - b| < |b|",
    ),
    InstanceInfo(
        name="siegel_dyadic", p=2, a="1", b="3", case=CaseTag.INDIFFERENT_2C.value,
        provenance="indifferent x2 over Q_2 with |2a - b| = |a|",
    ),
    InstanceInfo(
        name="attracting_dyadic", p=2, a="1", b="4", case=CaseTag.ATTRACTING_3A.value,
        provenance="x2 attracts the ball of radius 1/|a| when |2a| > |b|",
    ),
    InstanceInfo(
        name="attracting_dyadic_equal", p=2, a="1", b="6", case=CaseTag.ATTRACTING_3B.value,
        provenance="x2 attracts over Q_2 with |2a| = |b|",
    ),
    InstanceInfo(
        name="attracting", p=3, a="1", b="5", case=CaseTag.ATTRACTING_3B.value,
        provenance="x2 attracts the ball of radius 1/|b| when |2a - b| < |a| = |b|",
    ),
    InstanceInfo(
        name="attracting_unrealizable", p=2, a="-", b="-", case=CaseTag.ATTRACTING_3C.value,
        realizable=False,
        provenance="needs |2a| < |b| < |a|; the value group of Q_2 has no room",
    ),
]


class InstanceService:
    """
    Service for named demonstration instances and random parameter draws.
    """

    def __init__(self):
        """Initialize the instance registry."""
        self.instances: Dict[str, InstanceInfo] = {info.name: info for info in BUILTIN_INSTANCES}
        self.valuation_range = settings.PARAM_VALUATION_RANGE
        self.unit_digits = settings.PARAM_UNIT_DIGITS
        logger.info(f"Instance Service initialized with {len(self.instances)} built-ins")

    def list_instances(self) -> List[InstanceInfo]:
        """All built-ins in registry order, the unrealizable case last."""
        return list(self.instances.values())

    def get_instance(self, name: str) -> InstanceInfo:
        """
        Look up a built-in by name.

        Raises:
            InvalidParametersError: unknown name
        """
        if name not in self.instances:
            raise InvalidParametersError(f"unknown instance {name!r}; known: {', '.join(self.instances)}")
        return self.instances[name]

    def map_params(self, name: str, precision: Optional[int] = None) -> MapParams:
        """
        MapParams of a realizable built-in.

        Raises:
            InvalidParametersError: unknown or unrealizable instance
        """
        info = self.get_instance(name)
        if not info.realizable:
            raise InvalidParametersError(f"{name} has no parameters over Q_{info.p}")
        return MapParams.of(info.p, info.a, info.b, precision)

    def realizable_instances(self) -> List[InstanceInfo]:
        return [info for info in self.instances.values() if info.realizable]

    # ------------------------------------------------------------------
    # Random draws
    # ------------------------------------------------------------------

    def random_rational(self, p: int, seed: int, *stream: int) -> Fraction:
        """
        Draw +-p^v u with v in [-R, R] and u a unit below p^PARAM_UNIT_DIGITS.

        Args:
            p: Prime
            seed: Base seed
            stream: Stream identifiers

        Returns:
            Non-zero Fraction
        """
        rng = make_rng(seed, *stream)
        v = draw_int(rng, -self.valuation_range, self.valuation_range + 1)
        unit = draw_int(rng, 1, p ** self.unit_digits)
        if unit % p == 0:
            unit += 1
        sign = 1 if draw_int(rng, 0, 2) else -1
        return sign * Fraction(p) ** v * unit

    def random_point(self, context: PrimeContext, seed: int, *stream: int) -> PadicRational:
        return context(self.random_rational(context.p, seed, *stream))

    def random_map(self, p: int, seed: int, *stream: int, precision: Optional[int] = None) -> MapParams:
        """
        Random admissible parameters (a, b); redraws b on the stream (..., attempt) while a = b.
        """
        a = self.random_rational(p, seed, *stream, 0)
        attempt = 1
        b = self.random_rational(p, seed, *stream, attempt)
        while b == a:
            attempt += 1
            b = self.random_rational(p, seed, *stream, attempt)
        return MapParams.of(p, a, b, precision)


# Singleton instance
_instance_service: Optional[InstanceService] = None


def get_instance_service() -> InstanceService:
    """
    Get or create the instance service singleton.

    Returns:
        InstanceService instance
    """
    global _instance_service
    if _instance_service is None:
        _instance_service = InstanceService()
    return _instance_service
