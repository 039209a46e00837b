"""
Pydantic schemas for experiment configuration and reports.
Every numeric field of a report is an exact rational or valuation rendered as a string.
"""

import json
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

from app.core.config import settings
from app.models.padic import ExtValuation, PadicRational, parse_rational


class SuiteName(str, Enum):
    """Verification suites runnable from the command line."""
    IDENTITIES = "identities"
    CLASSIFICATION = "classification"
    SIEGEL = "siegel"
    BASINS = "basins"
    ERGODICITY = "ergodicity"
    ALL = "all"


class ReportFormat(str, Enum):
    CSV = "csv"
    RECORDS = "records"


def render(value: Any) -> str:
    """Render an exact value for machine output: "num/den", integers, or "inf"."""
    if isinstance(value, PadicRational):
        value = value.value
    if isinstance(value, ExtValuation):
        return str(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    return str(value)


class ExperimentConfig(BaseModel):
    """
    Parameters of one run. Loaded from a JSON file and/or command-line flags;
    flags override the file, the file overrides Settings defaults.
    """
    p: Optional[int] = Field(default=None, ge=2, description="Prime p")
    a: Optional[str] = Field(default=None, description="Parameter a as n, n/d or p^v*u")
    b: Optional[str] = Field(default=None, description="Parameter b as n, n/d or p^v*u")
    precision: int = Field(default_factory=lambda: settings.PRECISION_DIGITS, ge=1, description="Digits N")
    seed: int = Field(default_factory=lambda: settings.SEED, ge=0, description="Base seed")
    samples: Optional[int] = Field(default=None, ge=1, description="Samples per check")
    iterations: Optional[int] = Field(default=None, ge=1, description="Iteration cap")
    sphere_exponent: Optional[int] = Field(default=None, description="Sphere exponent m")
    residue_exponent: Optional[int] = Field(default=None, ge=1, description="Residue exponent k")
    start: Optional[str] = Field(default=None, description="Orbit start point")
    suite: Optional[SuiteName] = Field(default=None, description="Verification suite")
    output_dir: Optional[str] = Field(default=None, description="Directory for machine reports")
    report_format: ReportFormat = Field(
        default_factory=lambda: ReportFormat(settings.REPORT_FORMAT),
        description="Machine report format"
    )

    @field_validator("a", "b", "start")
    @classmethod
    def _rational_text(cls, value: Optional[str]) -> Optional[str]:
        if value is not None:
            try:
                parse_rational(value)
            except (ValueError, ZeroDivisionError) as e:
                raise ValueError(f"not a rational: {value!r}") from e
        return value

    @classmethod
    def from_sources(cls, config_file: Optional[str], overrides: Dict[str, Any]) -> "ExperimentConfig":
        """
        Merge a JSON config file with explicitly given flags.

        Args:
            config_file: Optional path to a JSON object of ExperimentConfig fields
            overrides: Flag values; None means "not given"

        Returns:
            Validated ExperimentConfig
        """
        values: Dict[str, Any] = {}
        if config_file:
            values.update(json.loads(Path(config_file).read_text(encoding="utf-8")))
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    @property
    def resolved_sphere_exponent(self) -> int:
        """Sphere exponent m, 1 when not given; 0 and negatives pass through to be rejected."""
        return 1 if self.sphere_exponent is None else self.sphere_exponent

    class Config:
        json_schema_extra = {
            "example": {
                "p": 5,
                "b": "5",
                "sphere_exponent": 1,
                "residue_exponent": 4,
                "seed": 0,
                "suite": "ergodicity"
            }
        }


class CheckRecord(BaseModel):
    """
    One machine-readable check outcome.
    """
    suite: str = Field(..., description="Suite the check belongs to")
    check: str = Field(..., description="Check name")
    instance: str = Field(..., description="Instance label")
    inputs: Dict[str, str] = Field(default_factory=dict, description="Exact inputs")
    outputs: Dict[str, str] = Field(default_factory=dict, description="Exact outputs")
    passed: bool = Field(..., description="Whether the check passed")

    @classmethod
    def of(cls, suite: str, check: str, instance: str, passed: bool, inputs=None, outputs=None) -> "CheckRecord":
        return cls(
            suite=suite,
            check=check,
            instance=instance,
            passed=bool(passed),
            inputs={key: render(value) for key, value in (inputs or {}).items()},
            outputs={key: render(value) for key, value in (outputs or {}).items()},
        )


class SuiteReport(BaseModel):
    """
    All records of a run with the resolved configuration.
    """
    version: str = Field(default_factory=lambda: settings.APP_VERSION, description="Toolkit version")
    config: ExperimentConfig = Field(..., description="Resolved configuration")
    records: List[CheckRecord] = Field(default_factory=list, description="Check records")

    @property
    def failures(self) -> List[CheckRecord]:
        return [record for record in self.records if not record.passed]

    @property
    def passed(self) -> bool:
        return not self.failures


class InstanceInfo(BaseModel):
    """
    A built-in demonstration instance.
    """
    name: str = Field(..., description="Instance name")
    p: int = Field(..., description="Prime")
    a: str = Field(..., description="Parameter a")
    b: str = Field(..., description="Parameter b")
    case: str = Field(..., description="Expected CaseTag")
    realizable: bool = Field(default=True, description="Whether Q_p realizes the case")
    provenance: str = Field(..., description="Result the instance demonstrates")
