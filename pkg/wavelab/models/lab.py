from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from wavelab.models.evolution import VerdictKind
from wavelab.models.exceptions import DemoFailedError
from wavelab.models.grid import NodalField


class SweepRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    c: float
    verdict: VerdictKind
    P_final: float
    E_final: float
    runtime: float = 0.0
    error: Optional[str] = None


class SweepResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: list[SweepRow]
    estimated_critical_speed: Optional[float] = None
    bracket: Optional[tuple[float, float]] = None
    monotone: bool = True
    violations: list[str] = Field(default_factory=list)


class ShapeRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: float
    c: float
    verdict: VerdictKind
    back_tail_mass: float
    outside_fraction: float
    edge_steepness: float
    profile: NodalField


class ShapeStudy(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: list[ShapeRow]

    def row(self, delta: float, c: float) -> ShapeRow:
        for candidate in self.rows:
            if candidate.delta == delta and candidate.c == c:
                return candidate
        raise KeyError(f'no shape row for delta={delta}, c={c}')


class BistabilityCase(BaseModel):
    """One frame speed of the multistable demonstration."""

    model_config = ConfigDict(frozen=True)

    c: float
    verdict_low: VerdictKind
    verdict_high: VerdictKind
    verdict_tiny: VerdictKind
    sup_low: float
    sup_high: float
    energy_low: float
    energy_high: float
    variational_lower: float  # minimised energy with the cap at 1
    variational_upper: float  # minimised energy with the full cap
    staircase: bool
    clauses: dict[str, bool]
    profile_low: NodalField
    profile_high: NodalField


class BistabilityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    cases: list[BistabilityCase]

    @property
    def passed(self) -> bool:
        return all(all(case.clauses.values()) for case in self.cases if case.c == 0.0)

    def raise_for_failure(self) -> None:
        """Raise DemoFailedError on the first violated clause of a standing-habitat case."""
        for case in self.cases:
            if case.c != 0.0:
                continue
            for clause, holds in case.clauses.items():
                if not holds:
                    raise DemoFailedError(f'{clause} at c={case.c:g}')


class ThresholdRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: float
    energy_lower: Optional[float] = None
    branch_fold: Optional[float] = None
    dynamic: Optional[float] = None
    majorant_upper: float
    lambda0: float
    c_lin: Optional[float] = None

    def gaps(self) -> dict[str, Optional[float]]:
        values = {'energy_lower': self.energy_lower, 'branch_fold': self.branch_fold, 'dynamic': self.dynamic, 'majorant_upper': self.majorant_upper}
        names = list(values)
        gaps: dict[str, Optional[float]] = {}
        for i, first in enumerate(names):
            for second in names[i + 1 :]:
                a, b = values[first], values[second]
                gaps[f'{second}-{first}'] = None if a is None or b is None else b - a
        return gaps


class ThresholdReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    profile: str
    rows: list[ThresholdRow]
