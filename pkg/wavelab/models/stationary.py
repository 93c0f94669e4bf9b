from typing import Annotated, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from wavelab.models.grid import NodalField


class NewtonOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: Annotated[float, Field(gt=0)] = 1e-10
    max_iter: Annotated[int, Field(ge=1)] = 50
    max_halvings: Annotated[int, Field(ge=0)] = 30
    negative_tol: Annotated[float, Field(gt=0)] = 1e-8


class NewtonResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    profile: NodalField
    residuals: list[float]  # max-norm residual before each step, final one last
    iterations: int

    @property
    def residual(self) -> float:
        return self.residuals[-1]


class DecayRates(BaseModel):
    model_config = ConfigDict(frozen=True)

    lambda_plus: Annotated[float, Field(gt=0)]
    lambda_minus: Annotated[float, Field(lt=0)]


class DecayReport(BaseModel):
    """Exterior comparison against exponentials anchored at the patch edges.

    ``worst_margin`` is the largest excess u - bound over both sides (negative when both pass).
    """

    model_config = ConfigDict(frozen=True)

    left_ok: bool
    right_ok: bool
    worst_margin: float
    violation_z: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.left_ok and self.right_ok


class WaveEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    c: float
    profile: NodalField
    residual: float
    energy: float
    decay_ok: bool

    @property
    def sup_norm(self) -> float:
        return self.profile.sup_norm


class WaveBranch(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: list[WaveEntry] = Field(default_factory=list)
    fold_estimate: Optional[float] = None

    @model_validator(mode='after')
    def _sorted_by_speed(self) -> 'WaveBranch':
        speeds = [entry.c for entry in self.entries]
        if speeds != sorted(speeds):
            raise ValueError('branch entries must be sorted by c')
        return self
