from enum import Enum
from typing import Annotated, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from wavelab.models.grid import NodalField

# sup-norm separating genuine profiles from the exponentially small Dirichlet tails
WAVE_THRESHOLD = 1e-6


class Classification(str, Enum):
    TRIVIAL = 'Trivial'
    WAVE = 'Wave'


class EnergyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    kinetic: float
    potential: float
    gradient_l2c_norm: Annotated[float, Field(ge=0)]

    @model_validator(mode='after')
    def _decomposes(self) -> 'EnergyReport':
        scale = max(abs(self.kinetic), abs(self.potential), 1e-300)
        if abs(self.value - (self.kinetic + self.potential)) > 1e-12 * scale:
            raise ValueError('energy value must equal kinetic + potential')
        return self


class MinimizeOptions(BaseModel):
    """Projected Barzilai-Borwein descent settings.

    Args:
        tol: stationarity tolerance for the projected gradient, relative to max(1, ||u||_{L²_c}) in L²_c
            and to max(1, sup u) node by node.
        max_iter: iteration cap.
        cap: upper box bound; ``None`` means the profile's cap M. A smaller cap minimises the truncated nonlinearity.
        raise_on_cap: raise NotConvergedError when the cap is hit instead of returning the best iterate.
        stop_on_negative_energy: stop at the first accepted nontrivial iterate with negative energy.
        record_history: keep the energy of every accepted iterate.
    """

    model_config = ConfigDict(frozen=True)

    tol: Annotated[float, Field(gt=0)] = 1e-8
    max_iter: Annotated[int, Field(ge=1)] = 50_000
    cap: Optional[Annotated[float, Field(gt=0)]] = None
    raise_on_cap: bool = True
    stop_on_negative_energy: bool = False
    record_history: bool = True
    armijo: Annotated[float, Field(gt=0, lt=1)] = 1e-4


class MinimizeResult(BaseModel):
    """``energy.gradient_l2c_norm`` is the norm of the projected gradient, the gradient itself where the box is inactive."""

    model_config = ConfigDict(frozen=True)

    minimizer: NodalField
    energy: EnergyReport
    iterations: int
    converged: bool
    classification: Classification
    tolerance: float  # effective absolute stationarity tolerance
    stopped_on_negative: bool = False
    energy_history: list[float] = Field(default_factory=list)

    @model_validator(mode='after')
    def _stationary_when_converged(self) -> 'MinimizeResult':
        if self.converged and self.energy.gradient_l2c_norm > self.tolerance:
            raise ValueError('a converged descent must meet its stationarity tolerance')
        return self
