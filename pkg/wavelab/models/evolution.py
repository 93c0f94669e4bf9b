from enum import Enum
from typing import Annotated, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from wavelab.models.grid import NodalField


class Scheme(str, Enum):
    BACKWARD_EULER_IMEX = 'be'
    CRANK_NICOLSON_IMEX = 'cn'


class SchemeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dt: Annotated[float, Field(gt=0)] = 0.1
    T: Annotated[float, Field(gt=0)] = 150.0
    scheme: Scheme = Scheme.BACKWARD_EULER_IMEX
    sample_every: Annotated[int, Field(ge=1)] = 10
    clamp_negative: bool = True

    @model_validator(mode='after')
    def _step_fits_horizon(self) -> 'SchemeConfig':
        if self.dt > self.T:
            raise ValueError('dt must not exceed T')
        return self

    @property
    def steps(self) -> int:
        return max(1, int(round(self.T / self.dt)))


class VerdictThresholds(BaseModel):
    model_config = ConfigDict(frozen=True)

    extinct_sup: Annotated[float, Field(gt=0)] = 1e-3
    persist_sup: Annotated[float, Field(gt=0)] = 1e-2
    persist_energy_tol: Annotated[float, Field(gt=0)] = 1e-4
    persist_mass_tol: Annotated[float, Field(gt=0)] = 1e-3
    trend_fraction: Annotated[float, Field(gt=0, le=1)] = 0.1


# classify_longtime in words; T_w = T (1 - trend_fraction) starts the trend window
EXTINCT_RULE = 'sup u(T) < extinct_sup and P non-increasing on [T_w, T]'
PERSIST_RULE = (
    'sup u(T) > persist_sup and |E(T) - E(T_w)| < persist_energy_tol * max(1, |E(T)|)'
    ' and |P(T) - P(T_w)| <= persist_mass_tol * |P(T)|'
)


class DiagnosticSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    P: float
    E: float
    dissipation: float
    sup_norm: float
    cumulative_dissipation: float = 0.0  # integral of ||u_t||²_{L²_c} from 0 to t, per-step quadrature
    l2c_norm: float = 0.0


class TrajectoryDiagnostics(BaseModel):
    model_config = ConfigDict(frozen=True)

    samples: list[DiagnosticSample]
    snapshots: list[NodalField] = Field(default_factory=list)
    snapshot_times: list[float] = Field(default_factory=list)
    clamp_count: int = 0

    @model_validator(mode='after')
    def _increasing_times(self) -> 'TrajectoryDiagnostics':
        times = [sample.t for sample in self.samples]
        if any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise ValueError('sample times must be strictly increasing')
        return self

    def column(self, name: str) -> list[float]:
        return [getattr(sample, name) for sample in self.samples]


class VerdictKind(str, Enum):
    EXTINCT = 'Extinct'
    PERSIST = 'Persist'
    UNDECIDED = 'Undecided'


class LongtimeVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: VerdictKind
    final_P: float
    final_sup: float
    energy_trend: float  # E(T) - E(T - trend window)


class DissipationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    energy_drop: float  # -(E(t_end) - E(t_start))
    dissipated: float  # integral of ||u_t||²_{L²_c} over the same window
    relative_error: float
    worst_interval_error: float
    passes: bool


class EnvelopeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    lambda_c: float
    threshold: float  # first amplitude where f_0(s)/s - f_0'(0) reaches lambda_c / 2, M when none
    kappa: Annotated[float, Field(ge=0)]  # smallest kappa with u0 <= kappa phi_c
    kappa_max: float  # inf when the ratio bound holds for every s > 0
    holds: bool
    worst_ratio: float  # max over samples and nodes of u / (kappa phi_c) e^{lambda_c t / 2}
    l2_kappa: float = 0.0  # ||u0||_{L²_c}
    l2_worst_ratio: float = 0.0  # max over samples of ||u(t)|| / (l2_kappa e^{-lambda_c t / 2})
    final_sup: float = 0.0
    verdict: VerdictKind = VerdictKind.UNDECIDED
