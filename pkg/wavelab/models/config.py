from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator

from wavelab.models.energy import MinimizeOptions
from wavelab.models.evolution import Scheme, SchemeConfig, VerdictThresholds

NonNegativeSpeed = Annotated[float, Field(ge=0)]


class ExperimentConfig(BaseModel):
    """Every knob of a wavelab run; loaded from a flat ``key = value`` file."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    profile: Annotated[str, Field(min_length=1)] = 'kpp'
    delta: PositiveFloat = 1.0
    L: PositiveFloat = 300.0
    l: PositiveFloat = 30.0  # noqa: E741
    T: PositiveFloat = 150.0
    dt: PositiveFloat = 0.1
    h: PositiveFloat = 0.1

    c: NonNegativeSpeed = 0.0
    c_list: Annotated[list[NonNegativeSpeed], Field(min_length=1)] = Field(default_factory=lambda: [round(0.2 * k, 10) for k in range(15)])
    c_lo: NonNegativeSpeed = 0.0
    c_hi: NonNegativeSpeed = 3.0
    c_step: PositiveFloat = 0.1
    c_max: NonNegativeSpeed = 3.0

    amplitude: Annotated[float, Field(ge=0)] = 1.0
    amplitudes: Annotated[list[Annotated[float, Field(ge=0)]], Field(min_length=1)] = Field(default_factory=lambda: [1.0, 1.5])
    delta_list: Annotated[list[PositiveFloat], Field(min_length=1)] = Field(default_factory=lambda: [0.1, 1.0, 10.0])

    scheme: Scheme = Scheme.BACKWARD_EULER_IMEX
    sample_every: Annotated[int, Field(ge=1)] = 10
    clamp_negative: bool = True

    bisect_tol: PositiveFloat = 0.02
    minimize_tol: PositiveFloat = 1e-8
    max_iter: Annotated[int, Field(ge=1)] = 50_000
    workers: Annotated[int, Field(ge=1)] = 1

    extinct_sup: PositiveFloat = 1e-3
    persist_sup: PositiveFloat = 1e-2
    persist_energy_tol: PositiveFloat = 1e-4
    persist_mass_tol: PositiveFloat = 1e-3
    trend_fraction: Annotated[float, Field(gt=0, le=1)] = 0.1

    write_profiles: bool = False
    output_dir: Annotated[str, Field(min_length=1)] = 'wavelab-out'

    @model_validator(mode='after')
    def _consistent(self) -> 'ExperimentConfig':
        if self.dt > self.T:
            raise ValueError('dt must not exceed T')
        if self.l >= self.L:
            raise ValueError('patch width l must be smaller than the domain length L')
        if self.h > self.l:
            raise ValueError('grid spacing h must resolve the patch')
        if self.c_hi < self.c_lo:
            raise ValueError('c_hi must not be below c_lo')
        return self

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(dt=self.dt, T=self.T, scheme=self.scheme, sample_every=self.sample_every, clamp_negative=self.clamp_negative)

    def thresholds(self) -> VerdictThresholds:
        return VerdictThresholds(
            extinct_sup=self.extinct_sup,
            persist_sup=self.persist_sup,
            persist_energy_tol=self.persist_energy_tol,
            persist_mass_tol=self.persist_mass_tol,
            trend_fraction=self.trend_fraction,
        )

    def minimize_options(self, **overrides: object) -> MinimizeOptions:
        return MinimizeOptions(tol=self.minimize_tol, max_iter=self.max_iter).model_copy(update=overrides)
