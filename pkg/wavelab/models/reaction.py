from enum import Enum
from typing import Annotated, Optional

import numpy as np
from numpy.polynomial import polynomial as P
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# sampling density used by the shape checks of a profile
_SAMPLES = 2001


class ProfileKind(str, Enum):
    KPP = 'kpp'
    MONOSTABLE = 'monostable'
    BISTABLE = 'bistable'
    MULTISTABLE = 'multistable5'
    CUSTOM = 'poly'


class ReactionProfile(BaseModel):
    """Polynomial patch nonlinearity f_0, coefficients in ascending order (c0, c1, ..., cn)."""

    model_config = ConfigDict(frozen=True)

    kind: ProfileKind
    coefficients: tuple[float, ...] = Field(min_length=1)
    theta: Optional[Annotated[float, Field(gt=0, lt=1)]] = None
    upper_cap: Annotated[float, Field(gt=0)]

    @field_validator('coefficients')
    @classmethod
    def _finite_and_rooted_at_zero(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not np.all(np.isfinite(value)):
            raise ValueError('coefficients must be finite')
        if value[0] != 0.0:
            raise ValueError('f_0(0) must vanish: constant coefficient has to be zero')
        return value

    @model_validator(mode='after')
    def _nonpositive_above_cap(self) -> 'ReactionProfile':
        coefficients = np.trim_zeros(np.asarray(self.coefficients), trim='b')
        if coefficients.size > 1 and coefficients[-1] > 0:
            raise ValueError('leading coefficient must be non-positive so that f_0 <= 0 far above the cap')
        span = max(1.0, 2.0 * self.upper_cap)
        s = np.linspace(self.upper_cap, self.upper_cap + span, _SAMPLES)
        values = P.polyval(s, self.coefficients)
        if np.any(values > 1e-12 * max(1.0, float(np.max(np.abs(values))))):
            raise ValueError(f'f_0 must be <= 0 on [M, inf), M={self.upper_cap}')
        return self

    @model_validator(mode='after')
    def _bistable_shape(self) -> 'ReactionProfile':
        if self.kind != ProfileKind.BISTABLE:
            return self
        if self.theta is None:
            raise ValueError('bistable profile needs a threshold theta')
        theta = self.theta
        if abs(P.polyval(theta, self.coefficients)) > 1e-12:
            raise ValueError('bistable profile must vanish at theta')
        below = np.linspace(0.0, theta, _SAMPLES)[1:-1]
        above = np.linspace(theta, 1.0, _SAMPLES)[1:-1]
        if np.any(P.polyval(below, self.coefficients) >= 0) or np.any(P.polyval(above, self.coefficients) <= 0):
            raise ValueError('bistable profile must be negative on (0, theta) and positive on (theta, 1)')
        return self


class ReactionField(BaseModel):
    """Heterogeneous reaction term: f_0 on the closed patch [z_left, z_right], -delta*u elsewhere."""

    model_config = ConfigDict(frozen=True)

    profile: ReactionProfile
    patch: tuple[float, float]
    delta: Annotated[float, Field(gt=0)]

    @field_validator('patch')
    @classmethod
    def _ordered(cls, value: tuple[float, float]) -> tuple[float, float]:
        if not (np.isfinite(value[0]) and np.isfinite(value[1])) or value[1] < value[0]:
            raise ValueError('patch must be a finite interval with z_left <= z_right')
        return value

    @property
    def has_patch(self) -> bool:
        return self.patch[1] > self.patch[0]

    @property
    def center(self) -> float:
        return 0.5 * (self.patch[0] + self.patch[1])

    @property
    def width(self) -> float:
        return self.patch[1] - self.patch[0]
