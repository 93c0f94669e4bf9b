from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# nodes closer than this (relative to the spacing) to a registered edge are moved onto it
EDGE_SNAP_FRACTION = 1e-6


class Grid(BaseModel):
    """Uniform mesh on [z_min, z_max].

    ``origin`` is the point the exponential weights are centred on (the patch centre) and
    ``edges`` lists coordinates that must be represented exactly by a node.
    """

    model_config = ConfigDict(frozen=True)

    z_min: float
    z_max: float
    n: Annotated[int, Field(ge=3)]
    origin: float = 0.0
    edges: tuple[float, ...] = ()

    @model_validator(mode='after')
    def _positive_spacing(self) -> 'Grid':
        if not (np.isfinite(self.z_min) and np.isfinite(self.z_max)) or self.z_max <= self.z_min:
            raise ValueError('grid needs z_min < z_max')
        return self

    @property
    def h(self) -> float:
        return (self.z_max - self.z_min) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        z = np.linspace(self.z_min, self.z_max, self.n)
        for edge in self.edges:
            idx = int(np.argmin(np.abs(z - edge)))
            if abs(z[idx] - edge) <= EDGE_SNAP_FRACTION * self.h:
                z[idx] = edge
        return z

    @property
    def shifted(self) -> np.ndarray:
        """Nodes relative to ``origin``; every exponential weight is evaluated on these."""
        return self.nodes - self.origin


class NodalField(BaseModel):
    """Nodal values on a grid (u, or its weighted transform v = e^{cz/2} u)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    values: np.ndarray

    @field_validator('values', mode='before')
    @classmethod
    def _as_array(cls, value: object) -> np.ndarray:
        array = np.array(value, dtype=float)
        array.flags.writeable = False
        return array

    @model_validator(mode='after')
    def _matches_grid(self) -> 'NodalField':
        if self.values.ndim != 1 or self.values.shape[0] != self.grid.n:
            raise ValueError(f'field has {self.values.shape} values, grid has {self.grid.n} nodes')
        if not np.all(np.isfinite(self.values)):
            raise ValueError('field values must be finite')
        return self

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values: np.ndarray) -> 'NodalField':
        return NodalField(grid=self.grid, values=values)


class WeightedNorms(BaseModel):
    """Squared L²_c and H¹_c norms of one field at frame speed c."""

    model_config = ConfigDict(frozen=True)

    c: Annotated[float, Field(ge=0)]
    l2_sq: Annotated[float, Field(ge=0)]
    h1_sq: Annotated[float, Field(ge=0)]
