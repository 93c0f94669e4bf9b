from pydantic import BaseModel, ConfigDict

from wavelab.models.grid import NodalField


class EigenResult(BaseModel):
    """Ground state of -d²/dz² - f_u(z, 0) with Dirichlet truncation; eigenfunction max-normalised."""

    model_config = ConfigDict(frozen=True)

    lambda0: float
    eigenfunction: NodalField
    residual: float
