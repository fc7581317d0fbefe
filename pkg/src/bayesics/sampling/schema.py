"""
Pydantic models for Monte Carlo precision targets and sample plans.

A plan is computed per monitored estimand from a pilot sample and records
every input of the sample-size formulas, so a report can be audited:

{
  "label": "diff",
  "pilot_size": 500,
  "epsilon": 0.05,
  "s": 0.95,
  "ci_level": 0.95,
  "density_at_lower": 0.061,
  "density_at_upper": 0.058,
  "l_lower": 2591,
  "l_upper": 2820,
  "m": 412,
  "total_draws": 2820
}
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PrecisionTarget(BaseModel):
    model_config = ConfigDict(frozen=True)

    # Absolute MC margin of error; None means relative_epsilon × pilot SD.
    epsilon: float | None = Field(None, gt=0)
    s: float = Field(0.95, gt=0, lt=1)
    ci_level: float = Field(0.95, gt=0, lt=1)

    @property
    def alpha_half(self) -> float:
        return (1.0 - self.ci_level) / 2.0


class SamplePlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str = ""
    pilot_size: int = 500
    epsilon: float
    s: float
    ci_level: float
    density_at_lower: float = Field(gt=0)
    density_at_upper: float = Field(gt=0)
    l_lower: int
    l_upper: int
    m: int
    total_draws: int

    @model_validator(mode="after")
    def _total_covers_pilot(self) -> "SamplePlan":
        if self.total_draws < self.pilot_size:
            raise ValueError("total_draws must be at least pilot_size")
        return self
