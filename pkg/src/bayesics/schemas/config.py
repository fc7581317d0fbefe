"""
Per-run options and the JSON report written by every subcommand.

Report JSON structure:
{
  "schema_version": "1.0",
  "analysis": "ttest",
  "config": {"subcommand": "ttest", "seed": 2026, "ci_level": 0.95, ...},
  "summaries": [InferenceSummary, ...],
  "bayes_factors": {"full vs null": BayesFactor, ...},
  "sample_plans": [SamplePlan, ...],
  "extras": {...}
}
"""

import json
import math
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator

from bayesics.inference.schema import BayesFactor, InferenceSummary
from bayesics.sampling.schema import SamplePlan

SCHEMA_VERSION = "1.0"


class RunConfig(BaseModel):
    subcommand: str
    data: str | None = None
    formula: str | None = None
    ci_level: float = Field(0.95, gt=0, lt=1)
    mc_epsilon: float | None = Field(None, gt=0)
    mc_confidence: float = Field(0.95, gt=0, lt=1)
    seed: int | None = None
    threads: int = Field(1, ge=1)
    rope: tuple[float, float] | None = None
    output: str | None = None
    format: Literal["json", "csv"] = "json"
    plot_data: str | None = None
    options: dict[str, Any] = {}  # subcommand-specific flags, echoed as given

    @field_validator("rope")
    @classmethod
    def _ordered_rope(cls, v: tuple[float, float] | None) -> tuple[float, float] | None:
        if v is not None and not v[0] < v[1]:
            raise ValueError("ROPE bounds must satisfy lo < hi")
        return v


def to_plain(value: Any) -> Any:
    """JSON-safe copy: numpy to Python, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, np.generic):
        return to_plain(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, BaseModel):
        return to_plain(value.model_dump(mode="json"))
    return value


class Report(BaseModel):
    schema_version: str = SCHEMA_VERSION
    analysis: str
    config: RunConfig
    summaries: list[InferenceSummary] = []
    bayes_factors: dict[str, BayesFactor] = {}
    sample_plans: list[SamplePlan] = []
    extras: dict[str, Any] = {}

    @field_validator("extras")
    @classmethod
    def _plain_extras(cls, v: dict[str, Any]) -> dict[str, Any]:
        return to_plain(v)

    def to_json(self) -> str:
        # sorted keys and fixed indentation: equal inputs give equal bytes
        return json.dumps(to_plain(self.model_dump(mode="json")), sort_keys=True, indent=2, allow_nan=False) + "\n"
