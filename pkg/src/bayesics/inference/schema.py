"""
Pydantic models for the inferential quantities every analysis reports.

InferenceSummary JSON structure:
{
  "label": "rx1_indomethacin",
  "post_mean": 0.472,
  "ci_lower": 0.288,
  "ci_upper": 0.773,
  "ci_level": 0.95,
  "prob_direction": 0.999,
  "rope_prob": 0.0057,
  "rope_bounds": [0.889, 1.125],
  "bayes_factor": 10.6,
  "bf_interpretation": "Strong (in favor of keeping in the model)"
}
"""

import math

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator


class InferenceSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    post_mean: float
    ci_lower: float
    ci_upper: float
    ci_level: float = Field(gt=0, lt=1)
    prob_direction: float | None = Field(None, ge=0.5, le=1.0)
    rope_prob: float | None = Field(None, ge=0.0, le=1.0)
    rope_bounds: tuple[float, float] | None = None
    bayes_factor: float | None = Field(None, ge=0.0)
    bf_interpretation: str | None = None

    @model_validator(mode="after")
    def _ordered(self) -> "InferenceSummary":
        if self.ci_lower > self.ci_upper:
            raise ValueError("ci_lower exceeds ci_upper")
        if self.rope_bounds is not None and not self.rope_bounds[0] < self.rope_bounds[1]:
            raise ValueError("rope bounds must satisfy lo < hi")
        return self

    def with_bayes_factor(self, bf: "BayesFactor") -> "InferenceSummary":
        return self.model_copy(update={"bayes_factor": bf.value, "bf_interpretation": bf.jeffreys_label})

    def relabel(self, label: str) -> "InferenceSummary":
        return self.model_copy(update={"label": label})


class BayesFactor(BaseModel):
    """Bayes factor of ``numerator`` against ``denominator``.

    ``log_value`` is kept alongside ``value`` because decisive evidence
    underflows double precision long before it stops being interesting.
    """

    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0.0)
    log_value: float
    numerator: str
    denominator: str
    jeffreys_label: str

    @computed_field
    @property
    def orientation(self) -> str:
        return f"{self.numerator} vs. {self.denominator}"

    @classmethod
    def from_log(cls, log_bf: float, numerator: str, denominator: str) -> "BayesFactor":
        from bayesics.inference.core import label_from_log10

        if not math.isfinite(log_bf):
            raise ValueError(f"log Bayes factor must be finite, got {log_bf}")
        value = math.exp(min(log_bf, 700.0))
        label = label_from_log10(log_bf / math.log(10.0), favors=(numerator, denominator))
        return cls(
            value=value,
            log_value=log_bf,
            numerator=numerator,
            denominator=denominator,
            jeffreys_label=label,
        )

    def inverted(self) -> "BayesFactor":
        return BayesFactor.from_log(-self.log_value, self.denominator, self.numerator)
