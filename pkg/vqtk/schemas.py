from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, model_validator


class UsageReport(BaseModel):
    used: int = Field(..., ge=0)
    total: int = Field(..., ge=1)
    usage_percent: float = Field(..., ge=0.0, le=100.0)
    code_perplexity: float = Field(..., ge=0.0)  # exp(entropy) of the code histogram

    @model_validator(mode="after")
    def _percent_matches(self) -> "UsageReport":
        if self.usage_percent != 100.0 * self.used / self.total:
            raise ValueError("usage_percent must equal 100 * used / total")
        return self


class PerplexityReport(BaseModel):
    perplexity: float
    tokens: int
    grids: int
    log_prob: Optional[float] = None


class FrechetReport(BaseModel):
    metric: str = "Fréchet distance (feature space)"
    frechet_distance: float
    count_a: int
    count_b: int
    dim: int


class InceptionScoreReport(BaseModel):
    inception_score: float
    samples: int
    classes: int
    splits: int = 1
    split_std: float = 0.0


class KdReport(BaseModel):
    kd_loss: float
    mode: str
    positions: int


class VqLossReport(BaseModel):
    total: float
    codebook_term: float
    commitment_term: float
    beta: float
    composed_total: Optional[float] = None


class SweepRow(BaseModel):
    size: int
    dim: int
    usage: float
    quant_error: float
    frechet_recon: float
    ppl: float


class DemoSeedResult(BaseModel):
    seed: int
    cluster_ppl: float
    random_ppl: float
    cluster_frechet: float
    random_frechet: float
    cluster_quant_error: float
    random_quant_error: float

    @property
    def cluster_wins(self) -> bool:
        return self.cluster_ppl < self.random_ppl and self.cluster_frechet < self.random_frechet


class DemoReport(BaseModel):
    seeds: List[DemoSeedResult]
    wins: int
    total: int


class RunManifest(BaseModel):
    """Everything needed to rerun a command; written next to its outputs."""

    tool_version: str
    command: str
    params: Dict[str, Any]
    config_file: Optional[str] = None
    config_values: Dict[str, str] = Field(default_factory=dict)
    seed: int
    threads: int
    outputs: List[str] = Field(default_factory=list)
    results: Dict[str, Any] = Field(default_factory=dict)
