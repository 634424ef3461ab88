"""Pydantic request/response models shared by the service, CLI, and library."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from lcisim.rng import DEFAULT_SEED

SWEEP_CSV_HEADER = (
    "N,snr_lci_mc_db,snr_lci_mc_se,snr_lci_exact_db,snr_lci_bound_db,"
    "snr_pai_mc_db,snr_pai_mc_se,snr_pai_analytic_db"
)
RATIO_CSV_HEADER = "abscissa,ratio_approx,ratio_exact,ratio_mc"
PERCENTILE_CSV_HEADER = "percent,db"

DEFAULT_SWEEP_N = [2**k for k in range(8, 21)]
DEFAULT_VERIFY_N = [2**k for k in range(2, 11)]
DEFAULT_ABSCISSAS = [0.25 * i for i in range(13)]  # 0.0 .. 3.0
DEFAULT_MC_CAP = 2**14


class SceneSpec(BaseModel):
    """Scene source: synthetic generator parameters or uploaded file content."""

    kind: Literal["uniform", "point", "file"]
    n: int = Field(default=1024, ge=2)
    x0: float = Field(default=1e7, ge=0)
    background: float = Field(default=1.0, ge=0)
    peak: float = Field(default=1e6, ge=0)
    position: int = Field(default=0, ge=0)
    filename: str | None = None
    content_b64: str | None = None
    avg_photons: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "SceneSpec":
        if self.kind in ("uniform", "point") and (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two, got {self.n}")
        if self.kind == "file" and (self.filename is None or self.content_b64 is None):
            raise ValueError("file scenes need filename and content_b64")
        return self

    def label(self) -> str:
        if self.kind == "file":
            stem = (self.filename or "scene").rsplit("/", 1)[-1]
            stem = stem.rsplit(".", 1)[0]
            return "".join(c if c.isalnum() or c in "-_" else "_" for c in stem) or "scene"
        return f"{self.kind}_{self.n}"


class NoiseSpec(BaseModel):
    sigma: float = Field(default=5.0, ge=0)
    rho: float = Field(default=5.0, ge=0)
    gain: float = Field(default=1.0, ge=1.0)
    additive_kind: Literal["gaussian", "uniform", "none"] = "gaussian"
    poisson_approx_threshold: float | None = Field(default=None, gt=0)
    additive_on_dark: bool = False


class VerifyRequest(BaseModel):
    n_list: list[int] = Field(default_factory=lambda: list(DEFAULT_VERIFY_N))
    seed: int = DEFAULT_SEED
    self_test: bool = False


class SweepRequest(BaseModel):
    n_list: list[int] = Field(default_factory=lambda: list(DEFAULT_SWEEP_N))
    x0: float = Field(default=1e7, gt=0)
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    trials: int = Field(default=2000, ge=2)
    seed: int = DEFAULT_SEED
    mc_cap: int = Field(default=DEFAULT_MC_CAP, ge=2)
    workers: int = Field(default=1, ge=1)


class RatioCurveRequest(BaseModel):
    abscissas: list[float] = Field(default_factory=lambda: list(DEFAULT_ABSCISSAS))
    n: int = Field(default=1024, ge=4)
    x0: float = Field(default=1e7, gt=0)
    sigma: float = Field(default=5.0, ge=0)
    trials: int = Field(default=2000, ge=2)
    seed: int = DEFAULT_SEED
    mc: bool = True
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "RatioCurveRequest":
        if (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two, got {self.n}")
        if any(a < 0 for a in self.abscissas):
            raise ValueError("abscissas must be nonnegative")
        return self


class PixelMapRequest(BaseModel):
    scene: SceneSpec
    seed: int = DEFAULT_SEED


class PercentileCurveRequest(BaseModel):
    scenes: list[SceneSpec] = Field(min_length=1)
    seed: int = DEFAULT_SEED


class RunOnceRequest(BaseModel):
    architecture: Literal["lci", "pai", "lai"]
    scene: SceneSpec
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    trials: int = Field(default=2000, ge=2)
    seed: int = DEFAULT_SEED
    delta_t: float = Field(default=1.0, gt=0)
    workers: int = Field(default=1, ge=1)


class ArtifactFile(BaseModel):
    """One output file: CSV travels as text, binary formats as base64."""

    name: str
    media_type: str
    text: str | None = None
    content_b64: str | None = None


class CommandResponse(BaseModel):
    command: str
    status: Literal["ok", "fail"]
    report: dict
    artifacts: list[ArtifactFile] = Field(default_factory=list)
