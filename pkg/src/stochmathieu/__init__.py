"""Stochastic Mathieu oscillator: simulation, stability charts and the
decomposition-synthesis density of its intermittent response."""

from .analytic import AnalyticModel, QuadSettings, build_model, total_pdf
from .errors import (
    ConfigError,
    EmbeddingNotPSD,
    EmptyInput,
    InvalidRegime,
    NotConverged,
    Overflow,
    QuadratureFailure,
    StochMathieuError,
)
from .gp import AcfSpec, ProcessRealization, sample_gp
from .sde import Broadband, SimConfig, SystemParams, WhiteNoise

__all__ = [
    "AcfSpec",
    "AnalyticModel",
    "Broadband",
    "ConfigError",
    "EmbeddingNotPSD",
    "EmptyInput",
    "InvalidRegime",
    "NotConverged",
    "Overflow",
    "ProcessRealization",
    "QuadSettings",
    "QuadratureFailure",
    "SimConfig",
    "StochMathieuError",
    "SystemParams",
    "WhiteNoise",
    "build_model",
    "sample_gp",
    "total_pdf",
]
