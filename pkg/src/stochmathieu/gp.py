"""Stationary Gaussian excitation processes with squared-exponential correlation.

Paths are drawn exactly on a uniform grid by circulant embedding: the
covariance matrix of the grid values is embedded in a circulant matrix whose
eigenvalues come from one FFT, and a complex white-noise vector filtered by
the square-root spectrum yields two independent exact realizations (real and
imaginary parts).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import EmbeddingNotPSD

EIG_TOL = 1e-12
MAX_PAD_DOUBLINGS = 8


@dataclass(frozen=True)
class AcfSpec:
    """Squared-exponential autocorrelation ``sigma_alpha**2 * exp(-tau**2 / (2 ell_alpha**2))``."""

    sigma_alpha: float
    ell_alpha: float

    def __post_init__(self) -> None:
        if not self.sigma_alpha >= 0:
            raise ValueError(f"sigma_alpha must be >= 0, got {self.sigma_alpha}")
        if not self.ell_alpha > 0:
            raise ValueError(f"ell_alpha must be > 0, got {self.ell_alpha}")


@dataclass(frozen=True)
class ProcessRealization:
    """Sampled channels on the uniform grid ``t0 + k*dt``."""

    t0: float
    dt: float
    channels: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        frozen = {}
        length = None
        for name, values in self.channels.items():
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"channel {name!r} must be one-dimensional")
            if length is None:
                length = arr.size
            elif arr.size != length:
                raise ValueError("all channels must share the grid length")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"channel {name!r} contains non-finite values")
            arr = arr.copy() if arr is values else arr
            arr.setflags(write=False)
            frozen[name] = arr
        object.__setattr__(self, "channels", MappingProxyType(frozen))

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def __len__(self) -> int:
        for arr in self.channels.values():
            return arr.size
        return 0

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the stream identified by ``(seed, *key)``.

    Distinct keys give statistically independent streams, so realization
    ``i`` of an experiment can be regenerated in isolation.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def acf(tau, spec: AcfSpec):
    tau = np.asarray(tau, dtype=float)
    out = spec.sigma_alpha**2 * np.exp(-(tau**2) / (2.0 * spec.ell_alpha**2))
    return out if out.ndim else float(out)


def acf_curvature_at_zero(spec: AcfSpec) -> float:
    """``-r''(0)`` of the normalized autocorrelation ``r = R / R(0)``, i.e. ``1/ell**2``."""
    return 1.0 / spec.ell_alpha**2


def embedding_size(n: int) -> int:
    """Smallest power of two that is at least ``2(n-1)``."""
    target = max(2 * (n - 1), 2)
    return 1 << (target - 1).bit_length()


def circulant_eigenvalues(spec: AcfSpec, n: int, dt: float, m: int | None = None) -> np.ndarray:
    """Eigenvalues of the circulant embedding of size ``m`` (unclamped)."""
    if m is None:
        m = embedding_size(n)
    k = np.arange(m)
    lags = np.minimum(k, m - k) * dt
    first_row = acf(lags, spec)
    return np.fft.fft(first_row).real


@lru_cache(maxsize=16)
def _embedding(spec: AcfSpec, n: int, dt: float, tol: float) -> np.ndarray:
    lam = _clamped_eigenvalues(spec, n, dt, tol)
    lam.setflags(write=False)
    return lam


def _clamped_eigenvalues(spec: AcfSpec, n: int, dt: float, tol: float) -> np.ndarray:
    m = embedding_size(n)
    for _ in range(MAX_PAD_DOUBLINGS + 1):
        lam = circulant_eigenvalues(spec, n, dt, m)
        top = lam.max()
        if top <= 0.0:
            return np.zeros_like(lam)
        floor = -tol * top
        if lam.min() >= floor:
            return np.where(lam < 0.0, 0.0, lam)
        m *= 2
    raise EmbeddingNotPSD(
        f"circulant embedding of size {m // 2} has eigenvalue {lam.min():.3e} "
        f"below -{tol:g} * {top:.3e}"
    )


def embedding_covariance(spec: AcfSpec, n: int, dt: float, tol: float = EIG_TOL) -> np.ndarray:
    """Grid covariance at lags ``0..n-1`` implied by the (clamped) embedding."""
    lam = _embedding(spec, n, dt, tol)
    return np.fft.ifft(lam).real[:n]


def sample_gp_pair(
    spec: AcfSpec,
    n: int,
    dt: float,
    rng: np.random.Generator,
    tol: float = EIG_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Two independent zero-mean paths of length ``n`` from one complex FFT."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if spec.sigma_alpha == 0.0:
        return np.zeros(n), np.zeros(n)
    lam = _embedding(spec, n, dt, tol)
    m = lam.size
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    z *= np.sqrt(lam / m)
    y = np.fft.fft(z)
    return y.real[:n].copy(), y.imag[:n].copy()


def sample_gp(
    spec: AcfSpec,
    n: int,
    dt: float,
    seed: int,
    *key: int,
    t0: float = 0.0,
    name: str = "alpha",
) -> ProcessRealization:
    """One realization on ``n`` grid points; identical inputs give identical paths."""
    path, _ = sample_gp_pair(spec, n, dt, make_rng(seed, *key))
    return ProcessRealization(t0=t0, dt=dt, channels={name: path})
