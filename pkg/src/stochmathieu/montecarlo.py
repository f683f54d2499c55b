"""Seeded Monte-Carlo ensembles of the full and averaged oscillators.

Realization ``i`` draws its excitation and noise from streams keyed by
``(master_seed, i)``, so any subset of realizations can be recomputed in
isolation and the ensemble does not depend on how work is split across
processes.  Results are assembled in realization order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .sde import SimConfig, SystemParams, sample_alpha, simulate_averaged, simulate_full
from .stats import StreamingHistogram

SYSTEMS = ("full", "averaged")


@dataclass(frozen=True)
class EnsembleResult:
    system: str
    sample_interval: float
    samples: np.ndarray  # [realization, sample]

    @property
    def flat(self) -> np.ndarray:
        return self.samples.ravel()

    @property
    def total_samples(self) -> int:
        return int(self.samples.size)


def record_stride(cfg: SimConfig, sample_interval: float) -> int:
    stride = int(round(sample_interval / cfg.dt))
    if stride < 1 or not math.isclose(stride * cfg.dt, sample_interval, rel_tol=1e-9):
        raise ValueError(f"sample_interval {sample_interval} is not a multiple of dt {cfg.dt}")
    return stride


def realization_samples(
    params: SystemParams, cfg: SimConfig, index: int, system: str, sample_interval: float
) -> np.ndarray:
    """Post-burn-in response ``x`` of one realization, recorded every ``sample_interval``."""
    stride = record_stride(cfg, sample_interval)
    alpha = sample_alpha(params, cfg, index)
    sl = slice(cfg.burn_index, None, stride)
    if system == "full":
        return np.array(simulate_full(params, cfg, alpha, index)["x"][sl])
    if system == "averaged":
        chi = simulate_averaged(params, cfg, alpha, index)
        t = chi.t[sl]
        w = params.omega0
        return chi["chi1"][sl] * np.cos(w * t) + chi["chi2"][sl] * np.sin(w * t)
    raise ValueError(f"system must be one of {SYSTEMS}, got {system!r}")


def run_ensemble(
    params: SystemParams,
    cfg: SimConfig,
    system: str = "averaged",
    sample_interval: float | None = None,
    workers: int = 1,
) -> EnsembleResult:
    """Simulate ``cfg.n_realizations`` paths and collect recorded samples.

    ``sample_interval`` defaults to one damping time ``1/(zeta*omega0)``.
    """
    if system not in SYSTEMS:
        raise ValueError(f"system must be one of {SYSTEMS}, got {system!r}")
    if sample_interval is None:
        sample_interval = default_sample_interval(params, cfg)
    job = partial(realization_samples, params, cfg, system=system, sample_interval=sample_interval)
    indices = range(cfg.n_realizations)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(job, indices, chunksize=max(1, cfg.n_realizations // (4 * workers))))
    else:
        rows = [job(i) for i in indices]
    return EnsembleResult(system, sample_interval, np.vstack(rows))


def realization_histogram(
    params: SystemParams, cfg: SimConfig, index: int, system: str, sample_interval: float, scale: float
) -> StreamingHistogram:
    hist = StreamingHistogram(scale)
    hist.add(realization_samples(params, cfg, index, system, sample_interval))
    return hist


def histogram_ensemble(
    params: SystemParams,
    cfg: SimConfig,
    system: str = "averaged",
    sample_interval: float | None = None,
    workers: int = 1,
    scale: float | None = None,
) -> StreamingHistogram:
    """Pooled fine histogram of ``x`` over all realizations.

    Every post-burn-in integrator step is counted by default, which keeps
    memory bounded where :func:`run_ensemble` would hold ``n_steps`` values
    per realization.  ``scale`` sets where the bins turn logarithmic and
    defaults to the standard deviation without parametric excitation.
    """
    if system not in SYSTEMS:
        raise ValueError(f"system must be one of {SYSTEMS}, got {system!r}")
    if sample_interval is None:
        sample_interval = cfg.dt
    if scale is None:
        scale = math.sqrt(params.ou_variance) if params.ou_variance > 0 else 1.0
    job = partial(realization_histogram, params, cfg, system=system, sample_interval=sample_interval, scale=scale)
    indices = range(cfg.n_realizations)
    total = StreamingHistogram(scale)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(job, indices, chunksize=max(1, cfg.n_realizations // (4 * workers)))
            for h in parts:
                total = total.merge(h)
    else:
        for i in indices:
            total = total.merge(job(i))
    return total


def default_sample_interval(params: SystemParams, cfg: SimConfig) -> float:
    """One damping time, snapped to the integration grid."""
    stride = max(1, int(round(1.0 / (params.zeta * params.omega0) / cfg.dt)))
    return stride * cfg.dt
