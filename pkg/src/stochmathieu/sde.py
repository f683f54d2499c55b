"""Euler-Maruyama integration of the stochastic Mathieu oscillator.

Two systems are integrated on the grid of a sampled excitation path:

* the full oscillator
  ``x'' + 2 zeta w0 x' + w0**2 (1 + alpha(t) sin(2 w0 t)) x = F(t)``;
* the averaged slow-variable pair
  ``chi1' = -(zeta - alpha/4) w0 chi1 + sigma_F W1'``,
  ``chi2' = -(zeta + alpha/4) w0 chi2 + sigma_F W2'``
  driven by independent white noises.

Time loops are compiled with numba; noise increments are drawn up front by
numpy so that a path depends only on ``(master_seed, realization)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numba
import numpy as np

from .errors import Overflow
from .gp import AcfSpec, ProcessRealization, make_rng, sample_gp_pair

# stream ids under (master_seed, realization)
ALPHA_STREAM = 0
NOISE_STREAM = 1


@dataclass(frozen=True)
class WhiteNoise:
    """Additive forcing ``F = nu * W'``."""

    nu: float

    def sigma_f2(self, omega0: float) -> float:
        return self.nu**2 / (2.0 * omega0**2)

    def intensity(self) -> float:
        return self.nu


@dataclass(frozen=True)
class Broadband:
    """Broadband additive forcing described by its spectral level at ``omega0``."""

    s_f: float

    def sigma_f2(self, omega0: float) -> float:
        return math.pi * self.s_f / omega0**2

    def intensity(self) -> float:
        # white noise with the same level at omega0: S_F = nu**2 / (2 pi)
        return math.sqrt(2.0 * math.pi * self.s_f)


Forcing = Union[WhiteNoise, Broadband]


@dataclass(frozen=True)
class SystemParams:
    omega0: float = 1.0
    zeta: float = 0.1
    acf: AcfSpec = field(default_factory=lambda: AcfSpec(0.229, 10.0))
    forcing: Forcing = field(default_factory=lambda: WhiteNoise(0.002))

    def __post_init__(self) -> None:
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")
        if not self.zeta > 0:
            raise ValueError(f"zeta must be > 0, got {self.zeta}")
        if not self.sigma_f2 >= 0:
            raise ValueError("additive forcing intensity must be non-negative")

    @property
    def sigma_f2(self) -> float:
        return self.forcing.sigma_f2(self.omega0)

    @property
    def sigma_f(self) -> float:
        return math.sqrt(self.sigma_f2)

    @property
    def K(self) -> float:
        """Diffusion-approximation intensity ``S_F(w0) / (2 w0**2)``."""
        return self.sigma_f2 / (2.0 * math.pi)

    @property
    def ou_variance(self) -> float:
        """Stationary variance ``sigma_F**2 / (2 zeta w0)`` without parametric excitation."""
        return self.sigma_f2 / (2.0 * self.zeta * self.omega0)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 5e-3
    t_end: float = 5500.0
    burn_in: float = 500.0
    n_realizations: int = 3000
    master_seed: int = 0
    blowup: float = 1e6

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not 0 <= self.burn_in < self.t_end:
            raise ValueError("need 0 <= burn_in < t_end")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if not self.blowup > 0:
            raise ValueError("blowup guard must be > 0")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def n_points(self) -> int:
        return self.n_steps + 1

    @property
    def burn_index(self) -> int:
        return int(round(self.burn_in / self.dt))


@numba.njit(cache=True)
def _full_kernel(alpha, z, dt, t0, omega0, zeta, nu, x0, v0, guard, x, v):
    # semi-implicit Euler-Maruyama: velocity first, position with the new velocity
    n = alpha.size
    x[0] = x0
    v[0] = v0
    w2 = omega0 * omega0
    c = 2.0 * zeta * omega0
    g = nu * math.sqrt(dt)
    for k in range(n - 1):
        t = t0 + k * dt
        stiff = w2 * (1.0 + alpha[k] * math.sin(2.0 * omega0 * t))
        vn = v[k] + (-c * v[k] - stiff * x[k]) * dt + g * z[k]
        xn = x[k] + vn * dt
        if abs(xn) > guard:
            return k + 1
        v[k + 1] = vn
        x[k + 1] = xn
    return -1


@numba.njit(cache=True)
def _averaged_kernel(alpha, z1, z2, dt, omega0, zeta, sigma_f, c10, c20, guard, c1, c2):
    n = alpha.size
    c1[0] = c10
    c2[0] = c20
    g = sigma_f * math.sqrt(dt)
    for k in range(n - 1):
        a = alpha[k] * 0.25
        u1 = c1[k] - (zeta - a) * omega0 * c1[k] * dt + g * z1[k]
        u2 = c2[k] - (zeta + a) * omega0 * c2[k] * dt + g * z2[k]
        if abs(u1) > guard or abs(u2) > guard:
            return k + 1
        c1[k + 1] = u1
        c2[k + 1] = u2
    return -1


def _check_grid(cfg: SimConfig, alpha_path: ProcessRealization) -> np.ndarray:
    alpha = np.ascontiguousarray(alpha_path["alpha"], dtype=float)
    if not math.isclose(alpha_path.dt, cfg.dt, rel_tol=1e-12):
        raise ValueError(f"alpha path dt={alpha_path.dt} differs from config dt={cfg.dt}")
    if alpha.size < 2:
        raise ValueError("alpha path needs at least two samples")
    return alpha


def sample_alpha(params: SystemParams, cfg: SimConfig, realization: int = 0) -> ProcessRealization:
    """Excitation path on the simulation grid for one realization."""
    rng = make_rng(cfg.master_seed, realization, ALPHA_STREAM)
    path, _ = sample_gp_pair(params.acf, cfg.n_points, cfg.dt, rng)
    return ProcessRealization(t0=0.0, dt=cfg.dt, channels={"alpha": path})


def simulate_full(
    params: SystemParams,
    cfg: SimConfig,
    alpha_path: ProcessRealization,
    realization: int = 0,
    x0: float = 0.0,
    xdot0: float = 0.0,
) -> ProcessRealization:
    """Integrate the full oscillator; returns channels ``x``, ``xdot``, ``alpha``."""
    alpha = _check_grid(cfg, alpha_path)
    n = alpha.size
    rng = make_rng(cfg.master_seed, realization, NOISE_STREAM)
    z = rng.standard_normal(n - 1)
    x = np.empty(n)
    v = np.empty(n)
    hit = _full_kernel(
        alpha, z, cfg.dt, alpha_path.t0, params.omega0, params.zeta,
        params.forcing.intensity(), x0, xdot0, cfg.blowup, x, v,
    )
    if hit >= 0:
        raise Overflow(
            f"|x| exceeded {cfg.blowup:g} at t={alpha_path.t0 + hit * cfg.dt:.3f} "
            f"(realization {realization})"
        )
    return ProcessRealization(alpha_path.t0, cfg.dt, {"x": x, "xdot": v, "alpha": alpha})


def simulate_averaged(
    params: SystemParams,
    cfg: SimConfig,
    alpha_path: ProcessRealization,
    realization: int = 0,
    chi10: float = 0.0,
    chi20: float = 0.0,
) -> ProcessRealization:
    """Integrate the slow-variable pair; returns channels ``chi1``, ``chi2``."""
    alpha = _check_grid(cfg, alpha_path)
    n = alpha.size
    rng = make_rng(cfg.master_seed, realization, NOISE_STREAM)
    z1 = rng.standard_normal(n - 1)
    z2 = rng.standard_normal(n - 1)
    c1 = np.empty(n)
    c2 = np.empty(n)
    hit = _averaged_kernel(
        alpha, z1, z2, cfg.dt, params.omega0, params.zeta, params.sigma_f,
        chi10, chi20, cfg.blowup, c1, c2,
    )
    if hit >= 0:
        raise Overflow(
            f"|chi| exceeded {cfg.blowup:g} at t={alpha_path.t0 + hit * cfg.dt:.3f} "
            f"(realization {realization})"
        )
    return ProcessRealization(alpha_path.t0, cfg.dt, {"chi1": c1, "chi2": c2})


def reconstruct_fast(chi_path: ProcessRealization, omega0: float) -> ProcessRealization:
    """Map slow variables back to ``x = chi1 cos(w0 t) + chi2 sin(w0 t)`` and its derivative."""
    t = chi_path.t
    c, s = np.cos(omega0 * t), np.sin(omega0 * t)
    chi1, chi2 = chi_path["chi1"], chi_path["chi2"]
    x = chi1 * c + chi2 * s
    xdot = omega0 * (chi2 * c - chi1 * s)
    return ProcessRealization(chi_path.t0, chi_path.dt, {"x": x, "xdot": xdot})
