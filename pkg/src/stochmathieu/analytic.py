"""Decomposition-synthesis density of the stochastic Mathieu response.

The response is split into a Gaussian background, governed by the slow
variables with the effective damping replaced by its mean over the stable
phase, and a rare-event part in which an envelope ``xi0`` grows as
``xi0 * exp(Lambda * T)``.  The growth rate ``Lambda`` is the effective
damping conditioned on being negative (a truncated Gaussian) and the
excursion time ``T`` follows the Rayleigh law with mean equal to the
probability of instability divided by the Rice downcrossing rate.  The two
parts are mixed with the fraction of time spent in rare transitions.

All normal-distribution tails are handled in log space so the model stays
finite for very large instability indices (the Gaussian limit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import types
from scipy import LowLevelCallable, integrate, optimize
from scipy.special import log_ndtr

from .errors import InvalidRegime, QuadratureFailure
from .gp import acf_curvature_at_zero
from .sde import SystemParams

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# integrand factors below exp(-CUT) of the peak are dropped (~1e-30)
CUT = 69.0


@dataclass(frozen=True)
class QuadSettings:
    epsabs: float = 0.0
    epsrel: float = 1e-6
    limit: int = 200
    # tolerated ratio of reported error to requested error before failing
    slack: float = 100.0


@dataclass(frozen=True)
class AnalyticModel:
    params: SystemParams
    eta: float
    gamma_pos: float
    gamma_neg: float
    T_bar: float
    upsilon: float
    P_r: float
    rho: float
    log_p_unstable: float
    quad: QuadSettings = field(default_factory=QuadSettings)

    @property
    def background_variance(self) -> float:
        return self.params.sigma_f2 / (2.0 * self.gamma_pos)

    @property
    def downcrossing_rate(self) -> float:
        """Rice rate of zero downcrossings of the effective damping."""
        spec = self.params.acf
        return math.sqrt(acf_curvature_at_zero(spec)) / (2.0 * math.pi) * math.exp(-0.5 * self.eta**2)

    def summary(self) -> dict:
        return {
            "eta": self.eta,
            "gamma_pos": self.gamma_pos,
            "gamma_neg": self.gamma_neg,
            "T_bar": self.T_bar,
            "upsilon": self.upsilon,
            "P_r": self.P_r,
            "rho": self.rho,
        }


def _log_norm_pdf(z: float) -> float:
    return -0.5 * z * z - LOG_SQRT_2PI


def build_model(
    params: SystemParams,
    quad: QuadSettings | None = None,
    check_regime: bool = True,
) -> AnalyticModel:
    """Precompute every scalar of the decomposition for ``params``.

    With ``check_regime=False`` the rare-event validity checks are skipped,
    which is how the Gaussian limit (vanishing excitation) is reached.
    """
    quad = quad or QuadSettings()
    if not params.sigma_f > 0:
        raise InvalidRegime("the decomposition needs a positive additive forcing intensity")
    w0, zeta = params.omega0, params.zeta
    sigma = params.acf.sigma_alpha
    if sigma > 0:
        eta = 4.0 * zeta / sigma
    else:
        eta = math.inf

    if math.isinf(eta):
        log_sf = -math.inf
        mills_pos = 0.0
        mills_neg = 0.0
    else:
        log_sf = float(log_ndtr(-eta))
        log_pdf = _log_norm_pdf(eta)
        mills_pos = math.exp(log_pdf - float(log_ndtr(eta)))
        mills_neg = math.exp(log_pdf - log_sf)

    gamma_pos = w0 * (zeta + 0.25 * sigma * mills_pos)
    gamma_neg = w0 * (zeta - 0.25 * sigma * mills_neg)
    upsilon = -gamma_neg / gamma_pos
    p_unstable = math.exp(log_sf)
    P_r = (1.0 + upsilon) * p_unstable
    if math.isinf(eta):
        T_bar = math.inf
    else:
        # P(gamma < 0) / rate, assembled in logs
        log_rate = 0.5 * math.log(acf_curvature_at_zero(params.acf)) - math.log(2.0 * math.pi) - 0.5 * eta**2
        T_bar = math.exp(log_sf - log_rate)
    rho = params.sigma_f / math.sqrt(2.0 * gamma_pos)

    if check_regime:
        if not eta > 0:
            raise InvalidRegime(f"instability index eta={eta} must be positive")
        if not P_r < 0.5:
            raise InvalidRegime(f"rare-event probability P_r={P_r:.4f} is not small (>= 0.5)")
    return AnalyticModel(
        params=params,
        eta=eta,
        gamma_pos=gamma_pos,
        gamma_neg=gamma_neg,
        T_bar=T_bar,
        upsilon=upsilon,
        P_r=P_r,
        rho=rho,
        log_p_unstable=log_sf,
        quad=quad,
    )


# ---------------------------------------------------------------------------
# component densities


def background_pdf(x, model: AnalyticModel):
    g = model.gamma_pos / model.params.sigma_f2
    x = np.asarray(x, dtype=float)
    out = np.sqrt(g / math.pi) * np.exp(-g * x * x)
    return out if out.ndim else float(out)


def lyapunov_pdf(lam, model: AnalyticModel):
    """Density of the growth rate ``-gamma`` given ``gamma < 0``; zero for ``lam < 0``."""
    p = model.params
    scale = p.acf.sigma_alpha * p.omega0 / 4.0
    lam = np.asarray(lam, dtype=float)
    z = (lam + p.zeta * p.omega0) / scale
    logd = -0.5 * z * z - LOG_SQRT_2PI - math.log(scale) - model.log_p_unstable
    out = np.where(lam >= 0.0, np.exp(logd), 0.0)
    return out if out.ndim else float(out)


def duration_pdf(t, model: AnalyticModel):
    T = model.T_bar
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 0.0, math.pi * t / (2.0 * T * T) * np.exp(-math.pi * t * t / (4.0 * T * T)), 0.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# growth-time composition


@numba.cfunc(types.float64(types.intc, types.CPointer(types.float64)), cache=True)
def _composition_integrand(n, xx):
    # args: v, a, b, L, c  ->  exp(-a (L/v + b)^2 - c v^2 - shift)
    v = xx[0]
    if v <= 0.0:
        return 0.0
    a, b, L, c, shift = xx[1], xx[2], xx[3], xx[4], xx[5]
    r = L / v + b
    return math.exp(-a * r * r - c * v * v - shift)


_COMPOSITION = LowLevelCallable(_composition_integrand.ctypes)


def _check_quad(res, what: str, qs: QuadSettings) -> float:
    val, err = res[0], res[1]
    tol = max(qs.epsabs, qs.epsrel * abs(val))
    if len(res) > 3 and err > qs.slack * tol and err > 1e-300:
        raise QuadratureFailure(f"{what}: estimate {val:.6e} with error {err:.3e} ({res[3].splitlines()[0]})")
    if not math.isfinite(val):
        raise QuadratureFailure(f"{what}: non-finite result")
    return val


def _composition_constants(model: AnalyticModel) -> tuple[float, float, float]:
    p = model.params
    a = 8.0 / (p.acf.sigma_alpha * p.omega0) ** 2
    b = p.zeta * p.omega0
    c = math.pi / (4.0 * model.T_bar**2)
    return a, b, c


def log_growth_kernel(L: float, model: AnalyticModel) -> float:
    """``log J(L)`` with ``J(L) = L * int_0^inf y**-2 exp(-a (y+b)**2 - c L**2 / y**2) dy``.

    Substituting ``v = L / y`` gives ``J(L) = int_0^inf exp(-a (L/v + b)**2 - c v**2) dv``,
    which is finite at ``L = 0``.  The integration window brackets the peak of
    the integrand and drops regions below ``exp(-CUT)`` of it.
    """
    a, b, c = _composition_constants(model)
    if L < 0:
        raise ValueError("L must be non-negative")
    if L == 0.0:
        return -a * b * b + 0.5 * math.log(math.pi / (4.0 * c))

    def logf(v):
        r = L / v + b
        return -a * r * r - c * v * v

    # stationary point: c v^4 = a L (L + b v); unique positive root
    vmax = max((2.0 * a * L * L / c) ** 0.25, (2.0 * a * b * L / c) ** (1.0 / 3.0)) + 1.0
    vpk = optimize.brentq(lambda v: c * v**4 - a * L * (L + b * v), 1e-300, vmax, xtol=1e-14, rtol=1e-12)
    fpk = logf(vpk)
    if L < 1e-12:
        lo = 0.0
    else:
        lo = optimize.brentq(lambda v: logf(v) - (fpk - CUT), vpk * 1e-12, vpk, rtol=1e-10)
    hi_b = vpk + math.sqrt(CUT / c) + 1.0
    hi = optimize.brentq(lambda v: logf(v) - (fpk - CUT), vpk, hi_b, rtol=1e-10)
    qs = model.quad
    res = integrate.quad(
        _COMPOSITION, lo, hi, args=(a, b, L, c, fpk), points=[vpk],
        epsabs=0.0, epsrel=qs.epsrel, limit=qs.limit, full_output=1,
    )
    val = _check_quad(res, f"growth kernel at L={L:.4g}", qs)
    return math.log(val) + fpk


def _log_given_prefactor(model: AnalyticModel) -> float:
    p = model.params
    return LOG_SQRT_2PI - math.log(p.acf.sigma_alpha * p.omega0) - 2.0 * math.log(model.T_bar) - model.log_p_unstable


def rare_pdf_given_xi0(xi, xi0: float, model: AnalyticModel):
    """Density of the grown envelope ``xi`` given the envelope ``xi0`` at onset."""
    if not xi0 > 0:
        raise ValueError("xi0 must be positive")
    pref = _log_given_prefactor(model)

    def one(v: float) -> float:
        if v <= xi0:
            return 0.0
        L = math.log(v / xi0)
        return math.exp(pref + log_growth_kernel(L, model)) / v

    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        return one(float(xi))
    return np.array([one(float(v)) for v in xi.ravel()]).reshape(xi.shape)


def _rare_abs(ax: float, model: AnalyticModel) -> float:
    rho = model.rho
    if ax <= rho:
        return 0.0
    g = model.gamma_pos / model.params.sigma_f2
    # onset envelope beyond rho + s is weighted by < exp(-CUT)
    s = math.sqrt(CUT / g)
    upper = min(ax, rho + s)
    base = _log_given_prefactor(model) + math.log(2.0 * g) - math.log(2.0 * ax)

    def integrand(xi0: float) -> float:
        d = xi0 - rho
        if d <= 0.0:
            return 0.0
        L = math.log(ax / xi0)
        return d * math.exp(base - g * d * d + log_growth_kernel(max(L, 0.0), model))

    qs = model.quad
    # the onset weight peaks at rho + 1/sqrt(2g)
    pk = rho + 1.0 / math.sqrt(2.0 * g)
    points = [pk] if rho < pk < upper else None
    res = integrate.quad(
        integrand, rho, upper, points=points, epsabs=qs.epsabs, epsrel=qs.epsrel,
        limit=qs.limit, full_output=1,
    )
    return _check_quad(res, f"rare density at |x|={ax:.4g}", qs)


def rare_pdf(x, model: AnalyticModel):
    """Conditional rare-event density; zero for ``|x| <= rho`` and symmetric in ``x``."""
    if model.P_r == 0.0 or not math.isfinite(model.T_bar):
        out = np.zeros_like(np.asarray(x, dtype=float))
        return out if out.ndim else 0.0
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return _rare_abs(abs(float(x)), model)
    flat = np.abs(x.ravel())
    out = np.array([_rare_abs(float(v), model) for v in flat])
    return out.reshape(x.shape)


def total_pdf(x, model: AnalyticModel):
    bg = background_pdf(x, model)
    if model.P_r == 0.0:
        return bg
    return (1.0 - model.P_r) * bg + model.P_r * rare_pdf(x, model)


def components(x, model: AnalyticModel) -> dict[str, np.ndarray]:
    """Weighted background and rare parts and their sum on ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    bg = (1.0 - model.P_r) * background_pdf(x, model)
    rare = model.P_r * rare_pdf(x, model) if model.P_r > 0 else np.zeros_like(x)
    return {"x": x, "pdf_total": bg + rare, "pdf_background_weighted": bg, "pdf_rare_weighted": rare}


# ---------------------------------------------------------------------------
# curves and bin averages


def find_x_max(model: AnalyticModel, floor: float = 1e-12) -> float:
    """Smallest doubling of ``10 rho`` at which the total density drops below ``floor``."""
    x = 10.0 * model.rho
    for _ in range(200):
        if total_pdf(x, model) < floor:
            return x
        x *= 2.0
    raise QuadratureFailure("density does not fall below the floor")


def curve_grid(model: AnalyticModel, n_core: int = 81, n_tail: int = 120, x_max: float | None = None) -> np.ndarray:
    """Symmetric grid: linear core over ``|x| <= rho`` plus log-spaced tails up to ``x_max``."""
    if x_max is None:
        x_max = find_x_max(model)
    rho = model.rho
    core = np.linspace(0.0, rho, n_core // 2 + 1)
    tail = np.geomspace(rho / 10.0, x_max, n_tail)
    half = np.unique(np.concatenate([core, tail[tail > rho]]))
    # mirrored so the grid is exactly symmetric
    return np.concatenate([-half[:0:-1], half])


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def bin_average(edges, model: AnalyticModel, which: str = "total") -> np.ndarray:
    """Mean density of the analytic model over each bin (8-point Gauss-Legendre per piece).

    Bins straddling ``+-rho`` are split there, since the rare part has a kink.
    """
    fn = {"total": total_pdf, "background": background_pdf, "rare": rare_pdf}[which]
    edges = np.asarray(edges, dtype=float)
    out = np.empty(edges.size - 1)
    rho = model.rho
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        cuts = [lo] + [c for c in (-rho, rho) if lo < c < hi] + [hi]
        mass = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            mass += half * float(np.dot(_GL_WEIGHTS, fn(mid + half * _GL_NODES, model)))
        out[i] = mass / (hi - lo)
    return out
