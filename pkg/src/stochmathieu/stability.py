"""Ince-Strutt stability chart of the damped Mathieu equation.

With ``tau = Omega t`` and ``delta = w0**2 / Omega**2`` the deterministic
oscillator reads

    x'' + 2 zeta sqrt(delta) x' + delta (1 + alpha sin tau) x = 0.

The substitution ``x = exp(-zeta sqrt(delta) tau) y`` removes the damping and
leaves the undamped Hill equation ``y'' + (a + q sin tau) y = 0`` with
``a = delta (1 - zeta**2)`` and ``q = alpha delta``.  Its characteristic
exponent follows from Hill's determinant, and ``x`` is unstable when the
growth rate of ``y`` exceeds the damping rate ``zeta sqrt(delta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotConverged

DEFAULT_TRUNC = 10
BISECT_TOL = 1e-4


def leading_order_alpha_crit(delta: float, zeta: float) -> float:
    """Smallest amplitude on the leading-order boundary of the principal tongue."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if zeta < 0:
        raise ValueError("zeta must be non-negative")
    return math.sqrt((2.0 * delta - 0.5) ** 2 + 4.0 * zeta**2 * delta) / delta


def _hill_discriminant(a: float, q: float, trunc: int) -> float:
    """``D = Delta(0) * sin(pi sqrt(a))**2`` for ``y'' + (a + q sin tau) y = 0``.

    In ``z = tau/2`` the equation has the Mathieu form with ``theta0 = 4a`` and
    ``theta1 = 2q``; row ``r`` of Hill's determinant is normalized by
    ``theta0 - 4 r**2``.  The rows nearest resonance are kept unnormalized and
    their vanishing denominators are cancelled against ``sin**2`` analytically.
    """
    theta0, theta1 = 4.0 * a, 2.0 * q
    s = math.sqrt(a)
    r0 = int(round(s))
    eps = s - r0
    r = np.arange(-trunc, trunc + 1)
    den = theta0 - 4.0 * r * r
    special = np.abs(r) == r0 if r0 <= trunc else np.zeros(r.size, dtype=bool)
    diag = np.where(special, den, 1.0)
    off = np.where(special, theta1, theta1 / np.where(special, 1.0, den))
    # continuant of the tridiagonal matrix
    f_prev, f = 1.0, diag[0]
    for k in range(1, r.size):
        f_prev, f = f, diag[k] * f - off[k] * off[k - 1] * f_prev
    if r0 > trunc:
        return f * math.sin(math.pi * s) ** 2
    if r0 == 0:
        return f * (math.pi * np.sinc(s)) ** 2 / 4.0
    return f * (math.pi * np.sinc(eps) / (4.0 * (s + r0))) ** 2


def hill_exponent(delta: float, alpha: float, zeta: float, trunc: int = DEFAULT_TRUNC) -> tuple[float, int]:
    """Largest real part of the characteristic exponent of ``x`` per unit ``tau``.

    Also returns the parity of the unstable solution: ``1`` for the
    period-``4 pi`` (odd ``n``) family, ``2`` for the period-``2 pi`` (even
    ``n``) family and ``0`` when ``y`` is bounded.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    a = delta * (1.0 - zeta * zeta)
    if a <= 0:
        raise ValueError("damping too large: zeta must be < 1")
    D = _hill_discriminant(a, alpha * delta, trunc)
    damping = zeta * math.sqrt(delta)
    if D < 0.0:
        growth = math.asinh(math.sqrt(-D)) / math.pi
        kind = 2
    elif D > 1.0:
        growth = math.acosh(math.sqrt(D)) / math.pi
        kind = 1
    else:
        growth, kind = 0.0, 0
    return growth - damping, kind


def hill_unstable(delta: float, alpha: float, zeta: float, trunc: int = DEFAULT_TRUNC) -> bool:
    """Classify ``(delta, alpha)`` using Hill's determinant, checking the truncation.

    Raises NotConverged if doubling the truncation flips the answer.
    """
    if trunc < 3:
        raise ValueError("trunc must be >= 3")
    e1, _ = hill_exponent(delta, alpha, zeta, trunc)
    e2, _ = hill_exponent(delta, alpha, zeta, 2 * trunc)
    if (e1 > 0) != (e2 > 0):
        raise NotConverged(f"classification at delta={delta}, alpha={alpha} changes between trunc {trunc} and {2 * trunc}")
    return e2 > 0


def boundary_alpha(delta: float, zeta: float, lo: float, hi: float, trunc: int = DEFAULT_TRUNC, tol: float = BISECT_TOL) -> float:
    """Bisect for the stability change in ``alpha`` between ``lo`` and ``hi``."""
    ulo = hill_exponent(delta, lo, zeta, trunc)[0] > 0
    uhi = hill_exponent(delta, hi, zeta, trunc)[0] > 0
    if ulo == uhi:
        raise ValueError("no stability change in the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (hill_exponent(delta, mid, zeta, trunc)[0] > 0) == ulo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class StabilityDiagram:
    delta_grid: np.ndarray
    alpha_grid: np.ndarray
    zeta: float
    classification: np.ndarray  # [i_alpha, i_delta], True = unstable
    undetermined: np.ndarray
    kind: np.ndarray
    # boundaries[kind] -> list of (delta, alpha) points on the lower tongue edge
    boundaries: dict[int, list[tuple[float, float]]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for g in (self.delta_grid, self.alpha_grid):
            if np.any(np.diff(g) <= 0):
                raise ValueError("grids must be strictly increasing")
        shape = (self.alpha_grid.size, self.delta_grid.size)
        if self.classification.shape != shape or self.undetermined.shape != shape:
            raise ValueError("classification must be (len(alpha_grid), len(delta_grid))")

    def tongue_polygons(self) -> list[tuple[int, list[tuple[float, float]]]]:
        """Closed polygons per tongue family, capped at the top of the alpha grid."""
        top = float(self.alpha_grid[-1])
        polys = []
        for kind, pts in sorted(self.boundaries.items()):
            if not pts:
                continue
            pts = sorted(pts)
            run = [pts[0]]
            step = np.diff(self.delta_grid).max() * 1.5
            for p in pts[1:]:
                if p[0] - run[-1][0] > step:
                    polys.append((kind, run + [(run[-1][0], top), (run[0][0], top)]))
                    run = [p]
                else:
                    run.append(p)
            polys.append((kind, run + [(run[-1][0], top), (run[0][0], top)]))
        return polys


def build_diagram(
    delta_range: tuple[float, float],
    alpha_range: tuple[float, float],
    zeta: float,
    resolution: tuple[int, int] = (60, 60),
    trunc: int = DEFAULT_TRUNC,
    tol: float = BISECT_TOL,
) -> StabilityDiagram:
    """Classify a ``(delta, alpha)`` grid and trace lower tongue edges by bisection."""
    n_delta, n_alpha = resolution
    deltas = np.linspace(*delta_range, n_delta)
    alphas = np.linspace(*alpha_range, n_alpha)
    cls = np.zeros((n_alpha, n_delta), dtype=bool)
    und = np.zeros_like(cls)
    kind = np.zeros((n_alpha, n_delta), dtype=np.int8)
    for j, d in enumerate(deltas):
        for i, a in enumerate(alphas):
            try:
                cls[i, j] = hill_unstable(d, a, zeta, trunc)
            except NotConverged:
                und[i, j] = True
            kind[i, j] = hill_exponent(d, a, zeta, 2 * trunc)[1] if cls[i, j] else 0
    bounds: dict[int, list[tuple[float, float]]] = {1: [], 2: []}
    for j, d in enumerate(deltas):
        col = cls[:, j]
        for i in range(n_alpha - 1):
            if not col[i] and col[i + 1] and not und[i, j] and not und[i + 1, j]:
                a_b = boundary_alpha(d, zeta, alphas[i], alphas[i + 1], 2 * trunc, tol)
                k = int(kind[i + 1, j]) or 1
                bounds.setdefault(k, []).append((float(d), a_b))
        if col[0] and alphas[0] >= 0:
            k = int(kind[0, j]) or 1
            bounds.setdefault(k, []).append((float(d), float(alphas[0])))
    return StabilityDiagram(deltas, alphas, zeta, cls, und, kind, bounds)
