"""Empirical densities and level-crossing statistics of simulated paths."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput
from .gp import ProcessRealization

MIN_SAMPLES = 1000


@dataclass(frozen=True)
class EmpiricalDensity:
    edges: np.ndarray
    density: np.ndarray
    count: np.ndarray
    total_samples: int
    core_halfwidth: float = math.inf

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def mass(self) -> np.ndarray:
        return self.count / self.total_samples

    @classmethod
    def from_counts(cls, edges, count, core_halfwidth: float = math.inf) -> "EmpiricalDensity":
        edges = np.asarray(edges, dtype=float)
        count = np.asarray(count, dtype=np.int64)
        if edges.ndim != 1 or edges.size != count.size + 1:
            raise ValueError("edges must have one more entry than counts")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        total = int(count.sum())
        if total == 0:
            raise EmptyInput("no samples fall inside the bins")
        density = count / (total * np.diff(edges))
        return cls(edges, density, count, total, core_halfwidth)

    def merge(self, other: "EmpiricalDensity") -> "EmpiricalDensity":
        if not np.array_equal(self.edges, other.edges):
            raise ValueError("cannot merge histograms with different edges")
        return EmpiricalDensity.from_counts(self.edges, self.count + other.count, self.core_halfwidth)


def log_tail_edges(core_halfwidth: float, x_max: float, n_core: int, n_tail: int) -> np.ndarray:
    """Symmetric edges: ``n_core`` linear bins on ``[-c, c]`` and ``n_tail`` log bins on each side."""
    core = np.linspace(-core_halfwidth, core_halfwidth, n_core + 1)
    if x_max > core_halfwidth and n_tail > 0:
        tail = np.geomspace(core_halfwidth, x_max, n_tail + 1)[1:]
        core = np.concatenate([-tail[::-1], core, tail])
    # exact mirror symmetry (linspace alone is only symmetric to rounding)
    return 0.5 * (core - core[::-1])


def _scheme_edges(scheme: str, lo: float, hi: float, std: float, n_bins: int, core_std: float) -> tuple[np.ndarray, float]:
    if scheme == "linear":
        if lo == hi:
            return np.array([lo - 0.5, lo + 0.5]), math.inf
        return np.linspace(lo, hi, n_bins + 1), math.inf
    if scheme == "logtail":
        core = core_std * std
        reach = max(abs(lo), abs(hi))
        if core == 0.0:
            core = max(reach, 0.5)
        if reach * (1 + 1e-12) <= core:
            return log_tail_edges(core, core, n_bins, 0), core
        n_tail = max(n_bins // 3, 1)
        n_core = max(n_bins - 2 * n_tail, 1)
        return log_tail_edges(core, reach * (1 + 1e-12), n_core, n_tail), core
    raise ValueError(f"unknown binning scheme {scheme!r}")


def estimate_density(samples, scheme: str = "linear", n_bins: int = 100, core_std: float = 4.0) -> EmpiricalDensity:
    """Normalized histogram of ``samples``.

    ``scheme="logtail"`` uses linear bins over ``|x| <= core_std * std`` and
    log-spaced bins out to the largest ``|x|``; roughly a third of the bins
    go to each tail.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise EmptyInput("no samples")
    if x.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    edges, core = _scheme_edges(scheme, float(x.min()), float(x.max()), float(x.std()), n_bins, core_std)
    count, _ = np.histogram(x, bins=edges)
    return EmpiricalDensity.from_counts(edges, count, core)


@dataclass
class StreamingHistogram:
    """Mergeable fine histogram for sample streams too long to keep in memory.

    Bins are uniform in ``asinh(x / scale)``: linear for ``|x| << scale`` and
    logarithmic beyond, so one grid serves both the core and far tails.
    Running moments and the extreme values are kept so that a coarse
    density (same schemes as :func:`estimate_density`) can be formed after
    all samples are in, by merging fine bins.
    """

    scale: float
    n_fine: int = 20000
    reach: float = 1e10
    counts: np.ndarray = field(default=None, repr=False)
    n: int = 0
    s1: float = 0.0
    s2: float = 0.0
    lo: float = math.inf
    hi: float = -math.inf

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.counts is None:
            self.counts = np.zeros(self.n_fine, dtype=np.int64)

    @property
    def _umax(self) -> float:
        return math.asinh(self.reach)

    @property
    def fine_edges(self) -> np.ndarray:
        u = np.linspace(-self._umax, self._umax, self.n_fine + 1)
        return self.scale * np.sinh(u)

    def add(self, samples) -> None:
        x = np.asarray(samples, dtype=float).ravel()
        if x.size == 0:
            return
        u = np.arcsinh(x / self.scale)
        if np.any(np.abs(u) >= self._umax):
            raise ValueError(f"samples beyond {self.reach:g} * scale")
        h = 2.0 * self._umax / self.n_fine
        idx = np.floor((u + self._umax) / h).astype(np.int64)
        self.counts += np.bincount(np.clip(idx, 0, self.n_fine - 1), minlength=self.n_fine)
        self.n += x.size
        self.s1 += float(x.sum())
        self.s2 += float(np.dot(x, x))
        self.lo = min(self.lo, float(x.min()))
        self.hi = max(self.hi, float(x.max()))

    def merge(self, other: "StreamingHistogram") -> "StreamingHistogram":
        if (self.scale, self.n_fine, self.reach) != (other.scale, other.n_fine, other.reach):
            raise ValueError("cannot merge histograms on different grids")
        return StreamingHistogram(
            self.scale, self.n_fine, self.reach, self.counts + other.counts, self.n + other.n,
            self.s1 + other.s1, self.s2 + other.s2, min(self.lo, other.lo), max(self.hi, other.hi),
        )

    @property
    def std(self) -> float:
        if self.n == 0:
            raise EmptyInput("no samples")
        mean = self.s1 / self.n
        return math.sqrt(max(self.s2 / self.n - mean * mean, 0.0))

    def to_density(self, scheme: str = "logtail", n_bins: int = 100, core_std: float = 4.0) -> EmpiricalDensity:
        """Coarse density with edges snapped to the fine grid."""
        if self.n == 0:
            raise EmptyInput("no samples")
        if self.n < MIN_SAMPLES:
            raise ValueError(f"need at least {MIN_SAMPLES} samples, got {self.n}")
        target, core = _scheme_edges(scheme, self.lo, self.hi, self.std, n_bins, core_std)
        fine = self.fine_edges
        h = 2.0 * self._umax / self.n_fine
        k = np.rint((np.arcsinh(target / self.scale) + self._umax) / h).astype(np.int64)
        # outermost edges move outwards so that no sample is lost
        occupied = np.flatnonzero(self.counts)
        k[0] = min(k[0], int(occupied[0]))
        k[-1] = max(k[-1], int(occupied[-1]) + 1)
        k = np.unique(np.clip(k, 0, self.n_fine))
        cum = np.concatenate([[0], np.cumsum(self.counts)])
        count = cum[k[1:]] - cum[k[:-1]]
        return EmpiricalDensity.from_counts(fine[k], count, core)


def histogram_counts(samples, edges) -> tuple[np.ndarray, int]:
    """Counts inside ``edges`` plus the number of samples outside them."""
    x = np.asarray(samples, dtype=float).ravel()
    count, _ = np.histogram(x, bins=edges)
    return count.astype(np.int64), int(x.size - count.sum())


@dataclass
class CrossingStats:
    level: float
    down_count: int
    duration: float
    excursion_durations: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def down_rate(self) -> float:
        return self.down_count / self.duration

    @property
    def mean_excursion(self) -> float:
        d = self.excursion_durations
        return float(d.mean()) if d.size else 0.0

    def merge(self, other: "CrossingStats") -> "CrossingStats":
        if other.level != self.level:
            raise ValueError("levels differ")
        return CrossingStats(
            self.level,
            self.down_count + other.down_count,
            self.duration + other.duration,
            np.concatenate([self.excursion_durations, other.excursion_durations]),
        )


def crossing_stats(path, level: float, dt: float | None = None, channel: str | None = None) -> CrossingStats:
    """Downcrossings of ``level`` and durations of the excursions below it.

    Crossing instants are located by linear interpolation between samples.
    Excursions already in progress at the start or unfinished at the end
    are discarded.
    """
    if isinstance(path, ProcessRealization):
        dt = path.dt
        if channel is None:
            if len(path.channels) != 1:
                raise ValueError("choose a channel for multi-channel paths")
            channel = next(iter(path.channels))
        v = np.asarray(path[channel], dtype=float)
    else:
        if dt is None:
            raise ValueError("dt is required for bare arrays")
        v = np.asarray(path, dtype=float)
    if v.size < 2:
        raise EmptyInput("path needs at least two samples")
    u = v - level
    above = u >= 0.0
    down = np.flatnonzero(above[:-1] & ~above[1:])
    up = np.flatnonzero(~above[:-1] & above[1:])
    t_down = (down + u[down] / (u[down] - u[down + 1])) * dt
    t_up = (up + u[up] / (u[up] - u[up + 1])) * dt
    if up.size and down.size:
        # pair each downcrossing with the next upcrossing
        if up[0] < down[0]:
            t_up = t_up[1:]
        n = min(t_down.size, t_up.size)
        durations = t_up[:n] - t_down[:n]
    else:
        durations = np.empty(0)
    return CrossingStats(level, int(down.size), (v.size - 1) * dt, durations)


@dataclass(frozen=True)
class ComparisonReport:
    l1_core: float
    log_ratio_tail: float
    max_abs_log10_ratio: float
    valid: np.ndarray
    log10_ratio: np.ndarray

    def to_dict(self) -> dict:
        return {
            "l1_core": self.l1_core,
            "log_ratio_tail": self.log_ratio_tail,
            "max_abs_log10_ratio": self.max_abs_log10_ratio,
            "n_valid_bins": int(self.valid.sum()),
        }


def valid_bins(emp: EmpiricalDensity, min_count: int = 10) -> np.ndarray:
    """Bins holding at least ``min_count`` samples (mass >= min_count / total)."""
    return emp.count >= min_count


def compare_densities(emp: EmpiricalDensity, reference, min_count: int = 10) -> ComparisonReport:
    """Agreement metrics between an empirical density and a reference sampled on its bins.

    ``l1_core`` is the L1 distance over bins inside the core half-width;
    ratios are ``log10(reference / empirical)`` on bins with enough samples;
    ``log_ratio_tail`` is that ratio averaged over the outermost valid bin on
    each side.
    """
    ref = np.asarray(reference, dtype=float)
    if ref.shape != emp.density.shape:
        raise ValueError("reference must be sampled on the empirical bins")
    centers = emp.centers
    core = np.abs(centers) <= emp.core_halfwidth
    l1 = float(np.sum(np.abs(emp.density - ref)[core] * emp.widths[core]))
    valid = valid_bins(emp, min_count) & (ref > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(valid, np.log10(ref / emp.density), np.nan)
    if not valid.any():
        return ComparisonReport(l1, float("nan"), float("nan"), valid, ratio)
    idx = np.flatnonzero(valid)
    ends = []
    neg = idx[centers[idx] < 0]
    pos = idx[centers[idx] >= 0]
    if neg.size:
        ends.append(ratio[neg[0]])
    if pos.size:
        ends.append(ratio[pos[-1]])
    return ComparisonReport(
        l1_core=l1,
        log_ratio_tail=float(np.mean(ends)),
        max_abs_log10_ratio=float(np.nanmax(np.abs(ratio))),
        valid=valid,
        log10_ratio=ratio,
    )
