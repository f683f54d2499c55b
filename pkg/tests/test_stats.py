import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from stochmathieu.analytic import bin_average, build_model
from stochmathieu.errors import EmptyInput
from stochmathieu.gp import AcfSpec, ProcessRealization, make_rng, sample_gp_pair
from stochmathieu.sde import SystemParams
from stochmathieu.stats import (
    CrossingStats,
    EmpiricalDensity,
    StreamingHistogram,
    compare_densities,
    crossing_stats,
    estimate_density,
    histogram_counts,
    log_tail_edges,
)


@pytest.fixture(scope="module")
def normal_samples():
    return np.random.default_rng(123).standard_normal(1_000_000)


def test_normal_density_at_zero(normal_samples):
    emp = estimate_density(normal_samples, "linear", n_bins=200)
    i = np.argmin(np.abs(emp.centers))
    assert emp.density[i] == pytest.approx(0.3989, rel=0.02)


@pytest.mark.parametrize("scheme", ["linear", "logtail"])
def test_normalization_exact(normal_samples, scheme):
    emp = estimate_density(normal_samples, scheme, n_bins=90)
    assert np.sum(emp.density * emp.widths) == pytest.approx(1.0, abs=1e-12)
    assert emp.total_samples == normal_samples.size
    assert np.all(np.diff(emp.edges) > 0)


def test_constant_samples():
    emp = estimate_density(np.full(2000, 3.0))
    occupied = emp.count > 0
    assert occupied.sum() == 1
    assert emp.density[occupied][0] == pytest.approx(1.0 / emp.widths[occupied][0])


def test_symmetric_input_symmetric_density():
    s = np.random.default_rng(4).standard_t(3, 5000)
    emp = estimate_density(np.concatenate([s, -s]), "logtail", n_bins=60)
    assert np.array_equal(emp.density, emp.density[::-1])


def test_logtail_layout(normal_samples):
    emp = estimate_density(normal_samples, "logtail", n_bins=60)
    core = emp.core_halfwidth
    assert core == pytest.approx(4 * normal_samples.std())
    outer = emp.edges[emp.edges > core]
    ratios = outer[1:] / outer[:-1]
    assert np.allclose(ratios, ratios[0])
    assert emp.edges[-1] >= normal_samples.max()


def test_log_tail_edges_symmetric():
    e = log_tail_edges(1.0, 100.0, 10, 5)
    assert e.size == 21
    assert np.allclose(e, -e[::-1])


def test_estimate_errors():
    with pytest.raises(EmptyInput):
        estimate_density([])
    with pytest.raises(ValueError):
        estimate_density(np.zeros(10))
    with pytest.raises(ValueError):
        estimate_density(np.zeros(2000), scheme="kde")


def test_from_counts_and_merge():
    edges = np.array([0.0, 1.0, 3.0])
    a = EmpiricalDensity.from_counts(edges, [2, 2])
    b = EmpiricalDensity.from_counts(edges, [1, 3])
    m = a.merge(b)
    assert list(m.count) == [3, 5]
    assert np.allclose(m.density, [3 / 8, 5 / 16])
    with pytest.raises(EmptyInput):
        EmpiricalDensity.from_counts(edges, [0, 0])
    with pytest.raises(ValueError):
        a.merge(EmpiricalDensity.from_counts([0.0, 2.0, 3.0], [1, 1]))


def test_histogram_counts_outside():
    count, outside = histogram_counts([0.5, 1.5, 7.0, -1.0], [0.0, 1.0, 2.0])
    assert list(count) == [1, 1]
    assert outside == 2


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 10), min_size=2, max_size=6), st.integers(0, 2**32 - 1))
def test_streaming_merge_is_order_free(sizes, seed):
    rng = np.random.default_rng(seed)
    chunks = [rng.standard_t(2, 100 * k) for k in sizes]
    parts = []
    for c in chunks:
        h = StreamingHistogram(0.5, n_fine=2000)
        h.add(c)
        parts.append(h)
    fwd = parts[0]
    for h in parts[1:]:
        fwd = fwd.merge(h)
    rev = parts[-1]
    for h in parts[-2::-1]:
        rev = rev.merge(h)
    assert np.array_equal(fwd.counts, rev.counts)
    assert fwd.n == rev.n == sum(c.size for c in chunks)


def test_streaming_matches_direct_histogram():
    x = np.random.default_rng(0).standard_t(3, 200_000)
    h = StreamingHistogram(1.0)
    h.add(x[:70_000])
    h.add(x[70_000:])
    d = h.to_density("logtail", 60)
    e = estimate_density(x, "logtail", 60)
    assert d.total_samples == x.size
    assert h.std == pytest.approx(x.std(), rel=1e-12)
    assert np.sum(d.density * d.widths) == pytest.approx(1.0, abs=1e-12)
    # edges snap to the fine grid, well inside a percent of the direct ones
    assert np.allclose(d.edges, e.edges, rtol=5e-3, atol=1e-3)
    assert np.array_equal(np.histogram(x, d.edges)[0], d.count)


def test_streaming_errors():
    h = StreamingHistogram(1.0, reach=100.0)
    with pytest.raises(EmptyInput):
        h.to_density()
    with pytest.raises(ValueError):
        h.add([1e5])
    with pytest.raises(ValueError):
        h.merge(StreamingHistogram(2.0))


def test_sine_crossings():
    k = 7
    dt = 1e-3
    t = np.arange(0.0, 2 * math.pi * k + dt / 2, dt)
    cs = crossing_stats(np.sin(t), 0.0, dt=dt)
    assert cs.down_count == k
    assert cs.mean_excursion == pytest.approx(math.pi, rel=1e-6)


def test_partial_excursions_discarded():
    dt = 0.01
    t = np.arange(0.0, 10.0, dt)
    # starts below, dips once fully, ends below
    v = np.where((t < 1.0) | ((t > 4.0) & (t < 5.0)) | (t > 9.0), -1.0, 1.0)
    cs = crossing_stats(v, 0.0, dt=dt)
    assert cs.down_count == 2
    assert cs.excursion_durations.size == 1
    assert cs.excursion_durations[0] == pytest.approx(1.0, abs=2 * dt)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1e3, 1e3), st.integers(0, 1000))
def test_crossings_shift_invariant(shift, seed):
    v = np.random.default_rng(seed).standard_normal(300).cumsum()
    a = crossing_stats(v, 0.5, dt=0.1)
    b = crossing_stats(v + shift, 0.5 + shift, dt=0.1)
    assert a.down_count == b.down_count
    assert a.excursion_durations.size == b.excursion_durations.size


def test_crossing_inputs():
    with pytest.raises(EmptyInput):
        crossing_stats(np.array([1.0]), 0.0, dt=1.0)
    with pytest.raises(ValueError):
        crossing_stats(np.zeros(5), 0.0)
    p = ProcessRealization(0.0, 0.5, {"a": np.zeros(4), "b": np.zeros(4)})
    with pytest.raises(ValueError):
        crossing_stats(p, 0.0)
    assert crossing_stats(p, 1.0, channel="a").duration == 1.5


def test_crossing_merge():
    a = CrossingStats(0.0, 3, 10.0, np.array([1.0, 2.0]))
    b = CrossingStats(0.0, 1, 5.0, np.array([3.0]))
    m = a.merge(b)
    assert m.down_rate == pytest.approx(4 / 15)
    assert m.mean_excursion == pytest.approx(2.0)
    with pytest.raises(ValueError):
        a.merge(CrossingStats(1.0, 0, 1.0))


def damping_crossings(sigma, ell, dt, n, seeds, seed0=0):
    """Pooled crossing statistics of zeta - alpha/4 at level zero."""
    spec = AcfSpec(sigma, ell)
    total = None
    for k in range(seeds):
        for path in sample_gp_pair(spec, n, dt, make_rng(seed0, k)):
            cs = crossing_stats(0.1 - 0.25 * path, 0.0, dt=dt)
            total = cs if total is None else total.merge(cs)
    return total


def test_rice_rate_short_run():
    # a quick version of the long acceptance check, at a looser tolerance
    model = build_model(SystemParams(acf=AcfSpec(0.178, 10.0)))
    cs = damping_crossings(0.178, 10.0, 0.05, 200_000, 10, seed0=1)
    assert cs.down_rate == pytest.approx(model.downcrossing_rate, rel=0.2)
    assert cs.mean_excursion == pytest.approx(model.T_bar, rel=0.2)


def test_compare_identical():
    emp = estimate_density(np.random.default_rng(1).standard_normal(20_000), "logtail", 40)
    rep = compare_densities(emp, emp.density)
    assert rep.l1_core == 0.0
    assert rep.log_ratio_tail == 0.0
    assert rep.max_abs_log10_ratio == 0.0


def test_compare_gaussian_to_itself(normal_samples):
    emp = estimate_density(normal_samples, "logtail", 90)
    ref = np.diff(stats.norm.cdf(emp.edges)) / emp.widths
    rep = compare_densities(emp, ref)
    assert rep.l1_core < 0.02
    assert rep.max_abs_log10_ratio < 0.5


def test_compare_gaussian_against_heavy_tail():
    model = build_model(SystemParams(acf=AcfSpec(0.267, 10.0)))
    sd = math.sqrt(model.background_variance)
    x = np.random.default_rng(5).normal(0.0, sd, 1_000_000)
    emp = estimate_density(x, "logtail", 60)
    ref = bin_average(emp.edges, model)
    rep = compare_densities(emp, ref)
    # a Gaussian sample has no data at 10 rho; the deepest valid tail bin
    # already shows the heavy-tailed reference above it by a decade
    assert rep.log_ratio_tail > 1


def test_compare_shape_mismatch():
    emp = estimate_density(np.random.default_rng(1).standard_normal(2000), "linear", 10)
    with pytest.raises(ValueError):
        compare_densities(emp, np.ones(5))


def test_report_is_deterministic(normal_samples):
    emp = estimate_density(normal_samples, "logtail", 60)
    ref = np.diff(stats.norm.cdf(emp.edges)) / emp.widths
    assert compare_densities(emp, ref).to_dict() == compare_densities(emp, ref).to_dict()
