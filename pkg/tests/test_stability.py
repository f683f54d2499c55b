import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochmathieu.errors import NotConverged
from stochmathieu.stability import (
    StabilityDiagram,
    boundary_alpha,
    build_diagram,
    hill_exponent,
    hill_unstable,
    leading_order_alpha_crit,
)

from .oracles import floquet_growth


@pytest.mark.parametrize("zeta", [0.0, 0.01, 0.1, 0.2])
def test_alpha_crit_at_quarter(zeta):
    assert leading_order_alpha_crit(0.25, zeta) == 4 * zeta


def test_alpha_crit_off_resonance():
    assert leading_order_alpha_crit(0.3, 0.1) == pytest.approx(0.494413232473, rel=1e-11)


@pytest.mark.parametrize("delta", [0.1, 0.5, 1.0, 3.0])
def test_alpha_free_is_stable(delta):
    assert not hill_unstable(delta, 0.0, 0.1)


def test_deep_in_first_tongue():
    assert hill_unstable(0.25, 0.8, 0.0)
    assert floquet_growth(0.25, 0.8, 0.0) > 0


def test_trunc_minimum():
    with pytest.raises(ValueError):
        hill_unstable(0.25, 0.5, 0.1, trunc=2)


def test_not_converged_is_reported():
    # a truncation of 3 cannot resolve the n=2 tongue edge at large delta
    flips = 0
    for d in np.linspace(3.5, 4.5, 11):
        for a in np.linspace(0.2, 1.5, 14):
            try:
                hill_unstable(d, a, 0.0, trunc=3)
            except NotConverged:
                flips += 1
    assert flips > 0


@pytest.mark.parametrize("n", [1, 2])
def test_tongues_touch_axis_at_transition_frequencies(n):
    # zeta=0: for small alpha the unstable band shrinks onto (n/2)^2
    centre = (n / 2) ** 2
    alpha = 0.02
    grid = np.linspace(centre - 0.05, centre + 0.05, 2001)
    unstable = np.array([hill_exponent(d, alpha, 0.0)[0] > 0 for d in grid])
    band = grid[unstable]
    assert band.size > 0
    assert band.min() < centre + 1e-3 and band.max() > centre - 1e-3
    assert band.max() - band.min() < 0.02


@pytest.mark.parametrize("zeta", [0.01, 0.1, 0.2])
def test_bisection_matches_leading_order(zeta):
    a = boundary_alpha(0.25, zeta, 0.0, 1.5)
    assert a == pytest.approx(4 * zeta, rel=0.05)


def test_boundary_bracket_without_change():
    with pytest.raises(ValueError):
        boundary_alpha(0.25, 0.1, 0.0, 0.1)


def test_bisection_band_at_zeta_tenth():
    assert 0.38 <= boundary_alpha(0.25, 0.1, 0.0, 1.0) <= 0.42


@settings(max_examples=60, deadline=None)
@given(
    delta=st.floats(0.05, 1.3),
    alpha=st.floats(0.0, 1.5),
    z1=st.floats(0.0, 0.2),
    z2=st.floats(0.0, 0.2),
)
def test_damping_only_stabilizes(delta, alpha, z1, z2):
    lo, hi = sorted((z1, z2))
    if hill_exponent(delta, alpha, hi)[0] > 1e-9:
        assert hill_exponent(delta, alpha, lo)[0] > 0


@settings(max_examples=60, deadline=None)
@given(delta=st.floats(0.15, 0.35), a1=st.floats(0.0, 1.2), a2=st.floats(0.0, 1.2))
def test_amplitude_monotone_in_first_tongue(delta, a1, a2):
    lo, hi = sorted((a1, a2))
    if hill_exponent(delta, lo, 0.1)[0] > 1e-9:
        assert hill_exponent(delta, hi, 0.1)[0] > 0


def test_exponent_matches_floquet():
    rng = np.random.default_rng(12)
    for _ in range(15):
        d, a, z = rng.uniform(0.1, 1.3), rng.uniform(0, 1.2), rng.uniform(0, 0.2)
        ref = floquet_growth(d, a, z)
        # exponents are per unit tau; the multiplier is per period 2 pi
        errs = [abs(2 * math.pi * hill_exponent(d, a, z, t)[0] - ref) for t in (10, 40)]
        assert errs[0] <= 1e-3 * abs(ref) + 1e-9
        # truncation error shrinks roughly as trunc**-3
        assert errs[1] <= errs[0] / 20 + 1e-9


def test_simulation_agreement_away_from_boundary():
    rng = np.random.default_rng(2024)
    agree = total = 0
    while total < 50:
        d, a, z = rng.uniform(0.1, 1.3), rng.uniform(0, 1.5), rng.uniform(0, 0.2)
        # keep points whose exponent margin corresponds to distance >= 0.05 in alpha
        near = any(
            (hill_exponent(d, a + s, z)[0] > 0) != (hill_exponent(d, a, z)[0] > 0)
            for s in (-0.05, 0.05) if a + s >= 0
        )
        if near:
            continue
        total += 1
        agree += hill_unstable(d, a, z) == (floquet_growth(d, a, z) > 0)
    assert agree >= 49


def test_coarse_diagram_shows_two_tongues():
    diag = build_diagram((0.05, 1.2), (0.0, 1.5), 0.0, resolution=(10, 10))
    assert diag.classification.shape == (10, 10)
    unstable_deltas = diag.delta_grid[diag.classification.any(axis=0)]
    assert np.any(np.abs(unstable_deltas - 0.25) < 0.15)
    assert np.any(np.abs(unstable_deltas - 1.0) < 0.15)
    kinds = {k for k, pts in diag.boundaries.items() if pts}
    assert kinds == {1, 2}
    assert not diag.undetermined.any()


def test_damped_diagram_is_subset():
    d0 = build_diagram((0.05, 1.2), (0.0, 1.5), 0.0, resolution=(25, 25))
    d1 = build_diagram((0.05, 1.2), (0.0, 1.5), 0.1, resolution=(25, 25))
    assert not np.any(d1.classification & ~d0.classification)
    assert d1.classification.sum() < d0.classification.sum()


def test_boundaries_lie_on_stability_change():
    diag = build_diagram((0.1, 1.2), (0.0, 1.5), 0.1, resolution=(12, 16))
    for pts in diag.boundaries.values():
        for d, a in pts:
            if a <= diag.alpha_grid[0]:
                continue
            assert hill_exponent(d, a - 1e-3, 0.1)[0] < 0 < hill_exponent(d, a + 1e-3, 0.1)[0]


def test_polygons_closed_at_top():
    diag = build_diagram((0.05, 1.2), (0.0, 1.5), 0.0, resolution=(30, 20))
    polys = diag.tongue_polygons()
    assert {k for k, _ in polys} == {1, 2}
    for _, pts in polys:
        assert pts[-1][1] == pts[-2][1] == 1.5


def test_diagram_validation():
    with pytest.raises(ValueError):
        StabilityDiagram(
            np.array([0.2, 0.1]), np.array([0.0, 1.0]), 0.0,
            np.zeros((2, 2), bool), np.zeros((2, 2), bool), np.zeros((2, 2), np.int8),
        )
