import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from misdid.core import DegenerateError, InvalidInputError, LatentPanel, ObservedPanel, observe
from misdid.estimators import bootstrap_se, estimate_did, estimate_did_oracle
from misdid.montecarlo import McConfig, MisclassDesign, draw_latent_panel, run_experiment

from .conftest import random_latent


def _panel(seed, n=80):
    rng = np.random.default_rng(seed)
    d = np.zeros(n, dtype=int)
    d[: n // 3] = 1
    rng.shuffle(d)
    return ObservedPanel(rng.normal(size=n), rng.normal(2, 3, size=n), d)


def test_four_point_arithmetic():
    est = estimate_did(ObservedPanel([1, 2], [5, 3], [1, 0]))
    assert est.theta_did == 3
    assert est.theta_ols_1 == 2
    assert est.theta_ols_0 == -1
    assert est.se is None


def test_constant_change_gives_zero():
    y0 = np.array([0.0, 4.0, -2.0, 7.5])
    est = estimate_did(ObservedPanel(y0, y0 + 1.25, [1, 0, 1, 0]))
    assert est.theta_did == 0


def test_oracle_hand_panel():
    latent = LatentPanel([0, 1], [99, 2], [4, 99], [1, 0], [0, 0])
    assert estimate_did_oracle(latent).theta_did == 3


def test_oracle_matches_observed_when_no_misclassification(rng):
    base = random_latent(rng, 300)
    clean = LatentPanel(base.y0_0, base.y1_0, base.y1_1, base.d_star, np.zeros(300, dtype=int))
    assert estimate_did(observe(clean)) == estimate_did_oracle(clean)


def test_single_arm_panel_is_degenerate():
    with pytest.raises(DegenerateError):
        estimate_did(ObservedPanel([0, 1], [1, 2], [1, 1]))


@given(st.integers(0, 2**31), st.floats(-1e3, 1e3, allow_nan=False))
def test_shift_invariance(seed, c):
    p = _panel(seed)
    shifted = ObservedPanel(p.y0 + c, p.y1 + c, p.d)
    assert estimate_did(shifted).theta_did == pytest.approx(estimate_did(p).theta_did,
                                                            abs=1e-12 * max(abs(c), 1.0) * 10)


@given(st.integers(0, 2**31), st.floats(-1e3, 1e3, allow_nan=False))
def test_trend_invariance(seed, c):
    p = _panel(seed)
    assert estimate_did(ObservedPanel(p.y0, p.y1 + c, p.d)).theta_did == pytest.approx(
        estimate_did(p).theta_did, abs=1e-11 * max(abs(c), 1.0))


@given(st.integers(0, 2**31), st.floats(-50, 50, allow_nan=False))
def test_scale_equivariance(seed, k):
    p = _panel(seed)
    scaled = estimate_did(ObservedPanel(p.y0 * k, p.y1 * k, p.d)).theta_did
    assert scaled == pytest.approx(k * estimate_did(p).theta_did, rel=1e-12, abs=1e-12)


@given(st.integers(0, 2**31))
def test_label_duality(seed):
    p = _panel(seed)
    flipped = ObservedPanel(p.y0, p.y1, 1 - p.d)
    assert estimate_did(flipped).theta_did == pytest.approx(-estimate_did(p).theta_did, abs=1e-12)


def test_bootstrap_identical_units_has_zero_se():
    panel = ObservedPanel([1.0] * 5 + [2.0] * 5, [4.0] * 5 + [3.0] * 5, [1] * 5 + [0] * 5)
    est = bootstrap_se(panel, reps=50, seed=3)
    assert est.se == 0
    assert est.boot_reps == 50


def test_bootstrap_deterministic_and_thread_independent():
    panel = _panel(11, n=200)
    a = bootstrap_se(panel, reps=99, seed=42)
    b = bootstrap_se(panel, reps=99, seed=42)
    c = bootstrap_se(panel, reps=99, seed=42, threads=4)
    assert a.se == b.se == c.se
    assert bootstrap_se(panel, reps=99, seed=43).se != a.se


def test_bootstrap_redraws_tiny_panel():
    panel = ObservedPanel([0.0, 1.0, 2.0], [1.0, 3.0, 2.0], [1, 0, 0])
    est = bootstrap_se(panel, reps=20, seed=1)
    assert est.redraws > 0
    assert est.se >= 0


def test_bootstrap_needs_two_reps():
    with pytest.raises(InvalidInputError):
        bootstrap_se(_panel(1), reps=1)


def test_bootstrap_se_tracks_monte_carlo_spread():
    design = MisclassDesign.from_rate("nondifferential", "symmetric", 0.1)
    panel = observe(draw_latent_panel(10_000, design, seed=2024))
    boot = bootstrap_se(panel, reps=999, seed=5).se
    spread = run_experiment(McConfig(10_000, 500, 77, design)).rep_dispersion
    assert abs(boot - spread) <= 0.2 * spread
