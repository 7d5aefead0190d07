"""Acceptance criteria, one test each, at their stated tolerances.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary. Run directly with ``python tests/test_acceptance.py``.
"""

import sys
import time

import numpy as np
import pytest

from misdid.cli import run
from misdid.core import JointTreatmentDist, observe
from misdid.estimators import estimate_did
from misdid.identification import (
    att_bounds,
    corollary1_factor,
    decompose,
    empirical_att,
    fixed_point_check,
    fixed_point_scan,
    monotonicity_equivalence,
    parallel_trends_gap,
)
from misdid.montecarlo import McConfig, MisclassDesign, Mode, PanelKind, draw_latent_panel, run_experiment

SEED = 20240607


def test_01_nondifferential_symmetric_table(acceptance):
    start = time.perf_counter()
    worst_obs = worst_true = 0.0
    bounds_exact = True
    for p in (0.05, 0.10, 0.20, 0.30, 0.40):
        res = run_experiment(McConfig(5000, 500, SEED, MisclassDesign.from_rate("nondifferential", "symmetric", p)))
        worst_obs = max(worst_obs, abs(res.did_observed - 3 * (1 - 2 * p)))
        worst_true = max(worst_true, abs(res.did_true - 3.0))
        b = res.bounds_by_lambda[0.4]
        bounds_exact &= (b.lower, b.upper) == (res.did_observed, res.did_observed / 0.6)
    elapsed = time.perf_counter() - start
    ok = worst_obs <= 0.05 and worst_true <= 0.05 and bounds_exact and elapsed <= 60
    assert acceptance(1, "nondifferential symmetric reproduction", ok,
                      f"max|obs-3(1-2p)|={worst_obs:.4f} max|true-3|={worst_true:.4f} "
                      f"bounds_exact={bounds_exact} runtime={elapsed:.1f}s")


def test_02_sign_reversal(acceptance):
    res = run_experiment(McConfig(5000, 500, SEED, MisclassDesign.from_rate("differential", "symmetric", 0.3)))
    ok = res.did_observed < 0 and abs(res.did_true - 3.0) <= 0.05 and abs(res.did_observed + 0.789) <= 0.15
    assert acceptance(2, "differential 30% sign reversal", ok,
                      f"did_observed={res.did_observed:.4f} (ref -0.789 +/- 0.15) did_true={res.did_true:.4f}")


def test_03_false_positive_attenuation(acceptance):
    design = MisclassDesign.from_rate("differential", "fp-only", 0.2)
    res = run_experiment(McConfig(5000, 500, SEED, design), keep_reps=True)
    factor = float(np.mean([corollary1_factor(r.joint) for r in res.reps]))
    gap = abs(res.did_observed - factor * res.did_true)
    ok = gap <= 0.05 and abs(res.did_observed - 2.090) <= 0.10
    assert acceptance(3, "false-positive-only attenuation", ok,
                      f"|obs - factor*true|={gap:.4f} did_observed={res.did_observed:.4f} (ref 2.090 +/- 0.10)")


def test_04_decomposition_identity(acceptance):
    designs = [MisclassDesign.from_rate(m, k, r) for m in Mode for k in PanelKind
               for r in (0.05, 0.1, 0.2, 0.3, 0.4, 0.5)]
    worst = 0.0
    for i in range(1000):
        dec = decompose(draw_latent_panel(200, designs[i % len(designs)], SEED, index=i))
        att_mc = dec.att_mc if dec.att_mc is not None else 0.0
        worst = max(worst, abs(dec.theta_did - (dec.w_cc * dec.att_cc - dec.w_mc * att_mc + dec.pt_gap)))
    assert acceptance(4, "decomposition identity", worst <= 1e-10,
                      f"max residual={worst:.3e} over 1000 panels, {len(designs)} designs")


def test_05_att_from_did_relation(acceptance):
    details, ok = [], True
    for mode in ("nondifferential", "differential"):
        res = run_experiment(McConfig(10_000, 100, SEED, MisclassDesign.from_rate(mode, "symmetric", 0.2)))
        gap = abs(res.mean_att_implied - res.mean_att)
        ok &= gap <= 0.05
        details.append(f"{mode} |implied-att|={gap:.2e}")
    assert acceptance(5, "ATT recovered from DID", ok, " ".join(details))


def test_06_bounds_exactness(acceptance):
    b = att_bounds(-0.1537, 0.07)
    table_ok = (round(b.lower, 4), round(b.upper, 4)) == (-0.1653, -0.1537) and b.upper == -0.1537
    rng = np.random.default_rng(SEED)
    thetas = rng.normal(0, 10, 100)
    zero_ok = all((att_bounds(t, 0.0).lower, att_bounds(t, 0.0).upper) == (t, t) for t in thetas)
    assert acceptance(6, "bounds exactness", table_ok and zero_ok,
                      f"att_bounds(-0.1537, 0.07)=({b.lower:.5f}, {b.upper:.5f}) lambda=0 collapse={zero_ok}")


def test_07_monotonicity_equivalence(acceptance):
    rng = np.random.default_rng(SEED)
    p = rng.uniform(0.01, 0.99, 10_000)
    a0 = rng.uniform(0, 1, 10_000)
    a1 = rng.uniform(0, 1, 10_000)
    violations = sum(not monotonicity_equivalence(*args).agree for args in zip(p, a0, a1))
    assert acceptance(7, "monotonicity equivalence", violations == 0, f"violations={violations}/10000")


def test_08_parallel_trends_diagnostic(acceptance):
    designs = [MisclassDesign.from_rate(m, k, 0.2) for m in Mode for k in PanelKind]
    gaps = [abs(parallel_trends_gap(draw_latent_panel(10_000, designs[i % len(designs)], SEED, index=i)))
            for i in range(100)]
    within = sum(g <= 0.05 for g in gaps)
    assert acceptance(8, "parallel trends diagnostic", within >= 99,
                      f"{within}/100 panels with |gap| <= 0.05 (max {max(gaps):.2e})")


def _panel_for(j: JointTreatmentDist, n: int):
    # nondifferential draw reproducing the joint distribution of (D*, eps)
    p = j.p11 + j.p10
    design = MisclassDesign.explicit("nondifferential", j.p11 / p, j.p01 / (j.p01 + j.p00))
    return draw_latent_panel(n, design, SEED, p_treated=p)


def test_09_fixed_point_existence(acceptance):
    scan = fixed_point_scan(step=0.001, tol=1e-6)
    candidate = scan.best
    confirmed = fixed_point_check(candidate, tol=1e-6).holds
    latent = _panel_for(candidate, 50_000)
    gap = abs(estimate_did(observe(latent)).theta_did - empirical_att(latent))
    ok = scan.hits > 0 and confirmed and gap <= 0.05
    assert acceptance(9, "fixed-point existence", ok,
                      f"scan evaluated={scan.evaluated} hits={scan.hits} best residual={scan.best_residual:.4e} "
                      f"at {candidate}; check={confirmed}; |did-att| on calibrated panel={gap:.4f}")


def test_10_thread_determinism(acceptance, capsys):
    argv = ["simulate", "--mode", "differential", "--panel", "asymmetric", "--rate", "0.1,0.3",
            "--n", "2000", "--reps", "40", "--seed", str(SEED), "--lambda", "0.2,0.4"]
    outputs = []
    for threads in ("1", "8"):
        assert run(argv + ["--threads", threads]) == 0
        outputs.append(capsys.readouterr().out.encode())
    same = outputs[0] == outputs[1]
    assert acceptance(10, "thread-count determinism", same, f"byte-identical={same} ({len(outputs[0])} bytes)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
