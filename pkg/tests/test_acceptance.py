"""Acceptance checks, one test (and one printed PASS/FAIL line) per criterion.

The heavy Monte Carlo criteria take several minutes on one core.  Tolerances
are the pinned ones; a criterion that does not hold is reported as failing.
"""
import math
import time

import numpy as np
import pytest

from ccsr.analysis import (BoundParams, ber_analytic, ber_bound_general, ber_bound_round1, ber_bound_round2,
                           eta_analytic, expected_bits_n_mu, frame_probs, marking_probability, throughput_eta,
                           throughput_terms)
from ccsr.channel import draw_channel
from ccsr.config import ProtocolConfig, make_rng
from ccsr.fec import default_code
from ccsr.optimizer import optimize_tau
from ccsr.protocol import select_retx
from ccsr.sim import (SweepSpec, frame_stats, results_to_csv, run_point, run_sweep,
                      tune_tau_mc)

from acceptance_report import note, verdict
from oracles import ccsr_exact_ber, ks_distance_exp, renewal_des

Z = 1.959963984540054
GRID_STEP = 0.001


def _sigma(ci95):
    return ci95 / Z


# 1 ----------------------------------------------------------------------------

def test_criterion_1_formula_consistency():
    t0 = time.perf_counter()
    worst_ber = 0.0
    tau = np.linspace(0.0, 5.0, 100)
    for snr in (-6.0, 0.0, 6.0, 12.0, 20.0):
        bp = BoundParams.from_snr(snr)
        for J, ref in ((1, ber_bound_round1(bp, tau)), (2, ber_bound_round2(bp, tau))):
            worst_ber = max(worst_ber, float(np.max(np.abs(ber_bound_general(J, bp, tau) / ref - 1))))
    rng = make_rng(101)
    worst_prod = 0.0
    for _ in range(200):
        mu = int(rng.integers(1, 6))
        P = rng.uniform(1e-6, 3e-3, mu)
        t = frame_probs(P, int(rng.integers(16, 4096)), rng.uniform(0, 1))
        worst_prod = max(worst_prod, abs(throughput_eta(t, mu) * expected_bits_n_mu(t, mu) - 1))
    worst_mu1 = 0.0
    for snr in (4.0, 8.0, 12.0, 16.0):
        for tv in (0.0, 0.1, 0.8, 2.0):
            P = min(float(ber_analytic(snr, tv, 1)), 0.5)
            expect = (1 - P) ** 1024 / (1 + float(marking_probability(tv)))
            got = float(eta_analytic(snr, tv, 1, 1024))
            worst_mu1 = max(worst_mu1, abs(got - expect) / max(expect, 1e-300))
    dt = time.perf_counter() - t0
    ok = worst_ber <= 1e-12 and worst_prod <= 1e-12 and worst_mu1 <= 1e-12 and dt < 1.0
    verdict("1", ok, f"max rel err: general-vs-expanded {worst_ber:.1e}, eta*n-1 {worst_prod:.1e}, "
                     f"mu=1 closed form {worst_mu1:.1e}; {dt:.2f} s")
    assert ok


# 2 ----------------------------------------------------------------------------

def test_criterion_2_renewal_oracle():
    rng = make_rng(202)
    worst = 0.0
    L = 256
    for k in range(5):
        mu = int(rng.integers(1, 5))
        pc = rng.uniform(0.15, 0.9, mu)
        m = float(rng.uniform(0, 0.8))
        t = frame_probs(1 - pc ** (1 / L), L, m)
        closed = float(throughput_eta(t, mu))
        des = renewal_des(pc, m, mu, 1_000_000, make_rng(203, k))
        rel = abs(des / closed - 1)
        worst = max(worst, rel)
        note(f"set {k}: mu={mu} p_c={np.round(pc, 3).tolist()} m={m:.3f}: closed {closed:.6f}, DES {des:.6f}, "
             f"rel {rel:.2e}")
    ok = worst <= 0.005
    verdict("2", ok, f"renewal DES vs closed-form throughput, worst relative gap {worst:.2e} (limit 5e-3)")
    assert ok


# 3 ----------------------------------------------------------------------------

def test_criterion_3_channel_statistics():
    cfg = ProtocolConfig()
    rng = make_rng(303)
    n = 100_000
    samples = np.array([draw_channel(cfg, rng).power[i % cfg.n_subcarriers] for i in range(n)])
    ks = ks_distance_exp(samples)
    z_worst = 0.0
    for tau in (0.1, 0.5, 1.5):
        frac = np.array([select_retx(draw_channel(cfg, rng), tau).size / cfg.n_subcarriers
                         for _ in range(5000)])
        se = frac.std(ddof=1) / math.sqrt(frac.size)
        z = abs(frac.mean() - (1 - math.exp(-tau))) / se
        z_worst = max(z_worst, z)
        note(f"tau={tau}: mean beta/N_s {frac.mean():.5f} vs {1 - math.exp(-tau):.5f} ({z:.2f} sigma)")
    ok = ks < 0.01 and z_worst <= 3
    verdict("3", ok, f"KS distance {ks:.4f} at 1e5 samples (limit 0.01); worst beta deviation {z_worst:.2f} sigma")
    assert ok


# 4 ----------------------------------------------------------------------------

def test_criterion_4_degeneracy():
    same = True
    for snr in (2.0, 8.0):
        for mu in (1, 3):
            cfg = ProtocolConfig(mu=mu, tau=0.0, snr_db=snr)
            for f in range(150):
                same &= np.array_equal(frame_stats(cfg, True, f), frame_stats(cfg, False, f))
    frames = math.ceil(1e6 / 1024)
    a = run_point(ProtocolConfig(mu=1, tau=1e9, snr_db=8.0), "ccsr", frames)
    b = run_point(ProtocolConfig(mu=2, tau=0.0, snr_db=8.0), "cc", frames)
    sig = math.hypot(_sigma(a.ber_ci95), _sigma(b.round_ber_ci95[1]))
    z = abs(a.ber - b.round_ber[1]) / sig
    ok = bool(same) and z <= 3
    verdict("4", ok, f"tau=0 per-frame identity {'holds' if same else 'BROKEN'}; CCSR(mu=1, tau=1e9) BER "
                     f"{a.ber:.3e} vs CC(mu=2) round-2 BER {b.round_ber[1]:.3e}, {z:.2f} sigma")
    assert ok


# 5 ----------------------------------------------------------------------------

def test_criterion_5_bound_tightness():
    fails = []
    for mu in (1, 2, 4):
        for snr in (4.0, 8.0, 12.0, 16.0):
            tau, eta_a = optimize_tau(snr, mu)
            ber_a = float(ber_analytic(snr, tau, mu))
            cfg = ProtocolConfig(mu=mu, tau=tau, snr_db=snr, channel_mode="iid", seed=505)
            r = run_point(cfg, "ccsr", 10_000, min_errors=100, max_bits=1e8)
            errs = round(r.ber * r.bits)
            ratio = ber_a / r.ber if r.ber > 0 else math.inf
            checks = {"BER_m<=BER_a": r.ber <= ber_a, "BER_a/BER_m<=4": ratio <= 4,
                      "eta_m>=eta_a": r.eta >= eta_a, "eta_m-eta_a<=0.1": r.eta - eta_a <= 0.1}
            bad = [k for k, v in checks.items() if not v]
            exact = ccsr_exact_ber(snr, tau, mu)
            note(f"mu={mu} snr={snr:g} tau_o={tau:g}: BER_m {r.ber:.3e}+-{r.ber_ci95:.1e} ({errs} errs / "
                 f"{r.bits:.2e} bits) BER_a {ber_a:.3e} ratio {ratio:.2f} [exact BER {exact:.3e}, "
                 f"BER_a/exact {ber_a / exact:.2f}]; eta_m {r.eta:.4f} eta_a {eta_a:.4g}; "
                 f"{'ok' if not bad else 'fails ' + ', '.join(bad)}")
            if bad:
                fails.append(f"mu={mu}/{snr:g}dB:{'+'.join(bad)}")
    ok = not fails
    verdict("5", ok, "bound sandwich at all 12 points" if ok else f"{len(fails)} of 12 points fail: {'; '.join(fails)}")
    assert ok


# 6 ----------------------------------------------------------------------------

def test_criterion_6_throughput_dominance():
    bad = []
    gain12 = None
    for mu in (1, 2, 4):
        for snr in (0.0, 4.0, 8.0, 12.0, 16.0, 20.0):
            tau, _ = optimize_tau(snr, mu)
            cfg = ProtocolConfig(mu=mu, tau=tau, snr_db=snr, seed=606)
            s = run_point(cfg, "ccsr", 3000)
            c = run_point(cfg.replace(tau=0.0), "cc", 3000)
            ci = math.hypot(s.eta_ci95, c.eta_ci95)
            note(f"mu={mu} snr={snr:g}: eta CCSR {s.eta:.4f} (tau {tau:g}) vs CC {c.eta:.4f} +- {ci:.4f}")
            if s.eta < c.eta - ci:
                bad.append(f"mu={mu}/{snr:g}dB")
            if mu == 1 and snr == 12.0:
                gain12 = s.eta / c.eta - 1 if c.eta > 0 else math.inf
    ok = not bad and gain12 >= 0.05
    verdict("6", ok, f"CCSR >= CC - CI at {18 - len(bad)}/18 points; mu=1 at 12 dB gain {gain12:+.1%} (need >= +5%)")
    assert ok


# 7 ----------------------------------------------------------------------------

def test_criterion_7_optimizer_behaviour():
    tau = {(mu, s): optimize_tau(float(s), mu)[0] for mu in (1, 2, 3, 4) for s in range(8, 31)}
    a_bad = [s for s in range(16, 31) if tau[(1, s)] != 0.0]
    b_bad = [s for s in range(8, 21) if abs(tau[(4, s)] - tau[(3, s)]) > GRID_STEP + 1e-9]
    c_bad = [(mu, s) for mu in (3, 4) for s in range(12, 21) if abs(tau[(mu, s)] - tau[(2, s)]) > GRID_STEP + 1e-9]
    note("tau_o(mu=1) at 16..30 dB: " + ", ".join(f"{s}:{tau[(1, s)]:g}" for s in range(16, 31, 2)))
    note("tau_o(mu=3 / mu=4) at 8..12 dB: " + ", ".join(f"{s}:{tau[(3, s)]:g}/{tau[(4, s)]:g}" for s in range(8, 13)))
    verdict("7a", not a_bad, "tau_o(mu=1)=0 for every SNR >= 16 dB" if not a_bad else
            f"tau_o(mu=1) > 0 at {len(a_bad)} SNRs >= 16 dB (e.g. {a_bad[0]} dB: {tau[(1, a_bad[0])]:g})")
    verdict("7b", not b_bad, "mu=3 and mu=4 tables agree within one grid step from 8 dB" if not b_bad else
            f"mu=3/mu=4 differ by more than one grid step at {b_bad} dB")
    verdict("7c", not c_bad, "mu=3,4 agree with mu=2 within one grid step from 12 dB" if not c_bad else
            f"disagreements at {c_bad}")
    assert not (a_bad or b_bad or c_bad)


# 8 ----------------------------------------------------------------------------

def test_criterion_8_fec_track():
    code = default_code()
    rng = make_rng(808)
    rt = all(np.array_equal(code.decode(np.where(code.encode(u) == 0, 20.0, -20.0)).bits, u)
             for u in rng.integers(0, 2, (50, 324)))
    coded = run_point(ProtocolConfig(mu=1, snr_db=3.0, fec_enabled=True, n_subcarriers=324, channel_mode="iid",
                                     seed=808), "cc", math.ceil(1e6 / 324))
    unc = run_point(ProtocolConfig(mu=1, snr_db=3.0, channel_mode="iid", seed=808), "cc", math.ceil(1e6 / 1024))
    gain = unc.ber / coded.ber if coded.ber > 0 else math.inf
    bad = []
    spec = SweepSpec(fec=True, base_seed=809)
    for snr in range(-8, 9, 2):
        tau, _ = tune_tau_mc(spec, float(snr), 1, (0.0, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0), 80)
        cfg = SweepSpec(fec=True, base_seed=810).config(float(snr), 1, "ccsr").replace(tau=tau)
        s = run_point(cfg, "ccsr", 400)
        c = run_point(cfg.replace(tau=0.0), "cc", 400)
        ci = math.hypot(s.eta_ci95, c.eta_ci95)
        note(f"HARQ mu=1 snr={snr}: eta CCSR {s.eta:.4f} (tau {tau:g}) vs CC {c.eta:.4f} +- {ci:.4f}")
        if s.eta < c.eta - ci:
            bad.append(snr)
    verdict("8a", rt, "LDPC round trip exact at zero noise" if rt else "LDPC round trip failed")
    verdict("8b", gain >= 10, f"3 dB iid Rayleigh: uncoded BER {unc.ber:.3e} vs coded {coded.ber:.3e} over "
                              f"{coded.bits:.2e} info bits, gain {gain:.1f}x (need >= 10x)")
    verdict("8c", not bad, "CCSR-HARQ >= CC-HARQ - CI from -8 to 8 dB" if not bad else f"ordering broken at {bad} dB")
    assert rt and gain >= 10 and not bad


# 9 ----------------------------------------------------------------------------

def test_criterion_9_determinism():
    spec = SweepSpec(snrs=(2.0, 6.0, 10.0), mus=(1, 2), schemes=("cc", "ccsr"), tau_policy=0.4, frames=400,
                     min_errors=50, max_bits=2e6, base_seed=909)
    one = results_to_csv(run_sweep(spec, workers=1))
    many = results_to_csv(run_sweep(spec, workers=3))
    fspec = SweepSpec(snrs=(2.0,), mus=(1,), schemes=("ccsr",), tau_policy=0.3, fec=True, frames=60, base_seed=909)
    f1 = results_to_csv(run_sweep(fspec, workers=1))
    f2 = results_to_csv(run_sweep(fspec, workers=2))
    ok = one == many and f1 == f2
    verdict("9", ok, "sweep CSVs byte-identical for 1 vs 3 workers (uncoded) and 1 vs 2 workers (LDPC)" if ok
            else "CSV differs across worker counts")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
