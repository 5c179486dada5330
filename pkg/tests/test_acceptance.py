"""Exit criteria for the simulator, one test per criterion.

Statistical checks use a 4-sigma binomial band; exact checks use the
tolerances 1e-10 (fidelity, S) or exact integer equality.
"""

import math
import time
from dataclasses import replace

import numpy as np

import oracles
from qsdc import qcore
from qsdc.harness import ExperimentSpec, cli_run, run_sweep
from qsdc.protocol import (
    SessionConfig,
    chsh_exact,
    chsh_test,
    correct_and_decode,
    distribute_pairs,
    run_session,
    teleport_bit,
    verify_channel,
)
from qsdc.qcore import BellKind, PauliCorrection


def sigma(p, n):
    return math.sqrt(p * (1 - p) / n)


def test_c1_teleportation_identity(criterion):
    start = time.perf_counter()
    ok_cases = 0
    worst = 1.0
    for b in (0, 1):
        for kind in BellKind:
            pair = distribute_pairs(1, None, 0.0, np.random.default_rng(0))[0]
            result = teleport_bit(pair, b, np.random.default_rng(0), forced=kind)
            fixed = qcore.apply_single(result.state, "A", PauliCorrection.for_outcome(kind).inverse)
            alice, _ = qcore.split(fixed, ["A"])
            fid = qcore.fidelity(alice, qcore.encode_bit(b, "A"))
            worst = min(worst, fid)
            decoded = correct_and_decode(result.state, result.ij, np.random.default_rng(1))
            ok_cases += fid > 1 - 1e-10 and decoded == b
    elapsed = time.perf_counter() - start
    criterion("1 teleportation identity", ok_cases == 8 and elapsed < 1.0,
              f"{ok_cases}/8 cases, min fidelity {worst:.15f}, {elapsed:.3f}s")


def test_c2_bell_outcome_uniformity(criterion):
    n = 40000
    rng = np.random.default_rng(2024)
    counts = dict.fromkeys(("00", "01", "10", "11"), 0)
    pair = distribute_pairs(1, None, 0.0, rng)[0]
    start = time.perf_counter()
    for k in range(n):
        counts[teleport_bit(pair, k & 1, rng).ij] += 1
    elapsed = time.perf_counter() - start
    s = sigma(0.25, n)
    worst = max(abs(c / n - 0.25) for c in counts.values())
    criterion("2 Bell outcome uniformity", worst < 4 * s,
              f"max |f-0.25| = {worst:.5f} < 4sigma = {4 * s:.5f}, counts {counts}, {elapsed:.1f}s")


def test_c3_honest_verification_exact(criterion):
    n = 100_000
    pairs = distribute_pairs(n, None, 0.0, np.random.default_rng(3))
    v = verify_channel(pairs, 0.05, np.random.default_rng(4))
    criterion("3 honest channel verification", v.z_mismatch == 0 and v.x_mismatch == 0 and v.accept,
              f"{n} pairs, z {v.z_mismatch}/{v.z_compared}, x {v.x_mismatch}/{v.x_compared}")


def test_c4_swap_attack(criterion):
    pairs = distribute_pairs(20000, "swap", 0.0, np.random.default_rng(5))
    v = verify_channel(pairs, 0.05, np.random.default_rng(6))
    x_ok = v.x_compared >= 4000 and abs(v.x_rate - 0.5) < 4 * sigma(0.5, v.x_compared)
    # a +/-1 correlator estimated from n matched rounds: E = 1 - 2*mismatch, sd 1/sqrt(n)
    exx, ezz = 1 - 2 * v.x_rate, 1 - 2 * v.z_rate
    corr_ok = abs(exx) < 4 / math.sqrt(v.x_compared) and abs(ezz) < 4 / math.sqrt(v.z_compared)
    exact = [
        (qcore.expectation_correlator(p.state, "AB", math.pi / 2, math.pi / 2),
         qcore.expectation_correlator(p.state, "AB", 0.0, 0.0))
        for p in pairs[:64]
    ]
    exact_ok = all(abs(a) < 1e-12 and abs(b) < 1e-12 for a, b in exact)
    oracle_ok = abs(oracles.swap_mismatch("Z") - 0.5) < 1e-12 and abs(oracles.swap_mismatch("X") - 0.5) < 1e-12
    criterion("4 swap attack", x_ok and corr_ok and exact_ok and oracle_ok,
              f"x mismatch {v.x_rate:.4f} over {v.x_compared}, <XX>={exx:+.4f}, <ZZ>={ezz:+.4f} "
              f"(z rounds {v.z_compared}), exact correlators 0")


def test_c5_ghz_attack(criterion):
    n = 10_000
    z = verify_channel(distribute_pairs(n, "ghz", 0.0, np.random.default_rng(7)), 0.05,
                       np.random.default_rng(8), bases="Z", coordinated=True)
    x = verify_channel(distribute_pairs(n, "ghz", 0.0, np.random.default_rng(9)), 0.05,
                       np.random.default_rng(10), bases="X", coordinated=True)
    ok = z.z_compared == n and z.z_mismatch == 0 and abs(x.x_rate - 0.5) < 4 * sigma(0.5, x.x_compared)
    criterion("5 GHZ attack", ok,
              f"z mismatch {z.z_mismatch}/{z.z_compared}, x mismatch rate {x.x_rate:.4f} over {x.x_compared}")


def test_c6_swap_leakage_without_verification(criterion):
    n = 1000
    t = run_session(SessionConfig(seed=6, n_message_bits=n, test_pairs=0, adversary="swap"))
    eve = sum(a == b for a, b in zip(t.sent_bits, t.eve_bits)) / n
    alice = sum(a == b for a, b in zip(t.sent_bits, t.received_bits)) / n
    table = oracles.swap_decode_table()
    oracle_ok = len(table) == 32 and all(abs(a - 0.5) < 1e-12 for _, _, a in table.values())
    ok = eve == 1.0 and abs(alice - 0.5) < 4 * sigma(0.5, n) and oracle_ok
    criterion("6 swap leakage, verification skipped", ok,
              f"eve accuracy {eve:.4f} (exact 1 required), alice accuracy {alice:.4f} +/- {4 * sigma(0.5, n):.4f}")


def test_c7_detection_curves(criterion):
    trials = 2000
    ms = [1, 2, 4, 8, 16]
    start = time.perf_counter()
    lines, ok = [], True
    for adv, per_round in (("swap", 0.5), ("ir", 0.25)):
        base = SessionConfig(seed=7, n_message_bits=0, adversary=adv, coordinated_bases=True)
        for row in run_sweep(ExperimentSpec(base, "test_pairs", ms, trials=trials)):
            m = row.sweep_value
            expected = 1 - (1 - per_round) ** m
            got = row.report.detection_probability
            band = 4 * sigma(expected, trials)
            hit = abs(got - expected) <= band
            ok &= hit
            lines.append(f"{adv} m={m}: {got:.4f} vs {expected:.4f}{'' if hit else ' !'}")
    elapsed = time.perf_counter() - start
    criterion("7 detection curves", ok and elapsed < 60, "; ".join(lines) + f"; {elapsed:.1f}s")


def test_c8_chsh(criterion):
    honest = distribute_pairs(40000, None, 0.0, np.random.default_rng(11))
    swapped = distribute_pairs(40000, "swap", 0.0, np.random.default_rng(12))
    s_exact = chsh_exact(honest[0].state)
    swap_exact = max(abs(chsh_exact(p.state)) for p in swapped[:256])
    h = chsh_test(honest, np.random.default_rng(13))
    w = chsh_test(swapped, np.random.default_rng(14))
    ok = (
        abs(s_exact - 2 * math.sqrt(2)) < 1e-10
        and swap_exact <= 2
        and min(h.rounds.values()) >= 10_000
        and abs(h.s - 2 * math.sqrt(2)) < h.half_width
        and abs(w.s - 0.0) < w.half_width
    )
    criterion("8 CHSH", ok,
              f"exact S={s_exact:.12f}, swap |S|max={swap_exact:.2e}; sampled honest {h.s:.4f}+/-{h.half_width:.4f}, "
              f"swap {w.s:+.4f}+/-{w.half_width:.4f}")


def test_c9_cli_determinism(criterion, tmp_path):
    args = ["session", "--seed", "1", "--bits", "64", "--test-pairs", "200", "--eve", "swap"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    codes = (cli_run(args + ["--out", str(a)]), cli_run(args + ["--out", str(b)]))
    same = a.read_bytes() == b.read_bytes()
    criterion("9 determinism", codes == (0, 0) and same, f"exit codes {codes}, identical={same}, {a.stat().st_size} bytes")
