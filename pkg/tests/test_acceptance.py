"""Acceptance suite: the headline numerical claims, one test per criterion.

Each test prints a single PASS/FAIL line (run with -s to see them) and
asserts with the same line, so failures carry the measurement that tripped
them.  Expensive shared computations are cached at module scope.
"""

import time
from fractions import Fraction

import numpy as np

from acsalign.bound import max_dof
from acsalign.channel import construct_special_channel, implicated_receiver, sample_channel
from acsalign.cli import main
from acsalign.rates import estimate_baseline_dof, estimate_dof, sum_rate
from acsalign.schemes import (
    build_acs_ic3,
    build_cognitive_x,
    build_phase_alignment,
    build_scheme,
    build_uplinks,
    build_x_channel,
    sample_feasible_channel,
)
from acsalign.verify import demonstrate_containment, independence_margin, solve_phasor_pair

NUM_TRIALS = 100

_CACHE: dict = {}


def _report(num: int, ok: bool, detail: str) -> None:
    line = f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    assert ok, line


def _prebuilt(bf):
    return lambda _chn, _seed: bf


def _acs_trials():
    """Channels and slopes for the 100-seed three-user experiment (shared by
    the slope and baseline criteria)."""
    if "acs" not in _CACHE:
        start = time.perf_counter()
        channels, slopes = [], []
        for i in range(NUM_TRIALS):
            chn = sample_feasible_channel("acs-ic3", i)
            bf = build_acs_ic3(chn, seed=i)
            channels.append(chn)
            slopes.append(estimate_dof(_prebuilt(bf), chn, i).slope)
        _CACHE["acs"] = (channels, slopes, time.perf_counter() - start)
    return _CACHE["acs"]


def test_criterion_1_single_symbol_closed_form():
    chn = construct_special_channel("phase-example")
    bf = build_phase_alignment(chn)
    worst = 0.0
    for snr in (1.0, 1e2, 1e4, 1e6):
        want = 1.5 * np.log2(1.0 + 2.0 * snr)
        got = sum_rate(bf, chn, snr).sum_rate
        worst = max(worst, abs(got - want) / want)
    _report(1, worst < 1e-9, f"sum rate matches 1.5*log2(1+2*snr), worst relative error {worst:.3e}")


def test_criterion_2_three_user_slope_band():
    channels, slopes, elapsed = _acs_trials()
    lo, hi = min(slopes), max(slopes)
    ok = 1.17 <= lo and hi <= 1.23 and elapsed < 60.0
    _report(2, ok, f"{len(slopes)} seeds, slope range [{lo:.4f}, {hi:.4f}], {elapsed:.1f}s")


def test_criterion_3_two_transmitter_slope_bands():
    specs = (
        ("x-channel", build_x_channel, 4.0 / 3.0),
        ("uplinks", build_uplinks, 4.0 / 3.0),
        ("cognitive-x", lambda chn, seed: build_cognitive_x(chn), 1.5),
    )
    details = []
    ok = True
    for tag, builder, target in specs:
        slopes = []
        for i in range(NUM_TRIALS):
            chn = sample_feasible_channel(tag, i)
            slopes.append(estimate_dof(_prebuilt(builder(chn, i)), chn, i).slope)
        lo, hi = min(slopes), max(slopes)
        ok = ok and target - 0.03 <= lo and hi <= target + 0.03
        details.append(f"{tag} [{lo:.4f}, {hi:.4f}] vs {target:.4f}+/-0.03")
    _report(3, ok, "; ".join(details))


def test_criterion_4_allocation_bound_is_six_fifths():
    start = time.perf_counter()
    results = {s: max_dof(s) for s in range(1, 11)}
    elapsed = time.perf_counter() - start
    cap = Fraction(6, 5)
    ok = all(r.best_ratio <= cap for r in results.values())
    five = results[5]
    attained = five.best_ratio == cap and any(
        p.streams == (4, 4, 4) and p.overlaps == (2, 2, 2) for p in five.argmax
    )
    ok = ok and attained and elapsed < 60.0
    worst = max(r.best_ratio for r in results.values())
    _report(4, ok, f"S=1..10 max ratio {worst} (cap {cap}), S=5 attains it via (4,4,4)/(2,2,2), {elapsed:.1f}s")


def test_criterion_5_rank_collapse_is_localized():
    ok = True
    details = []
    for i in range(1, 7):
        chn = construct_special_channel(f"acs-violating-{i}")
        bf = build_acs_ic3(chn, seed=3, check=False)
        report = independence_margin(bf, chn)
        target = implicated_receiver(i - 1)
        for rx, rec in enumerate(report.receivers):
            smallest = rec.singular_values[-1]
            if rx == target:
                ok = ok and smallest < 1e-10
            else:
                ok = ok and smallest > 1e-6
    generic_worst = np.inf
    for i in range(NUM_TRIALS):
        chn = sample_channel(i, 3, 3)
        bf = build_acs_ic3(chn, seed=i)
        report = independence_margin(bf, chn)
        for rec in report.receivers:
            ok = ok and len(rec.singular_values) == 10 and rec.singular_values[-1] > 1e-6
            generic_worst = min(generic_worst, rec.singular_values[-1])
    details.append("6 violating channels collapse only their own receiver")
    details.append(f"{NUM_TRIALS} generic seeds keep rank 10, worst sv {generic_worst:.3e}")
    _report(5, ok, "; ".join(details))


def test_criterion_6_phasor_solver_and_containment():
    rng = np.random.default_rng(7)
    worst_solve = 0.0
    for _ in range(10_000):
        alpha, beta = rng.uniform(-np.pi, np.pi, size=2)
        c1, c2 = solve_phasor_pair(alpha, beta)
        residual = abs(c1 * np.exp(1j * alpha) + c2 * np.exp(1j * beta) - 1.0)
        worst_solve = max(worst_solve, residual)
    worst_demo = 0.0
    for seed in range(NUM_TRIALS):
        demo = demonstrate_containment(sample_channel(seed, 3, 3), seed=seed)
        worst_demo = max(worst_demo, demo.residual)
    ok = worst_solve < 1e-10 and worst_demo < 1e-10
    _report(6, ok, f"solver worst residual {worst_solve:.3e} over 10^4 pairs; "
                   f"containment worst residual {worst_demo:.3e} over {NUM_TRIALS} seeds")


def test_criterion_7_baseline_saturates_while_alignment_does_not():
    channels, slopes, _ = _acs_trials()
    checked = 0
    worst_baseline = 0.0
    ok = True
    for chn, slope in zip(channels, slopes):
        if slope < 1.17:
            continue
        checked += 1
        baseline = estimate_baseline_dof(chn).slope
        worst_baseline = max(worst_baseline, baseline)
        ok = ok and baseline <= 1.02
    ok = ok and checked == NUM_TRIALS
    _report(7, ok, f"baseline slope <= 1.02 on all {checked} channels (worst {worst_baseline:.4f})")


def test_criterion_8_sweeps_are_deterministic(tmp_path, capsys):
    paths = [tmp_path / name for name in ("serial.jsonl", "parallel.jsonl", "again.jsonl")]
    base = ["sweep", "--scheme", "acs-ic3", "--trials", "5", "--master-seed", "42"]
    codes = [
        main(base + ["--out", str(paths[0]), "--workers", "1"]),
        main(base + ["--out", str(paths[1]), "--workers", "2"]),
        main(base + ["--out", str(paths[2]), "--workers", "1"]),
    ]
    capsys.readouterr()
    blobs = [p.read_bytes() for p in paths]
    ok = codes == [0, 0, 0] and blobs[0] == blobs[1] == blobs[2]
    _report(8, ok, f"serial, 2-worker and repeat runs byte-identical ({len(blobs[0])} bytes)")
