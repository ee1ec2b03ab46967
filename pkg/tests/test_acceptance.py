"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with pytest -s to see them inline)."""

import json
import math
import time

import numpy as np

from nlqsim.algorithms import (
    Alg1Config,
    Alg2Config,
    run_algorithm1,
    run_algorithm1_count,
    run_algorithm2,
    run_algorithm2_count,
)
from nlqsim.cli import main as cli_main
from nlqsim.gates import (
    PAIR_CASE_INPUTS,
    PAIR_CASE_TARGETS,
    BlochAngle,
    bloch_distance,
    build_N,
    build_n_minus,
    n_minus_single_pass,
    state_angle,
    state_bloch,
)
from nlqsim.oracle import (
    OracleSpec,
    TruthTableOracle,
    apply_oracle,
    count_solutions_bruteforce,
    random_oracle,
)
from nlqsim.statevector import (
    StateVector,
    apply_1q_unitary,
    collapse_onto_pattern,
    conditional_qubit_state,
    make_rng,
    new_basis_state,
    probability_of_pattern,
)
from nlqsim.weinberg import (
    HbarFunction,
    apply_conditional_nonlinear,
    evolve_closed_form,
    evolve_integrated,
    find_phase_time,
    phase_aligned_hbar,
)
from nlqsim.gates import H_GATE


def report(num, name, passed, detail=""):
    tail = f" ({detail})" if detail else ""
    print(f"\n[acceptance {num:02d}] {'PASS' if passed else 'FAIL'} {name}{tail}")
    assert passed, f"criterion {num} failed: {name} {tail}"


def prepared_state(n, solutions):
    oracle = OracleSpec(TruthTableOracle(n, tuple(sorted(solutions))))
    sv = new_basis_state(n + 1, 0)
    for q in range(n):
        sv = apply_1q_unitary(sv, q, H_GATE)
    sv = apply_oracle(sv, range(n), n, oracle)
    for q in range(n):
        sv = apply_1q_unitary(sv, q, H_GATE)
    return sv


def test_criterion_01_flag_state_reproduction():
    started = time.monotonic()
    rng = make_rng(101)
    worst = 0.0
    for n in range(1, 9):
        for s in rng.integers(0, (1 << n) + 1, size=50):
            s = int(s)
            tt = random_oracle(n, s, rng)
            sv = prepared_state(n, tt.solutions)
            _, sv0 = collapse_onto_pattern(sv, range(n), 0)
            _, c0, c1 = conditional_qubit_state(sv0, n, 0)
            norm = math.hypot((1 << n) - s, s)
            worst = max(worst, abs(c0 - ((1 << n) - s) / norm), abs(c1 - s / norm))
    elapsed = time.monotonic() - started
    report(1, "post-selected flag amplitudes match ((2^n - s), s) / norm",
           worst <= 1e-10 and elapsed < 10.0,
           f"worst dev {worst:.2e}, {elapsed:.1f} s")


def test_criterion_02_zero_pattern_probability_bound():
    rng = make_rng(202)
    worst_dev, min_p = 0.0, 1.0
    for n in range(1, 9):
        ss = {0, 1, 1 << (n - 1), (1 << n) - 1, 1 << n}
        ss.update(int(x) for x in rng.integers(0, (1 << n) + 1, size=10))
        for s in ss:
            tt = random_oracle(n, s, rng)
            p = probability_of_pattern(prepared_state(n, tt.solutions), range(n), 0)
            expected = (((1 << n) - s) ** 2 + s * s) / float(1 << (2 * n))
            worst_dev = max(worst_dev, abs(p - expected))
            min_p = min(min_p, p)
    report(2, "zero-pattern probability matches the closed form and stays >= 1/4",
           worst_dev <= 1e-10 and min_p >= 0.25,
           f"worst dev {worst_dev:.2e}, min P {min_p:.3f}")


def test_criterion_03_closed_form_matches_integrator():
    rng = make_rng(303)
    worst_amp, worst_norm, worst_lat = 0.0, 0.0, 0.0
    for _ in range(200):
        degree = int(rng.integers(1, 4))
        h = HbarFunction(tuple(rng.uniform(-1.0, 1.0, size=degree + 1)))
        c = rng.normal(size=2) + 1j * rng.normal(size=2)
        c /= np.linalg.norm(c)
        c1, c2 = complex(c[0]), complex(c[1])
        t = float(rng.uniform(0.0, 20.0))
        e1, e2 = evolve_closed_form(c1, c2, h, t)
        i1, i2 = evolve_integrated(c1, c2, h, t, 2e-3)
        worst_amp = max(worst_amp, abs(e1 - i1), abs(e2 - i2))
        n1 = abs(i1) ** 2 + abs(i2) ** 2
        worst_norm = max(worst_norm, abs(n1 - 1.0))
        worst_lat = max(worst_lat, abs(abs(i2) ** 2 / n1 - abs(c2) ** 2))
    report(3, "closed-form evolution matches RK4 with norm and latitude conserved",
           worst_amp <= 1e-8 and worst_norm <= 1e-8 and worst_lat <= 1e-8,
           f"amp {worst_amp:.2e}, norm {worst_norm:.2e}, latitude {worst_lat:.2e}")


def test_criterion_04_linear_limit_superposition_recovery():
    rng = make_rng(404)
    kappa, t = 0.8, 4.2
    h = HbarFunction((0.0, kappa))
    diag = np.diag([1.0, np.exp(-1j * kappa * t)])
    worst = 0.0
    for _ in range(20):
        amps = rng.normal(size=16) + 1j * rng.normal(size=16)
        sv = StateVector(4, amps / np.linalg.norm(amps))
        target = int(rng.integers(0, 4))

        def evolve_rows(rows):
            out = np.empty_like(rows)
            for i, row in enumerate(rows):
                out[i] = evolve_closed_form(complex(row[0]), complex(row[1]), h, t)
            return out

        a = apply_conditional_nonlinear(sv, target, evolve_rows)
        b = apply_1q_unitary(sv, target, diag)
        worst = max(worst, float(np.max(np.abs(a.amplitudes - b.amplitudes))))
    report(4, "linear profile: branchwise evolution equals the global unitary",
           worst <= 1e-9, f"worst dev {worst:.2e}")


def test_criterion_05_angle_contraction():
    worst_rel = 0.0
    for phi in (math.pi / 16, math.pi / 12, math.pi / 8):
        h = phase_aligned_hbar(math.sin(phi) ** 2, math.cos(phi) ** 2)
        sol = find_phase_time(h, phi, eps=1e-9)
        img0 = np.array(n_minus_single_pass(1.0, 0.0, phi, h, sol))
        img1 = np.array(n_minus_single_pass(0.0, 1.0, phi, h, sol))
        # one pass shrinks the pair angle from pi/2 by exactly 2 phi
        reduction = math.pi / 2 - state_angle(img0, img1)
        err = abs(reduction - 2 * phi)
        ok = err <= 10 * sol.residual + 1e-9
        worst_rel = max(worst_rel, err)
        if not ok:
            report(5, "single-pass contraction off target", False,
                   f"phi={phi:.4f}, err {err:.2e}, residual {sol.residual:.2e}")
    gate = build_n_minus(None, 1e-3)
    dists = [
        bloch_distance(state_bloch(*gate.apply(*basis)), BlochAngle(0.0, 0.0))
        for basis in ((1.0, 0.0), (0.0, 1.0))
    ]
    report(5, "single pass contracts by 2 phi; full contraction lands at |0>",
           worst_rel <= 1e-9 and max(dists) <= 1e-3,
           f"pass err {worst_rel:.2e}, images within {max(dists):.2e}")


def test_criterion_06_merge_gate_table():
    gate = build_N(None, 1e-3)
    fids = []
    for case_in, case_target in zip(PAIR_CASE_INPUTS, PAIR_CASE_TARGETS):
        out = gate.apply_to_pair(case_in)
        fids.append(float(abs(np.vdot(case_target, out)) ** 2))
    report(6, "synthesized merge gate reproduces all three pair cases",
           min(fids) >= 1 - 1e-3,
           "fidelities " + ", ".join(f"{f:.6f}" for f in fids))


def test_criterion_07_algorithm2_exhaustive():
    started = time.monotonic()
    ok = True
    for sols in [()] + [(i,) for i in range(8)]:
        oracle = OracleSpec(TruthTableOracle(3, sols))
        rep = run_algorithm2(Alg2Config(n=3, oracle=oracle, seed=7))
        want = "solution-exists" if sols else "no-solution"
        census = [2, 4, 8] if sols else [0, 0, 0]
        ok &= rep.decision == want
        ok &= rep.flag_one_census == census
        ok &= rep.oracle_calls == 1
    elapsed = time.monotonic() - started
    report(7, "pair-merge cascade decides all nine 3-bit oracles with one query",
           ok and elapsed < 30.0, f"{elapsed:.1f} s")


def test_criterion_08_counting_equivalence():
    rng = make_rng(808)
    ok = True
    for i in range(100):
        n = int(rng.integers(1, 9))
        s = int(rng.integers(0, (1 << n) + 1))
        tt = random_oracle(n, s, rng)
        truth = count_solutions_bruteforce(tt)
        r1 = run_algorithm1_count(Alg1Config(n=n, oracle=OracleSpec(tt), seed=3000 + i))
        r2 = run_algorithm2_count(
            Alg2Config(n=n, oracle=OracleSpec(tt), counting=True, seed=4000 + i)
        )
        ok &= r1.succeeded and r1.count == truth
        ok &= r2.succeeded and r2.count == truth
    report(8, "both counting variants equal brute force on 100 random oracles", ok)


def test_criterion_09_separation_growth_and_application_bound():
    lam = math.log(2.0)
    ok = True
    details = []
    for n, s in ((4, 1), (5, 2), (6, 1), (7, 4), (8, 1), (9, 3), (10, 1), (10, 4)):
        rng = make_rng(n * 31 + s)
        tt = random_oracle(n, s, rng)
        rep = run_algorithm1(Alg1Config(n=n, oracle=OracleSpec(tt), seed=500 + n))
        k = rep.applications_to_threshold
        bound = math.ceil((n * math.log(2.0) + math.log(1.0 / s)) / lam) + 3
        ok &= rep.succeeded and k is not None and k <= bound
        seps = dict(rep.separation_trajectory)
        ratios = [seps[j + 1] / seps[j] for j in range(min(k, len(seps) - 1)) if seps[j] > 0]
        if ratios:
            growth = math.exp(sum(math.log(r) for r in ratios) / len(ratios))
            ok &= abs(growth - 2.0) <= 0.05
            details.append(f"n={n},s={s}: k={k}<={bound}, growth {growth:.3f}")
        else:
            details.append(f"n={n},s={s}: k={k}<={bound} (no fit window)")
    report(9, "separation doubles per application and crosses in the budget",
           ok, "; ".join(details[:3]) + " ...")


def test_criterion_10_precision_contrast():
    grid = (0.0, 1e-4, 1e-3, 1e-2, 1e-1)
    n, sols = 6, (37,)
    rate1, rate2 = {}, {}
    for sigma in grid:
        ok1 = ok2 = 0
        for seed in range(200):
            o1 = OracleSpec(TruthTableOracle(n, sols))
            r1 = run_algorithm1(Alg1Config(n=n, oracle=o1, noise_sigma=sigma, seed=seed))
            ok1 += r1.succeeded and r1.decision == "solution-exists"
            o2 = OracleSpec(TruthTableOracle(n, sols))
            r2 = run_algorithm2(Alg2Config(n=n, oracle=o2, noise_sigma=sigma, seed=seed))
            ok2 += r2.decision == "solution-exists"
        rate1[sigma], rate2[sigma] = ok1 / 200.0, ok2 / 200.0
    separating = [s for s in grid if rate1[s] < 0.9 and rate2[s] >= 0.99]
    detail = "; ".join(
        f"sigma={s:g}: amplification {rate1[s]:.3f}, cascade {rate2[s]:.3f}" for s in grid
    )
    report(10, "a noise level breaks the amplification route but not the cascade",
           len(separating) > 0, detail)


def test_criterion_11_cli_determinism(tmp_path, capsys):
    blobs = {}
    for tag in ("first", "second"):
        rep = tmp_path / f"solve_{tag}.json"
        sep = tmp_path / f"sep_{tag}.tsv"
        cnt = tmp_path / f"count_{tag}.json"
        tt = tmp_path / "oracle.json"
        tt.write_text(json.dumps({"num_vars": 4, "solutions": [9]}))
        assert cli_main(["solve", "--algorithm", "alg2", "--truth-table", str(tt),
                         "--seed", "12", "--out", str(rep)]) == 0
        assert cli_main(["separation", "--truth-table", str(tt),
                         "--seed", "12", "--out", str(sep)]) == 0
        assert cli_main(["count", "--algorithm", "alg1", "--truth-table", str(tt),
                         "--seed", "12", "--out", str(cnt)]) == 0
        blobs[tag] = rep.read_bytes() + sep.read_bytes() + cnt.read_bytes()
    capsys.readouterr()
    report(11, "same seed gives byte-identical CLI outputs",
           blobs["first"] == blobs["second"])
