"""Acceptance criteria 1 to 10, one test each.

Every test records a PASS or FAIL line (printed in the terminal summary and
to stdout) and then asserts, so a failing criterion fails the run.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    ACCEPTANCE,
    NORMALIZATION,
    near_classical_symmetric,
    near_deterministic,
    random_multiround,
    random_strategy,
    symmetric_game,
    symmetric_strategy,
)
from entangled_games import catalog
from entangled_games import linalg as la
from entangled_games.commuting import delta_vs_epsilon_scan, nearest_commuting_family, perturbed_commuting_family
from entangled_games.games import DeterministicStrategy, classical_value, multiround_value, symmetrize, symmetrize_classical
from entangled_games.immunize import (
    build_oneround_from_multiround,
    build_swap_game,
    build_three_prover_game,
    circuit_oracle_swap,
    eval_swap_game,
)
from entangled_games.rounding import (
    certify_multiround,
    certify_swap,
    certify_three_prover,
    rounded_value,
    sequential_distribution,
)
from entangled_games.strategies import embed_classical, entangled_value_of, seesaw


def report(n, ok, detail):
    ACCEPTANCE.append((n, bool(ok), detail))
    print(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_magic_square_values():
    t0 = time.perf_counter()
    e = catalog.magic_square()
    value = classical_value(e.game).value
    ent = entangled_value_of(e.entangled_strategy, e.game)
    elapsed = time.perf_counter() - t0
    ok = value == Fraction(17, 18) and abs(ent - 1) <= 1e-9 and elapsed < 10
    report(1, ok, f"classical {value}, entangled {ent:.12f}, {elapsed:.2f}s")


def test_criterion_02_swap_honest_embedding():
    t0 = time.perf_counter()
    lines, ok = [], True
    for name in ("chsh", "magic_square"):
        e = catalog.get(name)
        omega = classical_value(e.game).value
        g = symmetrize(e.game)
        s = embed_classical(symmetrize_classical(classical_value(e.game).witness, e.game.questions), g.answers)
        ev = eval_swap_game(g, s)
        ok &= ev.total >= float(omega) / 2 + 0.5 - 1e-9 and abs(ev.quantum_test_prob - 1) <= 1e-10
        lines.append(f"{name} total {ev.total:.12f} qtest {ev.quantum_test_prob:.12f}")
    elapsed = time.perf_counter() - t0
    report(2, ok and elapsed < 10, "; ".join(lines) + f", {elapsed:.2f}s")


def test_criterion_03_closed_form_matches_circuit():
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for seed in range(60):
        rng = np.random.default_rng([3, seed])
        q, a, d = int(rng.integers(1, 4)), int(rng.integers(2, 4)), int(rng.integers(1, 3))
        g = build_swap_game(symmetric_game(2, q, a, rng))
        s = symmetric_strategy(2, q, a, d, rng)
        closed, circuit = eval_swap_game(g, s), circuit_oracle_swap(g, s)
        worst = max(worst, abs(closed.classical_test_prob - circuit.classical_test_prob),
                    abs(closed.quantum_test_prob - circuit.quantum_test_prob))
        count += 1
    elapsed = time.perf_counter() - t0
    report(3, worst <= 1e-8 and elapsed < 120, f"{count} strategies, worst gap {worst:.2e}, {elapsed:.2f}s")


_perfect = {"count": 0, "worst": 1.0}


@settings(max_examples=200, deadline=None, derandomize=True)
@given(seed=st.integers(0, 2**32 - 1), q=st.integers(1, 3), a=st.integers(2, 3),
       kind=st.sampled_from(["embedded", "rotated"]))
def _perfect_case(seed, q, a, kind):
    rng = np.random.default_rng(seed)
    answer_of = [int(x) for x in rng.integers(0, a, size=q)]
    g = symmetric_game(2, q, a, rng, density=0.3, force=answer_of)
    if kind == "embedded":
        s = embed_classical(DeterministicStrategy([answer_of, answer_of]), a)
    else:
        s = near_classical_symmetric(2, answer_of, a, 0.0, rng)
    eps = 1.0 - eval_swap_game(g, s).total
    if eps > 1e-10:
        return
    value = rounded_value(g, sequential_distribution(s, g.pi_float))
    _perfect["count"] += 1
    _perfect["worst"] = min(_perfect["worst"], value)
    assert value >= 1 - 1e-6


def test_criterion_04_perfect_case_rounding():
    _perfect.update(count=0, worst=1.0)
    try:
        _perfect_case()
        ok = _perfect["count"] > 0
    except AssertionError:
        ok = False
    report(4, ok, f"{_perfect['count']} perfect strategies, lowest rounded value {_perfect['worst']:.12f}")


def _swap_cases(n):
    for seed in range(n):
        rng = np.random.default_rng([51, seed])
        q, d = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        answer_of = [int(x) for x in rng.integers(0, 2, size=q)]
        g = build_swap_game(symmetric_game(2, q, 2, rng, force=answer_of))
        if seed % 2 and d == 2:
            s = near_classical_symmetric(2, answer_of, 2, float(rng.choice([1e-4, 1e-2, 0.1, 0.5])), rng)
        else:
            s = symmetric_strategy(2, q, 2, d, rng)
        yield certify_swap(g, s, seed=seed)


def _three_prover_cases(n):
    for seed in range(n):
        rng = np.random.default_rng([52, seed])
        q, d = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        answer_of = [int(x) for x in rng.integers(0, 2, size=q)]
        g = build_three_prover_game(symmetric_game(2, q, 2, rng, force=answer_of))
        if seed % 2 and d == 2:
            s = near_classical_symmetric(3, answer_of, 2, float(rng.choice([1e-4, 1e-2, 0.1, 0.5])), rng)
        else:
            s = symmetric_strategy(3, q, 2, d, rng)
        yield certify_three_prover(g, s, seed=seed)


def _multiround_cases(n):
    for seed in range(n):
        rng = np.random.default_rng([53, seed])
        r, q, d = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(1, 3))
        m = random_multiround(r, q, 2, rng)
        t = build_oneround_from_multiround(m)
        if seed % 2 and d == 2:
            # near the honest strategy of the adaptive optimum
            witness = multiround_value(m).witness
            alice, bob = [0] * t.game.questions, [0] * t.game.questions
            for qs in itertools.product(range(q), repeat=r):
                ans = witness.answer_sequence(qs)
                alice[t.alice_question(qs)] = t.answer_index(ans)
                for k in range(1, r + 1):
                    bob[t.bob_question(qs, k)] = t.answer_index(ans[:k])
            s = near_deterministic([alice, bob], t.game.answers, float(rng.choice([1e-4, 1e-2, 0.1])), rng)
        else:
            s = random_strategy(2, t.game.questions, t.game.answers, d, rng)
        yield certify_multiround(t, s, seed=seed)


def test_criterion_05_certificate_suite():
    t0 = time.perf_counter()
    per = 100
    checked, failures, corrected = 0, {}, 0
    for cases in (_swap_cases(per), _three_prover_cases(per), _multiround_cases(per)):
        for certs in cases:
            for c in certs:
                checked += 1
                corrected += c.lemma == "ipw-3-corrected" and c.holds
                if not c.holds:
                    worst = failures.get(c.lemma, (0, 0.0))
                    failures[c.lemma] = (worst[0] + 1, max(worst[1], c.lhs - c.rhs))
    elapsed = time.perf_counter() - t0
    detail = f"{3 * per} strategies, {checked} certificates, {elapsed:.1f}s"
    if failures:
        detail += "; failed: " + ", ".join(f"{k} x{n} (worst excess {x:.3g})" for k, (n, x) in sorted(failures.items()))
        detail += f"; ipw-3-corrected held {corrected} times"
    report(5, not failures and elapsed < 600, detail)


def test_criterion_06_gentle_measurement():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst, ratio = -np.inf, 0.0
    pairs = 1200
    for _ in range(pairs):
        d = int(rng.integers(1, 9))
        rho = la.random_density_matrix(d, rng, rank=int(rng.integers(1, d + 1)))
        u = la.haar_unitary(d, rng)
        # spectra pushed toward 1 so that many pairs sit in the small-disturbance regime
        x = u @ np.diag(1 - rng.random(d) ** float(rng.choice([1, 4, 16]))) @ u.conj().T
        distance, bound = la.gentle_measurement_bound(rho, x)
        worst = max(worst, distance - bound)
        if bound > 1e-12:
            ratio = max(ratio, distance / bound)
    elapsed = time.perf_counter() - t0
    report(6, worst <= 1e-9 and elapsed < 60, f"{pairs} pairs, max distance/bound {ratio:.3f}, {elapsed:.2f}s")


@pytest.mark.after_suite
def test_criterion_07_normalization_invariants():
    n_out, dev_out = NORMALIZATION["outcome"]
    n_seq, dev_seq = NORMALIZATION["sequential"]
    ok = n_out > 0 and n_seq > 0 and max(dev_out, dev_seq) <= 1e-8
    report(7, ok, f"{n_out} outcome distributions (worst {dev_out:.2e}), "
                  f"{n_seq} sequential distributions (worst {dev_seq:.2e})")


def test_criterion_08_seesaw_floor():
    t0 = time.perf_counter()
    chsh = seesaw(catalog.chsh().game, 2, restarts=20, seed=0).value
    square = seesaw(catalog.magic_square().game, 4, restarts=20, seed=0).value
    elapsed = time.perf_counter() - t0
    ok = chsh >= 0.853 and square >= 0.99 and elapsed < 120
    report(8, ok, f"chsh {chsh:.9f} (reference {math.cos(math.pi / 8) ** 2:.9f}), magic square {square:.9f}, {elapsed:.1f}s")


def test_criterion_09_conjecture_lab_soundness():
    rng = np.random.default_rng(9)
    worst_comm, worst_exact, runs = 0.0, 0.0, 0
    for i in range(60):
        n, d = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        exact = perturbed_commuting_family(n, d, 0.0, rng)
        noisy = perturbed_commuting_family(n, d, float(rng.choice([0.01, 0.1, 0.5, 2.0])), rng)
        for family in (exact, noisy):
            out = nearest_commuting_family(family, seed=i).projectors
            worst_comm = max(worst_comm, max(np.abs(a @ b - b @ a).max() for a in out for b in out))
            runs += 1
        worst_exact = max(worst_exact, nearest_commuting_family(exact, seed=i).delta)
    rows = delta_vs_epsilon_scan(3, 3, 0.3, 4, seed=9)
    # the scan returns data only, no verdict on the conjecture
    no_verdict = all(set(vars(r)) == {"epsilon_max", "delta", "n", "d", "scale", "seed"} for r in rows)
    ok = worst_comm <= 1e-8 and worst_exact <= 1e-9 and no_verdict
    report(9, ok, f"{runs} families, worst commutator {worst_comm:.2e}, worst delta on commuting input {worst_exact:.2e}")


def test_criterion_10_substitution_covers_every_inequality():
    # complexity statements are not runnable; check that criterion 5 certifies every inequality they rest on
    rng = np.random.default_rng(10)
    g = symmetric_game(2, 2, 2, rng)
    lemmas = {c.lemma for c in certify_swap(build_swap_game(g), symmetric_strategy(2, 2, 2, 2, rng))}
    lemmas |= {c.lemma for c in certify_three_prover(build_three_prover_game(g), symmetric_strategy(3, 2, 2, 2, rng))}
    t = build_oneround_from_multiround(random_multiround(2, 2, 2, rng))
    lemmas |= {c.lemma for c in certify_multiround(t, random_strategy(2, t.game.questions, t.game.answers, 2, rng))}
    required = {"swap-commute-1", "swap-commute-2", "swap-delta", "gentle", "hybrid", "three-prover-delta",
                "ipw-1", "ipw-2", "ipw-3", "multiround-delta"}
    missing = required - lemmas
    report(10, not missing, "not reproducible as stated; substituted by criteria 4-6 covering "
                            f"{len(required - missing)}/{len(required)} inequalities" + (f", missing {sorted(missing)}" if missing else ""))
