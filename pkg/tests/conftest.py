"""Shared generators for random games and strategies."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from entangled_games import linalg as la
from entangled_games.games import GameSpec, MultiRoundGameSpec
from entangled_games.rounding import SequentialDistribution
from entangled_games.strategies import EntangledStrategy, OutcomeDistribution

# acceptance lines, printed in the terminal summary
ACCEPTANCE: list[tuple[int, bool, str]] = []

# worst normalization deviation of every distribution built during the session
NORMALIZATION = {"outcome": [0, 0.0], "sequential": [0, 0.0]}


def _record(kind, deviation):
    entry = NORMALIZATION[kind]
    entry[0] += 1
    entry[1] = max(entry[1], float(deviation))


def _watch(cls, kind, deviation):
    init = cls.__init__

    def wrapped(self, *args, **kwargs):
        init(self, *args, **kwargs)
        _record(kind, deviation(self))

    cls.__init__ = wrapped


def pytest_configure(config):
    _watch(OutcomeDistribution, "outcome", lambda d: np.max(np.abs(d.row_sums() - 1.0), initial=0.0))
    _watch(SequentialDistribution, "sequential", lambda d: abs(d.total() - 1.0))


def pytest_collection_modifyitems(config, items):
    # session-wide checks go last so they see every other test's work
    items.sort(key=lambda item: item.get_closest_marker("after_suite") is not None)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_pi(shape, rng, zero_frac=0.0):
    """Random rational distribution with small denominators."""
    w = rng.integers(1, 6, size=shape)
    if zero_frac:
        w = np.where(rng.random(shape) < zero_frac, 0, w)
        if w.sum() == 0:
            w.flat[0] = 1
    total = int(w.sum())
    pi = np.empty(shape, dtype=object)
    for idx, x in np.ndenumerate(w):
        pi[idx] = Fraction(int(x), total)
    return pi


def random_game(provers, questions, answers, rng, density=0.5, zero_frac=0.0):
    pi = random_pi((questions,) * provers, rng, zero_frac)
    pred = rng.random((answers,) * provers + (questions,) * provers) < density
    return GameSpec(provers, questions, answers, pi, pred)


def symmetric_game(provers, questions, answers, rng, density=0.5, force=None):
    """Random game invariant under permuting all provers.

    ``force`` is an optional map question -> answer whose all-agreeing answer
    tuples are always accepted, so that a perfect symmetric strategy exists.
    """
    pi = random_pi((questions,) * provers, rng)
    pred = rng.random((answers,) * provers + (questions,) * provers) < density
    n = provers
    perms = list(itertools.permutations(range(n)))
    sym_pi = np.empty_like(pi)
    for idx in np.ndindex(pi.shape):
        sym_pi[idx] = sum((pi[tuple(idx[p] for p in s)] for s in perms), Fraction(0)) / len(perms)
    sym_pred = np.zeros_like(pred)
    for s in perms:
        sym_pred |= np.transpose(pred, list(s) + [n + p for p in s])
    if force is not None:
        for qs in itertools.product(range(questions), repeat=n):
            sym_pred[tuple(force[q] for q in qs) + qs] = True
    return GameSpec(n, questions, answers, sym_pi, sym_pred)


def random_strategy(provers, questions, answers, dims, rng):
    if isinstance(dims, int):
        dims = (dims,) * provers
    meas = [np.array([la.random_pvm(d, answers, rng) for _ in range(questions)]) for d in dims]
    return EntangledStrategy(dims, la.random_state(math.prod(dims), rng), meas)


def symmetric_state(d, k, rng, base=None):
    """Random (or given) state projected onto the permutation-symmetric subspace."""
    psi = la.random_state(d ** k, rng) if base is None else np.asarray(base, dtype=complex)
    t = psi.reshape((d,) * k)
    sym = sum(np.transpose(t, p) for p in itertools.permutations(range(k)))
    sym = sym.reshape(-1)
    norm = np.linalg.norm(sym)
    if norm < 1e-8:
        return symmetric_state(d, k, rng)
    return sym / norm


def symmetric_strategy(k, questions, answers, d, rng):
    fam = np.array([la.random_pvm(d, answers, rng) for _ in range(questions)])
    return EntangledStrategy((d,) * k, symmetric_state(d, k, rng), [fam] * k)


def near_classical_symmetric(k, answer_of, answers, scale, rng):
    """Symmetric ``d = 2`` strategy that answers ``answer_of[q]`` up to a rotation of size ``scale``.

    Basis vector 0 carries the honest answer and basis vector 1 another one;
    each question's basis is rotated by ``exp(i scale H_q)``, the state starts
    at ``|0..0>`` and is tilted by ``scale`` toward a random symmetric state.
    """
    d = 2
    questions = len(answer_of)
    fam = np.zeros((questions, answers, d, d), dtype=complex)
    for q, a in enumerate(answer_of):
        h = la.random_hermitian(d, rng)
        vals, vecs = np.linalg.eigh(h)
        u = (vecs * np.exp(1j * scale * vals)) @ vecs.conj().T
        other = (a + 1) % answers
        fam[q, a] = u @ np.diag([1, 0]) @ u.conj().T
        fam[q, other] = u @ np.diag([0, 1]) @ u.conj().T
    base = np.zeros(d ** k, dtype=complex)
    base[0] = 1
    tilt = symmetric_state(d, k, rng)
    state = symmetric_state(d, k, rng, base=base + scale * tilt)
    return EntangledStrategy((d,) * k, state, [fam] * k)


def random_multiround(r, questions, answers, rng, density=0.5):
    pi = random_pi((questions,) * r, rng)
    pred = rng.random((answers,) * r + (questions,) * r) < density
    return MultiRoundGameSpec(r, questions, answers, pi, pred)


def trivial_game(provers, questions, answers):
    """Game that accepts every answer tuple."""
    shape = (questions,) * provers
    pi = np.full(shape, Fraction(1, questions ** provers), dtype=object)
    pred = np.ones((answers,) * provers + shape, dtype=bool)
    return GameSpec(provers, questions, answers, pi, pred, name="all_accepting")


def near_deterministic(rows, answers, scale, rng, entangled=True):
    """Two-prover ``d = 2`` strategy answering ``rows[p][q]`` up to a rotation of size ``scale``.

    Like :func:`near_classical_symmetric` but with a separate answer table per
    prover; the state is ``|00>`` tilted by ``scale`` toward a random state.
    """
    d = 2
    meas = []
    for row in rows:
        fam = np.zeros((len(row), answers, d, d), dtype=complex)
        for q, a in enumerate(row):
            vals, vecs = np.linalg.eigh(la.random_hermitian(d, rng))
            u = (vecs * np.exp(1j * scale * vals)) @ vecs.conj().T
            fam[q, a] = u @ np.diag([1, 0]) @ u.conj().T
            fam[q, (a + 1) % answers] = u @ np.diag([0, 1]) @ u.conj().T
        meas.append(fam)
    state = np.zeros(d * d, dtype=complex)
    state[0] = 1
    if entangled:
        state = state + scale * la.random_state(d * d, rng)
    return EntangledStrategy((d, d), state / np.linalg.norm(state), meas)
