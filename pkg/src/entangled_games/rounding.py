"""Rounding entangled strategies to classical ones, with checked bounds.

The two-prover rounding measures the first prover's share of the state with
every question in turn (most likely question first) and records the answer
list. The classical provers sample one list with shared randomness and read
off their answers. Each bound the analysis relies on is evaluated on both
sides and reported as a :class:`BoundCertificate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import BudgetExceeded, PreconditionError, ValidationError
from .immunize import (
    MultiRoundTransformEval,
    OneRoundTransform,
    SwapGameEval,
    ThreeProverEval,
    ThreeProverGame,
    _as_game,
    _pair_vectors,
    _require_symmetric_strategy,
    eval_multiround_transform,
    eval_swap_game,
    eval_three_prover,
)
from .strategies import EntangledStrategy, outcome_distribution

CERT_SLACK = 1e-8
TABLE_CAP = 1 << 22
PRUNE = 1e-24


@dataclass(frozen=True)
class BoundCertificate:
    lemma: str
    epsilon: float
    lhs: float
    rhs: float
    seed: int | None = None
    index: tuple | None = None

    @property
    def holds(self) -> bool:
        return bool(self.lhs <= self.rhs + CERT_SLACK)


def _epsilon(acceptance: float) -> float:
    return max(0.0, 1.0 - float(acceptance))


def question_order(pi) -> tuple[int, ...]:
    """Questions by non-increasing marginal probability, ties by ascending index."""
    pi = np.asarray(pi, dtype=float)
    m = pi.sum(axis=tuple(range(1, pi.ndim))) if pi.ndim > 1 else pi
    return tuple(sorted(range(len(m)), key=lambda q: (-m[q], q)))


@dataclass(frozen=True)
class SequentialDistribution:
    """Answer lists with positive probability, over questions in ``order``.

    ``lists[m]`` holds one answer per question in ``order`` (two lists side by
    side when bilateral) and ``probs[m]`` its probability. Branches with
    probability below ``PRUNE`` are dropped while the lists are built.
    """

    order: tuple[int, ...]
    lists: np.ndarray
    probs: np.ndarray
    answers: int
    bilateral: bool = False

    def total(self) -> float:
        return float(self.probs.sum())

    def check_normalized(self, atol: float = 1e-8) -> None:
        if abs(self.total() - 1.0) > atol or self.probs.min(initial=0.0) < -1e-12:
            raise ValidationError(f"sequential distribution sums to {self.total()}")

    @property
    def table(self) -> np.ndarray:
        """Dense ``D[a_1..a_n]`` (``[a_1..a_n, a'_1..a'_n]`` when bilateral)."""
        width = self.lists.shape[1]
        if self.answers ** width > TABLE_CAP:
            raise BudgetExceeded(self.answers ** width, TABLE_CAP, "dense answer-list entries")
        out = np.zeros((self.answers,) * width)
        np.add.at(out, tuple(self.lists.T), self.probs)
        return out

    def pair_table(self) -> np.ndarray:
        """``p_class[a, a', q, q']``: marginal of the lists at the positions of ``q`` and ``q'``."""
        n = len(self.order)
        na = self.answers
        pos = {q: i for i, q in enumerate(self.order)}
        shift = n if self.bilateral else 0
        out = np.zeros((na, na, n, n))
        for q in range(n):
            for qp in range(n):
                np.add.at(out[:, :, q, qp], (self.lists[:, pos[q]], self.lists[:, shift + pos[qp]]), self.probs)
        return out


def _measure_lists(fam: np.ndarray, order, v: np.ndarray, labels: np.ndarray, cap: int):
    """Measure the middle factor of ``v[m, d, e]`` with ``fam[q]`` for each ``q`` in turn.

    Returns the surviving unnormalized branch vectors and their answer labels.
    """
    na = fam.shape[1]
    for q in order:
        nxt = np.einsum("aij,mjk->maik", fam[q], v)
        weight = np.sum(np.abs(nxt) ** 2, axis=(2, 3))
        live = np.argwhere(weight > PRUNE)
        if live.shape[0] * v[0].size > cap:
            raise BudgetExceeded(live.shape[0] * v[0].size, cap, "answer-list amplitudes")
        v = nxt[live[:, 0], live[:, 1]]
        labels = np.concatenate([labels[live[:, 0]], live[:, 1:2]], axis=1)
    return v, labels


def sequential_distribution(s: EntangledStrategy, pi, cap: int = TABLE_CAP) -> SequentialDistribution:
    """``D(a_1..a_n) = ||(W_{q_n}^{a_n} ... W_{q_1}^{a_1} ⊗ Id) Psi||²`` on the first prover."""
    if s.provers != 2:
        raise PreconditionError("sequential_distribution needs a two-prover strategy")
    order = question_order(pi)
    d0, d1 = s.dims
    v = s.state.reshape(1, d0, d1)
    v, labels = _measure_lists(s.measurements[0], order, v, np.zeros((1, 0), dtype=np.int64), cap)
    probs = np.sum(np.abs(v) ** 2, axis=(1, 2))
    return SequentialDistribution(order, labels, probs, s.answers)


def sequential_distribution_bilateral(s: EntangledStrategy, pi, cap: int = TABLE_CAP) -> SequentialDistribution:
    """Separate answer lists for provers 1 and 2 of a symmetric three-prover strategy."""
    if s.provers != 3:
        raise PreconditionError("the bilateral distribution needs a three-prover strategy")
    _require_symmetric_strategy(s, 3)
    order = question_order(pi)
    d0, d1, d2 = s.dims
    v = s.state.reshape(1, d0, d1 * d2)
    v, labels = _measure_lists(s.measurements[0], order, v, np.zeros((1, 0), dtype=np.int64), cap)
    # bring prover 2's factor to the middle: (m, d0, d1, d2) -> (m, d1, d0 d2)
    m = v.shape[0]
    v = v.reshape(m, d0, d1, d2).transpose(0, 2, 1, 3).reshape(m, d1, d0 * d2)
    v, labels = _measure_lists(s.measurements[1], order, v, labels, cap)
    probs = np.sum(np.abs(v) ** 2, axis=(1, 2))
    return SequentialDistribution(order, labels, probs, s.answers, bilateral=True)


def rounded_value(g, dist: SequentialDistribution) -> float:
    """Value of the shared-randomness strategy that answers from one sampled list."""
    g = _as_game(g)
    if g.provers != 2:
        raise PreconditionError("rounded_value needs a two-prover game")
    if len(dist.order) != g.questions or dist.answers != g.answers:
        raise ValidationError(
            f"distribution over {len(dist.order)} questions and {dist.answers} answers "
            f"does not fit a game with {g.questions} and {g.answers}"
        )
    p = dist.pair_table()
    won = np.sum(np.where(g.predicate, p, 0.0), axis=(0, 1))
    return float(np.sum(g.pi_float * won))


def statistical_distance(p_class: np.ndarray, p_q: np.ndarray, pi) -> float:
    """``sum_{q,q'} pi(q,q') sum_{a,a'} |p_class - p_q|`` for tables ``[a, a', q, q']``."""
    p_class = np.asarray(p_class, dtype=float)
    p_q = np.asarray(p_q, dtype=float)
    if p_class.shape != p_q.shape:
        raise ValidationError(f"table shapes differ: {p_class.shape} vs {p_q.shape}")
    pi = np.asarray(pi, dtype=float)
    return float(np.sum(pi * np.sum(np.abs(p_class - p_q), axis=(0, 1))))


# -- SWAP-test game certificates ---------------------------------------------

def commutation_sums(s: EntangledStrategy, pi) -> tuple[float, float]:
    """Left-hand sides of the two commutation bounds for a symmetric strategy.

    First: ``sum_{q,q'} pi(q) pi(q') sum_{a,a'} ||(W_q^a ⊗ W_{q'}^{a'} - W_{q'}^{a'} ⊗ W_q^a) Psi||²``.
    Second: ``sum_q pi(q) sum_a ||(W_q^a ⊗ Id - Id ⊗ W_q^a) Psi||²``.
    """
    pi = np.asarray(pi, dtype=float)
    m = pi.sum(axis=1)
    t = _pair_vectors(s)
    diff = t - np.transpose(t, (2, 3, 0, 1, 4))
    first = float(np.sum(np.outer(m, m) * np.sum(np.abs(diff) ** 2, axis=(1, 3, 4))))
    d0, d1 = s.dims
    psi = s.state.reshape(d0, d1)
    w = s.measurements[0]
    left = np.einsum("qaij,jk->qaik", w, psi)
    right = np.einsum("qakl,jl->qajk", s.measurements[1], psi)
    second = float(np.sum(m * np.sum(np.abs(left - right) ** 2, axis=(1, 2, 3))))
    return first, second


def certify_swap(g, s: EntangledStrategy, ev: SwapGameEval | None = None, seed: int | None = None) -> list[BoundCertificate]:
    """Commutation bounds ``<= 24 eps`` and ``<= 216 eps`` and ``Delta <= 70 |Q| eps^(1/4)``."""
    g = _as_game(g)
    ev = eval_swap_game(g, s) if ev is None else ev
    eps = _epsilon(ev.total)
    first, second = commutation_sums(s, g.pi_float)
    dist = sequential_distribution(s, g.pi_float)
    p_q = outcome_distribution(s, g).table
    delta = statistical_distance(dist.pair_table(), p_q, g.pi_float)
    nq = g.questions
    return [
        BoundCertificate("swap-commute-1", eps, first, 24.0 * eps, seed),
        BoundCertificate("swap-commute-2", eps, second, 9.0 * 24.0 * eps, seed),
        BoundCertificate("swap-delta", eps, delta, 70.0 * nq * eps ** 0.25, seed),
    ]


# -- three-prover certificates ----------------------------------------------

def _measure_channel(rho: np.ndarray, fam_q: np.ndarray, dims, side: int) -> np.ndarray:
    """``sum_a (W^a on factor side) rho (W^a on factor side)``."""
    out = np.zeros_like(rho)
    ident = [np.eye(d) for d in dims]
    for w in fam_q:
        ops = list(ident)
        ops[side] = w
        big = la.tensor_all(*ops)
        out += big @ rho @ la.dagger(big)
    return out


def certify_three_prover(g3: ThreeProverGame, s: EntangledStrategy, ev: ThreeProverEval | None = None,
                         seed: int | None = None, max_pairs: int = 64) -> list[BoundCertificate]:
    """Per-question disturbance, hybrid bound over measurement prefixes, and ``Delta <= 12 |Q| sqrt(eps)``."""
    ev = eval_three_prover(g3, s) if ev is None else ev
    base = g3.base
    eps = _epsilon(ev.acceptance)
    d0, d1, d2 = s.dims
    full = np.outer(s.state, s.state.conj())
    rho = la.partial_trace(full, s.dims, [0, 1])
    fam = s.measurements[0]
    certs = []
    root = np.sqrt(np.clip(1.0 - ev.pi2_of_q, 0.0, None))
    for q in range(base.questions):
        moved = _measure_channel(rho, fam[q], (d0, d1), 0)
        certs.append(BoundCertificate("gentle", eps, la.trace_norm(moved - rho), 6.0 * root[q], seed, (q,)))

    order = question_order(base.pi_float)
    n = len(order)
    # prefix states: measured[i] = W_{q_{i-1}} o ... o W_{q_1} on the first factor
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    if len(pairs) > max_pairs:
        rng = np.random.default_rng(seed)
        pairs = [pairs[k] for k in sorted(rng.choice(len(pairs), size=max_pairs, replace=False))]
    for i, j in pairs:
        r = rho
        for q in order[: i - 1]:
            r = _measure_channel(r, fam[q], (d0, d1), 0)
        for q in order[: j - 1]:
            r = _measure_channel(r, s.measurements[1][q], (d0, d1), 1)
        bound = 6.0 * sum(root[q] for q in order[: i - 1]) + 6.0 * sum(root[q] for q in order[: j - 1])
        certs.append(BoundCertificate("hybrid", eps, la.trace_norm(r - rho), bound, seed, (i, j)))

    dist = sequential_distribution_bilateral(s, base.pi_float)
    p = outcome_distribution(s, g3.game).table[:, :, :, :, :, 0].sum(axis=2)
    delta = statistical_distance(dist.pair_table(), p, base.pi_float)
    certs.append(BoundCertificate("three-prover-delta", eps, delta, 12.0 * base.questions * math.sqrt(eps), seed))
    return certs


# -- multi-round rounding -----------------------------------------------------

@dataclass(frozen=True)
class MultiRoundRounding:
    """``p_class[a, q]`` over flattened answer and question tuples; the rest of each column aborts."""

    p_class: np.ndarray
    abort: np.ndarray
    value: float


def _bob_chain(t: OneRoundTransform, s: EntangledStrategy, qs) -> np.ndarray:
    """Vectors ``(Id ⊗ W_{q<=r}^{a<=r} ... W_{q<=1}^{a<=1}) Psi`` for every ``a<=r``; shape ``(A^r, d0, d1)``."""
    m = t.source
    na = m.answers
    d0, d1 = s.dims
    bob = s.measurements[1]
    v = s.state.reshape(1, d0, d1)
    for k in range(1, m.rounds + 1):
        y = t.bob_question(qs, k)
        prefixes = v.shape[0]
        nxt = np.empty((prefixes * na, d0, d1), dtype=complex)
        for pre in range(prefixes):
            for a in range(na):
                label = pre * na + a
                nxt[label] = v[pre] @ bob[y, label].T
        v = nxt
    return v


def round_multiround(t: OneRoundTransform, s: EntangledStrategy) -> MultiRoundRounding:
    """Single-prover strategy that replays the second prover's prefix measurements.

    In round ``k`` the prover measures with the question ``(k, q<=k)`` and keeps
    the outcome only if it extends the answers already given; otherwise it
    aborts and loses.
    """
    if not isinstance(t, OneRoundTransform):
        raise ValidationError("round_multiround expects the output of build_oneround_from_multiround")
    s.check_compatible(t.game)
    m = t.source
    r, nq, na = m.rounds, m.questions, m.answers
    p_class = np.zeros((na ** r, nq ** r))
    abort = np.zeros(nq ** r)
    value = 0.0
    for qs, w in np.ndenumerate(m.pi):
        col = t.alice_question(qs)
        v = _bob_chain(t, s, qs)
        probs = np.sum(np.abs(v) ** 2, axis=(1, 2))
        p_class[:, col] = probs
        abort[col] = 1.0 - probs.sum()
        value += float(w) * float(probs[m.predicate[(Ellipsis,) + qs].reshape(-1)].sum())
    return MultiRoundRounding(p_class, abort, value)


def _pure_diff_norm(x: np.ndarray, y: np.ndarray) -> float:
    """``|| |x><x| - |y><y| ||_1`` for unnormalized vectors.

    The difference has rank two with eigenvalues whose absolute sum is
    ``sqrt((|x|² - |y|²)² + 4 G)``, ``G = |x|²|y|² - |<x,y>|²`` the Gram
    determinant, evaluated as a sum of squares to avoid cancellation.
    """
    x = x.reshape(-1)
    y = y.reshape(-1)
    nx, ny = np.vdot(x, x).real, np.vdot(y, y).real
    wedge = np.outer(x, y) - np.outer(y, x)
    gram = 0.5 * float(np.vdot(wedge, wedge).real)
    return float(math.sqrt((nx - ny) ** 2 + 4.0 * gram))


def certify_multiround(t: OneRoundTransform, s: EntangledStrategy, ev: MultiRoundTransformEval | None = None,
                       seed: int | None = None) -> list[BoundCertificate]:
    """The three prefix-disturbance bounds for every ``k`` and ``Delta <= 7 r sqrt(eps)``.

    With ``V~_k`` the first prover's projector onto answers extending ``a<=k``
    and ``W_k`` the second prover's projector for ``(k, q<=k)`` and ``a<=k``:

    * ``E_q sum ||(Id ⊗ W_k)(rho) - (V~_k ⊗ W_k)(rho)||_1 <= 3 sqrt(1 - pi2(k))``
    * ``E_q sum ||(V~_k ⊗ Id)(rho) - (V~_k ⊗ W_k)(rho)||_1 <= 3 sqrt(1 - pi2(k))``
    * ``E_q sum ||(V~_{k-1} ⊗ W_k)(rho) - (V~_k ⊗ W_k)(rho)||_1 <= 1 - pi2(k)``

    The third bound assumes ``(V~_{k-1} ⊗ W_k)(rho) >= (V~_k ⊗ W_k)(rho)``,
    which fails when the two states are not diagonal together; it is checked
    as stated and can fail. Writing ``x = (V~_{k-1} ⊗ W_k) Psi = y + z`` with
    ``y = (V~_k ⊗ W_k) Psi``, each term equals ``|z| sqrt(4|y|² + |z|²)``, so
    Cauchy-Schwarz gives the valid bound ``2 sqrt(1 - pi2(k))``, reported as
    ``ipw-3-corrected``.
    """
    ev = eval_multiround_transform(t, s) if ev is None else ev
    m = t.source
    r, na = m.rounds, m.answers
    eps = _epsilon(ev.total)
    d0, d1 = s.dims
    psi = s.state.reshape(d0, d1)
    alice, bob = s.measurements
    lhs = np.zeros((3, r))
    delta = 0.0
    rounding = round_multiround(t, s)
    for qs, w in np.ndenumerate(m.pi):
        if w == 0:
            continue
        wf = float(w)
        x = t.alice_question(qs)
        full = alice[x]  # (A^r, d0, d0)
        for k in range(1, r + 1):
            y = t.bob_question(qs, k)
            v_k = full.reshape(na ** k, na ** (r - k), d0, d0).sum(axis=1)
            v_prev = full.reshape(na ** (k - 1), na ** (r - k + 1), d0, d0).sum(axis=1)
            for pre in range(na ** k):
                wb = bob[y, pre]
                bpsi = psi @ wb.T
                vb = v_k[pre] @ bpsi
                lhs[0, k - 1] += wf * _pure_diff_norm(bpsi, vb)
                lhs[1, k - 1] += wf * _pure_diff_norm(v_k[pre] @ psi, vb)
                lhs[2, k - 1] += wf * _pure_diff_norm(v_prev[pre // na] @ bpsi, vb)
        # p_q(a|q, r): Alice answers a and Bob, asked the full tuple, answers a too
        y = t.bob_question(qs, r)
        pq = np.array([np.sum(np.abs(full[a] @ psi @ bob[y, a].T) ** 2) for a in range(na ** r)])
        delta += wf * float(np.sum(np.abs(rounding.p_class[:, x] - pq)))
    certs = []
    gap = np.clip(1.0 - ev.pi2_of_k, 0.0, None)
    for k in range(r):
        certs.append(BoundCertificate("ipw-1", eps, lhs[0, k], 3.0 * math.sqrt(gap[k]), seed, (k + 1,)))
        certs.append(BoundCertificate("ipw-2", eps, lhs[1, k], 3.0 * math.sqrt(gap[k]), seed, (k + 1,)))
        certs.append(BoundCertificate("ipw-3", eps, lhs[2, k], gap[k], seed, (k + 1,)))
        certs.append(BoundCertificate("ipw-3-corrected", eps, lhs[2, k], 2.0 * math.sqrt(gap[k]), seed, (k + 1,)))
    certs.append(BoundCertificate("multiround-delta", eps, delta, 7.0 * r * math.sqrt(eps), seed))
    return certs
