"""Entanglement-resistant game transforms and their evaluation.

* SWAP-test game: with probability 1/2 the verifier plays the original game,
  otherwise it sends questions in a swap-symmetric superposition and runs a
  controlled-SWAP test on the returned question and answer registers.
* Three-prover game: a third prover must echo the second prover's answer.
* One-round game from an ``r``-round single-prover game: one prover gets all
  questions, the other a random prefix, and their answers must agree on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, PreconditionError, ValidationError
from .games import GameSpec, MultiRoundGameSpec, marginal
from .strategies import EntangledStrategy, outcome_distribution

SYMMETRY_ATOL = 1e-8
CIRCUIT_DIM_CAP = 1 << 22


def _require_symmetric_game(g: GameSpec) -> None:
    if g.provers != 2:
        raise PreconditionError(f"expected a two-prover game, got N={g.provers}")
    if not g.is_symmetric():
        raise PreconditionError(
            "game is not symmetric under exchanging the provers; "
            "apply games.symmetrize() first (role-bit symmetrization)"
        )


def _require_symmetric_strategy(s: EntangledStrategy, k: int) -> None:
    if not s.is_symmetric(k, atol=SYMMETRY_ATOL):
        raise PreconditionError(
            "strategy is not symmetric (identical families and a permutation-invariant state are "
            "required); apply strategies.symmetrize_strategy() first"
        )


# -- SWAP-test game ---------------------------------------------------------

@dataclass(frozen=True)
class SwapGame:
    """Descriptor of the SWAP-test game built on a symmetric two-prover game."""

    game: GameSpec
    pi_classical: np.ndarray  # pi(q, q'), used by the classical test
    pi_quantum: np.ndarray  # pi(q) pi(q'), used by the quantum test

    @property
    def questions(self) -> int:
        return self.game.questions


@dataclass(frozen=True)
class SwapGameEval:
    classical_test_prob: float
    quantum_test_prob: float

    @property
    def total(self) -> float:
        return 0.5 * (self.classical_test_prob + self.quantum_test_prob)


def build_swap_game(g: GameSpec) -> SwapGame:
    _require_symmetric_game(g)
    m = marginal(g.pi, 0)
    zero = [q for q in range(g.questions) if m[q] == 0]
    if zero:
        raise PreconditionError(
            f"questions {zero} have zero marginal probability; remove them first (games.remove_unasked)"
        )
    prod = np.empty((g.questions, g.questions), dtype=object)
    for q in range(g.questions):
        for qp in range(g.questions):
            prod[q, qp] = m[q] * m[qp]
    return SwapGame(g, g.pi.copy(), prod)


def _as_game(g) -> GameSpec:
    return g.game if isinstance(g, (SwapGame, ThreeProverGame, OneRoundTransform)) else g


def _pair_vectors(s: EntangledStrategy) -> np.ndarray:
    """``T[q, a, q', a'] = (W_q^a ⊗ W_{q'}^{a'}) Psi`` as vectors of length ``d^2``."""
    d0, d1 = s.dims
    psi = s.state.reshape(d0, d1)
    w0, w1 = s.measurements
    t = np.einsum("qaij,xbkl,jl->qaxbik", w0, w1, psi, optimize=True)
    return t.reshape(t.shape[:4] + (d0 * d1,))


def eval_swap_game(g, s: EntangledStrategy) -> SwapGameEval:
    """Closed-form acceptance probabilities of a symmetric strategy in the SWAP-test game."""
    g = _as_game(g)
    s.check_compatible(g)
    _require_symmetric_strategy(s, 2)
    pi = g.pi_float
    m = pi.sum(axis=1)
    p = outcome_distribution(s, g).table
    ctp = float(np.sum(pi * np.sum(np.where(g.predicate, p, 0.0), axis=(0, 1))))
    t = _pair_vectors(s)
    diff = t - np.transpose(t, (2, 3, 0, 1, 4))
    norms = np.sum(np.abs(diff) ** 2, axis=(1, 3, 4))  # (q, q')
    qtp = 1.0 - 0.25 * float(np.sum(np.outer(m, m) * norms))
    return SwapGameEval(ctp, qtp)


def circuit_oracle_swap(g, s: EntangledStrategy, dim_cap: int = CIRCUIT_DIM_CAP) -> SwapGameEval:
    """Gate-level replay of both tests; no symmetry assumption on ``s``.

    Registers: control qubit, prover-1 question and answer, prover-2 question
    and answer, prover-1 private space, prover-2 private space. Each prover
    applies ``U = sum_q |q><q| ⊗ sum_a X^a ⊗ W_q^a`` (``X`` the cyclic shift on
    the answer register), which maps ``|q, 0, phi>`` to ``|q> sum_a |a> W_q^a phi``.
    The quantum test then swaps the prover registers when the control is 1,
    applies a Hadamard to the control and accepts on control 0 with the
    question registers reading ``(q, q')``.
    """
    g = _as_game(g)
    s.check_compatible(g)
    if s.provers != 2:
        raise PreconditionError("the SWAP-test circuit needs a two-prover strategy")
    nq, na = g.questions, g.answers
    d0, d1 = s.dims
    dim = 2 * nq * na * nq * na * d0 * d1
    if dim > dim_cap:
        raise BudgetExceeded(dim, dim_cap, "circuit amplitudes")
    pi = g.pi_float
    m = pi.sum(axis=1)
    psi = s.state.reshape(d0, d1)
    w0, w1 = s.measurements

    def prover_unitary(t: np.ndarray, w: np.ndarray, q_axis: int, a_axis: int, p_axis: int) -> np.ndarray:
        out = np.zeros_like(t)
        for x in range(nq):
            sl = [slice(None)] * t.ndim
            sl[q_axis] = x
            block = t[tuple(sl)]
            # axis numbers shift down by one after fixing the question index
            aa = a_axis - (1 if a_axis > q_axis else 0)
            pa = p_axis - (1 if p_axis > q_axis else 0)
            acc = np.zeros_like(block)
            for a in range(na):
                moved = np.moveaxis(np.tensordot(w[x, a], block, axes=([1], [pa])), 0, pa)
                acc += np.roll(moved, a, axis=aa)
            out[tuple(sl)] = acc
        return out

    ctp = 0.0
    qtp = 0.0
    for q in range(nq):
        for qp in range(nq):
            # classical test: measure the computational-basis answers
            if pi[q, qp] > 0:
                t = np.zeros((nq, na, nq, na, d0, d1), dtype=complex)
                t[q, 0, qp, 0] = psi
                t = prover_unitary(t, w0, 0, 1, 4)
                t = prover_unitary(t, w1, 2, 3, 5)
                probs = np.sum(np.abs(t[q, :, qp, :]) ** 2, axis=(2, 3))
                ctp += pi[q, qp] * float(np.sum(probs[g.predicate[:, :, q, qp]]))
            weight = m[q] * m[qp]
            if weight == 0:
                continue
            t = np.zeros((2, nq, na, nq, na, d0, d1), dtype=complex)
            t[0, q, 0, qp, 0] = psi / math.sqrt(2)
            t[1, qp, 0, q, 0] = psi / math.sqrt(2)
            t = prover_unitary(t, w0, 1, 2, 5)
            t = prover_unitary(t, w1, 3, 4, 6)
            t[1] = np.transpose(t[1], (2, 3, 0, 1, 4, 5)).copy()
            plus = (t[0] + t[1]) / math.sqrt(2)
            qtp += weight * float(np.sum(np.abs(plus[q, :, qp, :]) ** 2))
    return SwapGameEval(ctp, qtp)


# -- three-prover game ------------------------------------------------------

@dataclass(frozen=True)
class ThreeProverGame:
    """Folded three-prover game plus the symmetric base game it came from."""

    game: GameSpec
    base: GameSpec


@dataclass(frozen=True)
class ThreeProverEval:
    pi1: float
    pi2: float
    pi2_of_q: np.ndarray
    acceptance: float


def build_three_prover_game(g: GameSpec) -> ThreeProverGame:
    """Fold the verifier's choice of the answering prover into a 3-prover GameSpec.

    For ``(q, q') ~ pi`` and a uniformly chosen first prover ``A``, prover ``A``
    receives ``q`` and the other two receive ``q'``; the lower-indexed of them
    is checked with ``V`` against ``A`` and the higher-indexed must repeat its
    answer. An all-equal tuple ``(q, q, q)`` cannot reveal which prover was
    chosen, so it is checked with prover 0 in the first role; for strategies
    symmetric in all three provers every choice gives the same acceptance.
    """
    _require_symmetric_game(g)
    nq, na = g.questions, g.answers
    pi = np.empty((nq,) * 3, dtype=object)
    pi[...] = Fraction(0)
    pred = np.zeros((na,) * 3 + (nq,) * 3, dtype=bool)
    third = Fraction(1, 3)
    agree = np.zeros((na, na), dtype=bool)
    np.fill_diagonal(agree, True)
    for (q, qp), p in np.ndenumerate(g.pi):
        if p == 0:
            continue
        for alice in range(3):
            qs = [qp] * 3
            qs[alice] = q
            pi[tuple(qs)] += p * third
            if q == qp and alice != 0:
                continue
            bob, cleve = [x for x in range(3) if x != alice]
            # table over (a_alice, a_bob, a_cleve)
            local = g.predicate[:, :, q, qp][:, :, None] & agree[None, :, :]
            pred[(Ellipsis,) + tuple(qs)] = np.transpose(local, np.argsort([alice, bob, cleve]))
    return ThreeProverGame(GameSpec(3, nq, na, pi, pred, name=f"three_prover({g.name})" if g.name else ""), g)


def eval_three_prover(g3: ThreeProverGame, s: EntangledStrategy) -> ThreeProverEval:
    """Classical-test and consistency probabilities of a fully symmetric 3-prover strategy."""
    if not isinstance(g3, ThreeProverGame):
        raise ValidationError("eval_three_prover expects the output of build_three_prover_game")
    base, game = g3.base, g3.game
    s.check_compatible(game)
    _require_symmetric_strategy(s, 3)
    p = outcome_distribution(s, game).table  # (a0, a1, a2, q0, q1, q2)
    na = game.answers
    pi = base.pi_float
    # provers 0, 1 answer (q, q'); prover 2's question is irrelevant after marginalizing
    p01 = p[:, :, :, :, :, 0].sum(axis=2)  # (a, a', q, q')
    pi1 = float(np.sum(pi * np.sum(np.where(base.predicate, p01, 0.0), axis=(0, 1))))
    idx = np.arange(na)
    nq = base.questions
    pi2_of_q = np.array([float(np.sum(p01[idx, idx, q, q])) for q in range(nq)])
    m = pi.sum(axis=1)
    pi2 = float(np.sum(m * pi2_of_q))
    won = np.sum(np.where(game.predicate, p, 0.0), axis=(0, 1, 2))
    acceptance = float(np.sum(game.pi_float * won))
    return ThreeProverEval(pi1, pi2, pi2_of_q, acceptance)


# -- multi-round to one-round ----------------------------------------------

@dataclass(frozen=True)
class OneRoundTransform:
    """Two-prover game built from an ``r``-round game, with its index encoding.

    * Prover 1 ("Alice") question: ``flat(q_1..q_r)``, most significant first.
      Her answer is ``flat(a_1..a_r)``.
    * Prover 2 ("Bob") question for prefix length ``k``:
      ``offset(k) + flat(q_1..q_k)`` with ``offset(k) = sum_{j<k} Q^j`` over
      ``j >= 1``. His answer is ``flat(a_1..a_k) < A^k``; larger labels lose.
    """

    game: GameSpec
    source: MultiRoundGameSpec

    @property
    def rounds(self) -> int:
        return self.source.rounds

    def alice_question(self, qs) -> int:
        return _flat(qs, self.source.questions)

    def bob_question(self, qs, k: int) -> int:
        return _bob_index(qs, k, self.source.questions)

    def answer_index(self, ans) -> int:
        return _flat(ans, self.source.answers)

    def prefix_answer(self, alice_answer: int, k: int) -> int:
        """Flattened ``a_1..a_k`` of a flattened full answer."""
        return alice_answer // self.source.answers ** (self.rounds - k)


def _flat(digits, base: int) -> int:
    out = 0
    for x in digits:
        out = out * base + int(x)
    return out


def _bob_index(qs, k: int, nq: int) -> int:
    return sum(nq ** j for j in range(1, k)) + _flat(qs[:k], nq)


def build_oneround_from_multiround(m: MultiRoundGameSpec, budget: int = 10**7) -> OneRoundTransform:
    r, nq, na = m.rounds, m.questions, m.answers
    nq2 = sum(nq ** j for j in range(1, r + 1))
    na2 = na ** r
    size = na2 * na2 * nq2 * nq2
    if size > budget:
        raise BudgetExceeded(size, budget, "predicate entries")
    pi = np.empty((nq2, nq2), dtype=object)
    pi[...] = Fraction(0)
    pred = np.zeros((na2, na2, nq2, nq2), dtype=bool)
    inv_r = Fraction(1, r)
    for qs, p in np.ndenumerate(m.pi):
        x = _flat(qs, nq)
        win = m.predicate[(Ellipsis,) + qs].reshape(-1)  # over flattened a_1..a_r
        for k in range(1, r + 1):
            y = _bob_index(qs, k, nq)
            pi[x, y] += p * inv_r
            shift = na ** (r - k)
            for a in range(na2):
                if win[a]:
                    pred[a, a // shift, x, y] = True
    game = GameSpec(2, nq2, na2, pi, pred, name=f"oneround({m.name})" if m.name else "")
    return OneRoundTransform(game, m)


@dataclass(frozen=True)
class MultiRoundTransformEval:
    pi1_of_k: np.ndarray
    pi2_of_k: np.ndarray
    joint_of_k: np.ndarray

    @property
    def total(self) -> float:
        return float(np.mean(self.joint_of_k))

    @property
    def pi2(self) -> float:
        return float(np.mean(self.pi2_of_k))


def eval_multiround_transform(t: OneRoundTransform, s: EntangledStrategy) -> MultiRoundTransformEval:
    """Per prefix length ``k``: classical test, consistency test and joint success.

    ``pi2(k) = E_q sum_a Tr(W~_q^a ⊗ W_{q<=k}^{a<=k} rho)`` and
    ``pi1(k) = E_q sum_a p(a|q, k) V(a|q)`` where ``p(a|q, k)`` is the
    probability that Alice answers ``a`` and Bob answers its prefix.
    """
    if not isinstance(t, OneRoundTransform):
        raise ValidationError("eval_multiround_transform expects the output of build_oneround_from_multiround")
    game, m = t.game, t.source
    s.check_compatible(game)
    r = m.rounds
    p = outcome_distribution(s, game).table  # (a, b, x, y)
    na2 = game.answers
    pi1 = np.zeros(r)
    pi2 = np.zeros(r)
    joint = np.zeros(r)
    alist = np.arange(na2)
    for qs, w in np.ndenumerate(m.pi):
        if w == 0:
            continue
        wf = float(w)
        x = t.alice_question(qs)
        win = m.predicate[(Ellipsis,) + qs].reshape(-1)
        pa = p[:, :, x, :]
        for k in range(1, r + 1):
            y = t.bob_question(qs, k)
            consistent = pa[alist, t.prefix_answer(alist, k), y]
            pi2[k - 1] += wf * consistent.sum()
            pi1[k - 1] += wf * consistent[win].sum()
    joint[:] = pi1
    return MultiRoundTransformEval(pi1, pi2, joint)
