"""Explicit multi-prover games and their exact classical values.

A one-round game on ``N`` provers is a joint question distribution ``pi`` over
``[Q]^N`` (exact :class:`fractions.Fraction` entries) and a boolean predicate
``V[a_1..a_N, q_1..q_N]``. All provers share one question alphabet size and
one answer alphabet size; ragged games are padded with zero-probability
questions and always-rejecting answers.

Values are computed in integer arithmetic after scaling ``pi`` by the least
common denominator, so reported values are exact fractions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, PreconditionError, ValidationError

DEFAULT_BUDGET = 10**8


def _fraction_array(table) -> np.ndarray:
    arr = np.asarray(table, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        out[idx] = Fraction(x)
    return out


def integer_weights(pi: np.ndarray) -> tuple[np.ndarray, int]:
    """Scale a rational table to integers; returns ``(weights, denominator)``."""
    den = 1
    for x in pi.flat:
        den = math.lcm(den, Fraction(x).denominator)
    w = np.empty(pi.shape, dtype=object)
    for idx, x in np.ndenumerate(pi):
        w[idx] = int(Fraction(x) * den)
    if den < 2**62:
        w = w.astype(np.int64)
    return w, den


@dataclass(frozen=True, eq=False)
class GameSpec:
    """One-round game ``G(N, pi, V)`` with uniform alphabets."""

    provers: int
    questions: int
    answers: int
    pi: np.ndarray
    predicate: np.ndarray
    name: str = ""

    def __post_init__(self):
        n, q, a = self.provers, self.questions, self.answers
        if n < 1 or q < 1 or a < 1:
            raise ValidationError("provers, questions and answers must be positive")
        pi = _fraction_array(self.pi)
        if pi.shape != (q,) * n:
            raise ValidationError(f"pi has shape {pi.shape}, expected {(q,) * n}")
        if any(x < 0 for x in pi.flat):
            raise ValidationError("pi has negative entries")
        total = sum(pi.flat, Fraction(0))
        if total != 1:
            raise ValidationError(f"pi sums to {total}, expected exactly 1")
        pred = np.asarray(self.predicate, dtype=bool)
        if pred.shape != (a,) * n + (q,) * n:
            raise ValidationError(f"predicate has shape {pred.shape}, expected {(a,) * n + (q,) * n}")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "predicate", pred)

    def __eq__(self, other):
        if not isinstance(other, GameSpec):
            return NotImplemented
        return (
            (self.provers, self.questions, self.answers) == (other.provers, other.questions, other.answers)
            and bool(np.all(self.pi == other.pi))
            and bool(np.array_equal(self.predicate, other.predicate))
        )

    __hash__ = None

    @property
    def pi_float(self) -> np.ndarray:
        return self.pi.astype(float)

    def weights(self) -> tuple[np.ndarray, int]:
        return integer_weights(self.pi)

    def accepts(self, answers: Sequence[int], questions: Sequence[int]) -> bool:
        return bool(self.predicate[tuple(answers) + tuple(questions)])

    def marginal(self, prover: int = 0) -> np.ndarray:
        return marginal(self.pi, prover)

    @property
    def unsatisfiable(self) -> list[tuple[int, ...]]:
        """Question tuples asked with positive probability that no answer tuple wins."""
        n = self.provers
        sat = self.predicate.reshape(-1, *self.predicate.shape[n:]).any(axis=0)
        return [idx for idx, x in np.ndenumerate(self.pi) if x > 0 and not sat[idx]]

    def is_symmetric(self, k: int | None = None) -> bool:
        """True if ``pi`` and ``V`` are invariant under permuting the first ``k`` provers."""
        n = self.provers
        k = n if k is None else k
        if k > n:
            raise ValidationError(f"k={k} exceeds the number of provers {n}")
        for perm in itertools.permutations(range(k)):
            full = list(perm) + list(range(k, n))
            if not np.all(self.pi == np.transpose(self.pi, full)):
                return False
            axes = full + [n + p for p in full]
            if not np.array_equal(self.predicate, np.transpose(self.predicate, axes)):
                return False
        return True


@dataclass(frozen=True)
class DeterministicStrategy:
    """Per prover, the answer given to each question."""

    answers: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "answers", tuple(tuple(int(a) for a in row) for row in self.answers))

    @property
    def provers(self) -> int:
        return len(self.answers)

    def validate_for(self, g: GameSpec) -> None:
        if self.provers != g.provers:
            raise ValidationError(f"strategy has {self.provers} provers, game has {g.provers}")
        for p, row in enumerate(self.answers):
            if len(row) != g.questions:
                raise ValidationError(f"prover {p} answers {len(row)} questions, game has {g.questions}")
            if any(a < 0 or a >= g.answers for a in row):
                raise ValidationError(f"prover {p} uses an answer outside [0, {g.answers})")


@dataclass(frozen=True)
class GameValueReport:
    value: Fraction
    witness: object
    enumerated: int = 0


def marginal(pi: np.ndarray, prover: int = 0) -> np.ndarray:
    """Exact marginal distribution of one prover's question."""
    pi = _fraction_array(pi)
    axes = tuple(i for i in range(pi.ndim) if i != prover)
    out = np.empty(pi.shape[prover], dtype=object)
    moved = np.moveaxis(pi, prover, 0)
    for q in range(pi.shape[prover]):
        out[q] = sum(moved[q].flat, Fraction(0)) if axes else moved[q]
    return out


def replay(g: GameSpec, s: DeterministicStrategy) -> Fraction:
    """Exact winning probability of a deterministic strategy."""
    s.validate_for(g)
    total = Fraction(0)
    for qs, p in np.ndenumerate(g.pi):
        if p == 0:
            continue
        ans = tuple(s.answers[k][q] for k, q in enumerate(qs))
        if g.predicate[ans + qs]:
            total += p
    return total


def _useful_answers(g: GameSpec, w: np.ndarray) -> list[list[list[int]]]:
    """``useful[p][q]``: answers that win on at least one positively weighted tuple.

    Replacing any other answer by a useful one never lowers the value, so the
    search may skip them without losing exactness. Unasked questions get ``[0]``.
    """
    n, nq, na = g.provers, g.questions, g.answers
    pos = w > 0
    out = []
    for p in range(n):
        rows = []
        for q in range(nq):
            sel = [slice(None)] * n
            sel[p] = q
            mask = pos[tuple(sel)]
            if not mask.any():
                rows.append([0])
                continue
            pred = np.moveaxis(np.moveaxis(g.predicate, p, 0), n + p, n)
            pred = pred[(slice(None),) * n + (q,)]
            # pred axes: a_p, other answers..., other questions...
            flat = pred.reshape(na, -1, mask.size)[:, :, mask.reshape(-1)]
            good = [a for a in range(na) if flat[a].any()]
            rows.append(good or [0])
        out.append(rows)
    return out


def _strategy_space(useful_p: list[list[int]]) -> int:
    return math.prod(len(r) for r in useful_p)


def classical_value(g: GameSpec, budget: int = DEFAULT_BUDGET, chunk: int = 4096) -> GameValueReport:
    """Exact classical value of ``g`` with an optimal deterministic witness.

    All provers but the one with the largest strategy space are enumerated;
    that prover best-responds question by question. The enumeration count is
    the number of joint strategies of the enumerated provers, restricted to
    answers that can win at all; it is checked against ``budget`` first.
    """
    n, nq, na = g.provers, g.questions, g.answers
    w, den = g.weights()
    useful = _useful_answers(g, w)
    spaces = [_strategy_space(u) for u in useful]
    last = int(np.argmax(spaces))
    others = [p for p in range(n) if p != last]
    required = math.prod(spaces[p] for p in others)
    if required > budget:
        raise BudgetExceeded(required, budget)

    # Move the best-responding prover to the end.
    order = others + [last]
    w_t = np.transpose(w, order)
    v_t = np.transpose(g.predicate, order + [n + p for p in order])
    jq = nq ** (n - 1)
    w2 = np.asarray(w_t).reshape(jq, nq)
    live = np.flatnonzero((w2 > 0).any(axis=1))
    w2 = w2[live]
    # v2[alpha, a_last, j, q_last] with alpha the flattened answers of the others
    v2 = v_t.reshape(na ** (n - 1), na, jq, nq)[:, :, live, :]
    coef = np.where(v2, w2[None, None, :, :], 0)
    q_tuples = np.array(list(np.ndindex(*(nq,) * (n - 1))), dtype=np.int64).reshape(jq, n - 1)[live]

    # one mixed-radix digit per (enumerated prover, question), last fastest
    choices = [np.asarray(useful[p][q]) for p in others for q in range(nq)]
    radices = [len(c) for c in choices]
    n_dig = len(radices)
    chunk = max(1, min(chunk, 2_000_000 // max(1, len(live) * na * nq)))

    best_val = None
    for start in range(0, required, chunk):
        idx = np.arange(start, min(start + chunk, required), dtype=np.int64)
        ans = np.empty((len(idx), len(others), nq), dtype=np.int64)
        rem = idx.copy()
        # last digit varies fastest
        for pos in range(n_dig - 1, -1, -1):
            r = radices[pos]
            dig = rem % r
            rem //= r
            p_i, q_i = divmod(pos, nq)
            ans[:, p_i, q_i] = choices[pos][dig]
        # flattened answer tuple of the others on each live question tuple
        alpha = np.zeros((len(idx), len(live)), dtype=np.int64)
        for k in range(n - 1):
            alpha = alpha * na + ans[:, k, q_tuples[:, k]]
        gathered = coef[alpha, :, np.arange(len(live))[None, :], :]  # (M, J, A, Q)
        resp = gathered.sum(axis=1)  # (M, A, Q)
        vals = resp.max(axis=1).sum(axis=1)
        k = int(np.argmax(vals))
        if best_val is None or vals[k] > best_val:
            best_val = vals[k]
            best_resp = resp[k]
            best_ans = ans[k]

    answers = [[0] * nq for _ in range(n)]
    for k, p in enumerate(others):
        answers[p] = [int(x) for x in best_ans[k]]
    answers[last] = [int(np.argmax(best_resp[:, q])) for q in range(nq)]
    witness = DeterministicStrategy(answers)
    value = Fraction(int(best_val), den)
    return GameValueReport(value=value, witness=witness, enumerated=required)


def symmetrize(g: GameSpec) -> GameSpec:
    """Two-prover symmetrization with a role bit; question ``role * Q + q``.

    The verifier draws ``(q, q')`` from ``pi`` and with probability 1/2 each
    sends ``(q, role 0)`` to prover 1 and ``(q', role 1)`` to prover 2, or the
    swapped pair, un-swapping the answers before applying ``V``.
    """
    if g.provers != 2:
        raise PreconditionError(f"symmetrize needs a two-prover game, got N={g.provers}")
    nq, na = g.questions, g.answers
    pi = np.empty((2 * nq, 2 * nq), dtype=object)
    pi[...] = Fraction(0)
    pred = np.zeros((na, na, 2 * nq, 2 * nq), dtype=bool)
    half = Fraction(1, 2)
    for (q, qp), p in np.ndenumerate(g.pi):
        x, y = q, nq + qp
        pi[x, y] += p * half
        pi[y, x] += p * half
        pred[:, :, x, y] = g.predicate[:, :, q, qp]
        pred[:, :, y, x] = g.predicate[:, :, q, qp].T
    return GameSpec(2, 2 * nq, na, pi, pred, name=f"sym({g.name})" if g.name else "")


def symmetrize_classical(s: DeterministicStrategy, questions: int) -> DeterministicStrategy:
    """Lift a strategy for ``g`` to ``symmetrize(g)``: play prover ``r``'s map on role ``r``."""
    if s.provers != 2:
        raise PreconditionError("symmetrize_classical needs a two-prover strategy")
    row = list(s.answers[0]) + list(s.answers[1])
    return DeterministicStrategy([row, row])


def remove_unasked(g: GameSpec) -> tuple[GameSpec, list[int]]:
    """Drop question labels that no prover is ever asked.

    Returns the reduced game and the kept original labels. Removal does not
    change any value.
    """
    asked = np.zeros(g.questions, dtype=bool)
    for p in range(g.provers):
        asked |= np.array([x > 0 for x in g.marginal(p)])
    keep = [int(q) for q in np.flatnonzero(asked)]
    ix = np.ix_(*([keep] * g.provers))
    pi = g.pi[ix]
    pred = g.predicate[np.ix_(*([list(range(g.answers))] * g.provers + [keep] * g.provers))]
    return GameSpec(g.provers, len(keep), g.answers, pi, pred, name=g.name), keep


def relabel(g: GameSpec, question_perm: Sequence[int], answer_perm: Sequence[int]) -> GameSpec:
    """Rename question ``q`` to ``question_perm[q]`` and answer ``a`` to ``answer_perm[a]`` for every prover."""
    n = g.provers
    qinv = np.argsort(question_perm)
    ainv = np.argsort(answer_perm)
    pi = g.pi[np.ix_(*([qinv] * n))]
    pred = g.predicate[np.ix_(*([ainv] * n + [qinv] * n))]
    return GameSpec(n, g.questions, g.answers, pi, pred, name=g.name)


# -- multi-round single-prover games ---------------------------------------

@dataclass(frozen=True, eq=False)
class MultiRoundGameSpec:
    """Non-adaptive single-prover ``r``-round game ``G(1, pi_r, V_r)``."""

    rounds: int
    questions: int
    answers: int
    pi: np.ndarray
    predicate: np.ndarray
    name: str = ""

    def __post_init__(self):
        r, q, a = self.rounds, self.questions, self.answers
        if r < 1 or q < 1 or a < 1:
            raise ValidationError("rounds, questions and answers must be positive")
        pi = _fraction_array(self.pi)
        if pi.shape != (q,) * r:
            raise ValidationError(f"pi_r has shape {pi.shape}, expected {(q,) * r}")
        if any(x < 0 for x in pi.flat) or sum(pi.flat, Fraction(0)) != 1:
            raise ValidationError("pi_r must be a probability distribution")
        pred = np.asarray(self.predicate, dtype=bool)
        if pred.shape != (a,) * r + (q,) * r:
            raise ValidationError(f"predicate_r has shape {pred.shape}, expected {(a,) * r + (q,) * r}")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "predicate", pred)

    def __eq__(self, other):
        if not isinstance(other, MultiRoundGameSpec):
            return NotImplemented
        return (
            (self.rounds, self.questions, self.answers) == (other.rounds, other.questions, other.answers)
            and bool(np.all(self.pi == other.pi))
            and bool(np.array_equal(self.predicate, other.predicate))
        )

    __hash__ = None

    def as_one_round(self) -> GameSpec:
        """The ``r = 1`` game viewed as a single-prover one-round game."""
        if self.rounds != 1:
            raise PreconditionError("only a one-round game collapses to a GameSpec")
        return GameSpec(1, self.questions, self.answers, self.pi, self.predicate, name=self.name)


@dataclass(frozen=True)
class MultiRoundStrategy:
    """Adaptive deterministic prover.

    ``policy[k]`` has shape ``(A,)*k + (Q,)*(k+1)`` and gives the round-``k+1``
    answer from the earlier answers and the questions so far.
    """

    policy: tuple

    def answer_sequence(self, qs: Sequence[int]) -> tuple[int, ...]:
        out: list[int] = []
        for k in range(len(qs)):
            out.append(int(self.policy[k][tuple(out) + tuple(qs[: k + 1])]))
        return tuple(out)


def multiround_replay(m: MultiRoundGameSpec, s: MultiRoundStrategy) -> Fraction:
    total = Fraction(0)
    for qs, p in np.ndenumerate(m.pi):
        if p and m.predicate[s.answer_sequence(qs) + qs]:
            total += p
    return total


def multiround_value(m: MultiRoundGameSpec, budget: int = DEFAULT_BUDGET) -> GameValueReport:
    """Exact optimum over adaptive deterministic provers by backward induction.

    ``opt(q<=k, a<k) = max_{a_k} sum_{q_{k+1}} opt(q<=k+1, a<=k)`` with the
    unnormalized weights ``pi_r`` at the leaves.
    """
    r, nq, na = m.rounds, m.questions, m.answers
    tree = sum(nq ** k * na ** k for k in range(1, r + 1))
    if tree > budget:
        raise BudgetExceeded(tree, budget, "history nodes")
    w, den = integer_weights(m.pi)
    # arr axes: a_1..a_k, q_1..q_k (current depth k)
    arr = np.where(m.predicate, np.asarray(w)[(None,) * r], 0)
    policy = [None] * r
    for k in range(r, 0, -1):
        a_axis = k - 1
        policy[k - 1] = np.argmax(arr, axis=a_axis)
        arr = np.max(arr, axis=a_axis)
        if k > 1:
            arr = np.sum(arr, axis=arr.ndim - 1)
    best = int(np.sum(arr))
    strat = MultiRoundStrategy(tuple(np.asarray(p, dtype=np.int64) for p in policy))
    return GameValueReport(value=Fraction(best, den), witness=strat, enumerated=tree)
