"""Entangled strategies: a shared pure state plus projective measurements.

Measurements are stored per prover as a stack of shape ``(Q, A, d, d)``;
``W[p][q, a]`` is prover ``p``'s projector for answer ``a`` on question ``q``.
The state is a vector over ``d_1 * ... * d_N`` with prover 1 as the most
significant tensor factor.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg as la
from .errors import PreconditionError, ValidationError
from .games import DeterministicStrategy, GameSpec, _useful_answers

NORM_ATOL = 1e-8


@dataclass(frozen=True, eq=False)
class EntangledStrategy:
    dims: tuple[int, ...]
    state: np.ndarray
    measurements: tuple[np.ndarray, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValidationError(f"invalid local dimensions {dims}")
        state = la.check_state(self.state)
        if state.shape[0] != math.prod(dims):
            raise ValidationError(f"state has dimension {state.shape[0]}, dims {dims} need {math.prod(dims)}")
        meas = tuple(np.asarray(m, dtype=complex) for m in self.measurements)
        if len(meas) != len(dims):
            raise ValidationError(f"{len(meas)} measurement families for {len(dims)} provers")
        shape = meas[0].shape[:2]
        for p, (m, d) in enumerate(zip(meas, dims)):
            if m.ndim != 4 or m.shape[2:] != (d, d):
                raise ValidationError(f"prover {p} measurements have shape {m.shape}, expected (Q, A, {d}, {d})")
            if m.shape[:2] != shape:
                raise ValidationError("all provers must share the question and answer alphabets")
            for q in range(m.shape[0]):
                la.check_pvm(m[q], name=f"prover {p} question {q}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "measurements", meas)

    @property
    def provers(self) -> int:
        return len(self.dims)

    @property
    def questions(self) -> int:
        return self.measurements[0].shape[0]

    @property
    def answers(self) -> int:
        return self.measurements[0].shape[1]

    def check_compatible(self, g: GameSpec) -> None:
        if (self.provers, self.questions, self.answers) != (g.provers, g.questions, g.answers):
            raise ValidationError(
                f"strategy has (N, Q, A) = {(self.provers, self.questions, self.answers)}, "
                f"game has {(g.provers, g.questions, g.answers)}"
            )

    def is_symmetric(self, k: int | None = None, atol: float = NORM_ATOL) -> bool:
        """Identical families on provers ``0..k-1`` and a state invariant under permuting them."""
        k = self.provers if k is None else k
        if len(set(self.dims[:k])) > 1:
            return False
        m0 = self.measurements[0]
        if any(np.max(np.abs(self.measurements[p] - m0)) > atol for p in range(1, k)):
            return False
        t = self.state.reshape(self.dims)
        for perm in itertools.permutations(range(k)):
            axes = list(perm) + list(range(k, self.provers))
            if np.max(np.abs(np.transpose(t, axes) - t)) > atol:
                return False
        return True


@dataclass(frozen=True)
class OutcomeDistribution:
    """``table[a_1..a_N, q_1..q_N] = p(a | q)``."""

    table: np.ndarray

    @property
    def provers(self) -> int:
        return self.table.ndim // 2

    def row_sums(self) -> np.ndarray:
        n = self.provers
        return self.table.sum(axis=tuple(range(n)))

    def check_normalized(self, atol: float = NORM_ATOL) -> None:
        dev = np.max(np.abs(self.row_sums() - 1.0))
        if dev > atol:
            raise ValidationError(f"outcome distribution rows deviate from 1 by {dev}")


def outcome_distribution(s: EntangledStrategy, g: GameSpec | None = None) -> OutcomeDistribution:
    """``p(a|q) = ||(W_{q_1}^{a_1} ⊗ ... ⊗ W_{q_N}^{a_N}) Psi||²`` for every question tuple."""
    if g is not None:
        s.check_compatible(g)
    n, nq, na = s.provers, s.questions, s.answers
    psi = s.state.reshape(s.dims)
    out = np.empty((na,) * n + (nq,) * n)
    # label axes accumulate in front: (q_{N-1}, a_{N-1}, ..., q_1, a_1, a_0)
    perm = [2 * (n - 1)] + [2 * (n - 1 - p) + 1 for p in range(1, n)] + [2 * (n - 1 - p) for p in range(1, n)]
    for q0 in range(nq):
        x = np.tensordot(s.measurements[0][q0], psi, axes=([2], [0]))
        labels = 1
        for p in range(1, n):
            x = np.tensordot(s.measurements[p], x, axes=([3], [labels + p]))
            x = np.moveaxis(x, 2, labels + 2 + p)
            labels += 2
        probs = np.sum(np.abs(x) ** 2, axis=tuple(range(labels, labels + n)))
        out[(slice(None),) * n + (q0,)] = np.transpose(probs, perm)
    return OutcomeDistribution(out)


def entangled_value_of(s: EntangledStrategy, g: GameSpec) -> float:
    """``sum_q pi(q) sum_a p(a|q) V(a|q)``."""
    dist = outcome_distribution(s, g)
    n = g.provers
    won = np.sum(np.where(g.predicate, dist.table, 0.0), axis=tuple(range(n)))
    return float(np.sum(g.pi_float * won))


def embed_classical(s: DeterministicStrategy, answers: int) -> EntangledStrategy:
    """One-dimensional strategy that answers deterministically."""
    meas = []
    for row in s.answers:
        m = np.zeros((len(row), answers, 1, 1), dtype=complex)
        for q, a in enumerate(row):
            if not 0 <= a < answers:
                raise ValidationError(f"answer {a} outside [0, {answers})")
            m[q, a, 0, 0] = 1.0
        meas.append(m)
    return EntangledStrategy((1,) * s.provers, np.ones(1, dtype=complex), meas)


def _pad_family(m: np.ndarray, d: int) -> np.ndarray:
    """Extend a measurement stack to dimension ``d``; the new block goes to answer 0."""
    nq, na, d0, _ = m.shape
    if d0 == d:
        return m
    out = np.zeros((nq, na, d, d), dtype=complex)
    out[:, :, :d0, :d0] = m
    out[:, 0, d0:, d0:] = np.eye(d - d0)
    return out


def symmetrize_strategy(s: EntangledStrategy, k: int) -> EntangledStrategy:
    """Make provers ``0..k-1`` interchangeable by attaching a permutation register.

    The new state is ``(1/sqrt(k!)) sum_sigma |sigma(1)..sigma(k)> ⊗ Psi^sigma``
    where position ``i`` holds original subsystem ``sigma(i)``; a prover reading
    register value ``j`` measures with original prover ``j``'s family. Local
    dimensions are padded to their maximum before the register is attached.
    """
    n = s.provers
    if not 1 <= k <= n:
        raise PreconditionError(f"k={k} must lie in [1, {n}]")
    if k == 1:
        return s
    big = max(s.dims[:k])
    rest = list(s.dims[k:])
    psi = s.state.reshape(s.dims)
    pad = np.zeros((big,) * k + tuple(rest), dtype=complex)
    pad[tuple(slice(0, d) for d in s.dims[:k])] = psi
    perms = list(itertools.permutations(range(k)))
    new = np.zeros(tuple(x for _ in range(k) for x in (k, big)) + tuple(rest), dtype=complex)
    for sigma in perms:
        moved = np.transpose(pad, list(sigma) + list(range(k, n)))
        idx = []
        for i in range(k):
            idx += [sigma[i], slice(None)]
        new[tuple(idx)] = moved
    new /= math.sqrt(len(perms))
    fams = [_pad_family(s.measurements[j], big) for j in range(k)]
    nq, na = s.questions, s.answers
    shared = np.zeros((nq, na, k * big, k * big), dtype=complex)
    for j, f in enumerate(fams):
        shared[:, :, j * big:(j + 1) * big, j * big:(j + 1) * big] = f
    meas = [shared] * k + list(s.measurements[k:])
    dims = (k * big,) * k + tuple(rest)
    return EntangledStrategy(dims, new.reshape(-1), meas)


def lift_to_symmetrized(s: EntangledStrategy) -> EntangledStrategy:
    """Strategy for ``symmetrize(g)`` with the same value as ``s`` on ``g``.

    The provers share two copies of ``Psi``. Each holds the first half of one
    copy and the second half of the other; on role ``r`` a prover measures with
    original prover ``r``'s family on its half of the matching copy. Both
    provers then use the same family and the state is swap-symmetric.
    """
    if s.provers != 2:
        raise PreconditionError("lift_to_symmetrized needs a two-prover strategy")
    da, db = s.dims
    nq, na = s.questions, s.answers
    psi = s.state.reshape(da, db)
    # prover 1 local = (copy-1 A, copy-2 B); prover 2 local = (copy-2 A, copy-1 B)
    t = np.einsum("ij,kl->ilkj", psi, psi)  # (A1, B2, A2, B1)
    d = da * db
    fam = np.zeros((2 * nq, na, d, d), dtype=complex)
    ia, ib = np.eye(da), np.eye(db)
    for q in range(nq):
        for a in range(na):
            fam[q, a] = np.kron(s.measurements[0][q, a], ib)
            fam[nq + q, a] = np.kron(ia, s.measurements[1][q, a])
    return EntangledStrategy((d, d), t.reshape(-1), [fam, fam])


# -- see-saw ---------------------------------------------------------------

def _coefficients(g: GameSpec) -> np.ndarray:
    """``c[q_1, a_1, ..., q_N, a_N] = pi(q) V(a|q)`` as floats."""
    n = g.provers
    c = g.pi_float[(None,) * n] * g.predicate
    perm = []
    for p in range(n):
        perm += [n + p, p]
    return np.transpose(c, perm).copy()


def _others_operator(c: np.ndarray, meas: list, p: int) -> np.ndarray:
    """``K[q, a] = sum c(.) ⊗_{o != p} W_o`` on the other provers' joint space."""
    n = len(meas)
    others = [o for o in range(n) if o != p]
    perm = [2 * p, 2 * p + 1] + [x for o in others for x in (2 * o, 2 * o + 1)]
    cp = np.transpose(c, perm)
    if n == 2:
        return np.einsum("xyuv,uvij->xyij", cp, meas[others[0]], optimize=True)
    if n == 3:
        k = np.einsum("xyuvst,uvij,stkl->xyikjl", cp, meas[others[0]], meas[others[1]], optimize=True)
        sh = k.shape
        return k.reshape(sh[0], sh[1], sh[2] * sh[3], sh[4] * sh[5])
    raise PreconditionError(f"see-saw supports N in {{2, 3}}, got {n}")


def _effective(psi: np.ndarray, dims: Sequence[int], p: int, k: np.ndarray) -> np.ndarray:
    """``E[q, a] = Tr_{-p}[(Id ⊗ K[q, a]) |psi><psi|]`` for prover ``p``."""
    n = len(dims)
    t = np.moveaxis(psi.reshape(dims), p, 0).reshape(dims[p], -1)
    return np.einsum("ik,qalk,jl->qaij", t, k, t.conj(), optimize=True)


def _game_operator(c: np.ndarray, meas: list) -> np.ndarray:
    n = len(meas)
    if n == 2:
        op = np.einsum("xyuv,xyij,uvkl->ikjl", c, meas[0], meas[1], optimize=True)
    else:
        op = np.einsum("xyuvst,xyij,uvkl,stmn->ikmjln", c, meas[0], meas[1], meas[2], optimize=True)
    dim = int(round(math.sqrt(op.size)))
    op = op.reshape(dim, dim)
    return 0.5 * (op + la.dagger(op))


def _local_objective(w: np.ndarray, e: np.ndarray) -> float:
    return float(np.real(np.einsum("aij,aji->", w, e)))


def _improve_pvm(w: np.ndarray, e: np.ndarray, useful: list[int]) -> np.ndarray:
    """Raise ``sum_a Tr(W^a E^a)`` over PVMs without ever lowering it.

    Two answers: exact optimum (positive part of ``E^0 - E^1``). More answers:
    a basis-assignment proposal accepted only if it helps, then pairwise splits
    of ``range(W^a + W^b)`` along the positive part of ``E^a - E^b``.
    """
    na, d, _ = w.shape
    if len(useful) == 1:
        out = np.zeros_like(w)
        out[useful[0]] = np.eye(d)
        return out
    cur = w.copy()
    best = _local_objective(cur, e)
    # assignment proposal in the eigenbasis of the dominant effective operator
    dom = max(useful, key=lambda a: np.trace(e[a]).real)
    _, vecs = np.linalg.eigh(0.5 * (e[dom] + la.dagger(e[dom])))
    scores = np.real(np.einsum("ia,bij,ja->ab", vecs.conj(), e[useful], vecs))
    pick = np.argmax(scores, axis=1)
    prop = np.zeros_like(w)
    for col, b in enumerate(pick):
        v = vecs[:, col:col + 1]
        prop[useful[b]] += v @ la.dagger(v)
    val = _local_objective(prop, e)
    if val > best + 1e-13:
        cur, best = prop, val
    for a, b in itertools.combinations(useful, 2):
        s = cur[a] + cur[b]
        if np.real(np.trace(s)) < 0.5:
            continue
        ws, vs = np.linalg.eigh(s)
        basis = vs[:, ws > 0.5]
        h = la.dagger(basis) @ (e[a] - e[b]) @ basis
        hw, hv = np.linalg.eigh(0.5 * (h + la.dagger(h)))
        pos = basis @ hv[:, hw > 0]
        neg = basis @ hv[:, hw <= 0]
        new_a = pos @ la.dagger(pos)
        new_b = neg @ la.dagger(neg)
        gain = np.real(np.trace((new_a - cur[a]) @ e[a]) + np.trace((new_b - cur[b]) @ e[b]))
        if gain > 1e-13:
            cur = cur.copy()
            cur[a], cur[b] = new_a, new_b
    return cur


def _clean_projector(p: np.ndarray) -> np.ndarray:
    p = 0.5 * (p + la.dagger(p))
    return la.nearest_projector(p)


def _repair_family(w: np.ndarray) -> np.ndarray:
    """Re-orthogonalize a numerically drifting PVM; leftover space goes to the largest block."""
    na, d, _ = w.shape
    out = np.array([_clean_projector(x) for x in w])
    rest = np.eye(d) - out.sum(axis=0)
    if np.max(np.abs(rest)) > 1e-10 or not la.is_projector(out.sum(axis=0)):
        # fall back to an eigen-assignment of sum_a a-weighted marks
        h = sum(a * x for a, x in enumerate(w))
        vals, vecs = np.linalg.eigh(0.5 * (h + la.dagger(h)))
        out = np.zeros_like(w)
        for col in range(d):
            a = int(np.clip(np.rint(vals[col]), 0, na - 1))
            v = vecs[:, col:col + 1]
            out[a] += v @ la.dagger(v)
    return out


def _random_family(d: int, na: int, useful: list[int], rng: np.random.Generator) -> np.ndarray:
    """Haar-rotated partition of the basis over the useful answers."""
    u = la.haar_unitary(d, rng)
    order = rng.permutation(useful)
    out = np.zeros((na, d, d), dtype=complex)
    for i in range(d):
        a = order[i % len(order)]
        v = u[:, i:i + 1]
        out[a] += v @ la.dagger(v)
    return out


def _top_state(op: np.ndarray) -> tuple[np.ndarray, float]:
    vals, vecs = np.linalg.eigh(op)
    v = vecs[:, -1]
    # fix the global phase for reproducibility
    j = int(np.argmax(np.abs(v) > 1e-12))
    v = v * (abs(v[j]) / v[j])
    return v / np.linalg.norm(v), float(vals[-1])


@dataclass(frozen=True)
class SeesawResult:
    strategy: EntangledStrategy
    value: float
    restart: int
    history: tuple[float, ...]


def _single_run(g: GameSpec, d: int, iters: int, seed_seq, c, useful, tol: float) -> tuple[EntangledStrategy, float, list[float]]:
    rng = np.random.default_rng(seed_seq)
    n, nq, na = g.provers, g.questions, g.answers
    dims = (d,) * n
    meas = [np.array([_random_family(d, na, useful[p][q], rng) for q in range(nq)]) for p in range(n)]
    psi, val = _top_state(_game_operator(c, meas))
    history = [val]
    for _ in range(iters):
        for p in range(n):
            k = _others_operator(c, meas, p)
            e = _effective(psi, dims, p, k)
            new = meas[p].copy()
            for q in range(nq):
                new[q] = _repair_family(_improve_pvm(meas[p][q], e[q], useful[p][q]))
            meas[p] = new
        psi, val_new = _top_state(_game_operator(c, meas))
        history.append(max(val_new, history[-1]))
        if val_new - val <= tol:
            val = max(val, val_new)
            break
        val = val_new
    strat = EntangledStrategy(dims, psi, meas)
    return strat, entangled_value_of(strat, g), history


def worker_count(jobs: int) -> int:
    cap = os.environ.get("WORKBENCH_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(jobs, limit))


def seesaw(
    g: GameSpec,
    dims: int,
    restarts: int = 10,
    iters: int = 200,
    seed: int = 0,
    tol: float = 1e-12,
) -> SeesawResult:
    """Alternating maximization of the entangled value at local dimension ``dims``.

    Each restart draws Haar-random measurements, then alternates between the
    optimal shared state (top eigenvector of the game operator) and per-prover
    measurement updates. Restarts use independent child seeds and the best
    result wins, ties going to the lowest restart index.
    """
    if g.provers not in (2, 3):
        raise PreconditionError(f"see-saw supports N in {{2, 3}}, got {g.provers}")
    if dims < 1 or restarts < 1 or iters < 0:
        raise ValidationError("dims and restarts must be positive, iters nonnegative")
    c = _coefficients(g)
    w, _ = g.weights()
    useful = _useful_answers(g, w)
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    with ThreadPoolExecutor(max_workers=worker_count(restarts)) as pool:
        runs = list(pool.map(lambda ss: _single_run(g, dims, iters, ss, c, useful, tol), seeds))
    best = max(range(restarts), key=lambda i: (runs[i][1], -i))
    strat, val, hist = runs[best]
    return SeesawResult(strat, val, best, tuple(hist))
