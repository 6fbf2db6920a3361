"""Almost-commuting projector families.

Measures how far a family of projectors is from commuting, in the normalized
Frobenius norm ``(1/d) ||[W_i, W_j]||_F^2``, and searches for a nearby family
of exactly commuting projectors. The search is a heuristic: it reports the
distance it achieved and makes no claim that a closer family does not exist.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import ValidationError
from .rounding import commutation_sums
from .strategies import EntangledStrategy, worker_count

TIE_ATOL = 1e-12
CONTEXT_ATOL = 1e-9


@dataclass(frozen=True)
class CommutationProfile:
    """Pairwise normalized commutator norms of a projector family.

    ``weighted`` holds the two strategy-level commutation sums (pairwise and
    local) when a strategy and question distribution were supplied.
    """

    dimension: int
    table: np.ndarray
    epsilon_max: float
    weighted: tuple[float, float] | None = None
    context_error: float | None = None


@dataclass(frozen=True)
class CommutingApproximation:
    projectors: tuple[np.ndarray, ...]
    delta: float
    basis: np.ndarray
    ties: int
    off_diagonal: float


def _check_family(projectors) -> list[np.ndarray]:
    family = [la.check_projector(p, name=f"projector {i}") for i, p in enumerate(projectors)]
    if not family:
        raise ValidationError("empty projector family")
    dims = {p.shape[0] for p in family}
    if len(dims) > 1:
        raise ValidationError(f"projectors have mixed dimensions {sorted(dims)}")
    return family


def commutation_profile(projectors, strategy: EntangledStrategy | None = None, pi=None,
                        maximally_entangled: bool = False) -> CommutationProfile:
    """Table of ``(1/d) ||W_i W_j - W_j W_i||_F^2``.

    With ``maximally_entangled=True`` also checks, for every pair, that the
    maximally entangled state gives ``||(W ⊗ conj(W')) Phi||^2 = ||W W'||_F^2 / d``.
    """
    family = _check_family(projectors)
    d = family[0].shape[0]
    n = len(family)
    table = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            c = family[i] @ family[j] - family[j] @ family[i]
            table[i, j] = table[j, i] = la.frobenius_norm(c) ** 2 / d
    context_error = None
    if maximally_entangled:
        phi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
        context_error = 0.0
        for wi in family:
            for wj in family:
                lhs = np.linalg.norm(np.kron(wi, wj.conj()) @ phi) ** 2
                rhs = la.frobenius_norm(wi @ wj) ** 2 / d
                context_error = max(context_error, abs(lhs - rhs))
        if context_error > CONTEXT_ATOL:
            raise ValidationError(f"maximally entangled identity off by {context_error:.3g}")
    weighted = None
    if strategy is not None:
        if pi is None:
            raise ValidationError("a strategy context needs the question distribution pi")
        weighted = commutation_sums(strategy, pi)
    eps = float(table.max()) if n > 1 else 0.0
    return CommutationProfile(d, table, eps, weighted, context_error)


def _off_diagonal(mats: np.ndarray) -> float:
    diag = np.einsum("kii->ki", mats)
    return float(np.sum(np.abs(mats) ** 2) - np.sum(np.abs(diag) ** 2))


def joint_diagonalize(mats, sweeps: int = 100, basis=None, tol: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Jacobi joint approximate diagonalization of Hermitian matrices.

    Applies complex Givens rotations pair by pair, each chosen to minimize the
    total off-diagonal energy of the rotated set. Returns ``(U, U^† M_k U)``.
    """
    mats = np.array(mats, dtype=complex)
    d = mats.shape[1]
    u = np.eye(d, dtype=complex) if basis is None else np.array(basis, dtype=complex)
    mats = np.einsum("ji,kjl,lm->kim", u.conj(), mats, u)
    for _ in range(sweeps):
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                g = np.stack([
                    mats[:, p, p] - mats[:, q, q],
                    mats[:, p, q] + mats[:, q, p],
                    1j * (mats[:, q, p] - mats[:, p, q]),
                ])
                vals, vecs = np.linalg.eigh((g @ g.conj().T).real)
                x, y, z = vecs[:, -1]
                if x < 0:
                    x, y, z = -x, -y, -z
                c = np.sqrt(0.5 + x / 2)
                s = 0.5 * (y - 1j * z) / c
                if abs(s) <= tol:
                    continue
                rotated = True
                rot = np.array([[c, -np.conj(s)], [s, c]])
                u[:, [p, q]] = u[:, [p, q]] @ rot
                mats[:, [p, q], :] = np.einsum("ji,kjl->kil", rot.conj(), mats[:, [p, q], :])
                mats[:, :, [p, q]] = mats[:, :, [p, q]] @ rot
        if not rotated:
            break
    return u, mats


def _round_in_basis(family, u: np.ndarray, rotated: np.ndarray) -> CommutingApproximation:
    d = u.shape[0]
    diag = np.einsum("kii->ki", rotated).real
    ties = int(np.sum(np.abs(diag - 0.5) <= TIE_ATOL))
    # entries at 1/2 within tolerance round down
    bits = diag > 0.5 + TIE_ATOL
    out = tuple(la.nearest_projector((u * b) @ u.conj().T) for b in bits)
    delta = max(la.frobenius_norm(w - wt) ** 2 / d for w, wt in zip(family, out))
    return CommutingApproximation(out, float(delta), u, ties, _off_diagonal(rotated))


def nearest_commuting_family(projectors, sweeps: int = 100, seed: int = 0,
                             restarts: int = 2) -> CommutingApproximation:
    """Exactly commuting projectors close to ``projectors``.

    Jointly diagonalizes the family, then rounds each diagonal entry in the
    common basis to 0 or 1 at threshold 1/2. The search starts from the
    standard basis and from ``restarts`` Haar-random bases drawn from ``seed``;
    the result with the smallest ``delta`` wins.
    """
    family = _check_family(projectors)
    d = family[0].shape[0]
    rng = np.random.default_rng(seed)
    starts = [np.eye(d, dtype=complex)] + [la.haar_unitary(d, rng) for _ in range(restarts)]
    best = None
    for start in starts:
        u, rotated = joint_diagonalize(family, sweeps=sweeps, basis=start)
        approx = _round_in_basis(family, u, rotated)
        if best is None or approx.delta < best.delta - 1e-15:
            best = approx
    return best


@dataclass(frozen=True)
class ScanRow:
    epsilon_max: float
    delta: float
    n: int
    d: int
    scale: float
    seed: int


SCAN_COLUMNS = ("epsilon_max", "delta", "n", "d", "scale", "seed")


def _unitary_exp(h: np.ndarray, t: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(1j * t * vals)) @ vecs.conj().T


def perturbed_commuting_family(n: int, d: int, scale: float, rng: np.random.Generator) -> list[np.ndarray]:
    """``n`` commuting projectors in a random basis, each conjugated by ``exp(i scale H_i)``.

    Each base projector has rank between 1 and ``d - 1`` (when ``d > 1``) so
    the perturbation can move it. ``H_i`` are random Hermitian matrices
    rescaled to unit operator norm.
    """
    u = la.haar_unitary(d, rng)
    family = []
    for _ in range(n):
        rank = int(rng.integers(1, d)) if d > 1 else int(rng.integers(0, 2))
        bits = np.zeros(d)
        bits[rng.choice(d, size=rank, replace=False)] = 1
        w = (u * bits) @ u.conj().T
        h = la.random_hermitian(d, rng)
        h /= max(np.max(np.abs(np.linalg.eigvalsh(h))), 1e-300)
        v = _unitary_exp(h, scale)
        family.append(v @ w @ v.conj().T)
    return family


def _scan_sample(n: int, d: int, scale: float, seed: int, index: int, sweeps: int) -> ScanRow:
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    family = perturbed_commuting_family(n, d, scale, rng)
    eps = commutation_profile(family).epsilon_max
    approx = nearest_commuting_family(family, sweeps=sweeps, seed=int(rng.integers(2**31)))
    return ScanRow(eps, approx.delta, n, d, float(scale), seed)


def delta_vs_epsilon_scan(n: int, d: int, scale: float, samples: int, seed: int = 0,
                          sweeps: int = 100) -> list[ScanRow]:
    """Empirical ``(epsilon_max, delta)`` pairs over perturbed commuting families.

    Sample ``i`` is drawn from ``SeedSequence([seed, i])``, so rows depend only
    on ``(seed, i)`` and come back in index order.
    """
    if n < 1 or d < 1 or samples < 0:
        raise ValidationError("scan needs n >= 1, d >= 1 and samples >= 0")
    with ThreadPoolExecutor(max_workers=worker_count(samples or 1)) as pool:
        return list(pool.map(lambda i: _scan_sample(n, d, scale, seed, i, sweeps), range(samples)))


def scan_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCAN_COLUMNS)
    for r in rows:
        writer.writerow(["%.17g" % r.epsilon_max, "%.17g" % r.delta, r.n, r.d, "%.17g" % r.scale, r.seed])
    return buf.getvalue()
