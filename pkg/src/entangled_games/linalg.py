"""Dense complex linear algebra for desk-scale Hilbert spaces.

Matrices are plain ``numpy`` complex arrays; state vectors are 1-D arrays.
Nothing here keeps global state, so every function is safe to call from
several threads at once.
"""

from __future__ import annotations

import string
from typing import Sequence

import numpy as np

from .errors import BoundViolation, ValidationError

#: Structural tolerance (Hermiticity, idempotency, normalization).
ATOL = 1e-9
#: Tolerance on eigendecomposition residuals.
EIG_ATOL = 1e-8


def as_matrix(a, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a: np.ndarray, atol: float = ATOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.max(np.abs(a - dagger(a)), initial=0.0) <= atol


def is_projector(p: np.ndarray, atol: float = ATOL) -> bool:
    p = np.asarray(p, dtype=complex)
    return is_hermitian(p, atol) and np.max(np.abs(p @ p - p), initial=0.0) <= atol


def check_projector(p, name: str = "projector") -> np.ndarray:
    p = as_matrix(p, square=True, name=name)
    if not is_hermitian(p):
        raise ValidationError(f"{name} is not Hermitian")
    if np.max(np.abs(p @ p - p), initial=0.0) > ATOL:
        raise ValidationError(f"{name} is not idempotent")
    return p


def check_state(psi, name: str = "state") -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValidationError(f"{name} must be a vector, got shape {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise ValidationError(f"{name} has non-finite amplitudes")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > ATOL:
        raise ValidationError(f"{name} has norm {norm!r}, expected 1")
    return psi


def check_pvm(ops: Sequence[np.ndarray], name: str = "measurement") -> np.ndarray:
    """Validate a projective measurement given as an ``(n_outcomes, d, d)`` stack."""
    ops = np.asarray(ops, dtype=complex)
    if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
        raise ValidationError(f"{name} must be a stack of square matrices, got {ops.shape}")
    d = ops.shape[1]
    for a, w in enumerate(ops):
        check_projector(w, f"{name}[{a}]")
    if np.max(np.abs(ops.sum(axis=0) - np.eye(d)), initial=0.0) > ATOL:
        raise ValidationError(f"{name} does not sum to the identity")
    prods = np.einsum("aij,bjk->abik", ops, ops)
    expected = np.zeros_like(prods)
    idx = np.arange(len(ops))
    expected[idx, idx] = ops
    if np.max(np.abs(prods - expected), initial=0.0) > EIG_ATOL:
        raise ValidationError(f"{name} projectors are not mutually orthogonal")
    return ops


def tensor(a, b) -> np.ndarray:
    """Kronecker product ``a ⊗ b``."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def tensor_all(*mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def frobenius_norm(a) -> float:
    a = np.asarray(a, dtype=complex)
    return float(np.sqrt(np.real(np.vdot(a, a))))


def trace_norm(a) -> float:
    """Sum of singular values, read off the Hermitian dilation ``[[0, A], [A†, 0]]``.

    The dilation has eigenvalues ``±σ_i``, so half the absolute spectrum sum is
    the trace norm.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    dil = np.zeros((2 * n, 2 * n), dtype=complex)
    dil[:n, n:] = a
    dil[n:, :n] = dagger(a)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(dil))))


def jacobi_eigh(a, tol: float = 1e-14, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a complex Hermitian matrix.

    Each 2x2 pivot is first made real by a diagonal phase, then zeroed by a
    real Givens rotation. Returns ascending eigenvalues and the unitary whose
    columns are the eigenvectors.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                mag = abs(b)
                if mag <= 1e-300:
                    continue
                phase = b / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
                cols = [p, q]
                a[:, cols] = a[:, cols] @ g
                a[cols, :] = dagger(g) @ a[cols, :]
                a[p, q] = a[q, p] = 0.0
                v[:, cols] = v[:, cols] @ g
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def hermitian_eig(a, method: str = "lapack") -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition ``A = V diag(λ) V†`` with ascending ``λ``.

    ``method="jacobi"`` selects the in-house cyclic Jacobi solver; the default
    uses LAPACK through numpy.
    """
    a = as_matrix(a, square=True)
    if not is_hermitian(a):
        raise ValidationError("hermitian_eig needs a Hermitian matrix")
    a = 0.5 * (a + dagger(a))
    if method == "jacobi":
        return jacobi_eigh(a)
    if method != "lapack":
        raise ValueError(f"unknown method {method!r}")
    return np.linalg.eigh(a)


def partial_trace(dm, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the subsystems listed in ``keep`` (0-based)."""
    dm = as_matrix(dm, square=True, name="density matrix")
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != dm.shape[0]:
        raise ValidationError(f"dims {dims} do not match matrix size {dm.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValidationError(f"keep {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    letters = string.ascii_letters
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    t = dm.reshape(dims + dims)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return red.reshape(dk, dk)


def psd_sqrt(x) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (x + dagger(x)))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ dagger(v)


def nearest_projector(h) -> np.ndarray:
    """Round a Hermitian matrix to a projector: eigenvalues above 1/2 become 1, the rest 0."""
    h = as_matrix(h, square=True)
    if not is_hermitian(h, atol=1e-7):
        raise ValidationError("nearest_projector needs a Hermitian matrix")
    w, v = np.linalg.eigh(0.5 * (h + dagger(h)))
    keep = v[:, w > 0.5]
    p = keep @ dagger(keep)
    return 0.5 * (p + dagger(p))


def gentle_measurement_bound(rho, x) -> tuple[float, float]:
    """Return ``(‖ρ − √X ρ √X‖₁, 3·sqrt(1 − Tr Xρ))`` and check the first is below the second.

    ``rho`` must be a density matrix and ``0 <= X <= Id``.
    """
    rho = as_matrix(rho, square=True, name="rho")
    x = as_matrix(x, square=True, name="X")
    if rho.shape != x.shape:
        raise ValidationError(f"shape mismatch {rho.shape} vs {x.shape}")
    if not is_hermitian(rho) or not is_hermitian(x):
        raise ValidationError("rho and X must be Hermitian")
    if abs(np.trace(rho).real - 1.0) > ATOL or np.linalg.eigvalsh(rho)[0] < -ATOL:
        raise ValidationError("rho is not a density matrix")
    wx = np.linalg.eigvalsh(x)
    if wx[0] < -ATOL or wx[-1] > 1.0 + ATOL:
        raise ValidationError(f"X has eigenvalues outside [0, 1]: [{wx[0]}, {wx[-1]}]")
    s = psd_sqrt(x)
    distance = trace_norm(rho - s @ rho @ s)
    overlap = float(np.real(np.trace(x @ rho)))
    bound = 3.0 * np.sqrt(max(0.0, 1.0 - overlap))
    if distance > bound + ATOL:
        raise BoundViolation(f"gentle measurement: distance {distance} > bound {bound}")
    return distance, float(bound)


# -- random ensembles -------------------------------------------------------

def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diag(r)
    ph = np.where(np.abs(ph) > 0, ph / np.abs(ph), 1.0)
    return q * ph


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (z + dagger(z))


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    k = d if rank is None else rank
    z = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = z @ dagger(z)
    return rho / np.trace(rho).real


def random_pvm(d: int, n_outcomes: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-rotated partition of the computational basis into ``n_outcomes`` blocks.

    Block sizes are drawn at random, so some outcomes may get the zero projector.
    """
    labels = rng.integers(0, n_outcomes, size=d)
    u = haar_unitary(d, rng)
    ops = np.zeros((n_outcomes, d, d), dtype=complex)
    for a in range(n_outcomes):
        cols = u[:, labels == a]
        ops[a] = cols @ dagger(cols)
    return ops
