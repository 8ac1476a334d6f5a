"""Small linear-algebra helpers used throughout the package.

Everything here operates on dense numpy arrays; the dimensions in play are
single digits, so clarity wins over cleverness.
"""

from __future__ import annotations

import numpy as np

#: entrywise tolerance for unitarity / projector-algebra checks
MATRIX_ATOL = 1e-9


def as_complex_vector(x, *, copy: bool = True) -> np.ndarray:
    """Return ``x`` as a 1-D complex128 array."""
    v = np.array(x, dtype=np.complex128, copy=copy)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    return v


def as_complex_matrix(x, *, copy: bool = True) -> np.ndarray:
    """Return ``x`` as a square 2-D complex128 array."""
    a = np.array(x, dtype=np.complex128, copy=copy)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def is_unit_vector(v: np.ndarray, atol: float = MATRIX_ATOL) -> bool:
    return abs(np.linalg.norm(v) - 1.0) <= atol


def is_unitary(a: np.ndarray, atol: float = MATRIX_ATOL) -> bool:
    eye = np.eye(a.shape[0])
    return bool(np.max(np.abs(a.conj().T @ a - eye)) <= atol)


def is_hermitian(a: np.ndarray, atol: float = MATRIX_ATOL) -> bool:
    return bool(np.max(np.abs(a - a.conj().T)) <= atol)


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value, computed by full SVD (dimensions are tiny)."""
    return float(np.linalg.svd(np.asarray(a, dtype=np.complex128), compute_uv=False)[0])


def basis_vector(dim: int, index: int) -> np.ndarray:
    e = np.zeros(dim, dtype=np.complex128)
    e[index] = 1.0
    return e


def projector_onto(v: np.ndarray) -> np.ndarray:
    """Rank-one projector |v><v| for a unit vector v."""
    v = np.asarray(v, dtype=np.complex128)
    return np.outer(v, v.conj())


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    """A Haar-random unit vector."""
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """A Haar-random unitary via QR of a complex Ginibre matrix.

    The R-diagonal phases are divided out so the distribution is uniform
    rather than biased by the QR convention.
    """
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def rotation_matrix(angle: float) -> np.ndarray:
    """Real planar rotation; eigenvalues exp(+-i*angle)."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)
