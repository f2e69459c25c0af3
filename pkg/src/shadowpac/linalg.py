"""Dense complex linear algebra shared by the rest of the package.

Operators are plain 2-D ``numpy`` complex arrays. The helpers here validate
shapes and the numerical policy, which lives entirely in the constants below.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from .errors import DimensionError, NotHermitianError, NumericalError

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9
EIG_TOL = 1e-9
TRACE_TOL = 1e-10
COMPLETENESS_TOL = 1e-9
MAX_DIM = 64

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def as_matrix(a, *, square: bool = False) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError("matrix has non-finite entries")
    return m


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = np.linalg.norm(m)
    return bool(np.linalg.norm(m - m.conj().T) <= tol * max(scale, 1.0))


def as_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate the Hermitian invariant and return the symmetrized operator."""
    m = as_matrix(a, square=True)
    scale = np.linalg.norm(m)
    if np.linalg.norm(m - m.conj().T) > tol * max(scale, 1.0):
        raise NotHermitianError("operator is not Hermitian within tolerance")
    return (m + m.conj().T) / 2


def tensor_product(*factors) -> np.ndarray:
    """Kronecker product, first factor most significant."""
    if not factors:
        raise DimensionError("tensor_product needs at least one factor")
    return reduce(np.kron, (as_matrix(f) for f in factors))


def kron_power(a, n: int) -> np.ndarray:
    return tensor_product(*([a] * n)) if n > 0 else np.ones((1, 1), dtype=complex)


def trace_product(a, b) -> complex:
    """tr(AB) computed as sum_jk A_jk B_kj, without forming AB."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0] or a.shape[0] != b.shape[1]:
        raise DimensionError(f"cannot trace product of shapes {a.shape} and {b.shape}")
    return complex(np.einsum("jk,kj->", a, b))


def hermitian_eigvalsh(h) -> np.ndarray:
    """Ascending eigenvalues of the symmetrized operator (H + H^dagger)/2."""
    m = np.asarray(h, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError("matrix has non-finite entries")
    return np.linalg.eigvalsh((m + m.conj().T) / 2)


def max_eigenvalue(h) -> float:
    return float(hermitian_eigvalsh(h)[-1])


def min_eigenvalue(h) -> float:
    return float(hermitian_eigvalsh(h)[0])


def top_eigenpair(h) -> tuple[float, np.ndarray]:
    m = np.asarray(h, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise NumericalError("matrix has non-finite entries")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return float(w[-1]), v[:, -1]


def is_psd(h, tol: float = PSD_TOL) -> bool:
    return min_eigenvalue(h) >= -tol


def operator_norm(h) -> float:
    """Spectral norm of a Hermitian operator."""
    w = hermitian_eigvalsh(h)
    return float(max(abs(w[0]), abs(w[-1])))


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def projector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def basis_projector(dim: int, j: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[j, j] = 1.0
    return p


def num_qubits_for(dim: int) -> int:
    d = int(dim).bit_length() - 1
    if dim < 1 or 2**d != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return d


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def hermitian_coordinates(h) -> np.ndarray:
    """Real coordinates of a Hermitian matrix.

    Order: the diagonal (real parts), then Re of the strict upper triangle in
    row-major order, then Im of the strict upper triangle in the same order.
    The map is real-linear, so convex combinations are preserved.
    """
    m = np.asarray(h, dtype=complex)
    iu = np.triu_indices(m.shape[0], k=1)
    return np.concatenate([m.diagonal().real, m[iu].real, m[iu].imag])
