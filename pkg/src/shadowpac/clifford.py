"""Clifford group helpers: exact enumeration and uniform tableau sampling.

Tableau convention: a ``(2n, 2n + 1)`` boolean array. Row ``q`` is the image
of ``X_q`` and row ``n + q`` the image of ``Z_q``. Columns are the x bits,
then the z bits, then a sign bit; a row denotes
``(-1)^r * prod_q i^(x_q z_q) X_q^(x_q) Z_q^(z_q)``. Qubit 0 is the most
significant tensor factor.
"""

from __future__ import annotations

from collections import deque
from functools import lru_cache

import numpy as np

from . import linalg


def _phase_key(u: np.ndarray) -> bytes:
    flat = u.reshape(-1)
    k = int(np.argmax(np.abs(flat) > 1e-6))
    v = flat * (abs(flat[k]) / flat[k])
    grid = np.rint(np.concatenate([v.real, v.imag]) * 1e6).astype(np.int64)
    return grid.tobytes()


def _generators(n: int) -> list[np.ndarray]:
    gens = []
    for q in range(n):
        for g in (linalg.H, linalg.S):
            factors = [linalg.I2] * n
            factors[q] = g
            gens.append(linalg.tensor_product(*factors))
    if n == 2:
        gens.append(np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex))
    return gens


@lru_cache(maxsize=None)
def clifford_group(num_qubits: int) -> np.ndarray:
    """All Clifford unitaries modulo global phase (24 for one qubit, 11520 for two).

    Breadth-first closure of {H, S} on each qubit and CNOT. Cached and
    returned read-only.
    """
    if num_qubits not in (1, 2):
        raise ValueError("exact Clifford enumeration supports 1 or 2 qubits")
    dim = 2**num_qubits
    gens = _generators(num_qubits)
    start = np.eye(dim, dtype=complex)
    seen = {_phase_key(start)}
    out = [start]
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for g in gens:
            v = g @ u
            key = _phase_key(v)
            if key not in seen:
                seen.add(key)
                out.append(v)
                queue.append(v)
    arr = np.stack(out)
    arr.setflags(write=False)
    return arr


def _symplectic_form(a: np.ndarray, b: np.ndarray) -> int:
    n = a.size // 2
    return int((a[:n] @ b[n:] + a[n:] @ b[:n]) % 2)


def _random_combination(basis: list[np.ndarray], rng: np.random.Generator, nonzero: bool) -> np.ndarray:
    while True:
        coeff = rng.integers(2, size=len(basis))
        if not nonzero or coeff.any():
            return np.sum([c * v for c, v in zip(coeff, basis)], axis=0) % 2


def _symplectic_basis(vectors: list[np.ndarray]) -> list[np.ndarray]:
    """Reduce a spanning list of a symplectic subspace to hyperbolic pairs."""
    vectors = [v for v in vectors if v.any()]
    basis = []
    while vectors:
        a = vectors.pop(0)
        partner = next((k for k, v in enumerate(vectors) if _symplectic_form(a, v)), None)
        if partner is None:
            continue
        b = vectors.pop(partner)
        basis += [a, b]
        projected = []
        for v in vectors:
            w = (v + _symplectic_form(v, b) * a + _symplectic_form(v, a) * b) % 2
            if w.any():
                projected.append(w)
        vectors = projected
    return basis


def random_clifford_tableau(num_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random Clifford tableau.

    Rows are drawn pair by pair: the image of X_q is a uniform nonzero vector
    of the current symplectic subspace, the image of Z_q a uniform vector of
    that subspace with symplectic product 1 against it, and the next pair
    lives in the symplectic complement of both. Every symplectic matrix is
    reached by exactly one sequence of choices, each made uniformly, so the
    result is uniform; sign bits are uniform and independent.
    """
    n = num_qubits
    basis = list(np.eye(2 * n, dtype=np.int64))
    xs, zs = [], []
    for _ in range(n):
        x = _random_combination(basis, rng, nonzero=True)
        while True:
            z = _random_combination(basis, rng, nonzero=False)
            if _symplectic_form(x, z):
                break
        xs.append(x)
        zs.append(z)
        rest = [(v + _symplectic_form(v, z) * x + _symplectic_form(v, x) * z) % 2 for v in basis]
        basis = _symplectic_basis(rest)
    tableau = np.zeros((2 * n, 2 * n + 1), dtype=bool)
    tableau[:n, :-1] = np.array(xs, dtype=bool)
    tableau[n:, :-1] = np.array(zs, dtype=bool)
    tableau[:, -1] = rng.integers(2, size=2 * n).astype(bool)
    return tableau


def is_symplectic(tableau: np.ndarray) -> bool:
    n = tableau.shape[0] // 2
    m = tableau[:, :-1].astype(np.int64)
    omega = np.block([[np.zeros((n, n), int), np.eye(n, dtype=int)], [np.eye(n, dtype=int), np.zeros((n, n), int)]])
    return bool(np.array_equal((m @ omega @ m.T) % 2, omega))


def pauli_row_matrix(row: np.ndarray) -> np.ndarray:
    n = (row.size - 1) // 2
    factors = []
    for q in range(n):
        x, z = bool(row[q]), bool(row[n + q])
        factors.append({(0, 0): linalg.I2, (1, 0): linalg.X, (0, 1): linalg.Z, (1, 1): linalg.Y}[(x, z)])
    sign = -1.0 if row[-1] else 1.0
    return sign * linalg.tensor_product(*factors)


def tableau_to_unitary(tableau: np.ndarray) -> np.ndarray:
    """Dense unitary (up to global phase) realizing ``tableau``.

    U|0..0> is the joint +1 eigenvector of the Z images; U|x> then follows
    by applying the X images selected by the bits of x.
    """
    n = tableau.shape[0] // 2
    dim = 2**n
    xs = [pauli_row_matrix(tableau[q]) for q in range(n)]
    zs = [pauli_row_matrix(tableau[n + q]) for q in range(n)]
    proj = np.eye(dim, dtype=complex)
    for z in zs:
        proj = proj @ (np.eye(dim) + z) / 2
    col = int(np.argmax(np.linalg.norm(proj, axis=0)))
    psi0 = proj[:, col] / np.linalg.norm(proj[:, col])
    u = np.empty((dim, dim), dtype=complex)
    for index in range(dim):
        v = psi0
        for q in range(n):
            if (index >> (n - 1 - q)) & 1:
                v = xs[q] @ v
        u[:, index] = v
    return u


def tableau_to_string(tableau: np.ndarray) -> str:
    """Compact identifier: the bits row by row as a hex string, prefixed by n."""
    n = tableau.shape[0] // 2
    bits = np.packbits(tableau.astype(np.uint8).reshape(-1))
    return f"{n}:{bits.tobytes().hex()}"


def tableau_from_string(text: str) -> np.ndarray:
    n_text, hex_bits = text.split(":")
    n = int(n_text)
    bits = np.unpackbits(np.frombuffer(bytes.fromhex(hex_bits), dtype=np.uint8))
    size = 2 * n * (2 * n + 1)
    return bits[:size].astype(bool).reshape(2 * n, 2 * n + 1)
