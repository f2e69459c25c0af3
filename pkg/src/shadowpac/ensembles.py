"""Unitary ensembles and the measure-and-prepare channel they induce.

Convention: a member ``U`` measures the state in the basis ``{U|j>}``; the
outcome ``j`` has probability ``<j|U^dagger rho U|j>`` and the prepared
snapshot is ``omega_j = U|j><j|U^dagger``.
"""

from __future__ import annotations

import itertools
from functools import cached_property

import numpy as np

from . import clifford, linalg
from .errors import DimensionError, NotCompleteError, UnsupportedError
from .rng import Stream, uniforms

UNITARY_TOL = 1e-10
RANK_TOL = 1e-10
_CHUNK = 1 << 20

# Per-qubit member for each measured Pauli basis; U|0> is the +1 eigenvector.
PAULI_BASES = "XYZ"
PAULI_ROTATIONS = {
    "X": linalg.H,
    "Y": linalg.S @ linalg.H,
    "Z": linalg.I2,
}


def _vec_snapshots(unitaries: np.ndarray) -> np.ndarray:
    """Row-major vec of every rank-one snapshot, shape (K*D, D*D)."""
    k, d, _ = unitaries.shape
    cols = np.transpose(unitaries, (0, 2, 1)).reshape(k * d, d)
    return np.einsum("na,nb->nab", cols, cols.conj()).reshape(k * d, d * d)


class UnitaryEnsemble:
    """Base class. Subclasses fill in sampling and the inverse channel."""

    kind: str = "abstract"
    enumerable: bool = True

    def __init__(self, dim: int):
        self.dim = int(dim)
        if self.dim < 1 or self.dim > linalg.MAX_DIM:
            raise DimensionError(f"dimension {dim} outside 1..{linalg.MAX_DIM}")

    # -- enumerable ensembles -------------------------------------------------
    @property
    def weights(self) -> np.ndarray:
        raise UnsupportedError(f"{self.kind} ensemble is not enumerable")

    @property
    def unitaries(self) -> np.ndarray:
        raise UnsupportedError(f"{self.kind} ensemble is not enumerable")

    def member_id(self, index: int) -> str:
        return str(int(index))

    def member_index(self, member_id: str) -> int:
        return int(member_id)

    @cached_property
    def gamma_matrix(self) -> np.ndarray:
        """Matrix of Gamma acting on row-major vec(O), shape (D^2, D^2)."""
        if not self.enumerable:
            raise UnsupportedError(f"{self.kind} ensemble is not enumerable")
        v = _vec_snapshots(self.unitaries)
        w = np.repeat(self.weights, self.dim)
        return (v * w[:, None]).T @ v.conj()

    @cached_property
    def complete(self) -> bool:
        """Tomographic completeness: Gamma has full rank on operator space."""
        eig = np.linalg.eigvalsh((self.gamma_matrix + self.gamma_matrix.conj().T) / 2)
        return bool(eig[0] > RANK_TOL)

    def check_complete(self) -> None:
        if not self.complete:
            raise NotCompleteError(f"{self.describe()} is not tomographically complete")

    def gamma_apply(self, o: np.ndarray) -> np.ndarray:
        """Gamma[O] by explicit enumeration over members and outcomes."""
        if not self.enumerable:
            raise UnsupportedError(f"{self.kind} ensemble is not enumerable")
        o = np.asarray(o, dtype=complex)
        u = self.unitaries
        w = self.weights
        out = np.zeros((self.dim, self.dim), dtype=complex)
        step = max(1, _CHUNK // (self.dim**3))
        for start in range(0, len(w), step):
            uc = u[start : start + step]
            coeff = np.einsum("kaj,ab,kbj->kj", uc.conj(), o, uc)
            out += np.einsum("k,kj,kaj,kbj->ab", w[start : start + step], coeff, uc, uc.conj())
        return out

    def gamma_inverse(self, o: np.ndarray) -> np.ndarray:
        if not self.complete and not getattr(self, "allow_incomplete", False):
            raise NotCompleteError(f"{self.describe()} is not tomographically complete")
        x = np.linalg.lstsq(self.gamma_matrix, np.asarray(o, dtype=complex).reshape(-1), rcond=RANK_TOL)[0]
        return x.reshape(self.dim, self.dim)

    @cached_property
    def _inverse_snapshot_table(self) -> np.ndarray:
        """Gamma^{-1}[omega_kj] for every member and outcome, shape (K, D, D, D)."""
        g = self.gamma_matrix
        if self.complete:
            ginv = np.linalg.inv(g)
        elif getattr(self, "allow_incomplete", False):
            ginv = np.linalg.pinv(g, rcond=RANK_TOL, hermitian=True)
        else:
            raise NotCompleteError(f"{self.describe()} is not tomographically complete")
        v = _vec_snapshots(self.unitaries)
        table = v @ ginv.T
        return table.reshape(len(self.weights), self.dim, self.dim, self.dim)

    # -- sampling ---------------------------------------------------------------
    def sample_members(self, keys: np.ndarray) -> np.ndarray:
        """Member index of each per-shadow stream, drawn from counter 0."""
        cdf = np.cumsum(self.weights)
        u = uniforms(keys, 0) * cdf[-1]
        return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)

    @property
    def outcome_counter(self) -> int:
        return 1

    def member_unitaries(self, members: np.ndarray) -> np.ndarray:
        return self.unitaries[members]

    def inverse_snapshots(self, members: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
        return self._inverse_snapshot_table[members, outcomes]

    def describe(self) -> str:
        return self.kind


class PauliTensorEnsemble(UnitaryEnsemble):
    """Independent uniform X/Y/Z basis measurement on each qubit.

    Members are basis strings such as ``"XZ"``; qubit 0 is the most
    significant tensor factor.
    """

    kind = "pauli"

    def __init__(self, num_qubits: int):
        super().__init__(2**num_qubits)
        self.num_qubits = int(num_qubits)
        self.bases = ["".join(b) for b in itertools.product(PAULI_BASES, repeat=self.num_qubits)]

    @cached_property
    def weights(self) -> np.ndarray:
        return np.full(len(self.bases), 1.0 / len(self.bases))

    @cached_property
    def unitaries(self) -> np.ndarray:
        out = np.stack([linalg.tensor_product(*(PAULI_ROTATIONS[c] for c in b)) for b in self.bases])
        out.setflags(write=False)
        return out

    def member_id(self, index: int) -> str:
        return self.bases[int(index)]

    def member_index(self, member_id: str) -> int:
        index = 0
        for c in member_id:
            index = 3 * index + PAULI_BASES.index(c)
        return index

    @cached_property
    def complete(self) -> bool:
        # Gamma factorizes over qubits, so a full-rank one-qubit factor suffices.
        if self.num_qubits == 1:
            return super().complete
        return PauliTensorEnsemble(1).complete

    def gamma_inverse(self, o: np.ndarray) -> np.ndarray:
        """Per-qubit closed form 3 A - tr(A) I applied factor-wise."""
        o = np.asarray(o, dtype=complex)
        if o.shape != (self.dim, self.dim):
            raise DimensionError(f"operator shape {o.shape} does not match dim {self.dim}")
        n = self.num_qubits
        t = o.reshape((2,) * (2 * n))
        for q in range(n):
            tr = np.trace(t, axis1=q, axis2=n + q)
            t = 3 * t - np.expand_dims(np.expand_dims(tr, q), n + q) * _eye_broadcast(n, q)
        return t.reshape(self.dim, self.dim)

    def sample_members(self, keys: np.ndarray) -> np.ndarray:
        index = np.zeros(np.shape(keys), dtype=np.int64)
        for q in range(self.num_qubits):
            b = np.minimum((uniforms(keys, q) * 3).astype(np.int64), 2)
            index = 3 * index + b
        return index

    @property
    def outcome_counter(self) -> int:
        return self.num_qubits

    def local_snapshots(self, members: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
        """Per-qubit factors 3 omega_q - I, shape (n, num_qubits, 2, 2)."""
        n = self.num_qubits
        rot = np.stack([PAULI_ROTATIONS[c] for c in PAULI_BASES])
        digits = np.stack([(members // 3 ** (n - 1 - q)) % 3 for q in range(n)], axis=1)
        bits = np.stack([(outcomes >> (n - 1 - q)) & 1 for q in range(n)], axis=1)
        cols = rot[digits, :, bits]
        omega = np.einsum("nqa,nqb->nqab", cols, cols.conj())
        return 3 * omega - np.eye(2)

    def inverse_snapshots(self, members: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
        local = self.local_snapshots(np.asarray(members), np.asarray(outcomes))
        out = local[:, 0]
        for q in range(1, self.num_qubits):
            m = len(out)
            out = np.einsum("nab,ncd->nacbd", out, local[:, q]).reshape(m, out.shape[1] * 2, out.shape[2] * 2)
        return out

    def describe(self) -> str:
        return f"pauli:{self.num_qubits}"


def _eye_broadcast(n: int, q: int) -> np.ndarray:
    shape = [1] * (2 * n)
    shape[q] = shape[n + q] = 2
    return np.eye(2).reshape(shape)


class CliffordExactEnsemble(UnitaryEnsemble):
    """Uniform distribution over the full Clifford group on 1 or 2 qubits."""

    kind = "clifford"

    def __init__(self, num_qubits: int):
        if num_qubits not in (1, 2):
            raise UnsupportedError("exact Clifford ensembles exist for 1 or 2 qubits only")
        super().__init__(2**num_qubits)
        self.num_qubits = int(num_qubits)

    @property
    def unitaries(self) -> np.ndarray:
        return clifford.clifford_group(self.num_qubits)

    @cached_property
    def weights(self) -> np.ndarray:
        n = len(self.unitaries)
        return np.full(n, 1.0 / n)

    def describe(self) -> str:
        return f"clifford:{self.num_qubits}"


class CustomEnsemble(UnitaryEnsemble):
    """Finite list of weighted unitaries.

    ``allow_incomplete`` skips the completeness requirement and falls back to
    a pseudo-inverse; intended for tests of degenerate ensembles.
    """

    kind = "custom"

    def __init__(self, weights, unitaries, allow_incomplete: bool = False):
        u = np.stack([linalg.as_matrix(x, square=True) for x in unitaries])
        super().__init__(u.shape[1])
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(u),) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector, one per unitary")
        eye = np.eye(self.dim)
        for x in u:
            if np.linalg.norm(x.conj().T @ x - eye) > UNITARY_TOL:
                raise ValueError("ensemble member is not unitary")
        u.setflags(write=False)
        self._weights = w
        self._unitaries = u
        self.allow_incomplete = allow_incomplete
        if not allow_incomplete:
            self.check_complete()

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def unitaries(self) -> np.ndarray:
        return self._unitaries

    def describe(self) -> str:
        return f"custom:{len(self._weights)}"


class SampledCliffordEnsemble(UnitaryEnsemble):
    """Uniform global Clifford on any register, sampled through tableaus.

    Not enumerable; the inverse channel is the analytic depolarizing inverse
    (D + 1) A - tr(A) I.
    """

    kind = "clifford_sampled"
    enumerable = False

    def __init__(self, num_qubits: int):
        super().__init__(2**num_qubits)
        self.num_qubits = int(num_qubits)

    @property
    def complete(self) -> bool:
        return True

    def gamma_inverse(self, o: np.ndarray) -> np.ndarray:
        o = np.asarray(o, dtype=complex)
        return (self.dim + 1) * o - np.trace(o) * np.eye(self.dim)

    def gamma_apply_analytic(self, o: np.ndarray) -> np.ndarray:
        o = np.asarray(o, dtype=complex)
        return (o + np.trace(o) * np.eye(self.dim)) / (self.dim + 1)

    def sample_tableaus(self, keys: np.ndarray) -> list[np.ndarray]:
        return [clifford.random_clifford_tableau(self.num_qubits, Stream(int(k)).generator()) for k in np.ravel(keys)]

    def member_id_from_tableau(self, tableau: np.ndarray) -> str:
        return clifford.tableau_to_string(tableau)

    def unitary_from_id(self, member_id: str) -> np.ndarray:
        return clifford.tableau_to_unitary(clifford.tableau_from_string(member_id))

    def inverse_snapshot_from_unitary(self, u: np.ndarray, outcome: int) -> np.ndarray:
        col = u[:, outcome]
        return (self.dim + 1) * np.outer(col, col.conj()) - np.eye(self.dim)

    def describe(self) -> str:
        return f"clifford_sampled:{self.num_qubits}"


def make_ensemble(spec: str) -> UnitaryEnsemble:
    """Build an ensemble from ``"<kind>:<num_qubits>"``."""
    try:
        kind, qubits = spec.split(":")
        n = int(qubits)
    except ValueError as exc:
        raise ValueError(f"bad ensemble spec {spec!r}; expected kind:num_qubits") from exc
    if kind == "pauli":
        return PauliTensorEnsemble(n)
    if kind == "clifford":
        return CliffordExactEnsemble(n)
    if kind == "clifford_sampled":
        return SampledCliffordEnsemble(n)
    raise UnsupportedError(f"unknown ensemble kind {kind!r}")


def gamma_apply(ens: UnitaryEnsemble, o) -> np.ndarray:
    return ens.gamma_apply(linalg.as_matrix(o, square=True))


def gamma_inverse(ens: UnitaryEnsemble, o) -> np.ndarray:
    return ens.gamma_inverse(linalg.as_matrix(o, square=True))
