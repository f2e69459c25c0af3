"""Shadow norms, exact estimator variances and the concentration verifier."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import linalg
from .ensembles import PauliTensorEnsemble, SampledCliffordEnsemble, UnitaryEnsemble
from .errors import EmptyInputError, NotCompleteError
from .loss import LossFunction, conditional_loss_stack, expected_loss
from .rng import Stream, derive_keys
from .shadows import _measure, shadow_loss_values
from .states import LabeledStateSource, Povm, atoms_from_keys

_CHUNK = 1 << 20


@dataclass(frozen=True)
class ShadowNormReport:
    operator_id: str
    shadow_norm: float
    hs_bound: float
    locality_bound: float | None
    method: str
    standard_error: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _snapshot_columns(ens: UnitaryEnsemble):
    """Yield (weights, columns) chunks; columns[k, :, j] spans the snapshot omega_kj."""
    u = ens.unitaries
    w = ens.weights
    step = max(1, _CHUNK // ens.dim**2)
    for start in range(0, len(w), step):
        yield w[start : start + step], u[start : start + step]


def shadow_matrix(ens: UnitaryEnsemble, o) -> np.ndarray:
    """A_O = E_U sum_j tr(omega_j Gamma^-1[O])^2 omega_j.

    The squared shadow norm is max over states sigma of tr(sigma A_O), i.e.
    the top eigenvalue of this matrix.
    """
    if not ens.complete:
        raise NotCompleteError(f"{ens.describe()} is not tomographically complete")
    inv = ens.gamma_inverse(linalg.as_matrix(o, square=True))
    inv = (inv + inv.conj().T) / 2
    a = np.zeros((ens.dim, ens.dim), dtype=complex)
    for w, u in _snapshot_columns(ens):
        coeff = np.einsum("kaj,ab,kbj->kj", u.conj(), inv, u).real
        a += np.einsum("k,kj,kaj,kbj->ab", w, coeff**2, u, u.conj())
    return a


def locality(o, num_qubits: int, tol: float = 1e-10) -> int:
    """Number of qubits on which ``o`` acts non-trivially."""
    o = np.asarray(o, dtype=complex)
    t = o.reshape((2,) * (2 * num_qubits))
    count = 0
    for q in range(num_qubits):
        reduced = np.trace(t, axis1=q, axis2=num_qubits + q) / 2
        rebuilt = np.expand_dims(np.expand_dims(reduced, q), num_qubits + q) * _eye_at(num_qubits, q)
        if np.linalg.norm(rebuilt - t) > tol * max(1.0, np.linalg.norm(o)):
            count += 1
    return count


def _eye_at(n: int, q: int) -> np.ndarray:
    shape = [1] * (2 * n)
    shape[q] = shape[n + q] = 2
    return np.eye(2).reshape(shape)


def hs_bound(o) -> float:
    o = np.asarray(o, dtype=complex)
    return math.sqrt(3.0 * max(np.trace(o @ o).real, 0.0))


def locality_bound(o, num_qubits: int) -> float:
    return 2.0 ** locality(o, num_qubits) * linalg.operator_norm(o)


def shadow_norm(
    ens: UnitaryEnsemble,
    o,
    *,
    method: str = "exact",
    samples: int = 2000,
    seed: int = 0,
    operator_id: str = "O",
) -> ShadowNormReport:
    o = linalg.as_hermitian(o)
    pauli_bound = locality_bound(o, ens.num_qubits) if isinstance(ens, PauliTensorEnsemble) else None
    if method == "exact" and ens.enumerable:
        top = linalg.max_eigenvalue(shadow_matrix(ens, o))
        return ShadowNormReport(operator_id, math.sqrt(max(top, 0.0)), hs_bound(o), pauli_bound, "exact")
    if method not in ("exact", "monte_carlo"):
        raise ValueError(f"unknown method {method!r}")
    value, se = _shadow_norm_mc(ens, o, samples, seed)
    return ShadowNormReport(operator_id, value, hs_bound(o), pauli_bound, f"monte_carlo({samples})", se)


def _sampled_unitaries(ens: UnitaryEnsemble, samples: int, seed: int) -> np.ndarray:
    keys = Stream(seed).children_keys(samples)
    if isinstance(ens, SampledCliffordEnsemble):
        return np.stack([ens.unitary_from_id(ens.member_id_from_tableau(t)) for t in ens.sample_tableaus(keys)])
    return ens.unitaries[ens.sample_members(keys)]


def _shadow_norm_mc(ens: UnitaryEnsemble, o: np.ndarray, samples: int, seed: int) -> tuple[float, float]:
    u = _sampled_unitaries(ens, samples, seed)
    inv = ens.gamma_inverse(o)
    inv = (inv + inv.conj().T) / 2
    coeff = np.einsum("kaj,ab,kbj->kj", u.conj(), inv, u).real ** 2
    a = np.einsum("kj,kaj,kbj->ab", coeff, u, u.conj()) / samples
    top, vec = linalg.top_eigenpair(a)
    per_sample = np.einsum("kj,kj->k", coeff, np.abs(np.einsum("a,kaj->kj", vec.conj(), u)) ** 2)
    se_top = per_sample.std(ddof=1) / math.sqrt(samples) if samples > 1 else math.inf
    value = math.sqrt(max(top, 0.0))
    return value, float(se_top / (2 * value) if value > 0 else se_top)


def centered(o) -> np.ndarray:
    """O - tr(O)/dim * I."""
    o = np.asarray(o, dtype=complex)
    return o - np.trace(o) / o.shape[0] * np.eye(o.shape[0])


def _snapshot_table(ens: UnitaryEnsemble) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Every (member, outcome) pair with its weight, column and dense inverse snapshot."""
    k = len(ens.weights)
    members = np.repeat(np.arange(k), ens.dim)
    outcomes = np.tile(np.arange(ens.dim), k)
    cols = ens.unitaries[members, :, outcomes]
    return ens.weights[members], cols, ens.inverse_snapshots(members, outcomes)


def estimator_moments(ens: UnitaryEnsemble, o, rho) -> tuple[float, float]:
    """Exact mean and variance of tr(O rho_hat) by enumerating (U, j)."""
    o = np.asarray(o, dtype=complex)
    rho = np.asarray(getattr(rho, "op", rho), dtype=complex)
    w, cols, snaps = _snapshot_table(ens)
    p = w * np.einsum("na,ab,nb->n", cols.conj(), rho, cols).real
    vals = np.einsum("jk,nkj->n", o, snaps).real
    mean = float(p @ vals)
    return mean, float(max(p @ vals**2 - mean**2, 0.0))


def shadow_estimator_variance(ens: UnitaryEnsemble, o, rho) -> float:
    return estimator_moments(ens, o, rho)[1]


def class_constant_table(ens: UnitaryEnsemble, povms: dict, l: LossFunction, labels=None) -> dict:
    """Squared shadow norm of each centered conditional loss operator, keyed (id, y)."""
    labels = l.labels if labels is None else tuple(labels)
    table = {}
    for cid, m in povms.items():
        ops = conditional_loss_stack(m, l)
        for y in labels:
            table[(cid, int(y))] = shadow_norm(ens, centered(ops[y])).shadow_norm ** 2
    return table


def class_constant_v(ens: UnitaryEnsemble, cstar, l: LossFunction, labels=None) -> float:
    """V = max over members of C* and labels y of ||L_M(y) - tr(L_M(y))/dim I||^2_shadow."""
    povms = dict(cstar.items()) if hasattr(cstar, "items") else dict(cstar)
    if not povms:
        raise EmptyInputError("empty extreme-point set")
    return max(class_constant_table(ens, povms, l, labels).values())


def tail_bound(n: int, epsilon: float, variance: float, num_observables: int = 1) -> float:
    """2 m exp(-n eps^2 / (4 var)); equals 0 for a zero-variance estimator."""
    if variance <= 0:
        return 0.0
    return 2.0 * num_observables * math.exp(-n * epsilon**2 / (4.0 * variance))


@dataclass(frozen=True)
class ConcentrationReport:
    n: int
    epsilon: float
    trials: int
    exact_loss: float
    variance: float
    value_range: float
    bound: float
    empirical: float
    allowed: float
    in_validity_range: bool
    passed: bool
    ensemble: str

    def to_dict(self) -> dict:
        return asdict(self)


def loss_estimator_moments(ens: UnitaryEnsemble, source: LabeledStateSource, m: Povm, l: LossFunction):
    """Exact mean, variance and value range of one per-sample shadow loss.

    The randomness covers the source atom, the ensemble member and the
    measurement outcome.
    """
    w, cols, snaps = _snapshot_table(ens)
    ops = conditional_loss_stack(m, l)
    probs, values = [], []
    for p_atom, state, y in source.atoms():
        amp = np.abs(cols.conj() @ state.amplitudes) ** 2
        probs.append(p_atom * w * amp)
        values.append(np.einsum("jk,nkj->n", ops[y], snaps).real)
    probs = np.concatenate(probs)
    values = np.concatenate(values)
    mean = float(probs @ values)
    var = float(max(probs @ values**2 - mean**2, 0.0))
    support = values[probs > 0]
    return mean, var, float(support.max() - support.min())


def verify_concentration(
    ens: UnitaryEnsemble,
    source: LabeledStateSource,
    m: Povm,
    l: LossFunction,
    n: int,
    epsilon: float,
    trials: int,
    seed: int = 0,
) -> ConcentrationReport:
    """Monte Carlo check of P(|L_hat - L_D| > eps) <= 2 exp(-n eps^2 / (4 var)).

    Trial ``t`` draws its samples from stream ``derive(seed, t, 0)`` and its
    shadows from ``derive(seed, t, 1)``.
    """
    exact = expected_loss(m, l, source)
    mean, var, value_range = loss_estimator_moments(ens, source, m, l)
    bound = tail_bound(n, epsilon, var)
    trial_keys = Stream(seed).children_keys(trials)
    sample_keys = derive_keys(derive_keys(trial_keys, 0)[:, None], np.arange(n, dtype=np.uint64)[None, :])
    shadow_keys = derive_keys(derive_keys(trial_keys, 1)[:, None], np.arange(n, dtype=np.uint64)[None, :])
    atoms = atoms_from_keys(source, sample_keys.ravel())
    psi = np.stack([s.amplitudes for s in source.states])[atoms]
    labels = np.asarray(source.labels)[atoms]
    ds = _measure(ens, psi, labels, shadow_keys.ravel(), seed)
    estimates = shadow_loss_values(ds, m, l).reshape(trials, n).mean(axis=1)
    empirical = float(np.mean(np.abs(estimates - exact) > epsilon))
    b = min(bound, 1.0)
    allowed = bound + 3.0 * math.sqrt(b * (1.0 - b) / trials)
    valid = var > 0 and value_range > 0 and epsilon <= 2.0 * var / value_range
    return ConcentrationReport(
        n, epsilon, trials, exact, var, value_range, bound, empirical, allowed, bool(valid),
        bool(empirical <= allowed), ens.describe(),
    )
