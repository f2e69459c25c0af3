"""Classical shadows: snapshot generation, datasets and shadow losses."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import linalg
from .ensembles import (
    PauliTensorEnsemble,
    SampledCliffordEnsemble,
    UnitaryEnsemble,
    make_ensemble,
)
from .errors import DimensionError, EmptyDatasetError, UnsupportedError
from .loss import LossFunction, conditional_loss_stack
from .rng import as_stream, derive_keys, uniforms
from .states import LabeledSample, Povm, _normalize_probabilities, sample_index

DATASET_FORMAT = "shadowpac.shadow-dataset"
DATASET_VERSION = 1
_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class ShadowSnapshot:
    unitary_id: str
    outcome: int


@dataclass(frozen=True, eq=False)
class ClassicalShadow:
    snapshot: ShadowSnapshot
    matrix: np.ndarray
    label: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(eq=False)
class ShadowDataset:
    """Compact snapshots of ``n`` shadows plus lazily rebuilt dense matrices.

    ``unitaries`` is only set for non-enumerable ensembles, where each
    shadow carries its own sampled unitary.
    """

    ensemble: UnitaryEnsemble
    members: np.ndarray
    outcomes: np.ndarray
    labels: np.ndarray
    seed: int | None = None
    unitary_ids: tuple | None = None
    unitaries: np.ndarray | None = None
    _dense: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.outcomes)

    @property
    def dim(self) -> int:
        return self.ensemble.dim

    def unitary_id(self, i: int) -> str:
        if self.unitary_ids is not None:
            return self.unitary_ids[i]
        return self.ensemble.member_id(int(self.members[i]))

    def dense(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Dense inverse snapshots for shadows ``start:stop``."""
        if self._dense is not None:
            return self._dense[start:stop]
        stop = len(self) if stop is None else stop
        if isinstance(self.ensemble, SampledCliffordEnsemble):
            cols = self.unitaries[np.arange(start, stop), :, self.outcomes[start:stop]]
            omega = np.einsum("na,nb->nab", cols, cols.conj())
            return (self.dim + 1) * omega - np.eye(self.dim)
        return self.ensemble.inverse_snapshots(self.members[start:stop], self.outcomes[start:stop])

    def materialize(self) -> np.ndarray:
        if self._dense is None:
            self._dense = self.dense()
        return self._dense

    def chunks(self):
        step = max(1, _CHUNK_ENTRIES // (self.dim * self.dim))
        for start in range(0, len(self), step):
            stop = min(len(self), start + step)
            yield start, stop, self.dense(start, stop)

    def __getitem__(self, i: int) -> ClassicalShadow:
        i = int(i)
        snapshot = ShadowSnapshot(self.unitary_id(i), int(self.outcomes[i]))
        return ClassicalShadow(snapshot, self.dense(i, i + 1)[0], int(self.labels[i]))

    def mean_matrix(self) -> np.ndarray:
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for _, _, block in self.chunks():
            total += block.sum(axis=0)
        return total / len(self)


def _rotated_amplitudes(ens: UnitaryEnsemble, unitaries: np.ndarray, psi: np.ndarray) -> np.ndarray:
    # (U^dagger psi)_j for every shadow
    return np.einsum("naj,na->nj", unitaries.conj(), psi)


def generate_shadows(
    ens: UnitaryEnsemble, samples: Sequence[LabeledSample], seed: int
) -> ShadowDataset:
    """Measure every sample once and return the shadow dataset.

    Shadow ``i`` draws all of its randomness from stream ``derive(seed, i)``.
    """
    n = len(samples)
    if n == 0:
        raise EmptyDatasetError("no samples to measure")
    if not getattr(ens, "allow_incomplete", False):
        ens.check_complete()
    psi = np.stack([s.consume().amplitudes for s in samples])
    if psi.shape[1] != ens.dim:
        raise DimensionError(f"sample dim {psi.shape[1]} does not match ensemble dim {ens.dim}")
    labels = np.array([s.label for s in samples], dtype=np.int64)
    keys = derive_keys(np.uint64(int(seed) & ((1 << 64) - 1)), np.arange(n, dtype=np.uint64))
    return _measure(ens, psi, labels, keys, seed)


def _measure(ens, psi, labels, keys, seed) -> ShadowDataset:
    n = len(keys)
    if isinstance(ens, SampledCliffordEnsemble):
        tableaus = ens.sample_tableaus(keys)
        ids = tuple(ens.member_id_from_tableau(t) for t in tableaus)
        unitaries = np.stack([ens.unitary_from_id(i) for i in ids])
        amps = _rotated_amplitudes(ens, unitaries, psi)
        probs = _normalize_probabilities(np.abs(amps) ** 2)
        outcomes = sample_index(probs, uniforms(keys, ens.outcome_counter)).astype(np.int64)
        return ShadowDataset(ens, np.zeros(n, dtype=np.int64), outcomes, labels, seed, ids, unitaries)
    members = ens.sample_members(keys).astype(np.int64)
    outcomes = np.empty(n, dtype=np.int64)
    step = max(1, _CHUNK_ENTRIES // (ens.dim * ens.dim))
    u = uniforms(keys, ens.outcome_counter)
    for start in range(0, n, step):
        sl = slice(start, start + step)
        amps = _rotated_amplitudes(ens, ens.unitaries[members[sl]], psi[sl])
        probs = _normalize_probabilities(np.abs(amps) ** 2)
        outcomes[sl] = sample_index(probs, u[sl])
    return ShadowDataset(ens, members, outcomes, labels, seed)


def generate_shadow(ens: UnitaryEnsemble, sample: LabeledSample, rng) -> ClassicalShadow:
    """One shadow from one sample, all randomness from the stream ``rng``."""
    psi = sample.consume().amplitudes[None, :]
    if psi.shape[1] != ens.dim:
        raise DimensionError(f"sample dim {psi.shape[1]} does not match ensemble dim {ens.dim}")
    keys = np.array([as_stream(rng).key], dtype=np.uint64)
    return _measure(ens, psi, np.array([sample.label]), keys, None)[0]


def shadow_loss_single(shadow: ClassicalShadow, m: Povm, l: LossFunction) -> float:
    """tr(L_M(y) rho_hat); not confined to [0, 1] since rho_hat is not a state."""
    op = conditional_loss_stack(m, l)[shadow.label]
    if op.shape != shadow.matrix.shape:
        raise DimensionError("shadow and POVM dimensions differ")
    return float(linalg.trace_product(op, shadow.matrix).real)


def shadow_loss_values(ds: ShadowDataset, m: Povm, l: LossFunction) -> np.ndarray:
    """Per-shadow losses for every shadow in ``ds``."""
    ops = conditional_loss_stack(m, l)
    if ops.shape[1] != ds.dim:
        raise DimensionError("dataset and POVM dimensions differ")
    out = np.empty(len(ds))
    for start, stop, block in ds.chunks():
        out[start:stop] = np.einsum("njk,nkj->n", ops[ds.labels[start:stop]], block).real
    return out


def shadow_loss_matrix(ds: ShadowDataset, povms: Sequence[Povm], l: LossFunction) -> np.ndarray:
    """Per-shadow losses for many predictors at once, shape (len(povms), n).

    Dense snapshots are built once and shared by every predictor.
    """
    stacks = np.stack([conditional_loss_stack(m, l) for m in povms])
    out = np.empty((len(povms), len(ds)))
    for start, stop, block in ds.chunks():
        ops = stacks[:, ds.labels[start:stop]]
        out[:, start:stop] = np.einsum("cnjk,nkj->cn", ops, block).real
    return out


def shadow_empirical_loss(ds: ShadowDataset, m: Povm, l: LossFunction) -> float:
    """Mean of the per-shadow losses, summed pairwise in index order."""
    if len(ds) == 0:
        raise EmptyDatasetError("empty shadow dataset")
    return float(np.sum(shadow_loss_values(ds, m, l)) / len(ds))


def factored_expectation(ens: PauliTensorEnsemble, shadow: ClassicalShadow, factors: Sequence[np.ndarray]) -> float:
    """tr((A_1 (x) ... (x) A_d) rho_hat) from per-qubit traces only."""
    index = ens.member_index(shadow.snapshot.unitary_id)
    local = ens.local_snapshots(np.array([index]), np.array([shadow.snapshot.outcome]))[0]
    value = 1.0 + 0j
    for q, a in enumerate(factors):
        value *= np.einsum("jk,kj->", np.asarray(a, dtype=complex), local[q])
    return float(value.real)


def save_dataset(ds: ShadowDataset, path) -> Path:
    """Write a header line then one JSON line per shadow."""
    path = Path(path)
    if ds.ensemble.kind == "custom":
        raise UnsupportedError("custom ensembles cannot be persisted by kind alone")
    header = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "dim": ds.dim,
        "ensemble": ds.ensemble.describe(),
        "seed": ds.seed,
        "n": len(ds),
    }
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for i in range(len(ds)):
            record = {
                "index": i,
                "unitary_id": ds.unitary_id(i),
                "outcome": int(ds.outcomes[i]),
                "label": int(ds.labels[i]),
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return path


def load_dataset(path) -> ShadowDataset:
    with Path(path).open(encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != DATASET_FORMAT or header.get("version") != DATASET_VERSION:
            raise ValueError(f"{path} is not a version {DATASET_VERSION} shadow dataset")
        records = [json.loads(line) for line in fh if line.strip()]
    if len(records) != header["n"]:
        raise ValueError(f"{path}: header says n={header['n']} but found {len(records)} records")
    records.sort(key=lambda r: r["index"])
    ens = make_ensemble(header["ensemble"])
    outcomes = np.array([r["outcome"] for r in records], dtype=np.int64)
    labels = np.array([r["label"] for r in records], dtype=np.int64)
    ids = [r["unitary_id"] for r in records]
    if isinstance(ens, SampledCliffordEnsemble):
        unitaries = np.stack([ens.unitary_from_id(i) for i in ids])
        return ShadowDataset(ens, np.zeros(len(ids), dtype=np.int64), outcomes, labels, header["seed"], tuple(ids), unitaries)
    members = np.array([ens.member_index(i) for i in ids], dtype=np.int64)
    return ShadowDataset(ens, members, outcomes, labels, header["seed"])
