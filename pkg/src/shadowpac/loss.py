"""Loss functions, loss observables and exact expected loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import LabelDomainError
from .states import LabeledStateSource, Povm, joint_state

Z_DECIMALS = 12


@dataclass(frozen=True, eq=False)
class LossFunction:
    """Loss table indexed as ``table[true_label, predicted_label]``, values in [0, 1]."""

    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 1:
            raise LabelDomainError("loss table must be a non-empty square array")
        if not np.all(np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
            raise ValueError("loss values must lie in [0, 1]")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def zero_one(cls, num_labels: int) -> "LossFunction":
        return cls(1.0 - np.eye(num_labels))

    @classmethod
    def constant(cls, num_labels: int, value: float) -> "LossFunction":
        return cls(np.full((num_labels, num_labels), float(value)))

    @property
    def num_labels(self) -> int:
        return self.table.shape[0]

    @property
    def labels(self) -> tuple:
        return tuple(range(self.num_labels))

    def __call__(self, y: int, y_hat: int) -> float:
        return float(self.table[y, y_hat])

    def image(self) -> np.ndarray:
        """Sorted distinct loss values, rounded to 12 decimals."""
        return np.unique(np.round(self.table, Z_DECIMALS))


@dataclass(frozen=True, eq=False)
class LossObservable:
    """POVM over loss values on the (state, label) joint space."""

    values: tuple
    operators: tuple

    def expectation(self, rho: np.ndarray) -> float:
        return float(sum(z * np.einsum("jk,kj->", op, rho).real for z, op in zip(self.values, self.operators)))


def _check_domain(m: Povm, l: LossFunction, labels=None) -> tuple:
    labels = l.labels if labels is None else tuple(int(y) for y in labels)
    if tuple(m.outcomes) != l.labels or labels != l.labels:
        raise LabelDomainError(
            f"POVM outcomes {m.outcomes}, loss labels {l.labels} and label set {labels} differ"
        )
    return labels


def build_loss_observable(m: Povm, l: LossFunction, labels=None) -> LossObservable:
    labels = _check_domain(m, l, labels)
    k = len(labels)
    rounded = np.round(l.table, Z_DECIMALS)
    values = l.image()
    ops = []
    for z in values:
        op = np.zeros((m.dim * k, m.dim * k), dtype=complex)
        for y in labels:
            for y_hat in labels:
                if rounded[y, y_hat] == z:
                    op += np.kron(m.effect(y_hat), linalg.basis_projector(k, y))
        ops.append(op)
    return LossObservable(tuple(float(z) for z in values), tuple(ops))


def conditional_loss_operator(m: Povm, l: LossFunction, y: int) -> np.ndarray:
    """L_M(y) = sum_yhat l(y, yhat) M_yhat."""
    if tuple(m.outcomes) != l.labels:
        raise LabelDomainError(f"POVM outcomes {m.outcomes} do not match loss labels {l.labels}")
    if not 0 <= int(y) < l.num_labels:
        raise LabelDomainError(f"unknown label {y!r}")
    return np.einsum("v,vjk->jk", l.table[int(y)], m.stacked())


def conditional_loss_stack(m: Povm, l: LossFunction) -> np.ndarray:
    """All L_M(y) stacked along the first axis, indexed by label."""
    if tuple(m.outcomes) != l.labels:
        raise LabelDomainError(f"POVM outcomes {m.outcomes} do not match loss labels {l.labels}")
    return np.einsum("yv,vjk->yjk", l.table, m.stacked())


def expected_loss(m: Povm, l: LossFunction, source: LabeledStateSource) -> float:
    """Exact L_D(M) = sum_atoms p <phi| L_M(y) |phi>."""
    if source.dim != m.dim:
        raise LabelDomainError(f"source dim {source.dim} does not match POVM dim {m.dim}")
    if source.num_labels > l.num_labels:
        raise LabelDomainError("source uses labels outside the loss domain")
    ops = conditional_loss_stack(m, l)
    total = 0.0
    for p, state, y in source.atoms():
        v = state.amplitudes
        total += p * float(np.vdot(v, ops[y] @ v).real)
    return total


def expected_loss_via_observable(m: Povm, l: LossFunction, source: LabeledStateSource) -> float:
    """The same quantity through the joint state and the loss observable."""
    obs = build_loss_observable(m, l)
    return obs.expectation(joint_state(source, l.num_labels).op)
