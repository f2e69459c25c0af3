"""States, POVMs, labeled sources and Born-rule sampling."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .errors import DimensionError, InvalidPovmError, InvalidStateError, SampleConsumedError
from .rng import Stream, as_stream, uniforms

NORM_TOL = 1e-10
PROB_TOL = 1e-12
BORN_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.size < 1 or not np.all(np.isfinite(v)):
            raise InvalidStateError("amplitudes must be a finite non-empty vector")
        if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state norm {np.linalg.norm(v):.3e} is not 1")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def basis(cls, dim: int, j: int) -> "PureState":
        v = np.zeros(dim, dtype=complex)
        v[j] = 1.0
        return cls(v)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityOperator":
        return DensityOperator(linalg.projector(self.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    op: np.ndarray

    def __post_init__(self):
        m = linalg.as_hermitian(self.op)
        if abs(np.trace(m).real - 1.0) > linalg.TRACE_TOL:
            raise InvalidStateError(f"trace {np.trace(m).real!r} is not 1")
        if linalg.min_eigenvalue(m) < -linalg.PSD_TOL:
            raise InvalidStateError("density operator is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "op", m)

    @property
    def dim(self) -> int:
        return self.op.shape[0]


def as_density(state) -> DensityOperator:
    if isinstance(state, DensityOperator):
        return state
    if isinstance(state, PureState):
        return state.density()
    return DensityOperator(state)


@dataclass(frozen=True, eq=False)
class Povm:
    """A measurement with ordered integer outcomes and one effect per outcome."""

    outcomes: tuple
    effects: tuple

    def __post_init__(self):
        outcomes = tuple(int(o) for o in self.outcomes)
        if len(outcomes) != len(self.effects) or not outcomes:
            raise InvalidPovmError("need exactly one effect per outcome")
        if len(set(outcomes)) != len(outcomes):
            raise InvalidPovmError("duplicate outcome labels")
        effects = []
        for e in self.effects:
            try:
                m = linalg.as_hermitian(e)
            except ValueError as exc:
                raise InvalidPovmError(str(exc)) from exc
            if linalg.min_eigenvalue(m) < -linalg.PSD_TOL:
                raise InvalidPovmError("effect is not positive semidefinite")
            m.setflags(write=False)
            effects.append(m)
        dim = effects[0].shape[0]
        if any(e.shape != (dim, dim) for e in effects):
            raise InvalidPovmError("effects have different dimensions")
        total = np.sum(effects, axis=0)
        if np.max(np.abs(total - np.eye(dim))) > linalg.COMPLETENESS_TOL:
            raise InvalidPovmError("effects do not sum to the identity")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "effects", tuple(effects))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def effect(self, outcome: int) -> np.ndarray:
        return self.effects[self.outcomes.index(outcome)]

    def stacked(self) -> np.ndarray:
        return np.stack(self.effects)

    @classmethod
    def projective(cls, basis: np.ndarray, outcomes: Sequence[int] | None = None) -> "Povm":
        """Rank-one projective measurement on the columns of a unitary ``basis``."""
        basis = np.asarray(basis, dtype=complex)
        outcomes = range(basis.shape[1]) if outcomes is None else outcomes
        return cls(tuple(outcomes), tuple(linalg.projector(basis[:, k]) for k in range(basis.shape[1])))

    @classmethod
    def from_projectors(cls, projectors: Sequence[np.ndarray]) -> "Povm":
        return cls(tuple(range(len(projectors))), tuple(projectors))

    @classmethod
    def trivial(cls, dim: int, outcome: int = 0) -> "Povm":
        return cls((outcome,), (np.eye(dim, dtype=complex),))


def mix_povms(weights: Sequence[float], povms: Sequence[Povm]) -> Povm:
    """Convex combination sum_k w_k M^k, effect by effect."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise InvalidPovmError("mixing weights must be a probability vector")
    outcomes = povms[0].outcomes
    if any(p.outcomes != outcomes for p in povms):
        raise InvalidPovmError("mixed POVMs must share outcomes")
    stacked = np.einsum("k,kvij->vij", w, np.stack([p.stacked() for p in povms]))
    return Povm(outcomes, tuple(stacked))


def born_probabilities(m: Povm, rho) -> np.ndarray:
    """tr(M_v rho) for every outcome, clamped and renormalized.

    Raises InvalidPovmError when the raw total misses 1 by more than 1e-8.
    """
    r = as_density(rho).op
    if r.shape != (m.dim, m.dim):
        raise DimensionError(f"state dim {r.shape[0]} does not match POVM dim {m.dim}")
    p = np.einsum("vjk,kj->v", m.stacked(), r).real
    return _normalize_probabilities(p)


def _normalize_probabilities(p: np.ndarray) -> np.ndarray:
    total = p.sum(axis=-1, keepdims=True)
    if np.any(np.abs(total - 1.0) > BORN_TOL):
        raise InvalidPovmError(f"outcome probabilities sum to {np.ravel(total)[0]!r}")
    p = np.clip(p, 0.0, 1.0)
    return p / p.sum(axis=-1, keepdims=True)


def sample_index(probs: np.ndarray, u) -> np.ndarray:
    """Inverse-CDF draw along the last axis with uniforms ``u``."""
    cdf = np.cumsum(probs, axis=-1)
    u = np.asarray(u)[..., None]
    idx = np.sum(cdf <= u * cdf[..., -1:], axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1)


def born_measure(m: Povm, rho, rng, counter: int = 0) -> int:
    """Draw one outcome of ``m`` on ``rho`` with probability tr(M_v rho)."""
    p = born_probabilities(m, rho)
    u = as_stream(rng).uniform(counter)
    return m.outcomes[int(sample_index(p, u))]


@dataclass(eq=False)
class LabeledSample:
    """One physical training copy. It may be measured exactly once."""

    state: PureState
    label: int
    atom: int = -1
    consumed: bool = field(default=False, compare=False)

    def consume(self) -> PureState:
        if self.consumed:
            raise SampleConsumedError("sample has already been measured")
        self.consumed = True
        return self.state


@dataclass(frozen=True, eq=False)
class LabeledStateSource:
    """Finite-support distribution over (pure state, label) pairs."""

    probabilities: tuple
    states: tuple
    labels: tuple
    rng_seed: int = 0

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        states = tuple(s if isinstance(s, PureState) else PureState(s) for s in self.states)
        if not (len(p) == len(states) == len(self.labels)) or len(p) == 0:
            raise InvalidStateError("atoms need matching probabilities, states and labels")
        if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
            raise InvalidStateError("atom probabilities must be nonnegative and sum to 1")
        if len({s.dim for s in states}) != 1:
            raise DimensionError("all atom states must share one dimension")
        if any(int(y) < 0 for y in self.labels):
            raise InvalidStateError("labels must be nonnegative integers")
        object.__setattr__(self, "probabilities", tuple(float(x) for x in p))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "labels", tuple(int(y) for y in self.labels))

    @classmethod
    def from_atoms(cls, atoms, rng_seed: int = 0) -> "LabeledStateSource":
        probs, states, labels = zip(*atoms)
        return cls(probs, states, labels, rng_seed)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def num_labels(self) -> int:
        return max(self.labels) + 1

    def with_seed(self, seed: int) -> "LabeledStateSource":
        return LabeledStateSource(self.probabilities, self.states, self.labels, seed)

    def atoms(self):
        return zip(self.probabilities, self.states, self.labels)


def atoms_from_keys(source: LabeledStateSource, keys: np.ndarray) -> np.ndarray:
    """Atom index for each per-sample stream key (counter 0)."""
    cdf = np.cumsum(source.probabilities)
    u = uniforms(keys, 0) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def draw_atoms(source: LabeledStateSource, n: int, seed: int | None = None, start: int = 0) -> np.ndarray:
    """Atom indices of samples ``start .. start+n-1``; sample i uses stream (seed, i)."""
    key = source.rng_seed if seed is None else seed
    return atoms_from_keys(source, Stream(key).children_keys(n, start))


def draw_samples(
    source: LabeledStateSource, n: int, seed: int | None = None, workers: int = 1
) -> list[LabeledSample]:
    """Draw ``n`` i.i.d. labeled samples; identical for any ``workers`` value."""
    if n < 1:
        raise ValueError("n must be positive")
    if workers <= 1:
        atoms = draw_atoms(source, n, seed)
    else:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        with ThreadPoolExecutor(workers) as pool:
            parts = pool.map(
                lambda ab: draw_atoms(source, ab[1] - ab[0], seed, ab[0]), zip(bounds[:-1], bounds[1:])
            )
            atoms = np.concatenate(list(parts))
    return [LabeledSample(source.states[a], source.labels[a], int(a)) for a in atoms]


def joint_state(source: LabeledStateSource, num_labels: int | None = None) -> DensityOperator:
    """rho_XY = sum_atoms p |phi><phi| (x) |y><y| with the state register first."""
    k = source.num_labels if num_labels is None else num_labels
    if k < source.num_labels:
        raise DimensionError("label register too small for the source labels")
    rho = np.zeros((source.dim * k, source.dim * k), dtype=complex)
    for p, state, y in source.atoms():
        rho += p * np.kron(linalg.projector(state.amplitudes), linalg.basis_projector(k, y))
    return DensityOperator(rho)


def random_povm(dim: int, num_outcomes: int, rng: np.random.Generator, rank: int | None = None) -> Povm:
    """Random POVM: normalize Wishart-like positive operators to sum to I."""
    rank = dim if rank is None else rank
    gs = []
    for _ in range(num_outcomes):
        a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
        gs.append(a @ a.conj().T)
    total = np.sum(gs, axis=0)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    effects = [inv_sqrt @ g @ inv_sqrt for g in gs]
    effects = [(e + e.conj().T) / 2 for e in effects]
    effects[-1] = np.eye(dim) - np.sum(effects[:-1], axis=0)
    return Povm(tuple(range(num_outcomes)), tuple(effects))


def random_projective_povm(dim: int, num_outcomes: int, rng: np.random.Generator) -> Povm:
    """Projective POVM grouping the columns of a Haar unitary into outcome blocks."""
    u = linalg.random_unitary(dim, rng)
    groups = np.array_split(np.arange(dim), num_outcomes)
    effects = [u[:, g] @ u[:, g].conj().T for g in groups]
    return Povm(tuple(range(num_outcomes)), tuple(effects))
