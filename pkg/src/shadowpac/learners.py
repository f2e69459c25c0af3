"""QSRM, the naive fresh-samples baseline, sample sizes and PAC evaluation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .concepts import ConceptClass, ExtremePointSet, extreme_points
from .ensembles import UnitaryEnsemble
from .errors import EmptyInputError, InsufficientSamplesError, RangeError
from .loss import LossFunction, build_loss_observable, expected_loss
from .rng import Stream, as_stream, uniforms
from .shadows import ShadowDataset, generate_shadows, shadow_loss_matrix
from .states import LabeledSample, LabeledStateSource, _normalize_probabilities, draw_samples, sample_index


@dataclass
class LearnerOutput:
    chosen_id: str
    empirical_losses: dict
    n_used: int
    ensemble: str
    seed: int
    dataset: ShadowDataset | None = field(default=None, repr=False)


def _argmin_id(losses: dict) -> str:
    best = min(losses.values())
    return min(cid for cid, v in losses.items() if v == best)


def _members(cls) -> tuple[tuple, tuple]:
    if isinstance(cls, ExtremePointSet):
        return cls.ids, tuple(m for _, m in cls.items())
    if isinstance(cls, ConceptClass):
        return cls.ids, cls.members
    ids = tuple(cls)
    return ids, tuple(cls[i] for i in ids)


def qsrm_learn(
    cstar, samples: Sequence[LabeledSample], ens: UnitaryEnsemble, l: LossFunction, rng
) -> LearnerOutput:
    """Quantum shadow risk minimization.

    One shadow per sample (shadow i from stream derive(seed, i)); every
    candidate is scored on that same dataset and the smallest empirical loss
    wins, ties going to the lexicographically first id.
    """
    ids, povms = _members(cstar)
    if not ids or not samples:
        raise EmptyInputError("QSRM needs a nonempty class and sample set")
    stream = as_stream(rng)
    ds = generate_shadows(ens, samples, stream.key)
    values = shadow_loss_matrix(ds, povms, l)
    losses = {cid: float(np.sum(row) / len(ds)) for cid, row in zip(ids, values)}
    return LearnerOutput(_argmin_id(losses), losses, len(samples), ens.describe(), stream.key, ds)


def naive_qerm_learn(c, samples: Sequence[LabeledSample], l: LossFunction, rng) -> LearnerOutput:
    """Fresh samples per concept: sample i goes to concept i mod |C|.

    Each sample is measured once with the loss observable of its concept and
    the concept with the smallest block mean of observed losses wins.
    """
    ids, povms = _members(c)
    if not ids or not samples:
        raise EmptyInputError("naive QERM needs a nonempty class and sample set")
    n = len(samples)
    if n < len(ids):
        raise InsufficientSamplesError(f"{n} samples cannot cover {len(ids)} concepts")
    stream = as_stream(rng)
    keys = stream.children_keys(n)
    u = uniforms(keys, 0)
    psi = np.stack([s.consume().amplitudes for s in samples])
    labels = np.array([s.label for s in samples])
    k = l.num_labels
    losses = {}
    for b, (cid, m) in enumerate(zip(ids, povms)):
        idx = np.arange(b, n, len(ids))
        obs = build_loss_observable(m, l)
        joint = np.einsum("na,ny->nay", psi[idx], np.eye(k)[labels[idx]]).reshape(len(idx), -1)
        ops = np.stack(obs.operators)
        probs = np.einsum("na,zab,nb->nz", joint.conj(), ops, joint).real
        outcome = sample_index(_normalize_probabilities(probs), u[idx])
        losses[cid] = float(np.mean(np.asarray(obs.values)[outcome]))
    return LearnerOutput(_argmin_id(losses), losses, n, "none", stream.key)


def theorem1_sample_size(
    v_cstar: float,
    size_cstar: int,
    epsilon: float,
    delta: float,
    constant: float = 1.0,
    *,
    v_floor: float = 1e-6,
    label_factor: int = 1,
) -> int:
    """ceil(constant * 4 V / (eps/2)^2 * ln(2 |C*| label_factor / delta)).

    4 from the variance-bound exponent, 2 from the two-sided tail, eps/2 from
    splitting the excess loss between the two estimation steps.
    """
    if not 0 < epsilon < 1 or not 0 < delta < 1:
        raise RangeError("epsilon and delta must lie in (0, 1)")
    if v_cstar < 0 or size_cstar < 1:
        raise RangeError("V must be nonnegative and |C*| positive")
    v = max(v_cstar, v_floor)
    raw = constant * 4.0 * v / (epsilon / 2.0) ** 2 * math.log(2.0 * size_cstar * label_factor / delta)
    return max(1, math.ceil(raw))


@dataclass
class PacTrialReport:
    learner: str
    n: int
    trials: int
    epsilon: float
    delta: float | None
    success_count: int
    opt_value: float
    excess_losses: list
    chosen_ids: list
    exact_losses: list

    @property
    def success_fraction(self) -> float:
        return self.success_count / self.trials

    def to_dict(self) -> dict:
        d = asdict(self)
        d["success_fraction"] = self.success_fraction
        return d


def trial_streams(seed: int, trial: int) -> tuple[int, int]:
    """(sample seed, learner seed) of one PAC trial."""
    base = Stream(seed).child(trial)
    return base.child(0).key, base.child(1).key


def run_trial(
    learner: str,
    c: ConceptClass,
    cstar: ExtremePointSet,
    source: LabeledStateSource,
    l: LossFunction,
    ens: UnitaryEnsemble,
    n: int,
    seed: int,
    trial: int,
) -> LearnerOutput:
    sample_seed, learner_seed = trial_streams(seed, trial)
    samples = draw_samples(source, n, seed=sample_seed)
    if learner == "qsrm":
        out = qsrm_learn(cstar, samples, ens, l, learner_seed)
    elif learner == "naive":
        out = naive_qerm_learn(c, samples, l, learner_seed)
    else:
        raise ValueError(f"unknown learner {learner!r}")
    out.dataset = None
    return out


def pac_evaluate(
    learner: str,
    c: ConceptClass,
    source: LabeledStateSource,
    l: LossFunction,
    ens: UnitaryEnsemble,
    n: int,
    epsilon: float,
    trials: int,
    seed: int,
    *,
    delta: float | None = None,
    cstar: ExtremePointSet | None = None,
    threads: int = 1,
) -> PacTrialReport:
    """Run independent learning trials and score them by exact excess loss.

    ``opt`` is the exact minimum of L_D over the extreme points. The report
    does not depend on ``threads``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    cstar = extreme_points(c) if cstar is None else cstar
    exact = {cid: expected_loss(m, l, source) for cid, m in c.items()}
    opt = min(exact[cid] for cid in cstar.ids)

    def one(t: int) -> str:
        return run_trial(learner, c, cstar, source, l, ens, n, seed, t).chosen_id

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            chosen = list(pool.map(one, range(trials)))
    else:
        chosen = [one(t) for t in range(trials)]
    losses = [exact[cid] for cid in chosen]
    excess = [v - opt for v in losses]
    success = sum(1 for e in excess if e <= epsilon)
    return PacTrialReport(learner, n, trials, epsilon, delta, success, opt, excess, chosen, losses)
