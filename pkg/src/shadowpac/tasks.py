"""Built-in learning tasks: (concept class, source, loss) triples."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .concepts import ConceptClass, load_class
from .errors import ConfigError
from .loss import LossFunction
from .states import LabeledStateSource, Povm, PureState, mix_povms, random_projective_povm

TASK_NAMES = ("state_discrimination", "random_projective_class", "custom_file")


@dataclass(frozen=True)
class Task:
    name: str
    concept_class: ConceptClass
    source: LabeledStateSource
    loss: LossFunction


def discrimination_states(qubits: int, angle: float) -> tuple[PureState, PureState]:
    """|0...0> and cos(angle)|0...0> + sin(angle)|1...1>."""
    dim = 2**qubits
    a = np.zeros(dim, dtype=complex)
    a[0] = 1.0
    b = np.zeros(dim, dtype=complex)
    b[0] = math.cos(angle)
    b[-1] = math.sin(angle)
    return PureState(a), PureState(b)


def helstrom_povm(states, priors) -> Povm:
    """Minimum-error projective measurement for two pure states."""
    lam = priors[0] * linalg.projector(states[0].amplitudes) - priors[1] * linalg.projector(states[1].amplitudes)
    w, v = np.linalg.eigh(lam)
    pos = v[:, w > 1e-12]
    p0 = pos @ pos.conj().T
    return Povm((0, 1), (p0, np.eye(lam.shape[0]) - p0))


def swapped(m: Povm) -> Povm:
    return Povm(m.outcomes, tuple(reversed(m.effects)))


def state_discrimination(qubits: int = 1, angle: float = math.pi / 2, prior: float = 0.5, class_size: int = 2) -> Task:
    """Two-state discrimination with C* = {Helstrom, swapped Helstrom}.

    Classes larger than two are padded with evenly spaced mixtures of the
    two, which enlarge C without changing C*.
    """
    if class_size < 2:
        raise ConfigError("class_size must be at least 2")
    states = discrimination_states(qubits, angle)
    priors = (prior, 1.0 - prior)
    best = helstrom_povm(states, priors)
    worst = swapped(best)
    ids = ["helstrom", "swapped"]
    members = [best, worst]
    extra = class_size - 2
    for k in range(extra):
        a = (k + 1) / (extra + 1)
        ids.append(f"mix_{k:03d}")
        members.append(mix_povms([a, 1.0 - a], [best, worst]))
    source = LabeledStateSource(priors, states, (0, 1))
    return Task("state_discrimination", ConceptClass(tuple(ids), tuple(members)), source, LossFunction.zero_one(2))


def random_projective_class(
    qubits: int = 1, class_size: int = 4, atoms: int = 2, mixtures: int = 0, labels: int = 2, seed: int = 0
) -> Task:
    """Random projective POVMs plus optional random mixtures, random labeled source."""
    rng = np.random.default_rng(seed)
    dim = 2**qubits
    gens = [random_projective_povm(dim, labels, rng) for _ in range(class_size)]
    ids = [f"proj_{k:03d}" for k in range(class_size)]
    members = list(gens)
    for k in range(mixtures):
        members.append(mix_povms(rng.dirichlet(np.ones(class_size)), gens))
        ids.append(f"mix_{k:03d}")
    probs = rng.dirichlet(np.ones(atoms))
    states = [PureState(linalg.random_pure_state(dim, rng)) for _ in range(atoms)]
    ys = [k % labels for k in range(atoms)]
    source = LabeledStateSource(tuple(probs / probs.sum()), tuple(states), tuple(ys))
    return Task(
        "random_projective_class", ConceptClass(tuple(ids), tuple(members)), source, LossFunction.zero_one(labels)
    )


def custom_file(class_file: str, atoms: list, loss: str | list = "zero_one") -> Task:
    """Class from a file; atoms given as {p, amplitudes: [[re, im], ...], label}."""
    c = load_class(class_file)
    probs, states, ys = [], [], []
    for atom in atoms:
        probs.append(float(atom["p"]))
        states.append(PureState.normalized([complex(re, im) for re, im in atom["amplitudes"]]))
        ys.append(int(atom["label"]))
    k = len(c.members[0].outcomes)
    l = LossFunction.zero_one(k) if loss == "zero_one" else LossFunction(np.asarray(loss, dtype=float))
    return Task("custom_file", c, LabeledStateSource(tuple(probs), tuple(states), tuple(ys)), l)


def build_task(params: dict) -> Task:
    params = dict(params)
    name = params.pop("name", None)
    builders = {
        "state_discrimination": state_discrimination,
        "random_projective_class": random_projective_class,
        "custom_file": custom_file,
    }
    if name not in builders:
        raise ConfigError(f"unknown task {name!r}; expected one of {', '.join(TASK_NAMES)}")
    try:
        return builders[name](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for task {name!r}: {exc}") from exc
