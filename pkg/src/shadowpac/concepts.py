"""Finite concept classes of POVMs and their extreme points."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from . import linalg
from .errors import EmptyInputError, InvalidPovmError
from .loss import LossFunction, expected_loss
from .states import LabeledStateSource, Povm, mix_povms

CLASS_FORMAT = "shadowpac.concept-class"


@dataclass(frozen=True, eq=False)
class ConceptClass:
    ids: tuple
    members: tuple

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        members = tuple(self.members)
        if not members:
            raise EmptyInputError("a concept class needs at least one member")
        if len(ids) != len(members) or len(set(ids)) != len(ids):
            raise ValueError("concept ids must be unique, one per member")
        first = members[0]
        for m in members:
            if m.dim != first.dim or m.outcomes != first.outcomes:
                raise InvalidPovmError("all members must share dimension and outcomes")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "members", members)

    @classmethod
    def from_dict(cls, povms: dict) -> "ConceptClass":
        return cls(tuple(povms), tuple(povms.values()))

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, cid: str) -> Povm:
        return self.members[self.ids.index(cid)]

    def items(self):
        return zip(self.ids, self.members)

    @property
    def dim(self) -> int:
        return self.members[0].dim


@dataclass(frozen=True)
class Certificate:
    """How a dropped member is expressed through retained ones."""

    member: str
    weights: dict
    residual: float


@dataclass(frozen=True, eq=False)
class ExtremePointSet:
    parent: ConceptClass
    ids: tuple
    parent_size: int
    duplicates: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    flagged: tuple = ()
    tol: float = 1e-9

    def __len__(self) -> int:
        return len(self.ids)

    def items(self):
        return ((cid, self.parent[cid]) for cid in self.ids)

    def as_class(self) -> ConceptClass:
        return ConceptClass(self.ids, tuple(self.parent[c] for c in self.ids))

    def to_dict(self) -> dict:
        return {
            "extreme_ids": list(self.ids),
            "parent_size": self.parent_size,
            "duplicates": dict(self.duplicates),
            "flagged": list(self.flagged),
            "residuals": dict(self.residuals),
            "certificates": {k: asdict(v) for k, v in self.certificates.items()},
        }


def povm_to_vector(m: Povm) -> np.ndarray:
    """Concatenated Hermitian coordinates of each effect, in outcome order."""
    return np.concatenate([linalg.hermitian_coordinates(e) for e in m.effects])


def _hull_residual(points: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """min over the simplex of ||points^T a - target||_inf, with the minimizer a.

    Solved as an LP, then polished with NNLS on the LP support so that exact
    convex combinations come out at rounding-error residual.
    """
    k, dim = points.shape
    # variables: a (k), t (1); minimize t
    c = np.zeros(k + 1)
    c[-1] = 1.0
    a_ub = np.block([[points.T, -np.ones((dim, 1))], [-points.T, -np.ones((dim, 1))]])
    b_ub = np.concatenate([target, -target])
    a_eq = np.concatenate([np.ones(k), [0.0]])[None, :]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=[(0, None)] * (k + 1), method="highs")
    alpha = np.clip(res.x[:k], 0, None) if res.status == 0 else np.full(k, 1.0 / k)
    alpha /= alpha.sum()
    best = np.max(np.abs(points.T @ alpha - target))
    support = np.nonzero(alpha > 1e-12)[0]
    if support.size:
        scale = max(1.0, float(np.abs(points).max()))
        weight = 1e6 * scale
        a_mat = np.vstack([points[support].T, weight * np.ones(support.size)])
        sol, _ = nnls(a_mat, np.concatenate([target, [weight]]))
        if sol.sum() > 0:
            sol /= sol.sum()
            polished = np.max(np.abs(points[support].T @ sol - target))
            if polished < best:
                best = polished
                alpha = np.zeros(k)
                alpha[support] = sol
    return float(best), alpha


def extreme_points(c: ConceptClass, tol: float = 1e-9) -> ExtremePointSet:
    """Extreme points of the convex hull of a finite class.

    Members within ``tol`` (sup norm) of an earlier member are merged into it.
    A remaining member is dropped when it is a convex combination of the
    others with sup-norm residual at most ``tol``; members whose residual
    falls in (tol, 10 tol] are kept and flagged as boundary cases.
    """
    vecs = np.stack([povm_to_vector(m) for m in c.members])
    kept: list[int] = []
    duplicates = {}
    for i in range(len(vecs)):
        twin = next((j for j in kept if np.max(np.abs(vecs[i] - vecs[j])) < tol), None)
        if twin is None:
            kept.append(i)
        else:
            duplicates[c.ids[i]] = c.ids[twin]
    residuals, certificates, flagged, retained = {}, {}, [], []
    for i in kept:
        others = [j for j in kept if j != i]
        if not others:
            retained.append(i)
            residuals[c.ids[i]] = float("inf")
            continue
        r, alpha = _hull_residual(vecs[others], vecs[i])
        residuals[c.ids[i]] = r
        if r <= tol:
            weights = {c.ids[j]: float(a) for j, a in zip(others, alpha) if a > 0}
            certificates[c.ids[i]] = Certificate(c.ids[i], weights, r)
        else:
            retained.append(i)
            if r <= 10 * tol:
                flagged.append(c.ids[i])
    # every dropped point was written through other hull points; re-express through extreme ones
    ids = tuple(c.ids[i] for i in retained)
    final_certs = {}
    for cid, cert in certificates.items():
        r, alpha = _hull_residual(vecs[list(retained)], vecs[c.ids.index(cid)])
        weights = {ids[k]: float(a) for k, a in enumerate(alpha) if a > 0}
        final_certs[cid] = Certificate(cid, weights, r)
    return ExtremePointSet(c, ids, len(c), duplicates, final_certs, residuals, tuple(flagged), tol)


def verify_certificates(eps: ExtremePointSet) -> bool:
    """Re-check every dropped member against its stored convex combination."""
    for cid, cert in eps.certificates.items():
        target = povm_to_vector(eps.parent[cid])
        combo = sum(w * povm_to_vector(eps.parent[k]) for k, w in cert.weights.items())
        if abs(sum(cert.weights.values()) - 1.0) > 1e-9 or min(cert.weights.values()) < 0:
            return False
        if np.max(np.abs(combo - target)) >= 10 * eps.tol:
            return False
    return True


@dataclass(frozen=True)
class OptReductionReport:
    opt_class: float
    opt_extreme: float
    best_random_mixture: float
    mixtures_checked: int
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def verify_opt_reduction(
    c: ConceptClass,
    l: LossFunction,
    source: LabeledStateSource,
    *,
    cstar: ExtremePointSet | None = None,
    mixtures: int = 1000,
    rng: np.random.Generator | None = None,
    tol: float = 1e-9,
) -> OptReductionReport:
    """Check min over C of L_D equals min over C*, and no mixture beats it."""
    cstar = extreme_points(c) if cstar is None else cstar
    rng = np.random.default_rng(0) if rng is None else rng
    losses = {cid: expected_loss(m, l, source) for cid, m in c.items()}
    opt_class = min(losses.values())
    opt_extreme = min(losses[cid] for cid in cstar.ids)
    best_mix = np.inf
    members = list(c.members)
    for _ in range(mixtures):
        w = rng.dirichlet(np.ones(len(members)))
        best_mix = min(best_mix, expected_loss(mix_povms(w, members), l, source))
    passed = abs(opt_class - opt_extreme) <= tol and best_mix >= opt_extreme - tol
    return OptReductionReport(opt_class, opt_extreme, float(best_mix), mixtures, bool(passed))


def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _decode_matrix(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def save_class(c: ConceptClass, path, label_names: Sequence[str] | None = None) -> Path:
    doc = {
        "format": CLASS_FORMAT,
        "version": 1,
        "dim": c.dim,
        "outcomes": list(c.members[0].outcomes),
        "povms": [{"id": cid, "effects": [_encode_matrix(e) for e in m.effects]} for cid, m in c.items()],
    }
    if label_names is not None:
        doc["label_names"] = list(label_names)
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1), encoding="utf-8")
    return path


def load_class(path) -> ConceptClass:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CLASS_FORMAT:
        raise ValueError(f"{path} is not a concept-class file")
    outcomes = tuple(doc.get("outcomes", range(len(doc["povms"][0]["effects"]))))
    ids, members = [], []
    for entry in doc["povms"]:
        effects = tuple(_decode_matrix(e) for e in entry["effects"])
        members.append(Povm(outcomes, effects))
        ids.append(entry["id"])
    c = ConceptClass(tuple(ids), tuple(members))
    if c.dim != doc["dim"]:
        raise ValueError(f"{path}: declared dim {doc['dim']} but effects have dim {c.dim}")
    return c
