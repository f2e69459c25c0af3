import numpy as np
import pytest

from shadowpac import linalg
from shadowpac.concepts import (
    ConceptClass,
    extreme_points,
    load_class,
    povm_to_vector,
    save_class,
    verify_certificates,
    verify_opt_reduction,
)
from shadowpac.loss import LossFunction, expected_loss
from shadowpac.states import LabeledStateSource, Povm, PureState, mix_povms, random_povm, random_projective_povm

M1 = Povm.projective(np.eye(2))
M2 = Povm.projective(linalg.H)
MID = mix_povms([0.5, 0.5], [M1, M2])


def midpoint_class():
    return ConceptClass(("M1", "M2", "mid"), (M1, M2, MID))


def random_source(rng, dim=2, labels=2):
    p = rng.dirichlet(np.ones(2))
    states = tuple(PureState(linalg.random_pure_state(dim, rng)) for _ in range(2))
    return LabeledStateSource(tuple(p), states, tuple(int(y) for y in rng.integers(0, labels, 2)))


def test_vector_of_identity_and_linearity():
    np.testing.assert_array_equal(povm_to_vector(Povm.trivial(2)), [1, 1, 0, 0])
    rng = np.random.default_rng(0)
    a, b = random_povm(2, 3, rng), random_povm(2, 3, rng)
    np.testing.assert_allclose(
        povm_to_vector(mix_povms([0.5, 0.5], [a, b])), (povm_to_vector(a) + povm_to_vector(b)) / 2, atol=1e-14
    )


def test_vectors_distinguish_projective_povms():
    rng = np.random.default_rng(1)
    vecs = [povm_to_vector(random_projective_povm(2, 2, rng)) for _ in range(30)]
    for i in range(30):
        for j in range(i):
            assert np.linalg.norm(vecs[i] - vecs[j]) > 1e-6


def test_midpoint_is_dropped_with_certificate():
    eps = extreme_points(midpoint_class())
    assert eps.ids == ("M1", "M2")
    cert = eps.certificates["mid"]
    assert cert.weights == pytest.approx({"M1": 0.5, "M2": 0.5}, abs=1e-9)
    assert verify_certificates(eps)


def test_two_distinct_projective_povms_are_extreme():
    c = ConceptClass(("a", "b"), (M1, M2))
    assert extreme_points(c).ids == ("a", "b")


def test_generic_projective_family_keeps_everything():
    rng = np.random.default_rng(2)
    c = ConceptClass(tuple(f"p{k}" for k in range(8)), tuple(random_projective_povm(3, 3, rng) for _ in range(8)))
    assert len(extreme_points(c)) == 8


def test_duplicates_collapse():
    c = ConceptClass(("a", "b", "c"), (M1, M2, M1))
    eps = extreme_points(c)
    assert eps.ids == ("a", "b") and "c" in eps.duplicates


@pytest.mark.parametrize("seed", range(5))
def test_construct_then_recover(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 6))
    gens = [random_povm(2, 2, rng) for _ in range(k)]
    mixes = [mix_povms(rng.dirichlet(np.ones(k)), gens) for _ in range(10)]
    ids = tuple(f"g{i}" for i in range(k)) + tuple(f"x{i}" for i in range(10))
    eps = extreme_points(ConceptClass(ids, tuple(gens + mixes)))
    assert set(eps.ids) <= {f"g{i}" for i in range(k)}
    assert verify_certificates(eps)
    assert extreme_points(eps.as_class()).ids == eps.ids


def test_opt_reduction_on_midpoint_class():
    rng = np.random.default_rng(3)
    src = random_source(rng)
    l = LossFunction.zero_one(2)
    c = midpoint_class()
    assert min(expected_loss(m, l, src) for _, m in c.items()) == pytest.approx(
        min(expected_loss(m, l, src) for m in (M1, M2)), abs=1e-12
    )
    assert verify_opt_reduction(c, l, src, mixtures=200).passed


def test_opt_reduction_random_class():
    rng = np.random.default_rng(4)
    gens = [random_povm(2, 2, rng) for _ in range(4)]
    members = gens + [mix_povms(rng.dirichlet(np.ones(4)), gens) for _ in range(2)]
    c = ConceptClass(tuple(f"m{i}" for i in range(6)), tuple(members))
    report = verify_opt_reduction(c, LossFunction(rng.uniform(0, 1, (2, 2))), random_source(rng), mixtures=200)
    assert abs(report.opt_class - report.opt_extreme) <= 1e-9 and report.passed


def test_singleton_class():
    c = ConceptClass(("only",), (M1,))
    assert extreme_points(c).ids == ("only",)


def test_class_file_round_trip(tmp_path):
    c = midpoint_class()
    back = load_class(save_class(c, tmp_path / "c.json"))
    assert back.ids == c.ids
    for (_, a), (_, b) in zip(c.items(), back.items()):
        np.testing.assert_allclose(a.stacked(), b.stacked(), atol=1e-15)
