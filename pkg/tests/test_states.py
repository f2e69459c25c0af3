import numpy as np
import pytest

from shadowpac import linalg
from shadowpac.errors import InvalidPovmError, InvalidStateError, SampleConsumedError
from shadowpac.rng import Stream
from shadowpac.states import (
    DensityOperator,
    LabeledStateSource,
    Povm,
    PureState,
    born_measure,
    born_probabilities,
    draw_samples,
    joint_state,
    random_povm,
    sample_index,
)

PLUS = PureState.normalized([1, 1])


def test_single_atom_source_repeats_atom():
    src = LabeledStateSource((1.0,), (PureState.basis(2, 1),), (1,))
    samples = draw_samples(src, 5, seed=3)
    assert len(samples) == 5
    assert all(s.label == 1 and np.allclose(s.state.amplitudes, [0, 1]) for s in samples)


def test_two_atom_frequency():
    src = LabeledStateSource((0.5, 0.5), (PureState.basis(2, 0), PLUS), (0, 1))
    samples = draw_samples(src, 100000, seed=11)
    freq = np.mean([s.atom == 1 for s in samples])
    assert abs(freq - 0.5) < 0.01


def test_draw_samples_deterministic_and_worker_invariant():
    src = LabeledStateSource((0.2, 0.3, 0.5), (PureState.basis(2, 0), PLUS, PureState.basis(2, 1)), (0, 1, 1))
    a = [s.atom for s in draw_samples(src, 1000, seed=9)]
    b = [s.atom for s in draw_samples(src, 1000, seed=9)]
    c = [s.atom for s in draw_samples(src, 1000, seed=9, workers=4)]
    assert a == b == c


def test_source_validation():
    with pytest.raises(InvalidStateError):
        LabeledStateSource((0.5, 0.4), (PLUS, PLUS), (0, 1))
    with pytest.raises(InvalidStateError):
        PureState(np.array([1.0, 1.0]))


def test_density_validation():
    with pytest.raises(InvalidStateError):
        DensityOperator(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidStateError):
        DensityOperator(np.eye(2))


def test_povm_validation():
    with pytest.raises(InvalidPovmError):
        Povm((0, 1), (np.diag([1, 0]), np.diag([0, 0.5])))
    with pytest.raises(InvalidPovmError):
        Povm((0, 1), (np.diag([1.5, 0]), np.diag([-0.5, 1])))


def test_born_deterministic_cases():
    z = Povm.projective(np.eye(2))
    assert born_measure(z, PureState.basis(2, 0).density(), Stream(1)) == 0
    np.testing.assert_allclose(born_probabilities(z, PureState.basis(2, 0).density()), [1, 0])
    trivial = Povm.trivial(2, outcome=7)
    assert all(born_measure(trivial, PLUS.density(), Stream(k)) == 7 for k in range(20))


def test_born_frequency_plus():
    z = Povm.projective(np.eye(2))
    rho = PLUS.density()
    outs = [born_measure(z, rho, Stream(k)) for k in range(100000)]
    assert abs(np.mean(np.array(outs) == 0) - 0.5) < 0.01


def test_born_convergence_all_outcomes():
    rng = np.random.default_rng(4)
    m = random_povm(3, 4, rng)
    rho = PureState(linalg.random_pure_state(3, rng)).density()
    p = born_probabilities(m, rho)
    n = 100000
    u = np.array([Stream(k).uniform(0) for k in range(n)])
    counts = np.bincount(sample_index(np.broadcast_to(p, (n, 4)), u), minlength=4)
    assert np.max(np.abs(counts / n - p)) <= 5 / np.sqrt(n)


def test_joint_state_examples():
    single = LabeledStateSource((1.0,), (PureState.basis(2, 0),), (0,))
    np.testing.assert_allclose(joint_state(single, 2).op, np.diag([1, 0, 0, 0]))
    two = LabeledStateSource((0.5, 0.5), (PureState.basis(2, 0), PureState.basis(2, 1)), (0, 1))
    rho = joint_state(two).op
    assert np.trace(rho).real == pytest.approx(1)
    assert np.linalg.matrix_rank(rho) == 2
    np.testing.assert_allclose(rho, np.diag([0.5, 0, 0, 0.5]))


def test_joint_state_is_valid_for_random_sources():
    rng = np.random.default_rng(8)
    for _ in range(20):
        k = rng.integers(1, 4)
        p = rng.dirichlet(np.ones(k))
        states = [PureState(linalg.random_pure_state(4, rng)) for _ in range(k)]
        src = LabeledStateSource(tuple(p), tuple(states), tuple(int(y) for y in rng.integers(0, 3, k)))
        rho = joint_state(src, 3).op
        assert abs(np.trace(rho) - 1) < 1e-12 and linalg.is_psd(rho)


def test_sample_single_use():
    src = LabeledStateSource((1.0,), (PLUS,), (0,))
    (s,) = draw_samples(src, 1, seed=0)
    s.consume()
    with pytest.raises(SampleConsumedError):
        s.consume()
