import pytest

from skstein.errors import CapacityExceededError
from skstein.sk_lemma import approximation_lemma_sk
from skstein.sk_model import ModelParams, build_exact_gibbs, sample_disorder
from skstein.tap_solver import q_fixed_point


def setup(n, beta, h, seed=0):
    d = sample_disorder(n, seed)
    return build_exact_gibbs(ModelParams(n, beta, h), d), d


def test_sides_agree_small_system():
    t, d = setup(5, 0.5, 0.3)
    q = q_fixed_point(0.5, 0.3).q
    sides = approximation_lemma_sk(t, d, q, "tanh", replications=60, seed=1)
    assert sides.agrees(4)
    assert sides.lhs > 0 and sides.rhs > 0


def test_sigmoid_battery_member():
    t, d = setup(5, 0.5, 0.3)
    sides = approximation_lemma_sk(t, d, q_fixed_point(0.5, 0.3).q, "sigmoid", replications=40, seed=2)
    assert sides.agrees(4)


def test_infinite_temperature_tanh_is_constant():
    # u = tanh(h) is constant, so the Stein solution and every h_j vanish
    t, d = setup(5, 0.0, 0.4)
    sides = approximation_lemma_sk(t, d, q_fixed_point(0.0, 0.4).q, "tanh", replications=5)
    assert sides.lhs == pytest.approx(0, abs=1e-20)
    assert sides.rhs == pytest.approx(0, abs=1e-20)


def test_capacity():
    t, d = setup(15, 0.1, 0.1)
    with pytest.raises(CapacityExceededError):
        approximation_lemma_sk(t, d, 0.01, replications=2)


def test_argument_checks():
    t, d = setup(4, 0.1, 0.1)
    with pytest.raises(ValueError):
        approximation_lemma_sk(t, sample_disorder(5, 0), 0.01, replications=2)
    with pytest.raises(ValueError):
        approximation_lemma_sk(t, d, 1.0, replications=2)
