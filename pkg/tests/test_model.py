import itertools
import json
import math

import numpy as np
import pytest

from conftest import (E1_ENTROPY, E1_EVIDENCE, E1_H_S0_GIVEN_S1_0, E1_P_S1_0, E1_POSTERIOR,
                      deterministic_model, e1_model, random_suite, uniform_model)
from hmm_entropy.forward_backward import scaled_forward
from hmm_entropy.model import (EnumerationCapExceeded, HmmModel, ImpossibleConstraint,
                               ImpossibleObservation, ModelError, SubseqConstraint, joint_prob,
                               load_model, load_obs, oracle_entropy, oracle_posterior,
                               oracle_subseq_entropy, random_model, save_model, save_obs,
                               validate)


def test_e1_frozen_values_are_self_consistent():
    # the frozen entropy must follow from the closed-form posterior
    h = -sum(p * math.log(p) for p in E1_POSTERIOR.values())
    assert h == pytest.approx(E1_ENTROPY, abs=1e-15)
    cond = np.array([0.3645, 0.0045]) / 0.369
    assert -(cond * np.log(cond)).sum() == pytest.approx(E1_H_S0_GIVEN_S1_0, abs=1e-15)


def test_validate():
    assert validate(e1_model()) == []
    v = validate(HmmModel(pi=[0.5, 0.4], a=np.eye(2), b=np.eye(2)))
    assert len(v) == 1 and v[0].field == "pi" and "sums to 0.9" in v[0].message
    v = validate(HmmModel(pi=[1, 0], a=[[0.5, 0.6], [0, 1]], b=np.eye(2)))
    assert [(x.field, x.index) for x in v] == [("a", 0)]
    assert "1.1" in v[0].message
    v = validate(HmmModel(pi=[1, 0], a=np.eye(2), b=[[1.2, -0.2], [0, 1]]))
    assert {x.field for x in v} == {"b"}
    assert any("outside [0, 1]" in x.message for x in v)


def test_shape_errors():
    with pytest.raises(ModelError):
        HmmModel(pi=[0.5, 0.5], a=np.eye(3), b=np.eye(2))
    with pytest.raises(ModelError):
        HmmModel(pi=[0.5, 0.5], a=np.eye(2), b=np.ones((3, 2)))


def test_model_is_immutable():
    m = e1_model()
    with pytest.raises(ValueError):
        m.a[0, 0] = 0.3


def test_joint_prob():
    m = e1_model()
    assert joint_prob(m, [0, 0], [0, 0]) == pytest.approx(0.3645, rel=1e-15)
    assert joint_prob(m, [0, 1], [0, 0]) == pytest.approx(0.0045, rel=1e-15)
    d = deterministic_model()
    assert joint_prob(d, [0, 1], [0, 1]) == 0
    with pytest.raises(ValueError):
        joint_prob(m, [0], [0, 0])


def test_oracle_posterior_e1():
    post = oracle_posterior(e1_model(), [0, 0])
    assert post.evidence == pytest.approx(E1_EVIDENCE, rel=1e-14)
    table = post.as_dict()
    assert table.keys() == E1_POSTERIOR.keys()
    for k, p in E1_POSTERIOR.items():
        assert table[k] == pytest.approx(p, abs=1e-15)


def test_oracle_posterior_matches_itertools_enumeration():
    # independent enumeration through joint_prob
    for _, model, obs in random_suite(20):
        post = oracle_posterior(model, obs)
        seqs = list(itertools.product(range(model.num_states), repeat=len(obs)))
        joint = np.array([joint_prob(model, s, obs) for s in seqs])
        assert post.evidence == pytest.approx(joint.sum(), rel=1e-12)
        assert np.allclose(post.probs, joint / joint.sum(), atol=1e-15)
        assert abs(post.probs.sum() - 1) <= 1e-12


def test_oracle_closed_forms():
    post = oracle_posterior(deterministic_model(), [0, 0, 0])
    assert post.as_dict()[(0, 0, 0)] == 1.0
    assert oracle_entropy(deterministic_model(), [0, 0, 0]) == 0
    for n, length in [(2, 3), (3, 4)]:
        u = uniform_model(n, 2)
        post = oracle_posterior(u, [1] * length)
        assert np.allclose(post.probs, n ** -length, rtol=1e-12)
        assert oracle_entropy(u, [1] * length) == pytest.approx(length * math.log(n), rel=1e-12)


def test_oracle_errors():
    with pytest.raises(ImpossibleObservation):
        oracle_posterior(deterministic_model(), [1, 0])
    with pytest.raises(EnumerationCapExceeded):
        oracle_posterior(uniform_model(3, 2), [0] * 10, cap=1000)
    with pytest.raises(ImpossibleConstraint):
        oracle_subseq_entropy(deterministic_model(), [0, 0], SubseqConstraint(1, 1, [1]))


def test_oracle_subseq_e1():
    res = oracle_subseq_entropy(e1_model(), [0, 0], SubseqConstraint(1, 1, [0]))
    assert res.p_constraint == pytest.approx(E1_P_S1_0, abs=1e-15)
    assert res.h_cond == pytest.approx(E1_H_S0_GIVEN_S1_0, abs=1e-15)
    assert res.p_constraint == pytest.approx(0.976190, abs=1e-6)
    assert res.h_cond == pytest.approx(0.065861, abs=1e-6)


def test_oracle_subseq_full_cover_is_exactly_zero():
    for _, model, obs in random_suite(10):
        post = oracle_posterior(model, obs)
        c = SubseqConstraint(0, len(obs) - 1, post.states[np.argmax(post.probs)])
        assert oracle_subseq_entropy(model, obs, c).h_cond == 0.0


def test_oracle_subseq_uniform():
    u = uniform_model(3, 2)
    obs = [0, 1, 1, 0, 1]
    for l, r in [(0, 0), (1, 3), (2, 2), (3, 4)]:
        c = SubseqConstraint(l, r, [1] * (r - l + 1))
        w = r - l + 1
        assert oracle_subseq_entropy(u, obs, c).h_cond == pytest.approx(
            (len(obs) - w) * math.log(3), rel=1e-12)


def test_constraint_probabilities_sum_to_one():
    for _, model, obs in random_suite(10):
        n, length = model.num_states, len(obs)
        l, r = 0, min(2, length - 1)
        post = oracle_posterior(model, obs)
        total = 0.0
        for vals in itertools.product(range(n), repeat=r - l + 1):
            try:
                total += oracle_subseq_entropy(model, obs, SubseqConstraint(l, r, vals),
                                               posterior=post).p_constraint
            except ImpossibleConstraint:
                pass
        assert abs(total - 1) <= 1e-9


def test_oracle_evidence_matches_scaling_constants():
    for _, model, obs in random_suite(100):
        _, c = scaled_forward(model, obs)
        assert oracle_posterior(model, obs).evidence == pytest.approx(np.prod(c), rel=1e-9)


def test_random_model():
    a, b = random_model(2, 2, 42), random_model(2, 2, 42)
    assert np.array_equal(a.a, b.a) and np.array_equal(a.b, b.b) and np.array_equal(a.pi, b.pi)
    m = random_model(3, 4, 7)
    assert validate(m) == []
    assert m.a.min() > 0 and m.b.min() > 0
    one = random_model(1, 1, 0)
    assert one.pi.tolist() == [1.0] and one.a.tolist() == [[1.0]] and one.b.tolist() == [[1.0]]


def test_json_round_trip():
    m = e1_model()
    m2 = load_model(save_model(m))
    assert np.array_equal(m.a, m2.a) and np.array_equal(m.b, m2.b) and np.array_equal(m.pi, m2.pi)
    r = random_model(3, 4, 11)
    r2 = load_model(save_model(r))
    assert np.array_equal(r.a, r2.a) and np.array_equal(r.b, r2.b)
    assert load_obs(save_obs([0, 1, 1])).tolist() == [0, 1, 1]


@pytest.mark.parametrize("mutate, fragment", [
    (lambda d: d.update(a=[[0.9, 0.1]]), "'a' must have 2 rows"),
    (lambda d: d.update(b=[[0.9, 0.1, 0.0], [0.1, 0.9, 0.0]]), "'b' row 0"),
    (lambda d: d.pop("pi"), "missing keys"),
    (lambda d: d.update(pi=[0.5, 0.4]), "pi sums to"),
    (lambda d: d.update(num_states=0), "positive"),
])
def test_load_model_errors(mutate, fragment):
    d = json.loads(save_model(e1_model()))
    mutate(d)
    with pytest.raises(ModelError, match=fragment.replace("(", r"\(")):
        load_model(json.dumps(d))


def test_load_errors():
    with pytest.raises(ModelError, match="malformed"):
        load_model("{nope")
    with pytest.raises(ModelError, match="outside"):
        load_obs('{"obs": [0, 2]}', e1_model())
    with pytest.raises(ModelError):
        load_obs('{"obs": []}')
    with pytest.raises(ModelError):
        load_obs('{"obs": [0.5]}')
    with pytest.raises(ModelError):
        load_obs('[0, 1]')
