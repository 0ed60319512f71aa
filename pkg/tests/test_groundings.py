import numpy as np
import pytest
from hypothesis import given, strategies as st

from rwfn.encoders import FourierProjection, InsectProjection, RandomEncoder, build_encoder, encode
from rwfn.errors import InvalidArgument, SchemaError, StateError
from rwfn.groundings import (ConstantGrounding, GroundedTheory, NtnGrounding, RwfnGrounding,
                             build_theory, ntn_counts, param_counts, rwfn_counts,
                             space_complexity, theory_space)
from rwfn.knowledge_base import Signature
from rwfn.numeric import grad_check, make_rng
from rwfn.scenes import FeatureSchema
from rwfn.training import TrainingConfig, objective_function
from conftest import random_theory


def test_counts_at_published_dimensions():
    # 100 classes + 5 geometry entries per box, 5 NTN slices, B = 500
    assert ntn_counts(105, 5) == (55660, 55660)
    assert rwfn_counts(105, 500) == (106500, 1000)
    assert round(55660 / 1000) == 56


def test_shared_space_at_published_dimensions():
    enc = build_encoder(0, 105, 500)
    shared = [RwfnGrounding(enc, 1) for _ in range(100)]
    ntn = [NtnGrounding(np.zeros(5), np.zeros((5, 105, 105)), np.zeros((5, 105)), np.zeros(5), 1)] * 100
    assert space_complexity(shared, shared=True) == 205500
    assert space_complexity(ntn, shared=False) == 5566000
    assert round(5566000 / 205500) == 27
    # without sharing every decoder pays for its own encoder
    assert space_complexity(shared, shared=False) == 100 * 106500


@given(st.integers(1, 50), st.integers(1, 50), st.integers(1, 6))
def test_count_formulas(mn, B, k):
    total, learn = rwfn_counts(mn, B)
    assert total == 2 * mn * B + B + 2 * B and learn == 2 * B
    assert ntn_counts(mn, k).total == k * mn * mn + k * mn + k + k


def test_count_errors():
    with pytest.raises(InvalidArgument):
        rwfn_counts(0, 10)
    with pytest.raises(InvalidArgument):
        ntn_counts(3, 0)
    with pytest.raises(InvalidArgument):
        param_counts(object())
    assert param_counts(ConstantGrounding(0.5, 3, 1)) == (0, 0)


def test_rwfn_zero_beta_scores_one_half():
    g = RwfnGrounding(build_encoder(1, 4, 8, 2), 1)
    assert g.score(np.arange(4.0)) == 0.5


def test_rwfn_hand_trace():
    # mn = 2, B = 2, identity mask, R = 0, b = 0: h = tanh([relu(v - mean), sqrt(1) * cos 0])
    enc = RandomEncoder(0, InsectProjection(2, 2, 1, np.eye(2)),
                        FourierProjection(2, 2, np.zeros((2, 2)), np.zeros(2)))
    beta = np.array([1.0, -2.0, 0.5, 0.0])
    g = RwfnGrounding(enc, 2, beta)
    v = np.array([3.0, 1.0])
    h = np.tanh([1.0, 0.0, 1.0, 1.0])
    np.testing.assert_allclose(encode(enc, v), h, atol=1e-12)
    expected = 1.0 / (1.0 + np.exp(-(h @ beta)))
    assert g.score(v) == pytest.approx(expected, abs=1e-12)


def test_ntn_hand_trace():
    # k = 1, mn = 2: sigma(u * tanh(v'Wv + Vv + b))
    W = np.array([[[1.0, 0.5], [0.0, -1.0]]])
    V = np.array([[0.2, -0.3]])
    g = NtnGrounding([2.0], W, V, [0.1], 1)
    v = np.array([1.0, 2.0])
    pre = 1.0 + 0.5 * 2 - 4.0 + 0.2 - 0.6 + 0.1
    assert g.score(v) == pytest.approx(1 / (1 + np.exp(-2.0 * np.tanh(pre))), abs=1e-12)


@given(st.lists(st.floats(-50, 50), min_size=4, max_size=4), st.integers(0, 50))
def test_scores_stay_in_unit_interval(v, seed):
    rng = make_rng(seed)
    g = RwfnGrounding(build_encoder(seed, 4, 6, 2), 2, rng.normal(0, 3, 12))
    assert 0.0 <= g.score(v) <= 1.0
    n = NtnGrounding.initialize(rng, 4, 2, 2)
    assert 0.0 <= n.score(v) <= 1.0


def test_score_input_validation():
    g = RwfnGrounding(build_encoder(1, 4, 8, 2), 2)
    with pytest.raises(InvalidArgument):
        g.score(np.ones(3))
    with pytest.raises(InvalidArgument):
        g.score([0, 0, np.inf, 0])
    with pytest.raises(InvalidArgument):
        RwfnGrounding(build_encoder(1, 5, 8, 2), 2)
    with pytest.raises(InvalidArgument):
        RwfnGrounding(build_encoder(1, 4, 8, 2), 1, np.zeros(3))
    with pytest.raises(InvalidArgument):
        NtnGrounding([1.0], np.zeros((1, 2, 3)), np.zeros((1, 2)), [0.0], 1)
    with pytest.raises(InvalidArgument):
        ConstantGrounding(1.5, 2, 1)


@pytest.mark.parametrize("model", ["rwfn", "ntn"])
@pytest.mark.parametrize("seed", range(3))
def test_objective_gradient(model, seed):
    theory, formulas = random_theory(seed, model)
    config = TrainingConfig(lam=1e-3)
    f = objective_function(theory, formulas, config)
    assert grad_check(f, theory.get_flat()) < 1e-4


def test_batch_backward_matches_sum_of_rows():
    rng = make_rng(3)
    g = NtnGrounding.initialize(rng, 3, 2, 1)
    X = rng.uniform(0, 1, (4, 3))
    up = rng.normal(0, 1, 4)
    s = g.forward(X)
    full = g.backward(X, s, up)
    for name in g.learnable:
        rows = sum(g.backward(X[i:i + 1], s[i:i + 1], up[i:i + 1])[name] for i in range(4))
        np.testing.assert_allclose(full[name], rows, atol=1e-12)


def _schema():
    return FeatureSchema(("a", "b", "c"))


def test_build_theory_models():
    sig = Signature(("a", "b", "c"), ("r", "s"))
    schema = _schema()
    plain = build_theory(sig, schema, "rwfn", hidden={1: 8, 2: 16}, seed=1)
    shared = build_theory(sig, schema, "rwfn_ws", hidden={1: 8, 2: 16}, seed=1)
    ntn = build_theory(sig, schema, "ntn", k=2, seed=1)
    assert len(plain.encoders()) == 5
    assert len(shared.encoders()) == 2
    assert shared.groundings["a"].encoder is shared.groundings["c"].encoder
    assert shared.groundings["r"].encoder is shared.groundings["s"].encoder
    assert all(g.input_dim == schema.input_dim(g.arity) for g in ntn.groundings.values())
    assert theory_space(shared, True) < theory_space(plain, False)
    with pytest.raises(InvalidArgument):
        build_theory(sig, schema, "mlp")


def test_build_theory_is_seeded():
    sig = Signature(("a", "b", "c"), ("r",))
    a = build_theory(sig, _schema(), "ntn", k=2, seed=4)
    b = build_theory(sig, _schema(), "ntn", k=2, seed=4)
    assert a.get_flat().tobytes() == b.get_flat().tobytes()


def test_theory_validation_and_flat_roundtrip():
    theory, _ = random_theory(0)
    theta = theory.get_flat()
    assert theta.size == 4 * 12
    theory.set_flat(theta + 1.0)
    np.testing.assert_array_equal(theory.get_flat(), theta + 1.0)
    with pytest.raises(InvalidArgument):
        theory.set_flat(np.zeros(3))
    with pytest.raises(StateError):
        theory.require_trained(["p"])
    g = theory.groundings
    with pytest.raises(SchemaError):
        GroundedTheory(theory.signature, {k: v for k, v in g.items() if k != "p"})
    with pytest.raises(SchemaError):
        GroundedTheory(theory.signature, {**g, "p": g["r"]})


def test_theory_score_uses_features():
    theory, _ = random_theory(1)
    s = theory.score("r", [("c0", "c1"), ("c1", "c0")])
    assert s.shape == (2,) and ((s > 0) & (s < 1)).all()
    assert theory.score("p", []).shape == (0,)
