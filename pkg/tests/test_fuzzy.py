import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rwfn.errors import InvalidArgument, LookupFailure
from rwfn.fuzzy import (And, Atom, FormulaBatch, Implies, Not, Or, atoms_of, eval_connective,
                        eval_formula, generalized_mean, substitute)
from rwfn.numeric import grad_check, make_rng

deg = st.floats(0.0, 1.0, allow_nan=False)

CLASSICAL = {
    "and": lambda a, b: a and b,
    "or": lambda a, b: a or b,
    "implies": lambda a, b: (not a) or b,
}


def test_truth_tables():
    cases = 0
    for kind, table in CLASSICAL.items():
        for a, b in itertools.product((0, 1), repeat=2):
            assert eval_connective(kind, [a, b]) == float(table(bool(a), bool(b)))
            cases += 1
    for a in (0, 1):
        assert eval_connective("not", [a]) == float(not a)
        cases += 1
    assert cases == 14


def test_hand_values():
    assert eval_connective("and", [0.7, 0.6]) == pytest.approx(0.3)
    assert eval_connective("and", [0.3, 0.6]) == 0.0
    assert eval_connective("or", [0.7, 0.6]) == 1.0
    assert eval_connective("implies", [0.7, 0.6]) == pytest.approx(0.9)
    assert eval_connective("implies", [0.2, 0.6]) == 1.0


def test_connective_errors():
    with pytest.raises(InvalidArgument):
        eval_connective("xor", [0, 1])
    with pytest.raises(InvalidArgument):
        eval_connective("and", [0.5])
    with pytest.raises(InvalidArgument):
        eval_connective("not", [1.5])


@given(deg, deg)
def test_binary_properties(a, b):
    for kind in ("and", "or", "implies"):
        assert 0.0 <= eval_connective(kind, [a, b]) <= 1.0
    assert eval_connective("and", [a, b]) == eval_connective("and", [b, a])
    assert eval_connective("or", [a, b]) == eval_connective("or", [b, a])
    # De Morgan duality and the residuum reading of implication
    dual = 1.0 - eval_connective("and", [1.0 - a, 1.0 - b])
    assert eval_connective("or", [a, b]) == pytest.approx(dual, abs=1e-12)
    assert eval_connective("implies", [a, b]) == pytest.approx(
        eval_connective("or", [1.0 - a, b]), abs=1e-12)
    assert eval_connective("and", [a, b]) <= min(a, b) + 1e-12


@given(deg)
def test_negation_involution(a):
    assert eval_connective("not", [eval_connective("not", [a])]) == pytest.approx(a, abs=1e-12)


def test_properties_on_ten_thousand_samples():
    rng = make_rng(2)
    x = rng.uniform(0, 1, (10_000, 2))
    for a, b in x:
        t = eval_connective("and", [a, b])
        s = eval_connective("or", [a, b])
        assert 0 <= t <= 1 and 0 <= s <= 1
        assert t == eval_connective("and", [b, a])
        assert abs(s - (1 - eval_connective("and", [1 - a, 1 - b]))) < 1e-12


def test_harmonic_mean():
    assert generalized_mean([0.2, 0.8], p=-1) == pytest.approx(0.32, abs=1e-12)
    assert generalized_mean([0.5]) == 0.5
    assert generalized_mean([1.0, 1.0, 1.0]) == 1.0


@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=20))
def test_harmonic_mean_matches_direct_formula(ds):
    direct = len(ds) / sum(1.0 / d for d in ds)
    assert generalized_mean(ds, -1) == pytest.approx(direct, rel=1e-12)


@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=20), st.sampled_from([-2, -1, 0, 1, 2]))
def test_power_mean_bounds(ds, p):
    m = generalized_mean(ds, p)
    assert min(ds) - 1e-12 <= m <= max(ds) + 1e-12


def test_geometric_and_arithmetic():
    assert generalized_mean([0.25, 1.0], p=0) == pytest.approx(0.5)
    assert generalized_mean([0.2, 0.8], p=1) == pytest.approx(0.5)


def test_zero_degree_is_clamped():
    m = generalized_mean([0.0, 1.0], p=-1)
    assert 0 < m < 1e-11


def test_mean_errors():
    with pytest.raises(InvalidArgument):
        generalized_mean([])
    with pytest.raises(InvalidArgument):
        generalized_mean([1.2])
    with pytest.raises(InvalidArgument):
        generalized_mean([0.5], epsilon=0)


def test_eval_formula_and_lookup():
    a, b = Atom("p", ("x",)), Atom("r", ("x", "y"))
    f = Implies(a, Not(b))
    assert eval_formula(f, {a: 0.9, b: 0.6}) == pytest.approx(0.5)
    with pytest.raises(LookupFailure):
        eval_formula(f, {a: 0.9})


def test_substitute_and_atoms():
    f = Implies(Atom("r", ("x", "y")), Atom("s", ("y", "x")))
    g = substitute(f, {"x": "a", "y": "b"})
    assert atoms_of(g) == [Atom("r", ("a", "b")), Atom("s", ("b", "a"))]
    assert str(g) == "(r(a,b) -> s(b,a))"


def _random_formula(rng, atoms, depth):
    if depth == 0 or rng.random() < 0.3:
        return atoms[int(rng.integers(len(atoms)))]
    kind = int(rng.integers(4))
    if kind == 0:
        return Not(_random_formula(rng, atoms, depth - 1))
    cls = (And, Or, Implies)[kind - 1]
    return cls(_random_formula(rng, atoms, depth - 1), _random_formula(rng, atoms, depth - 1))


@pytest.mark.parametrize("seed", range(5))
def test_batch_matches_recursive_evaluation(seed):
    rng = make_rng(seed)
    atoms = [Atom("p", (str(i),)) for i in range(6)]
    formulas = [_random_formula(rng, atoms, 3) for _ in range(40)]
    batch = FormulaBatch(formulas)
    truth = rng.uniform(0.05, 0.95, len(batch.atoms))
    values = {a: truth[i] for i, a in enumerate(batch.atoms)}
    expected = [eval_formula(f, values) for f in formulas]
    np.testing.assert_allclose(batch.degrees(truth), expected, atol=1e-12)
    sat, _ = batch.aggregate(truth, p=-1)
    assert sat == pytest.approx(generalized_mean(expected, -1), rel=1e-12)


@pytest.mark.parametrize("p", [-1, 0, 1])
def test_batch_gradient(p):
    rng = make_rng(10 + p)
    atoms = [Atom("q", (str(i),)) for i in range(5)]
    batch = FormulaBatch([_random_formula(rng, atoms, 2) for _ in range(25)])
    truth = rng.uniform(0.1, 0.9, len(batch.atoms))
    assert grad_check(lambda t: batch.aggregate(t, p), truth) < 1e-6


def test_empty_batch():
    with pytest.raises(InvalidArgument):
        FormulaBatch([])
