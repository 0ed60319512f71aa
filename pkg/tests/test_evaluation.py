import numpy as np
import pytest

from rwfn.encoders import encode
from rwfn.errors import InvalidArgument, StateError
from rwfn.evaluation import (FrequencyPrior, PredictedTriple, evaluate, format_report,
                             ground_truth, match_image, recall_at_n, score_triples,
                             sort_predictions, zero_shot_recall)
from rwfn.groundings import build_theory
from rwfn.knowledge_base import Signature
from rwfn.numeric import make_rng
from rwfn.scenes import FeatureSchema, SceneFeatures, joint_features, unary_features
from conftest import box, brute_force_hits, micro_instance, scene

CLASSES = ("person", "dog", "car")


def _theory(binary, seed=0, trained=True):
    sig = Signature(CLASSES, tuple(binary))
    schema = FeatureSchema(CLASSES)
    theory = build_theory(sig, schema, "rwfn", hidden={1: 6, 2: 8}, seed=seed, fan_in=3,
                          features=SceneFeatures([], schema))
    rng = make_rng(seed)
    for g in theory.groundings.values():
        g.beta[:] = rng.normal(0, 1, g.beta.shape)
    if trained:
        theory.trained.update(sig.predicates)
    return theory


def test_two_boxes_seventy_predicates(tiny_scene):
    preds = [f"p{i}" for i in range(70)]
    theory = _theory(preds)
    s = scene(tiny_scene.boxes[:2])
    out = score_triples(theory, s, FrequencyPrior.uniform(preds))
    assert len(out) == 140
    assert len({(t.subject.id, t.predicate, t.object.id) for t in out}) == 140
    scores = [t.score for t in out]
    assert scores == sorted(scores, reverse=True)


def test_scores_recomputed_by_hand(tiny_scene):
    theory = _theory(("above", "below"))
    prior = FrequencyPrior({"above": 1.0, "below": 0.5})
    out = score_triples(theory, tiny_scene, prior)
    for t in out:
        g = theory.groundings[t.predicate]
        v = np.concatenate([unary_features(t.subject, tiny_scene, CLASSES),
                            unary_features(t.object, tiny_scene, CLASSES),
                            joint_features(t.subject, t.object, tiny_scene)])
        expected = 1 / (1 + np.exp(-encode(g.encoder, v) @ g.beta)) * prior[t.predicate]
        assert t.score == pytest.approx(expected, abs=1e-12)


def test_zero_prior_zeroes_scores(tiny_scene):
    theory = _theory(("above", "below"))
    out = score_triples(theory, tiny_scene, FrequencyPrior({"above": 0.0, "below": 1.0}))
    assert all(t.score == 0.0 for t in out if t.predicate == "above")


def test_equivalences_average_converse_scores(tiny_scene):
    theory = _theory(("above", "below"))
    prior = FrequencyPrior.uniform(("above", "below"))
    plain = {(t.predicate, t.subject.id, t.object.id): t.score
             for t in score_triples(theory, tiny_scene, prior)}
    eq = {(t.predicate, t.subject.id, t.object.id): t.score
          for t in score_triples(theory, tiny_scene, prior, equivalences=[("above", "below")])}
    for (r, a, b), v in eq.items():
        other = "below" if r == "above" else "above"
        assert v == pytest.approx(eq[(other, b, a)], abs=1e-12)
        assert v == pytest.approx(0.5 * (plain[(r, a, b)] + plain[(other, b, a)]), abs=1e-12)
    with pytest.raises(InvalidArgument):
        score_triples(theory, tiny_scene, prior, equivalences=[("above", "on")])


def test_frequency_prior():
    s = scene([box(0, 0, 0, 1, 1), box(1, 2, 2, 3, 3)], [("0", "r", "1"), ("1", "r", "0"),
                                                       ("0", "s", "1")])
    prior = FrequencyPrior.from_scenes([s], ["r", "s", "t"])
    assert prior == {"r": 1.0, "s": 0.5, "t": 0.0}


def test_untrained_theory_is_rejected(tiny_scene):
    theory = _theory(("above", "below"), trained=False)
    with pytest.raises(StateError):
        score_triples(theory, tiny_scene, FrequencyPrior.uniform(("above", "below")))
    theory.trained.update(("above", "below"))
    score_triples(theory, tiny_scene, FrequencyPrior.uniform(("above", "below")))
    with pytest.raises(StateError):
        score_triples(theory, tiny_scene, FrequencyPrior.uniform(("above", "below")), "phrase")


def test_phrase_task_uses_unary_labels(tiny_scene):
    theory = _theory(("above", "below"))
    out = score_triples(theory, tiny_scene, FrequencyPrior.uniform(("above", "below")), "phrase")
    assert len(out) == 12
    assert all(t.subject_class in CLASSES and 0 <= t.score <= 1 for t in out)
    with pytest.raises(InvalidArgument):
        score_triples(theory, tiny_scene, {}, "caption")


@pytest.mark.parametrize("seed", range(30))
def test_greedy_matches_brute_force(seed):
    rng = make_rng(seed)
    s, preds = micro_instance(rng)
    for n in (1, 3, 5, 100):
        hits = match_image(preds, ground_truth(s), n, "predicate")
        assert hits == brute_force_hits(preds, s, n)


@pytest.mark.parametrize("seed", range(10))
def test_recall_is_monotone_in_n(seed):
    s, preds = micro_instance(make_rng(seed))
    values = [recall_at_n({s.image_id: preds}, {s.image_id: s}, n) for n in (1, 2, 5, 10, 50, 100)]
    assert values == sorted(values)
    assert 0.0 <= values[0] and values[-1] == 1.0


def _pred(a, b, r, score, idx=0):
    return PredictedTriple("img", a, b, a.label, r, b.label, score, (0, idx, 0))


def test_duplicate_predictions_are_not_double_counted():
    a, b = box(0, 0, 0, 10, 10), box(1, 20, 0, 30, 10)
    s = scene([a, b], [("0", "r", "1")])
    preds = [_pred(a, b, "r", 0.9), _pred(a, b, "r", 0.8, 1)]
    assert match_image(preds, ground_truth(s), 2, "predicate") == 1


def test_iou_tasks_match_shifted_boxes():
    a, b = box(0, 0, 0, 10, 10), box(1, 20, 0, 30, 10)
    s = scene([a, b], [("0", "r", "1")])
    a2, b2 = box(5, 1, 0, 11, 10), box(6, 21, 0, 31, 10)
    far = box(7, 60, 60, 70, 70)
    truth = ground_truth(s)
    assert match_image([_pred(a2, b2, "r", 1.0)], truth, 1, "relationship") == 1
    assert match_image([_pred(a2, b2, "r", 1.0)], truth, 1, "predicate") == 0
    assert match_image([_pred(a2, far, "r", 1.0)], truth, 1, "relationship") == 0
    assert match_image([_pred(a2, b2, "r", 1.0)], truth, 1, "phrase") == 1
    # wrong predicate never matches
    assert match_image([_pred(a, b, "s", 1.0)], truth, 1, "predicate") == 0


def test_zero_shot_recall():
    s, preds = micro_instance(make_rng(4))
    all_types = s.triple_types()
    p, t = {s.image_id: preds}, {s.image_id: s}
    assert zero_shot_recall(p, t, all_types, 5) == recall_at_n(p, t, 5)
    with pytest.raises(InvalidArgument):
        zero_shot_recall(p, t, [], 5)


def test_recall_errors():
    s, preds = micro_instance(make_rng(1))
    with pytest.raises(InvalidArgument):
        recall_at_n({}, {s.image_id: s}, 0)
    with pytest.raises(InvalidArgument):
        recall_at_n({}, {s.image_id: s}, 5, "caption")
    with pytest.raises(InvalidArgument):
        recall_at_n({}, {"x": scene([box(0, 0, 0, 1, 1)], image_id="x")}, 5)
    # images without predictions count as misses
    assert recall_at_n({}, {s.image_id: s}, 5) == 0.0


def test_sort_is_deterministic():
    a, b = box(0, 0, 0, 10, 10), box(1, 20, 0, 30, 10)
    preds = [PredictedTriple("img", a, b, "a", "r", "a", 0.5, (1, 0, 1)),
             PredictedTriple("img", a, b, "a", "s", "a", 0.5, (0, 0, 1))]
    assert [t.predicate for t in sort_predictions(preds)] == ["s", "r"]


def test_evaluate_report(tiny_scene):
    theory = _theory(("above", "below"))
    prior = FrequencyPrior.uniform(("above", "below"))
    rows = evaluate(theory, [tiny_scene], prior, ("predicate",), (100, 1),
                    unseen=[("person", "above", "dog")])
    assert [r["n"] for r in rows] == [100, 1]
    assert rows[0]["recall"] == 1.0 and rows[0]["zero_shot_recall"] == 1.0
    text = format_report(rows)
    assert text.splitlines()[1].split() == ["predicate", "100", "1.0000", "1.0000"]


def test_uniform_prior_preserves_per_predicate_ranking(tiny_scene):
    theory = _theory(("above", "below"))
    args = [(a.constant, b.constant) for a, b in tiny_scene.pairs()]
    for weight in (1.0, 0.3):
        prior = FrequencyPrior({"above": weight, "below": weight})
        out = score_triples(theory, tiny_scene, prior)
        ranked = [(t.subject.constant, t.object.constant) for t in out if t.predicate == "above"]
        raw = theory.score("above", args, SceneFeatures([tiny_scene], theory.features.schema))
        assert ranked == [args[i] for i in np.argsort(-raw, kind="stable")]


def test_perfect_predictions_recall_one(tiny_scene):
    preds = [PredictedTriple("img", tiny_scene.box(t.subject), tiny_scene.box(t.object),
                             tiny_scene.box(t.subject).label, t.predicate,
                             tiny_scene.box(t.object).label, 1.0, (0, k, 0))
             for k, t in enumerate(tiny_scene.triples)]
    assert recall_at_n({"img": preds}, {"img": tiny_scene}, 50) == 1.0


def test_zero_shot_recall_equals_filter_then_recall():
    from rwfn.scenes import SyntheticSpec, generate_synthetic
    scenes = generate_synthetic(make_rng(2), SyntheticSpec(n_images=15))
    classes = ("person", "dog", "car", "tree", "ball")
    schema = FeatureSchema(classes)
    theory2 = build_theory(Signature(classes, ("above", "below", "left_of")), schema, "rwfn",
                           hidden={1: 4, 2: 8}, seed=2, fan_in=3, features=SceneFeatures([], schema))
    theory2.trained.update(theory2.signature.predicates)
    for g in theory2.groundings.values():
        g.beta[:] = make_rng(5).normal(0, 1, g.beta.shape)
    prior = FrequencyPrior.uniform(theory2.signature.binary)
    preds = {s.image_id: score_triples(theory2, s, prior) for s in scenes}
    types = sorted(set().union(*(s.triple_types() for s in scenes)))
    unseen = set(types[:3])
    # manual filter: keep only unseen ground truth, then plain recall
    filtered = {s.image_id: s.with_triples([t for t in s.triples
                                            if (s.box(t.subject).label, t.predicate,
                                                s.box(t.object).label) in unseen])
                for s in scenes}
    filtered = {k: v for k, v in filtered.items() if v.triples}
    for n in (5, 20):
        assert zero_shot_recall(preds, {s.image_id: s for s in scenes}, unseen, n) == \
            recall_at_n(preds, filtered, n)
