import itertools

import numpy as np
import pytest
from hypothesis import settings

from rwfn.encoders import build_encoder
from rwfn.fuzzy import And, Atom, Implies, Not, Or
from rwfn.groundings import GroundedTheory, NtnGrounding, RwfnGrounding
from rwfn.knowledge_base import Signature
from rwfn.numeric import derive_seed, make_rng
from rwfn.scenes import BoundingBox, SceneAnnotation, Triple

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


class TableFeatures:
    """Feature lookup backed by a plain dict; binary rows concatenate."""

    def __init__(self, table):
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}

    def matrix(self, arg_tuples, arity):
        if not arg_tuples:
            return np.zeros((0, arity * len(next(iter(self.table.values())))))
        return np.stack([np.concatenate([self.table[a] for a in args]) for args in arg_tuples])


def random_theory(seed, model="rwfn", n=3, B=6, k=2, fan_in=2, n_consts=3):
    """A tiny random theory plus a KB mixing atoms, negations and connectives."""
    rng = make_rng(seed)
    consts = [f"c{i}" for i in range(n_consts)]
    sig = Signature(("p", "q"), ("r", "s"), {"img": tuple(consts)})
    feats = TableFeatures({c: rng.uniform(0, 1, n) for c in consts})
    groundings = {}
    for idx, pred in enumerate(sig.predicates):
        arity = sig.arity(pred)
        if model == "rwfn":
            enc = build_encoder(derive_seed(seed, idx), arity * n, B, fan_in)
            groundings[pred] = RwfnGrounding(enc, arity, rng.normal(0, 0.5, 2 * B))
        else:
            groundings[pred] = NtnGrounding.initialize(rng, arity * n, k, arity)
    theory = GroundedTheory(sig, groundings, feats, model=model)

    atoms = [Atom(p, (c,)) for p in sig.unary for c in consts]
    atoms += [Atom(r, pair) for r in sig.binary for pair in itertools.permutations(consts, 2)]
    formulas = []
    for _ in range(12):
        a, b = (atoms[i] for i in rng.choice(len(atoms), 2, replace=False))
        kind = int(rng.integers(6))
        formulas.append([a, Not(a), Implies(a, b), Implies(a, Not(b)), And(a, b), Or(Not(a), b)][kind])
    return theory, formulas


def box(box_id, x0, y0, x1, y1, label="a", image_id="img"):
    return BoundingBox(str(box_id), image_id, float(x0), float(y0), float(x1), float(y1), label)


def scene(boxes, triples=(), image_id="img", width=100.0, height=100.0):
    return SceneAnnotation(image_id, width, height, tuple(boxes),
                           tuple(Triple(*t) for t in triples))


@pytest.fixture
def tiny_scene():
    boxes = [box(0, 10, 10, 30, 30, "person"), box(1, 10, 60, 30, 90, "dog"),
             box(2, 60, 10, 90, 40, "car")]
    return scene(boxes, [("0", "above", "1"), ("1", "below", "0")])


def micro_instance(rng, n_boxes=4, classes=("a", "b"), predicates=("r", "s"), max_true=4):
    """A random scene plus random scored predictions over its box pairs."""
    from rwfn.evaluation import PredictedTriple

    boxes = [box(i, x, y, x + 10, y + 10, classes[int(rng.integers(len(classes)))])
             for i, (x, y) in enumerate(rng.uniform(0, 80, (n_boxes, 2)))]
    pairs = [(a, b) for a in boxes for b in boxes if a.id != b.id]
    n_true = min(int(rng.integers(1, max_true + 1)), len(pairs))
    triples = {(a.id, predicates[int(rng.integers(len(predicates)))], b.id)
               for a, b in (pairs[i] for i in rng.choice(len(pairs), n_true, replace=False))}
    s = scene(boxes, sorted(triples))
    preds = []
    for k, (a, b) in enumerate(pairs):
        for r_idx, r in enumerate(predicates):
            preds.append(PredictedTriple(s.image_id, a, b, a.label, r, b.label,
                                         float(rng.integers(0, 5)) / 4, (r_idx, int(a.id), int(b.id))))
    return s, preds


def brute_force_hits(preds, scene_, n):
    """Largest one-to-one matching between the top-n predictions and the ground truth.

    Exhaustive search over every assignment; predicate-task matching
    (same boxes, same classes, same predicate).
    """
    from rwfn.evaluation import sort_predictions

    top = sort_predictions(preds)[:n]
    truth = [(t.subject, t.predicate, t.object) for t in scene_.triples]

    def ok(p, t):
        return (p.subject.id, p.predicate, p.object.id) == t

    def best(i, used):
        if i == len(top):
            return 0
        out = best(i + 1, used)
        for k, t in enumerate(truth):
            if k not in used and ok(top[i], t):
                out = max(out, 1 + best(i + 1, used | {k}))
        return out

    return best(0, frozenset())
