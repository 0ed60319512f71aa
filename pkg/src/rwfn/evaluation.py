"""Triple scoring with frequency post-processing, and recall@N.

Tasks differ in how a prediction is matched to a ground-truth triple; in
every task the subject class, predicate and object class must agree.

* ``predicate``: boxes are the ground-truth boxes, so the prediction must
  name the same subject and object boxes.
* ``relationship``: subject and object boxes each overlap their
  ground-truth counterparts with IoU >= 0.5.
* ``phrase``: the union box of the prediction overlaps the union box of
  the ground truth with IoU >= 0.5.

Matching is greedy in score order and one-to-one; a prediction claims the
unmatched ground truth with the largest overlap (earliest on ties).
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidArgument
from .groundings import GroundedTheory
from .scenes import BoundingBox, SceneAnnotation, SceneFeatures, iou, union_box

TASKS = ("phrase", "relationship", "predicate")
IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class PredictedTriple:
    image_id: str
    subject: BoundingBox
    object: BoundingBox
    subject_class: str
    predicate: str
    object_class: str
    score: float
    rank_key: Tuple[int, int, int] = (0, 0, 0)

    @property
    def union(self) -> BoundingBox:
        return union_box(self.subject, self.object)

    @property
    def triple_type(self) -> Tuple[str, str, str]:
        return (self.subject_class, self.predicate, self.object_class)


class FrequencyPrior(dict):
    """Predicate -> training frequency, scaled so the most frequent is 1."""

    @classmethod
    def from_scenes(cls, scenes: Iterable[SceneAnnotation], predicates: Sequence[str]):
        counts = Counter(t.predicate for s in scenes for t in s.triples)
        top = max((counts[p] for p in predicates), default=0)
        return cls({p: (counts[p] / top if top else 0.0) for p in predicates})

    @classmethod
    def uniform(cls, predicates: Sequence[str]):
        return cls({p: 1.0 for p in predicates})


def sort_predictions(preds: Iterable[PredictedTriple]) -> List[PredictedTriple]:
    """Descending score; ties by predicate, subject, object order."""
    return sorted(preds, key=lambda t: (-t.score,) + tuple(t.rank_key))


def _unary_labels(theory: GroundedTheory, features: SceneFeatures, scene: SceneAnnotation):
    consts = [(b.constant,) for b in scene.boxes]
    table = np.stack([theory.score(c, consts, features) for c in theory.signature.unary], axis=1)
    best = table.argmax(axis=1)
    return ([theory.signature.unary[i] for i in best], table[np.arange(len(best)), best])


def score_triples(theory: GroundedTheory, scene: SceneAnnotation, prior: Mapping[str, float],
                  task: str = "predicate",
                  equivalences: Optional[Sequence[Tuple[str, str]]] = None) -> List[PredictedTriple]:
    """Score every ordered box pair with every binary predicate.

    ``equivalences`` lists pairs ``(r, s)`` meaning ``r(a, b)`` and
    ``s(b, a)`` state the same fact; both scores are replaced by their mean.
    For the phrase and relationship tasks, box classes come from the best
    unary grounding and their degrees multiply into the score.
    """
    if task not in TASKS:
        raise InvalidArgument(f"unknown task {task!r}")
    binary = theory.signature.binary
    needed = list(binary) + (list(theory.signature.unary) if task != "predicate" else [])
    theory.require_trained(needed)
    features = SceneFeatures([scene], theory.features.schema)
    boxes = list(scene.boxes)
    pairs = [(i, j) for i in range(len(boxes)) for j in range(len(boxes)) if i != j]
    if not pairs:
        return []
    args = [(boxes[i].constant, boxes[j].constant) for i, j in pairs]
    raw = {r: theory.score(r, args, features) for r in binary}

    norm = dict(raw)
    if equivalences:
        where = {pair: k for k, pair in enumerate(pairs)}
        swapped = np.array([where[(j, i)] for i, j in pairs])
        for r, s in equivalences:
            if r not in raw or s not in raw:
                raise InvalidArgument(f"equivalence ({r}, {s}) names an unknown predicate")
            norm[r] = 0.5 * (raw[r] + raw[s][swapped])
            norm[s] = 0.5 * (raw[s] + raw[r][swapped])

    if task == "predicate":
        labels = [b.label for b in boxes]
        unary_deg = np.ones(len(boxes))
    else:
        labels, unary_deg = _unary_labels(theory, features, scene)

    out = []
    for r_idx, r in enumerate(binary):
        weight = float(prior.get(r, 0.0))
        for k, (i, j) in enumerate(pairs):
            score = float(norm[r][k]) * weight * float(unary_deg[i]) * float(unary_deg[j])
            out.append(PredictedTriple(scene.image_id, boxes[i], boxes[j], labels[i], r,
                                       labels[j], score, (r_idx, i, j)))
    return sort_predictions(out)


# --- recall ----------------------------------------------------------------------

@dataclass(frozen=True)
class _Truth:
    subject: BoundingBox
    object: BoundingBox
    triple_type: Tuple[str, str, str]


def ground_truth(scene: SceneAnnotation) -> List[_Truth]:
    return [_Truth(scene.box(t.subject), scene.box(t.object),
                   (scene.box(t.subject).label, t.predicate, scene.box(t.object).label))
            for t in scene.triples]


def _overlap(pred: PredictedTriple, gt: _Truth, task: str) -> float:
    """Overlap score in [0, 1]; a match needs at least the IoU threshold."""
    if task == "predicate":
        same = pred.subject.id == gt.subject.id and pred.object.id == gt.object.id
        return 1.0 if same else 0.0
    if task == "relationship":
        return min(iou(pred.subject, gt.subject), iou(pred.object, gt.object))
    return iou(pred.union, union_box(gt.subject, gt.object))


def match_image(preds: Sequence[PredictedTriple], truths: Sequence[_Truth], n: int,
                task: str) -> int:
    """Number of ground-truth triples hit by the top ``n`` predictions."""
    matched = [False] * len(truths)
    hits = 0
    for pred in sort_predictions(preds)[:n]:
        best, best_ov = -1, -1.0
        for k, gt in enumerate(truths):
            if matched[k] or gt.triple_type != pred.triple_type:
                continue
            ov = _overlap(pred, gt, task)
            if ov >= IOU_THRESHOLD and ov > best_ov:
                best, best_ov = k, ov
        if best >= 0:
            matched[best] = True
            hits += 1
    return hits


def recall_at_n(predictions: Mapping[str, Sequence[PredictedTriple]],
                truth: Mapping[str, SceneAnnotation], n: int, task: str = "predicate",
                types: Optional[Iterable[tuple]] = None) -> float:
    """Hits over ground-truth triples, summed over images.

    ``types`` restricts the ground truth to the given triple types.
    """
    if n <= 0:
        raise InvalidArgument(f"N must be positive, got {n}")
    if task not in TASKS:
        raise InvalidArgument(f"unknown task {task!r}")
    keep = None if types is None else {tuple(t) for t in types}
    hits = total = 0
    for image_id in sorted(truth):
        gts = ground_truth(truth[image_id])
        if keep is not None:
            gts = [g for g in gts if g.triple_type in keep]
        total += len(gts)
        if gts:
            hits += match_image(predictions.get(image_id, ()), gts, n, task)
    if total == 0:
        raise InvalidArgument("no ground-truth triples to recall")
    return hits / total


def zero_shot_recall(predictions, truth, unseen: Iterable[tuple], n: int,
                     task: str = "predicate") -> float:
    unseen = {tuple(t) for t in unseen}
    if not unseen:
        raise InvalidArgument("the unseen triple-type set is empty")
    return recall_at_n(predictions, truth, n, task, types=unseen)


# --- reports ------------------------------------------------------------------------

def evaluate(theory: GroundedTheory, scenes: Sequence[SceneAnnotation], prior: Mapping[str, float],
             tasks: Sequence[str] = ("predicate",), ns: Sequence[int] = (100, 50),
             unseen: Optional[Iterable[tuple]] = None,
             equivalences=None) -> List[dict]:
    """Recall rows ``{task, n, recall, zero_shot_recall}`` for each task and N."""
    truth = {s.image_id: s for s in scenes}
    unseen = None if unseen is None else {tuple(t) for t in unseen}
    rows = []
    for task in tasks:
        preds = {s.image_id: score_triples(theory, s, prior, task, equivalences) for s in scenes}
        for n in ns:
            row = {"task": task, "n": int(n), "recall": recall_at_n(preds, truth, n, task)}
            if unseen:
                try:
                    row["zero_shot_recall"] = zero_shot_recall(preds, truth, unseen, n, task)
                except InvalidArgument:
                    row["zero_shot_recall"] = None
            rows.append(row)
    return rows


def format_report(rows: Sequence[dict]) -> str:
    lines = [f"{'task':<14}{'N':>5}{'recall':>10}{'zero-shot':>11}"]
    for r in rows:
        zs = r.get("zero_shot_recall")
        zs = "-" if zs is None else f"{zs:.4f}"
        lines.append(f"{r['task']:<14}{r['n']:>5}{r['recall']:>10.4f}{zs:>11}")
    return "\n".join(lines) + "\n"
