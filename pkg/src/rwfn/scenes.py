"""Scenes, bounding-box geometry, feature construction and dataset files.

Dataset file (JSON, ``format = "rwfn-scenes"``, ``version = 1``)::

    {
      "format": "rwfn-scenes", "version": 1, "joint_features": 1,
      "source": "ground_truth" | "detector",
      "classes": ["person", ...],          # unary predicates, index = category
      "predicates": ["above", ...],        # binary predicates, index = predicate
      "images": {
        "<image id>": {
          "width": 640, "height": 480,
          "boxes": [{"id": "0", "category": 3, "bbox": [x_min, y_min, x_max, y_max],
                     "scores": [...]}],    # scores optional, one per class
          "relationships": [{"subject": "0", "predicate": 1, "object": "2"}]
        }
      }
    }

Boxes without ``scores`` get one-hot ground-truth scores.  Files in the
public VRD annotation layout (image -> list of relationships whose subject
and object carry ``category`` and ``bbox = [y_min, y_max, x_min, x_max]``)
are accepted by :func:`load_vrd` when the class and predicate name lists
are supplied.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidArgument, ParseError, SchemaError, SplitError
from .knowledge_base import Signature
from .numeric import Rng

FORMAT_NAME = "rwfn-scenes"
FORMAT_VERSION = 1
JOINT_SCHEMA_VERSION = 1
GEOMETRY_DIM = 5
JOINT_DIM = 8
LOG_RATIO_CLAMP = 5.0


@dataclass(frozen=True)
class BoundingBox:
    id: str
    image_id: str
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    label: Optional[str] = None
    scores: Tuple[float, ...] = ()

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise InvalidArgument(f"box {self.id}: non-finite coordinates")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidArgument(f"box {self.id}: degenerate extent {coords}")
        if any(not 0.0 <= s <= 1.0 for s in self.scores):
            raise InvalidArgument(f"box {self.id}: class scores must lie in [0, 1]")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    @property
    def constant(self) -> str:
        return box_constant(self.image_id, self.id)


class Triple(NamedTuple):
    subject: str
    predicate: str
    object: str


def box_constant(image_id: str, box_id: str) -> str:
    return f"{image_id}/{box_id}"


@dataclass(frozen=True)
class SceneAnnotation:
    image_id: str
    width: float
    height: float
    boxes: Tuple[BoundingBox, ...]
    triples: Tuple[Triple, ...] = ()
    source: str = "ground_truth"
    _by_id: Dict[str, BoundingBox] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        object.__setattr__(self, "triples", tuple(Triple(*t) for t in self.triples))
        by_id = {}
        for b in self.boxes:
            if b.id in by_id:
                raise InvalidArgument(f"image {self.image_id}: duplicate box id {b.id}")
            by_id[b.id] = b
        object.__setattr__(self, "_by_id", by_id)
        for t in self.triples:
            if t.subject not in by_id or t.object not in by_id:
                raise InvalidArgument(f"image {self.image_id}: triple {t} references a missing box")
            if t.subject == t.object:
                raise InvalidArgument(f"image {self.image_id}: triple {t} relates a box to itself")

    def box(self, box_id: str) -> BoundingBox:
        return self._by_id[box_id]

    def pairs(self):
        """Ordered pairs of distinct boxes, in box order."""
        for a in self.boxes:
            for b in self.boxes:
                if a.id != b.id:
                    yield a, b

    def triple_types(self):
        return {(self.box(t.subject).label, t.predicate, self.box(t.object).label)
                for t in self.triples}

    def with_triples(self, triples) -> "SceneAnnotation":
        return SceneAnnotation(self.image_id, self.width, self.height, self.boxes,
                               tuple(triples), self.source)


# --- geometry ---------------------------------------------------------------

def intersection_area(b1: BoundingBox, b2: BoundingBox) -> float:
    w = min(b1.x_max, b2.x_max) - max(b1.x_min, b2.x_min)
    h = min(b1.y_max, b2.y_max) - max(b1.y_min, b2.y_min)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(b1: BoundingBox, b2: BoundingBox) -> float:
    inter = intersection_area(b1, b2)
    if inter == 0.0:
        return 0.0
    return inter / (b1.area + b2.area - inter)


def union_box(b1: BoundingBox, b2: BoundingBox) -> BoundingBox:
    return BoundingBox(f"{b1.id}+{b2.id}", b1.image_id,
                       min(b1.x_min, b2.x_min), min(b1.y_min, b2.y_min),
                       max(b1.x_max, b2.x_max), max(b1.y_max, b2.y_max))


# --- features -----------------------------------------------------------------

@dataclass(frozen=True)
class FeatureSchema:
    classes: Tuple[str, ...]
    geometry_dim: int = GEOMETRY_DIM
    joint_dim: int = JOINT_DIM
    log_ratio_clamp: float = LOG_RATIO_CLAMP

    @property
    def unary_dim(self) -> int:
        return len(self.classes) + self.geometry_dim

    @property
    def binary_dim(self) -> int:
        return 2 * self.unary_dim + self.joint_dim

    def input_dim(self, arity: int) -> int:
        if arity == 1:
            return self.unary_dim
        if arity == 2:
            return self.binary_dim
        raise InvalidArgument(f"unsupported arity {arity}")


def _check_scene_dims(scene: SceneAnnotation):
    if not (scene.width > 0 and scene.height > 0):
        raise InvalidArgument(f"image {scene.image_id}: degenerate size {scene.width}x{scene.height}")


def class_scores(box: BoundingBox, classes: Sequence[str]) -> np.ndarray:
    if box.scores:
        if len(box.scores) != len(classes):
            raise InvalidArgument(f"box {box.id}: {len(box.scores)} scores for {len(classes)} classes")
        return np.array(box.scores, dtype=np.float64)
    out = np.zeros(len(classes))
    if box.label is not None:
        if box.label not in classes:
            raise SchemaError(f"box {box.id}: label {box.label!r} is not a declared class")
        out[list(classes).index(box.label)] = 1.0
    return out


def unary_features(box: BoundingBox, scene: SceneAnnotation, classes: Sequence[str]) -> np.ndarray:
    """Class scores followed by normalised corners and relative area."""
    _check_scene_dims(scene)
    W, H = scene.width, scene.height
    geom = [box.x_min / W, box.y_min / H, box.x_max / W, box.y_max / H, box.area / (W * H)]
    return np.concatenate([class_scores(box, classes), np.clip(geom, 0.0, 1.0)])


def joint_features(b1: BoundingBox, b2: BoundingBox, scene: SceneAnnotation,
                   clamp: float = LOG_RATIO_CLAMP) -> np.ndarray:
    """Eight pairwise geometry features.

    inclusion of b1, inclusion of b2, IoU, centroid distance over the image
    diagonal, centroid offsets over width and height, log width ratio, log
    height ratio (ratios clamped to ``[-clamp, clamp]``).
    """
    _check_scene_dims(scene)
    W, H = scene.width, scene.height
    inter = intersection_area(b1, b2)
    (x1, y1), (x2, y2) = b1.center, b2.center
    dx, dy = x1 - x2, y1 - y2
    return np.array([
        inter / b1.area,
        inter / b2.area,
        iou(b1, b2),
        math.hypot(dx, dy) / math.hypot(W, H),
        dx / W,
        dy / H,
        float(np.clip(math.log(b1.width / b2.width), -clamp, clamp)),
        float(np.clip(math.log(b1.height / b2.height), -clamp, clamp)),
    ])


class SceneFeatures:
    """Feature vectors for the box constants of a set of scenes."""

    def __init__(self, scenes: Iterable[SceneAnnotation], schema: FeatureSchema):
        self.schema = schema
        self._boxes: Dict[str, Tuple[BoundingBox, SceneAnnotation]] = {}
        self._unary: Dict[str, np.ndarray] = {}
        for scene in scenes:
            for box in scene.boxes:
                self._boxes[box.constant] = (box, scene)

    def __contains__(self, constant: str) -> bool:
        return constant in self._boxes

    def unary(self, constant: str) -> np.ndarray:
        vec = self._unary.get(constant)
        if vec is None:
            box, scene = self._lookup(constant)
            vec = self._unary[constant] = unary_features(box, scene, self.schema.classes)
        return vec

    def _lookup(self, constant: str):
        try:
            return self._boxes[constant]
        except KeyError:
            from .errors import LookupFailure
            raise LookupFailure(f"unknown constant {constant!r}") from None

    def vector(self, args: Sequence[str]) -> np.ndarray:
        if len(args) == 1:
            return self.unary(args[0])
        if len(args) == 2:
            (b1, s1), (b2, s2) = self._lookup(args[0]), self._lookup(args[1])
            if s1.image_id != s2.image_id:
                raise InvalidArgument(f"constants {args} belong to different images")
            return np.concatenate([self.unary(args[0]), self.unary(args[1]),
                                   joint_features(b1, b2, s1, self.schema.log_ratio_clamp)])
        raise InvalidArgument(f"unsupported arity {len(args)}")

    def matrix(self, arg_tuples: Sequence[Sequence[str]], arity: int) -> np.ndarray:
        dim = self.schema.input_dim(arity)
        if not arg_tuples:
            return np.zeros((0, dim))
        return np.stack([self.vector(a) for a in arg_tuples])


# --- dataset files ------------------------------------------------------------

def _signature(scenes: Sequence[SceneAnnotation], classes, predicates) -> Signature:
    return Signature(tuple(classes), tuple(predicates),
                     {s.image_id: tuple(b.constant for b in s.boxes) for s in scenes})


def _parse_native(doc: dict):
    if doc.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported format version {doc.get('version')!r}")
    if doc.get("joint_features", JOINT_SCHEMA_VERSION) != JOINT_SCHEMA_VERSION:
        raise ParseError(f"unsupported joint feature schema {doc.get('joint_features')!r}")
    classes = list(doc.get("classes", []))
    predicates = list(doc.get("predicates", []))
    source = doc.get("source", "ground_truth")
    scenes = []
    for idx, (image_id, rec) in enumerate(doc.get("images", {}).items()):
        try:
            boxes = []
            for b in rec["boxes"]:
                x0, y0, x1, y1 = (float(c) for c in b["bbox"])
                cat = b.get("category")
                label = classes[int(cat)] if cat is not None else None
                scores = tuple(float(s) for s in b.get("scores", ()))
                if label is None and scores:
                    label = classes[int(np.argmax(scores))]
                boxes.append(BoundingBox(str(b["id"]), str(image_id), x0, y0, x1, y1, label, scores))
            triples = [Triple(str(r["subject"]), predicates[int(r["predicate"])], str(r["object"]))
                       for r in rec.get("relationships", [])]
            scenes.append(SceneAnnotation(str(image_id), float(rec["width"]), float(rec["height"]),
                                          tuple(boxes), tuple(triples), source))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ParseError(f"image {image_id!r}: {exc}", index=idx) from None
    return scenes, classes, predicates


def _parse_public_vrd(doc: dict, classes, predicates, image_sizes=None):
    if classes is None or predicates is None:
        raise ParseError("public VRD layout needs the class and predicate name lists")
    image_sizes = image_sizes or {}
    scenes = []
    for idx, (image_id, rels) in enumerate(doc.items()):
        try:
            boxes: Dict[tuple, BoundingBox] = {}
            triples = []

            def get_box(entity):
                y0, y1, x0, x1 = (float(c) for c in entity["bbox"])
                key = (int(entity["category"]), x0, y0, x1, y1)
                if key not in boxes:
                    boxes[key] = BoundingBox(str(len(boxes)), str(image_id), x0, y0, x1, y1,
                                             classes[key[0]])
                return boxes[key]

            for r in rels:
                s, o = get_box(r["subject"]), get_box(r["object"])
                if s.id != o.id:
                    triples.append(Triple(s.id, predicates[int(r["predicate"])], o.id))
            triples = list(dict.fromkeys(triples))
            if image_id in image_sizes:
                width, height = image_sizes[image_id]
            else:
                width = max([b.x_max for b in boxes.values()], default=1.0)
                height = max([b.y_max for b in boxes.values()], default=1.0)
            scenes.append(SceneAnnotation(str(image_id), float(width), float(height),
                                          tuple(boxes.values()), tuple(triples)))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ParseError(f"image {image_id!r}: {exc}", index=idx) from None
    return scenes, list(classes), list(predicates)


def load_vrd(path, classes=None, predicates=None, image_sizes=None):
    """Read a dataset file and return ``(scenes, signature)``."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None
    if isinstance(doc, list) and not doc:
        doc = {}
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    if doc.get("format") == FORMAT_NAME:
        scenes, classes, predicates = _parse_native(doc)
    elif "format" in doc:
        raise ParseError(f"unknown dataset format {doc['format']!r}")
    else:
        scenes, classes, predicates = _parse_public_vrd(doc, classes, predicates, image_sizes)
    return scenes, _signature(scenes, classes, predicates)


def scenes_to_dict(scenes: Sequence[SceneAnnotation], classes, predicates) -> dict:
    cls_idx = {c: i for i, c in enumerate(classes)}
    pred_idx = {p: i for i, p in enumerate(predicates)}
    sources = {s.source for s in scenes} or {"ground_truth"}
    images = {}
    for s in scenes:
        boxes = []
        for b in s.boxes:
            rec = {"id": b.id, "category": cls_idx[b.label] if b.label is not None else None,
                   "bbox": [b.x_min, b.y_min, b.x_max, b.y_max]}
            if b.scores:
                rec["scores"] = list(b.scores)
            boxes.append(rec)
        images[s.image_id] = {
            "width": s.width, "height": s.height, "boxes": boxes,
            "relationships": [{"subject": t.subject, "predicate": pred_idx[t.predicate],
                               "object": t.object} for t in s.triples],
        }
    return {"format": FORMAT_NAME, "version": FORMAT_VERSION,
            "joint_features": JOINT_SCHEMA_VERSION,
            "source": sorted(sources)[0], "classes": list(classes),
            "predicates": list(predicates), "images": images}


def save_scenes(path, scenes, classes, predicates):
    Path(path).write_text(json.dumps(scenes_to_dict(scenes, classes, predicates), indent=1))


# --- synthetic scenes -----------------------------------------------------------

def _x_overlap(a: BoundingBox, b: BoundingBox) -> float:
    return max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))


def _y_overlap(a: BoundingBox, b: BoundingBox) -> float:
    return max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))


def _rule_above(a, b, scene, margin):
    # vertically separated centres, horizontally stacked by at least half the narrower box
    return (a.center[1] < b.center[1] - margin * scene.height
            and _x_overlap(a, b) >= 0.5 * min(a.width, b.width))


def _rule_left_of(a, b, scene, margin):
    return (a.center[0] < b.center[0] - margin * scene.width
            and _y_overlap(a, b) >= 0.5 * min(a.height, b.height))


def _rule_inside(a, b, scene, margin):
    return a.area < b.area and intersection_area(a, b) >= 0.9 * a.area


def _rule_near(a, b, scene, margin):
    (x1, y1), (x2, y2) = a.center, b.center
    return math.hypot(x1 - x2, y1 - y2) < 0.25 * math.hypot(scene.width, scene.height)


# rule(a, b) decides whether "a <predicate> b" holds
SPATIAL_RULES = {
    "above": _rule_above,
    "below": lambda a, b, s, m: _rule_above(b, a, s, m),
    "left_of": _rule_left_of,
    "right_of": lambda a, b, s, m: _rule_left_of(b, a, s, m),
    "inside": _rule_inside,
    "contains": lambda a, b, s, m: _rule_inside(b, a, s, m),
    "near": _rule_near,
}


@dataclass(frozen=True)
class PredicateRule:
    name: str
    rule: str
    subject_classes: Optional[Tuple[str, ...]] = None
    object_classes: Optional[Tuple[str, ...]] = None

    def holds(self, a: BoundingBox, b: BoundingBox, scene: SceneAnnotation, margin: float) -> bool:
        if self.subject_classes is not None and a.label not in self.subject_classes:
            return False
        if self.object_classes is not None and b.label not in self.object_classes:
            return False
        return SPATIAL_RULES[self.rule](a, b, scene, margin)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a rule-generated corpus.

    Box classes are uniform over ``classes``; box sides are uniform fractions
    of the image side in ``[min_size, max_size]``.  A triple ``r(a, b)`` is
    emitted for every ordered pair for which the rule of ``r`` holds.  With
    probability ``noise`` an emitted triple has its predicate replaced by a
    different predicate drawn uniformly.
    """

    n_images: int = 100
    classes: Tuple[str, ...] = ("person", "dog", "car", "tree", "ball")
    predicates: Tuple[PredicateRule, ...] = (
        PredicateRule("above", "above"), PredicateRule("below", "below"),
        PredicateRule("left_of", "left_of"))
    boxes_per_image: Tuple[int, int] = (6, 10)
    width: float = 640.0
    height: float = 480.0
    min_size: float = 0.05
    max_size: float = 0.25
    margin: float = 0.05
    noise: float = 0.0

    def __post_init__(self):
        preds = tuple(p if isinstance(p, PredicateRule) else _rule_from(p) for p in self.predicates)
        object.__setattr__(self, "predicates", preds)
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "boxes_per_image", tuple(self.boxes_per_image))
        lo, hi = self.boxes_per_image
        if self.n_images < 1 or lo < 2 or hi < lo:
            raise InvalidArgument("need n_images >= 1 and 2 <= min boxes <= max boxes")
        if not self.classes or not self.predicates:
            raise InvalidArgument("need at least one class and one predicate")
        if not 0.0 <= self.noise <= 1.0:
            raise InvalidArgument(f"noise {self.noise} outside [0, 1]")
        if not 0.0 < self.min_size <= self.max_size <= 1.0:
            raise InvalidArgument("box size fractions must satisfy 0 < min <= max <= 1")
        for p in self.predicates:
            if p.rule not in SPATIAL_RULES:
                raise InvalidArgument(f"unknown spatial rule {p.rule!r}")

    @property
    def predicate_names(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.predicates)

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        return cls(**d)


def _rule_from(p) -> PredicateRule:
    if isinstance(p, str):
        return PredicateRule(p, p)
    d = dict(p)
    for key in ("subject_classes", "object_classes"):
        if d.get(key) is not None:
            d[key] = tuple(d[key])
    d.setdefault("rule", d["name"])
    return PredicateRule(**d)


def rule_triples(scene: SceneAnnotation, spec: SyntheticSpec) -> List[Triple]:
    """Noise-free triples implied by the generator's predicate rules for a scene."""
    out = []
    for a, b in scene.pairs():
        for p in spec.predicates:
            if p.holds(a, b, scene, spec.margin):
                out.append(Triple(a.id, p.name, b.id))
    return out


def generate_synthetic(rng: Rng, spec: SyntheticSpec) -> List[SceneAnnotation]:
    scenes = []
    names = spec.predicate_names
    for i in range(spec.n_images):
        image_id = f"img{i:05d}"
        n_boxes = int(rng.integers(spec.boxes_per_image[0], spec.boxes_per_image[1] + 1))
        boxes = []
        for j in range(n_boxes):
            label = spec.classes[int(rng.integers(len(spec.classes)))]
            w = rng.uniform(spec.min_size, spec.max_size) * spec.width
            h = rng.uniform(spec.min_size, spec.max_size) * spec.height
            x0 = rng.uniform(0.0, spec.width - w)
            y0 = rng.uniform(0.0, spec.height - h)
            boxes.append(BoundingBox(str(j), image_id, x0, y0, x0 + w, y0 + h, label))
        scene = SceneAnnotation(image_id, spec.width, spec.height, tuple(boxes))
        triples = rule_triples(scene, spec)
        if spec.noise > 0 and len(names) > 1:
            noisy = []
            for t in triples:
                if rng.random() < spec.noise:
                    others = [n for n in names if n != t.predicate]
                    t = Triple(t.subject, others[int(rng.integers(len(others)))], t.object)
                noisy.append(t)
            triples = list(dict.fromkeys(noisy))
        scenes.append(scene.with_triples(triples))
    return scenes


def drop_annotations(scenes: Sequence[SceneAnnotation], fraction: float, rng: Rng) -> List[SceneAnnotation]:
    """Remove each triple independently with probability ``fraction``."""
    if not 0.0 <= fraction < 1.0:
        raise InvalidArgument(f"drop fraction {fraction} outside [0, 1)")
    out = []
    for s in scenes:
        keep = [t for t in s.triples if rng.random() >= fraction]
        out.append(s.with_triples(keep))
    return out


# --- splits ---------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroShotSplit:
    train: List[SceneAnnotation]
    test: List[SceneAnnotation]
    unseen: frozenset

    def to_dict(self) -> dict:
        return {"train": [s.image_id for s in self.train],
                "test": [s.image_id for s in self.test],
                "unseen": sorted(list(t) for t in self.unseen)}


def holdout_split(scenes: Sequence[SceneAnnotation], test_fraction: float, rng: Rng):
    if not 0.0 < test_fraction < 1.0:
        raise InvalidArgument(f"test fraction {test_fraction} outside (0, 1)")
    order = rng.permutation(len(scenes))
    n_test = max(1, int(round(test_fraction * len(scenes))))
    test_idx = set(order[:n_test].tolist())
    train = [s for i, s in enumerate(scenes) if i not in test_idx]
    test = [s for i, s in enumerate(scenes) if i in test_idx]
    return train, test


def zero_shot_split(scenes: Sequence[SceneAnnotation], rng: Rng, n_unseen: int = 3,
                    unseen: Optional[Iterable[tuple]] = None,
                    max_test_fraction: float = 0.5) -> ZeroShotSplit:
    """Hold out triple types so they occur only in test scenes.

    When ``unseen`` is not given, candidate types are visited in random order
    and accepted while the scenes containing accepted types stay within
    ``max_test_fraction`` of the corpus.
    """
    scene_types = [s.triple_types() for s in scenes]
    all_types = set().union(*scene_types) if scenes else set()
    if len(all_types) < 2:
        raise SplitError("need at least two distinct triple types")
    if unseen is not None:
        chosen = {tuple(t) for t in unseen}
        missing = chosen - all_types
        if missing:
            raise SplitError(f"held-out types never occur: {sorted(missing)}")
    else:
        limit = max_test_fraction * len(scenes)
        candidates = sorted(t for t in all_types
                            if not all(t in st for st in scene_types))
        order = rng.permutation(len(candidates))
        chosen, covered = set(), set()
        for i in order:
            t = candidates[i]
            hit = {k for k, st in enumerate(scene_types) if t in st}
            if len(covered | hit) <= limit:
                chosen.add(t)
                covered |= hit
            if len(chosen) == n_unseen:
                break
        if len(chosen) < n_unseen:
            raise SplitError(f"could only hold out {len(chosen)} of {n_unseen} triple types")
    test = [s for s, st in zip(scenes, scene_types) if st & chosen]
    train = [s for s, st in zip(scenes, scene_types) if not st & chosen]
    if not train or not test:
        raise SplitError("held-out types leave the train or test side empty")
    return ZeroShotSplit(train, test, frozenset(chosen))
