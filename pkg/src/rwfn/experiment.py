"""End-to-end pipeline steps driven by an experiment config.

Every random choice draws from a seed derived from ``config["seed"]`` and a
fixed stream tag, so a config fully determines every output.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .config import resolve, training_config
from .errors import ConfigError, SchemaError
from .evaluation import FrequencyPrior, evaluate
from .groundings import GroundedTheory, build_theory
from .knowledge_base import (KnowledgeBase, Signature, assemble_kb, build_examples,
                             load_constraints, parse_constraints)
from .numeric import derive_seed, make_rng
from .scenes import (FeatureSchema, SceneAnnotation, SceneFeatures, SyntheticSpec,
                     drop_annotations, generate_synthetic, holdout_split, load_vrd,
                     zero_shot_split)
from .training import TrainingReport, train

log = logging.getLogger(__name__)

# stream tags for derive_seed
DATA_STREAM, SPLIT_STREAM, DROP_STREAM, NEGATIVE_STREAM = 100, 101, 102, 103


@dataclass
class Dataset:
    scenes: List[SceneAnnotation]
    classes: Tuple[str, ...]
    predicates: Tuple[str, ...]

    def signature(self, scenes: Optional[Sequence[SceneAnnotation]] = None) -> Signature:
        scenes = self.scenes if scenes is None else scenes
        return Signature(self.classes, self.predicates,
                         {s.image_id: tuple(b.constant for b in s.boxes) for s in scenes})


def load_dataset(config: dict) -> Dataset:
    ds = config["dataset"]
    if ds["path"] is not None:
        scenes, sig = load_vrd(resolve(config, ds["path"]))
        return Dataset(list(scenes), sig.unary, sig.binary)
    spec = SyntheticSpec.from_dict(ds["synthetic"])
    scenes = generate_synthetic(make_rng(derive_seed(config["seed"], DATA_STREAM)), spec)
    return Dataset(scenes, spec.classes, spec.predicate_names)


def make_split(config: dict, dataset: Dataset) -> dict:
    """Split manifest ``{kind, train, test, unseen}`` (image ids and triple types)."""
    split = config["dataset"]["split"]
    rng = make_rng(derive_seed(config["seed"], SPLIT_STREAM))
    if split["kind"] == "zero_shot":
        zs = zero_shot_split(dataset.scenes, rng, n_unseen=split["n_unseen"])
        return {"kind": "zero_shot", **zs.to_dict()}
    train_s, test_s = holdout_split(dataset.scenes, split["test_fraction"], rng)
    return {"kind": "holdout", "train": [s.image_id for s in train_s],
            "test": [s.image_id for s in test_s], "unseen": []}


def select(dataset: Dataset, ids: Sequence[str]) -> List[SceneAnnotation]:
    by_id = {s.image_id: s for s in dataset.scenes}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise SchemaError(f"split names images absent from the dataset: {missing[:5]}")
    return [by_id[i] for i in ids]


def training_scenes(config: dict, dataset: Dataset, manifest: dict) -> List[SceneAnnotation]:
    scenes = select(dataset, manifest["train"])
    frac = config["dataset"]["drop_fraction"]
    if frac > 0:
        scenes = drop_annotations(scenes, frac, make_rng(derive_seed(config["seed"], DROP_STREAM)))
    return scenes


def constraints_text(config: dict) -> str:
    kb = config["kb"]
    lines = list(kb["constraints"])
    if kb["constraints_file"] is not None:
        lines.append(resolve(config, kb["constraints_file"]).read_text())
    return "\n".join(lines)


def build_kb(config: dict, dataset: Dataset, scenes: Sequence[SceneAnnotation]) -> KnowledgeBase:
    sig = dataset.signature(scenes)
    rate = float(config["kb"]["negative_rate"])
    rng = make_rng(derive_seed(config["seed"], NEGATIVE_STREAM)) if rate < 1 else None
    examples = build_examples(scenes, sig, rate, rng)
    constraints = parse_constraints(constraints_text(config), sig)
    if config["kb"]["mode"] == "prior" and not constraints:
        log.warning("prior knowledge base has no constraints")
    return assemble_kb(examples, constraints, config["kb"]["mode"], sig)


def build(config: dict, dataset: Dataset, scenes: Sequence[SceneAnnotation],
          kb: KnowledgeBase) -> GroundedTheory:
    schema = FeatureSchema(dataset.classes)
    model = config["model"]
    return build_theory(kb.signature, schema, model["kind"],
                        hidden={1: model["hidden"]["unary"], 2: model["hidden"]["binary"]},
                        k=model["k"], seed=config["seed"], fan_in=model["fan_in"],
                        features=SceneFeatures(scenes, schema), kb=kb)


@dataclass
class RunResult:
    theory: GroundedTheory
    report: TrainingReport
    manifest: dict
    prior: FrequencyPrior
    dataset: Dataset


def run_training(config: dict, dataset: Optional[Dataset] = None,
                 manifest: Optional[dict] = None, progress=None) -> RunResult:
    dataset = dataset or load_dataset(config)
    manifest = manifest or make_split(config, dataset)
    scenes = training_scenes(config, dataset, manifest)
    if not scenes:
        raise ConfigError("training split is empty", field="dataset.split")
    kb = build_kb(config, dataset, scenes)
    theory = build(config, dataset, scenes, kb)
    report = train(theory, kb, training_config(config), progress)
    prior = FrequencyPrior.from_scenes(scenes, dataset.predicates)
    return RunResult(theory, report, manifest, prior, dataset)


def run_eval(config: dict, theory: GroundedTheory, scenes: Sequence[SceneAnnotation],
             prior, unseen=None, tasks=None, ns=None) -> List[Dict]:
    ev = config["eval"]
    equivalences = [tuple(e) for e in ev["equivalences"]] or None
    return evaluate(theory, scenes, prior, tasks or ev["tasks"], ns or ev["n"],
                    unseen or None, equivalences)
