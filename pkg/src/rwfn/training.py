"""Best-satisfiability training of a grounded theory.

The objective is ``mean_p(formula degrees) - lam * ||theta||^2`` and is
maximised.  Both optimisers follow the usual minimisation convention: they
receive the gradient of the loss ``-objective``.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import InvalidArgument, LookupFailure, NumericError
from .fuzzy import EPSILON_CLAMP, FormulaBatch, Formula
from .groundings import GroundedTheory
from .numeric import make_rng

log = logging.getLogger(__name__)


@dataclass
class FtrlConfig:
    learning_rate: float = 1.0
    lr_power: float = -0.5
    l1: float = 0.0
    l2: float = 0.0
    beta: float = 1.0
    initial_accumulator: float = 0.0

    def validate(self):
        if not self.learning_rate > 0:
            raise InvalidArgument("ftrl learning rate must be positive")
        if self.lr_power > 0:
            raise InvalidArgument("ftrl lr_power must be <= 0")
        if self.l1 < 0 or self.l2 < 0 or self.beta < 0 or self.initial_accumulator < 0:
            raise InvalidArgument("ftrl l1, l2, beta and initial accumulator must be >= 0")


@dataclass
class RmspropConfig:
    learning_rate: float = 1e-3
    decay: float = 0.9
    epsilon: float = 1e-8

    def validate(self):
        if not self.learning_rate > 0:
            raise InvalidArgument("rmsprop learning rate must be positive")
        if not 0.0 <= self.decay < 1.0:
            raise InvalidArgument(f"rmsprop decay {self.decay} outside [0, 1)")
        if not self.epsilon > 0:
            raise InvalidArgument("rmsprop epsilon must be positive")


@dataclass
class TrainingConfig:
    epochs: int = 10000
    p: int = -1
    lam: float = 1e-10
    optimizer: str = "ftrl"
    ftrl: FtrlConfig = field(default_factory=FtrlConfig)
    rmsprop: RmspropConfig = field(default_factory=RmspropConfig)
    seed: int = 0
    epsilon: float = EPSILON_CLAMP
    batch_size: Optional[int] = None
    log_every: int = 100

    def validate(self):
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise InvalidArgument(f"epochs must be a positive integer, got {self.epochs!r}")
        if self.lam < 0:
            raise InvalidArgument("lambda must be >= 0")
        if self.optimizer not in ("ftrl", "rmsprop"):
            raise InvalidArgument(f"unknown optimizer {self.optimizer!r}")
        if not self.epsilon > 0:
            raise InvalidArgument("epsilon clamp must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidArgument("batch size must be positive")
        if self.log_every < 1:
            raise InvalidArgument("log interval must be positive")
        self.ftrl.validate()
        self.rmsprop.validate()

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        d = dict(d)
        ftrl = FtrlConfig(**d.pop("ftrl", {}))
        rms = RmspropConfig(**d.pop("rmsprop", {}))
        return cls(ftrl=ftrl, rmsprop=rms, **d)

    def to_dict(self) -> dict:
        return asdict(self)


# --- optimisers -----------------------------------------------------------------

@dataclass
class FtrlState:
    z: np.ndarray
    n: np.ndarray

    @classmethod
    def zeros_like(cls, w, initial_accumulator: float = 0.0) -> "FtrlState":
        return cls(np.zeros_like(w, dtype=np.float64),
                   np.full(np.shape(w), float(initial_accumulator)))


def _check_shapes(params, grads, *state):
    shape = np.shape(params)
    if np.shape(grads) != shape or any(np.shape(s) != shape for s in state):
        raise InvalidArgument("parameter, gradient and state shapes differ")


def ftrl_step(state: FtrlState, params, grads, config: FtrlConfig) -> np.ndarray:
    """One FTRL-proximal update; ``grads`` is the loss gradient.

    Updates ``state`` in place and returns the new parameters.
    """
    _check_shapes(params, grads, state.z, state.n)
    w = np.asarray(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    alpha, power = config.learning_rate, -config.lr_power
    n_new = state.n + g * g
    sigma = (n_new ** power - state.n ** power) / alpha
    z_new = state.z + g - sigma * w
    denom = (config.beta + n_new ** power) / alpha + config.l2
    shrunk = z_new - np.sign(z_new) * config.l1
    w_new = np.where(np.abs(z_new) <= config.l1, 0.0, -shrunk / denom)
    state.z, state.n = z_new, n_new
    return w_new


@dataclass
class RmspropState:
    v: np.ndarray

    @classmethod
    def zeros_like(cls, w) -> "RmspropState":
        return cls(np.zeros_like(w, dtype=np.float64))


def rmsprop_step(state: RmspropState, params, grads, config: RmspropConfig) -> np.ndarray:
    """One RMSProp update; ``grads`` is the loss gradient."""
    if config.decay < 0 or config.decay >= 1:
        raise InvalidArgument(f"rmsprop decay {config.decay} outside [0, 1)")
    _check_shapes(params, grads, state.v)
    g = np.asarray(grads, dtype=np.float64)
    state.v = config.decay * state.v + (1.0 - config.decay) * g * g
    return np.asarray(params, dtype=np.float64) - config.learning_rate * g / np.sqrt(state.v + config.epsilon)


# --- compiled objective ------------------------------------------------------------

class Problem:
    """A theory bound to a list of ground formulas.

    Atom inputs are gathered once per arity; frozen encodings are computed
    once per encoder and reused every epoch.
    """

    def __init__(self, theory: GroundedTheory, formulas: Sequence[Formula],
                 batch_size: Optional[int] = None, rng=None):
        formulas = list(formulas)
        if not formulas:
            raise InvalidArgument("formula batch is empty")
        self.theory = theory
        atom_index: Dict = {}
        if batch_size is None or batch_size >= len(formulas):
            self.full = FormulaBatch(formulas, atom_index)
            self.chunks = [self.full]
        else:
            order = (rng or make_rng(0)).permutation(len(formulas))
            shuffled = [formulas[i] for i in order]
            self.chunks = [FormulaBatch(shuffled[i:i + batch_size], atom_index)
                           for i in range(0, len(shuffled), batch_size)]
            self.full = FormulaBatch(formulas, atom_index)
        atoms = self.full.atoms
        self.n_atoms = len(atoms)

        rows: Dict[int, Dict[tuple, int]] = {}
        per_pred: Dict[str, tuple] = {}
        atom_ids: Dict[str, List[int]] = {}
        row_ids: Dict[str, List[int]] = {}
        for i, atom in enumerate(atoms):
            g = theory.groundings.get(atom.predicate)
            if g is None:
                raise LookupFailure(f"no grounding for predicate {atom.predicate!r}")
            if len(atom.args) != g.arity:
                raise LookupFailure(f"{atom.predicate} expects {g.arity} arguments, got {atom}")
            table = rows.setdefault(g.arity, {})
            r = table.setdefault(atom.args, len(table))
            atom_ids.setdefault(atom.predicate, []).append(i)
            row_ids.setdefault(atom.predicate, []).append(r)
        X = {arity: theory.features.matrix(list(table), arity) for arity, table in rows.items()}
        caches: Dict[int, dict] = {arity: {} for arity in X}
        for pred in theory.signature.predicates:
            if pred not in atom_ids:
                continue
            g = theory.groundings[pred]
            per_pred[pred] = (np.array(atom_ids[pred]), np.array(row_ids[pred]),
                              g.prepare(X[g.arity], caches[g.arity]), len(rows[g.arity]))
        self.per_pred = per_pred

    def evaluate(self, batch: Optional[FormulaBatch] = None, p: int = -1,
                 epsilon: float = EPSILON_CLAMP, with_grad: bool = True):
        """Return (satisfiability, {(pred, name): gradient}) for ``batch``."""
        batch = batch or self.full
        truth = np.zeros(self.n_atoms)
        scores = {}
        for pred, (aidx, ridx, prep, _) in self.per_pred.items():
            s = self.theory.groundings[pred].forward(prep)
            scores[pred] = s
            truth[aidx] = s[ridx]
        sat, gtruth = batch.aggregate(truth, p, epsilon, with_grad)
        if not with_grad:
            return sat, None
        grads = {}
        for pred, (aidx, ridx, prep, n_rows) in self.per_pred.items():
            up = np.zeros(n_rows)
            up[ridx] = gtruth[aidx]
            for name, g in self.theory.groundings[pred].backward(prep, scores[pred], up).items():
                grads[(pred, name)] = g
        return sat, grads

    def objective(self, config: TrainingConfig, batch=None, with_grad: bool = True):
        """Return (objective, satisfiability, gradients aligned with learnable_params)."""
        sat, grads = self.evaluate(batch, config.p, config.epsilon, with_grad)
        params = self.theory.learnable_params()
        reg = sum(float(np.sum(a * a)) for _, _, a in params)
        obj = sat - config.lam * reg
        if not with_grad:
            return obj, sat, None
        out = []
        for pred, name, arr in params:
            g = grads.get((pred, name))
            g = np.zeros_like(arr) if g is None else g
            out.append(g - 2.0 * config.lam * arr)
        return obj, sat, out


def satisfiability(theory: GroundedTheory, batch: Sequence[Formula],
                   config: Optional[TrainingConfig] = None) -> float:
    config = config or TrainingConfig()
    return Problem(theory, batch).evaluate(p=config.p, epsilon=config.epsilon, with_grad=False)[0]


def objective(theory: GroundedTheory, batch: Sequence[Formula],
              config: Optional[TrainingConfig] = None) -> float:
    config = config or TrainingConfig()
    return Problem(theory, batch).objective(config, with_grad=False)[0]


def objective_function(theory: GroundedTheory, batch: Sequence[Formula], config: TrainingConfig):
    """``theta -> (objective, gradient)`` over the flattened learnable parameters."""
    problem = Problem(theory, batch)

    def f(theta):
        theory.set_flat(theta)
        obj, _, grads = problem.objective(config)
        return obj, np.concatenate([g.ravel() for g in grads])

    return f


# --- training loop ------------------------------------------------------------------

@dataclass
class TrainingReport:
    trace: List[dict]
    initial_satisfiability: float
    final_satisfiability: float
    final_objective: float
    epochs: int

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.trace)


def _record(epoch, obj, sat):
    return {"epoch": epoch, "objective": float(obj), "satisfiability": float(sat)}


def train(theory: GroundedTheory, kb, config: TrainingConfig,
          progress: Optional[Callable[[dict], None]] = None) -> TrainingReport:
    """Maximise the regularised satisfiability of ``kb`` under ``theory``.

    Full-batch unless ``config.batch_size`` is set.  Raises
    :class:`NumericError` carrying the last finite parameters if the
    objective stops being finite.
    """
    config.validate()
    formulas = kb.ground_formulas()
    if not formulas:
        raise InvalidArgument("knowledge base is empty")
    problem = Problem(theory, formulas, config.batch_size, make_rng(config.seed))
    params = theory.learnable_params()
    if config.optimizer == "ftrl":
        states = [FtrlState.zeros_like(a, config.ftrl.initial_accumulator) for _, _, a in params]
        step = lambda st, a, g: ftrl_step(st, a, g, config.ftrl)  # noqa: E731
    else:
        states = [RmspropState.zeros_like(a) for _, _, a in params]
        step = lambda st, a, g: rmsprop_step(st, a, g, config.rmsprop)  # noqa: E731

    obj, sat, _ = problem.objective(config, with_grad=False)
    if not math.isfinite(obj):
        raise NumericError("initial objective is not finite", last_good=theory.get_flat())
    initial = sat
    last_good = theory.get_flat()
    trace = [_record(0, obj, sat)]
    if progress:
        progress(trace[-1])
    for epoch in range(1, config.epochs + 1):
        for chunk in problem.chunks:
            obj, sat, grads = problem.objective(config, chunk)
            if not (math.isfinite(obj) and all(np.all(np.isfinite(g)) for g in grads)):
                raise NumericError(f"non-finite objective at epoch {epoch}", last_good=last_good)
            # parameters whose objective was just confirmed finite
            last_good = theory.get_flat()
            for (_, _, arr), st, g in zip(params, states, grads):
                arr[...] = step(st, arr, -g)
        if epoch % config.log_every == 0 or epoch == config.epochs:
            obj, sat, _ = problem.objective(config, with_grad=False)
            if not math.isfinite(obj):
                raise NumericError(f"non-finite objective at epoch {epoch}", last_good=last_good)
            trace.append(_record(epoch, obj, sat))
            log.debug("epoch %d objective %.6f satisfiability %.6f", epoch, obj, sat)
            if progress:
                progress(trace[-1])
    theory.trained.update(theory.signature.predicates)
    return TrainingReport(trace, float(initial), float(trace[-1]["satisfiability"]),
                          float(trace[-1]["objective"]), config.epochs)
