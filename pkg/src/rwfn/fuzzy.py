"""Łukasiewicz fuzzy semantics and generalized-mean aggregation.

Formulas are small immutable trees.  ``eval_formula`` evaluates a single
tree against a mapping of atom truth degrees; :class:`FormulaBatch` groups
many ground formulas by shape so a whole knowledge base can be evaluated
and differentiated with array operations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidArgument, LookupFailure

EPSILON_CLAMP = 1e-12


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: Tuple[str, ...]

    def __str__(self):
        return f"{self.predicate}({','.join(self.args)})"


@dataclass(frozen=True)
class Not:
    child: "Formula"

    def __str__(self):
        return f"!{self.child}"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} & {self.right})"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} | {self.right})"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} -> {self.right})"


Formula = Union[Atom, Not, And, Or, Implies]

_ARITY = {"not": 1, "and": 2, "or": 2, "implies": 2}
_KINDS = {Not: "not", And: "and", Or: "or", Implies: "implies"}


def _check_degree(x: float) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise InvalidArgument(f"truth degree {x} outside [0, 1]")
    return x


def eval_connective(kind: str, operands: Sequence[float]) -> float:
    """Evaluate one Łukasiewicz connective on scalar truth degrees."""
    kind = kind.lower()
    if kind not in _ARITY:
        raise InvalidArgument(f"unknown connective {kind!r}")
    if len(operands) != _ARITY[kind]:
        raise InvalidArgument(f"{kind} takes {_ARITY[kind]} operands, got {len(operands)}")
    vals = [_check_degree(x) for x in operands]
    if kind == "not":
        return 1.0 - vals[0]
    a, b = vals
    if kind == "and":
        return max(0.0, a + b - 1.0)
    if kind == "or":
        return min(1.0, a + b)
    return min(1.0, 1.0 - a + b)


def generalized_mean(degrees, p: int = -1, epsilon: float = EPSILON_CLAMP) -> float:
    """Power mean ``((1/N) sum max(d, eps)^p)^(1/p)``; ``p = 0`` is the geometric mean."""
    d = np.asarray(degrees, dtype=np.float64).ravel()
    if d.size == 0:
        raise InvalidArgument("generalized mean of an empty list")
    if not epsilon > 0:
        raise InvalidArgument(f"epsilon must be positive, got {epsilon}")
    if np.any((d < 0) | (d > 1)) or not np.all(np.isfinite(d)):
        raise InvalidArgument("degrees must lie in [0, 1]")
    return _power_mean(d, int(p), epsilon)[0]


def _power_mean(d: np.ndarray, p: int, epsilon: float):
    """Return (mean, d mean / d degrees)."""
    c = np.maximum(d, epsilon)
    live = d > epsilon
    n = d.size
    if p == 0:
        m = float(np.exp(np.mean(np.log(c))))
        grad = np.where(live, m / (n * c), 0.0)
        return m, grad
    s = float(np.mean(c ** p))
    m = s ** (1.0 / p)
    grad = np.where(live, (m ** (1 - p)) * c ** (p - 1) / n, 0.0)
    return m, grad


def atoms_of(formula: Formula) -> List[Atom]:
    """Atoms in left-to-right order, duplicates kept."""
    if isinstance(formula, Atom):
        return [formula]
    if isinstance(formula, Not):
        return atoms_of(formula.child)
    return atoms_of(formula.left) + atoms_of(formula.right)


def eval_formula(formula: Formula, degrees: Mapping[Atom, float]) -> float:
    """Recursively evaluate ``formula`` with connective semantics."""
    if isinstance(formula, Atom):
        try:
            return _check_degree(degrees[formula])
        except KeyError:
            raise LookupFailure(f"no truth degree supplied for atom {formula}") from None
    if isinstance(formula, Not):
        return eval_connective("not", [eval_formula(formula.child, degrees)])
    kind = _KINDS.get(type(formula))
    if kind is None:
        raise InvalidArgument(f"not a formula: {formula!r}")
    return eval_connective(kind, [eval_formula(formula.left, degrees),
                                  eval_formula(formula.right, degrees)])


def substitute(formula: Formula, binding: Mapping[str, str]) -> Formula:
    if isinstance(formula, Atom):
        return Atom(formula.predicate, tuple(binding.get(a, a) for a in formula.args))
    if isinstance(formula, Not):
        return Not(substitute(formula.child, binding))
    return type(formula)(substitute(formula.left, binding), substitute(formula.right, binding))


# --- vectorised evaluation -------------------------------------------------

def _shape(formula: Formula, counter: List[int]):
    if isinstance(formula, Atom):
        counter[0] += 1
        return ("atom", counter[0] - 1)
    if isinstance(formula, Not):
        return ("not", _shape(formula.child, counter))
    return (_KINDS[type(formula)], _shape(formula.left, counter), _shape(formula.right, counter))


def _forward(node, slot_vals: np.ndarray):
    kind = node[0]
    if kind == "atom":
        return slot_vals[:, node[1]], None
    if kind == "not":
        v, c = _forward(node[1], slot_vals)
        return 1.0 - v, c
    a, ca = _forward(node[1], slot_vals)
    b, cb = _forward(node[2], slot_vals)
    # kinks take the gradient of the unclamped linear piece
    if kind == "and":
        raw = a + b - 1.0
        active = raw >= 0.0
        out = np.where(active, raw, 0.0)
    elif kind == "or":
        raw = a + b
        active = raw <= 1.0
        out = np.where(active, raw, 1.0)
    else:
        raw = 1.0 - a + b
        active = raw <= 1.0
        out = np.where(active, raw, 1.0)
    return out, (active, ca, cb)


def _backward(node, cache, upstream: np.ndarray, slot_grads: np.ndarray):
    kind = node[0]
    if kind == "atom":
        slot_grads[:, node[1]] += upstream
        return
    if kind == "not":
        _backward(node[1], cache, -upstream, slot_grads)
        return
    active, ca, cb = cache
    g = np.where(active, upstream, 0.0)
    if kind == "implies":
        _backward(node[1], ca, -g, slot_grads)
    else:
        _backward(node[1], ca, g, slot_grads)
    _backward(node[2], cb, g, slot_grads)


class FormulaBatch:
    """Ground formulas compiled against a fixed atom index.

    Formulas with the same tree shape share one integer table of atom
    indices, so evaluation and the reverse pass are array operations.
    """

    def __init__(self, formulas: Iterable[Formula], atom_index: Dict[Atom, int] | None = None):
        self.atom_index: Dict[Atom, int] = {} if atom_index is None else atom_index
        groups: Dict[tuple, List[List[int]]] = {}
        positions: Dict[tuple, List[int]] = {}
        count = 0
        for f in formulas:
            shape = _shape(f, [0])
            slots = []
            for atom in atoms_of(f):
                idx = self.atom_index.get(atom)
                if idx is None:
                    idx = self.atom_index[atom] = len(self.atom_index)
                slots.append(idx)
            groups.setdefault(shape, []).append(slots)
            positions.setdefault(shape, []).append(count)
            count += 1
        if count == 0:
            raise InvalidArgument("formula batch is empty")
        self.size = count
        self.groups = [(shape, np.array(rows, dtype=np.int64)) for shape, rows in groups.items()]
        self._order = np.concatenate([np.array(positions[shape]) for shape in groups])

    @property
    def atoms(self) -> List[Atom]:
        out = [None] * len(self.atom_index)
        for atom, i in self.atom_index.items():
            out[i] = atom
        return out

    def degrees(self, truth: np.ndarray) -> np.ndarray:
        """Per-formula truth degrees, in the order the formulas were given."""
        grouped = np.concatenate([_forward(shape, truth[slots])[0] for shape, slots in self.groups])
        out = np.empty_like(grouped)
        out[self._order] = grouped
        return out

    def aggregate(self, truth: np.ndarray, p: int = -1, epsilon: float = EPSILON_CLAMP,
                  with_grad: bool = True):
        """Generalized mean of all formula degrees and its gradient w.r.t. atom truths."""
        caches, parts = [], []
        for shape, slots in self.groups:
            out, cache = _forward(shape, truth[slots])
            parts.append(out)
            caches.append(cache)
        d = np.concatenate(parts)
        sat, dd = _power_mean(d, int(p), epsilon)
        if not with_grad:
            return sat, None
        grad = np.zeros_like(truth)
        start = 0
        for (shape, slots), cache, out in zip(self.groups, caches, parts):
            up = dd[start:start + out.size]
            start += out.size
            slot_grads = np.zeros(slots.shape, dtype=np.float64)
            _backward(shape, cache, up, slot_grads)
            grad += np.bincount(slots.ravel(), weights=slot_grads.ravel(), minlength=grad.size)
        return sat, grad
