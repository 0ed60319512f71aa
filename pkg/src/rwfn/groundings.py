"""Predicate groundings mapping concatenated entity features to [0, 1].

Each grounding works on a batch of input rows in three steps so the
trainer can cache expensive, frozen work:

* ``prepare(X, cache)`` turns raw rows into whatever ``forward`` consumes
  (encoded features for RWFN, the rows themselves for NTN);
* ``forward(prepared)`` returns one truth degree per row;
* ``backward(prepared, scores, upstream)`` returns gradients of
  ``sum(upstream * scores)`` for every learnable parameter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from .encoders import (DEFAULT_FAN_IN, EncoderKey, EncoderRegistry, RandomEncoder,
                       build_encoder, encode)
from .errors import InvalidArgument, SchemaError, StateError
from .knowledge_base import Signature
from .numeric import derive_seed, make_rng


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _rows(v, mn: int) -> Tuple[np.ndarray, bool]:
    x = np.asarray(v, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.ndim != 2 or x.shape[1] != mn:
        raise InvalidArgument(f"input has shape {np.shape(v)}, expected dimension {mn}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgument("input contains non-finite entries")
    return x, single


class RwfnGrounding:
    """``sigmoid(beta . encode(v))`` with a frozen encoder and trainable ``beta``."""

    kind = "rwfn"
    learnable = ("beta",)

    def __init__(self, encoder: RandomEncoder, arity: int, beta=None):
        self.encoder = encoder
        self.arity = arity
        if encoder.input_dim % arity:
            raise InvalidArgument(f"encoder input {encoder.input_dim} not divisible by arity {arity}")
        self.beta = np.zeros(encoder.output_dim) if beta is None else np.array(beta, dtype=np.float64)
        if self.beta.shape != (encoder.output_dim,):
            raise InvalidArgument(f"beta must have length {encoder.output_dim}")

    @property
    def input_dim(self) -> int:
        return self.encoder.input_dim

    @property
    def hidden(self) -> int:
        return self.encoder.hidden

    def params(self) -> Dict[str, np.ndarray]:
        return {"beta": self.beta}

    def prepare(self, X: np.ndarray, cache: Optional[dict] = None):
        # a cache must only ever see one X per encoder
        if cache is None:
            return encode(self.encoder, X)
        key = id(self.encoder)
        if key not in cache:
            cache[key] = (self.encoder, encode(self.encoder, X))
        return cache[key][1]

    def forward(self, H: np.ndarray) -> np.ndarray:
        return sigmoid(H @ self.beta)

    def backward(self, H, scores, upstream) -> Dict[str, np.ndarray]:
        return {"beta": H.T @ (upstream * scores * (1.0 - scores))}

    def score(self, v):
        x, single = _rows(v, self.input_dim)
        s = self.forward(self.prepare(x))
        return float(s[0]) if single else s


class NtnGrounding:
    """Neural tensor network grounding with ``k`` bilinear slices."""

    kind = "ntn"
    learnable = ("u", "W", "V", "b")

    def __init__(self, u, W, V, b, arity: int):
        self.u = np.array(u, dtype=np.float64)
        self.W = np.array(W, dtype=np.float64)
        self.V = np.array(V, dtype=np.float64)
        self.b = np.array(b, dtype=np.float64)
        self.arity = arity
        k = self.u.shape[0] if self.u.ndim == 1 else 0
        mn = self.V.shape[1] if self.V.ndim == 2 else 0
        if (k < 1 or self.W.shape != (k, mn, mn) or self.V.shape != (k, mn)
                or self.b.shape != (k,)):
            raise InvalidArgument("inconsistent NTN parameter shapes")
        if mn % arity:
            raise InvalidArgument(f"input dimension {mn} not divisible by arity {arity}")

    @classmethod
    def initialize(cls, rng, mn: int, k: int, arity: int) -> "NtnGrounding":
        if mn < 1 or k < 1:
            raise InvalidArgument(f"need mn >= 1 and k >= 1, got mn={mn}, k={k}")
        std = 1.0 / np.sqrt(mn)
        u = rng.normal(0.0, std, k)
        W = rng.normal(0.0, std, (k, mn, mn))
        V = rng.normal(0.0, std, (k, mn))
        b = rng.normal(0.0, std, k)
        return cls(u, W, V, b, arity)

    @property
    def input_dim(self) -> int:
        return self.V.shape[1]

    @property
    def k(self) -> int:
        return self.u.shape[0]

    def params(self) -> Dict[str, np.ndarray]:
        return {"u": self.u, "W": self.W, "V": self.V, "b": self.b}

    def prepare(self, X, cache=None):
        return np.asarray(X, dtype=np.float64)

    def _hidden(self, X):
        bil = np.einsum("ni,kij,nj->nk", X, self.W, X, optimize=True)
        return np.tanh(bil + X @ self.V.T + self.b)

    def forward(self, X):
        return sigmoid(self._hidden(X) @ self.u)

    def backward(self, X, scores, upstream):
        t = self._hidden(X)
        ds = upstream * scores * (1.0 - scores)
        dpre = ds[:, None] * self.u[None, :] * (1.0 - t * t)
        return {
            "u": t.T @ ds,
            "W": np.einsum("nk,ni,nj->kij", dpre, X, X, optimize=True),
            "V": dpre.T @ X,
            "b": dpre.sum(axis=0),
        }

    def score(self, v):
        x, single = _rows(v, self.input_dim)
        s = self.forward(x)
        return float(s[0]) if single else s


class ConstantGrounding:
    """Returns the same degree for every input; used as an uninformed baseline."""

    kind = "constant"
    learnable = ()

    def __init__(self, value: float, input_dim: int, arity: int):
        if not 0.0 <= value <= 1.0:
            raise InvalidArgument(f"constant degree {value} outside [0, 1]")
        self.value = float(value)
        self.input_dim = input_dim
        self.arity = arity

    def params(self):
        return {}

    def prepare(self, X, cache=None):
        return np.asarray(X)

    def forward(self, X):
        return np.full(len(X), self.value)

    def backward(self, X, scores, upstream):
        return {}

    def score(self, v):
        x, single = _rows(v, self.input_dim)
        s = self.forward(x)
        return float(s[0]) if single else s


def rwfn_score(g: RwfnGrounding, v) -> float:
    return g.score(v)


def ntn_score(g: NtnGrounding, v) -> float:
    return g.score(v)


# --- parameter accounting -------------------------------------------------------

class ParamCount(NamedTuple):
    total: int
    learnable: int


def rwfn_counts(mn: int, B: int) -> ParamCount:
    if B < 1 or mn < 1:
        raise InvalidArgument(f"need mn >= 1 and B >= 1, got mn={mn}, B={B}")
    # W and R are mn x B each, b is B, beta is 2B
    return ParamCount((2 * mn + 3) * B, 2 * B)


def ntn_counts(mn: int, k: int) -> ParamCount:
    if k < 1 or mn < 1:
        raise InvalidArgument(f"need mn >= 1 and k >= 1, got mn={mn}, k={k}")
    n = (mn * mn + mn + 2) * k
    return ParamCount(n, n)


def param_counts(g) -> ParamCount:
    if isinstance(g, RwfnGrounding):
        return rwfn_counts(g.input_dim, g.hidden)
    if isinstance(g, NtnGrounding):
        return ntn_counts(g.input_dim, g.k)
    if isinstance(g, ConstantGrounding):
        return ParamCount(0, 0)
    raise InvalidArgument(f"unknown grounding type {type(g).__name__}")


def space_complexity(groundings: Iterable, shared: bool) -> int:
    """Stored parameters for a set of groundings.

    With ``shared`` every group of RWFN groundings with the same arity and
    dimensions pays for one encoder (``2 mn B + B``) plus ``2B`` per decoder.
    """
    total = 0
    groups: Dict[tuple, int] = {}
    for g in groundings:
        if shared and isinstance(g, RwfnGrounding):
            key = (g.arity, g.input_dim, g.hidden)
            groups[key] = groups.get(key, 0) + 1
        else:
            total += param_counts(g).total
    for (_, mn, B), count in groups.items():
        total += 2 * mn * B + B + 2 * B * count
    return total


# --- grounded theory ---------------------------------------------------------------

@dataclass
class GroundedTheory:
    signature: Signature
    groundings: Dict[str, object]
    features: object = None
    kb: object = None
    model: str = "rwfn"
    trained: set = field(default_factory=set)

    def __post_init__(self):
        for pred in self.signature.predicates:
            if pred not in self.groundings:
                raise SchemaError(f"predicate {pred!r} has no grounding")
            g = self.groundings[pred]
            if g.arity != self.signature.arity(pred):
                raise SchemaError(f"grounding arity {g.arity} does not match {pred!r}")
        extra = set(self.groundings) - set(self.signature.predicates)
        if extra:
            raise SchemaError(f"groundings for undeclared predicates: {sorted(extra)}")

    def encoders(self) -> List[RandomEncoder]:
        seen, out = set(), []
        for pred in self.signature.predicates:
            g = self.groundings[pred]
            if isinstance(g, RwfnGrounding) and id(g.encoder) not in seen:
                seen.add(id(g.encoder))
                out.append(g.encoder)
        return out

    def learnable_params(self) -> List[Tuple[str, str, np.ndarray]]:
        return [(pred, name, self.groundings[pred].params()[name])
                for pred in self.signature.predicates
                for name in self.groundings[pred].learnable]

    def get_flat(self) -> np.ndarray:
        parts = [a.ravel() for _, _, a in self.learnable_params()]
        return np.concatenate(parts) if parts else np.zeros(0)

    def set_flat(self, theta: np.ndarray):
        theta = np.asarray(theta, dtype=np.float64)
        params = self.learnable_params()
        expected = sum(arr.size for _, _, arr in params)
        if theta.shape != (expected,):
            raise InvalidArgument(f"expected {expected} parameters, got shape {theta.shape}")
        pos = 0
        for _, _, arr in params:
            arr[...] = theta[pos:pos + arr.size].reshape(arr.shape)
            pos += arr.size

    def require_trained(self, predicates: Iterable[str]):
        missing = [p for p in predicates if p not in self.trained]
        if missing:
            raise StateError(f"predicates not trained: {missing}")

    def score(self, predicate: str, arg_tuples, features=None) -> np.ndarray:
        """Truth degrees of ``predicate`` over a list of argument tuples."""
        g = self.groundings[predicate]
        X = (features or self.features).matrix(list(arg_tuples), g.arity)
        if len(X) == 0:
            return np.zeros(0)
        return g.forward(g.prepare(X))


def theory_space(theory: GroundedTheory, shared: bool) -> int:
    return space_complexity(theory.groundings.values(), shared)


def build_theory(signature: Signature, schema, model: str = "rwfn", *,
                 hidden: Optional[Dict[int, int]] = None, k: int = 5, seed: int = 0,
                 fan_in: int = DEFAULT_FAN_IN, features=None, kb=None,
                 registry: Optional[EncoderRegistry] = None) -> GroundedTheory:
    """Create fresh groundings for every predicate in ``signature``.

    ``model`` is ``rwfn`` (one encoder per predicate), ``rwfn_ws`` (one
    shared encoder per arity) or ``ntn``.  ``schema`` supplies input
    dimensions per arity.
    """
    hidden = {1: 500, 2: 1000, **(hidden or {})}
    groundings = {}
    if model == "rwfn_ws" and registry is None:
        registry = EncoderRegistry()
    for idx, pred in enumerate(signature.predicates):
        arity = signature.arity(pred)
        mn = schema.input_dim(arity)
        if model == "rwfn":
            enc = build_encoder(derive_seed(seed, 1, idx), mn, hidden[arity], fan_in)
            groundings[pred] = RwfnGrounding(enc, arity)
        elif model == "rwfn_ws":
            key = EncoderKey(arity, mn, hidden[arity], derive_seed(seed, 2, arity), fan_in)
            groundings[pred] = RwfnGrounding(registry.get_or_create(key), arity)
        elif model == "ntn":
            rng = make_rng(derive_seed(seed, 3, idx))
            groundings[pred] = NtnGrounding.initialize(rng, mn, k, arity)
        else:
            raise InvalidArgument(f"unknown model {model!r}")
    return GroundedTheory(signature, groundings, features, kb, model)
