"""Frozen random encoders: sparse binary projection and random Fourier features.

An encoder maps a concatenated entity vector of length ``mn`` to a hidden
vector of length ``2B``::

    h1 = relu(W^T v - mean(W^T v))          # W binary, N_in ones per column
    h2 = sqrt(2 / B) * cos(R^T v + b)       # R ~ N(0, 1), b ~ U[0, 2pi)
    h  = tanh([h1; h2])

Weights are regenerated from ``(seed, mn, B, N_in)`` so an encoder is fully
described by those integers.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Dict, NamedTuple

import numpy as np

from .errors import InvalidArgument
from .numeric import Rng, make_rng, sample_gaussian, sample_uniform

DEFAULT_FAN_IN = 7


def _as_input(v, mn: int) -> np.ndarray:
    x = np.asarray(v, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != mn:
        raise InvalidArgument(f"input has shape {x.shape}, expected trailing dimension {mn}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgument("input contains non-finite entries")
    return x


@dataclass(frozen=True, eq=False)
class InsectProjection:
    input_dim: int
    hidden: int
    fan_in: int
    mask: np.ndarray = field(repr=False)  # (input_dim, hidden) of 0/1

    @property
    def weight_count(self) -> int:
        return self.input_dim * self.hidden


@dataclass(frozen=True, eq=False)
class FourierProjection:
    input_dim: int
    hidden: int
    R: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)

    @property
    def weight_count(self) -> int:
        return self.input_dim * self.hidden + self.hidden


def build_insect(rng: Rng, mn: int, B: int, n_in: int = DEFAULT_FAN_IN) -> InsectProjection:
    """Sample a binary mask whose columns each select ``n_in`` distinct inputs.

    Each column is the prefix of an independent random permutation of the
    inputs, so two columns may coincide.
    """
    if B < 1 or mn < 1:
        raise InvalidArgument(f"dimensions must be positive, got mn={mn}, B={B}")
    if not 1 <= n_in <= mn:
        raise InvalidArgument(f"fan-in {n_in} must lie in [1, {mn}]")
    keys = rng.random((B, mn))
    chosen = np.argsort(keys, axis=1, kind="stable")[:, :n_in]
    mask = np.zeros((mn, B), dtype=np.float64)
    mask[chosen.T, np.arange(B)[None, :]] = 1.0
    mask.setflags(write=False)
    return InsectProjection(mn, B, n_in, mask)


def build_fourier(rng: Rng, mn: int, B: int) -> FourierProjection:
    R = sample_gaussian(rng, mn, B)
    b = sample_uniform(rng, B, 0.0, 2 * np.pi)
    return FourierProjection(mn, B, R, b)


def insect_forward(proj: InsectProjection, v, centered: bool = False) -> np.ndarray:
    """Mean-centred binary-weighted sums followed by ReLU.

    With ``centered=True`` the pre-activation values are returned instead.
    Accepts a single vector or a batch of row vectors.
    """
    x = _as_input(v, proj.input_dim)
    sums = x @ proj.mask
    hat = sums - sums.mean(axis=-1, keepdims=True)
    if centered:
        return hat
    return np.maximum(hat, 0.0)


def fourier_forward(proj: FourierProjection, v) -> np.ndarray:
    x = _as_input(v, proj.input_dim)
    return np.sqrt(2.0 / proj.hidden) * np.cos(x @ proj.R + proj.b)


@dataclass(frozen=True, eq=False)
class RandomEncoder:
    seed: int
    insect: InsectProjection
    fourier: FourierProjection

    def __post_init__(self):
        if (self.insect.input_dim != self.fourier.input_dim
                or self.insect.hidden != self.fourier.hidden):
            raise InvalidArgument("projections disagree on input or hidden dimension")

    @property
    def input_dim(self) -> int:
        return self.insect.input_dim

    @property
    def hidden(self) -> int:
        return self.insect.hidden

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden

    @property
    def fan_in(self) -> int:
        return self.insect.fan_in

    def describe(self) -> dict:
        return {"seed": self.seed, "input_dim": self.input_dim,
                "hidden": self.hidden, "fan_in": self.fan_in}


def build_encoder(seed: int, mn: int, B: int, n_in: int = DEFAULT_FAN_IN) -> RandomEncoder:
    """Build both projections from one seed: mask first, then R, then b."""
    rng = make_rng(seed)
    insect = build_insect(rng, mn, B, n_in)
    fourier = build_fourier(rng, mn, B)
    return RandomEncoder(int(seed), insect, fourier)


def encode(enc: RandomEncoder, v) -> np.ndarray:
    """``tanh`` of the concatenated projections; a batch maps to a batch."""
    x = _as_input(v, enc.input_dim)
    h = np.concatenate([insect_forward(enc.insect, x), fourier_forward(enc.fourier, x)], axis=-1)
    return np.tanh(h)


class EncoderKey(NamedTuple):
    arity: int
    input_dim: int
    hidden: int
    seed: int
    fan_in: int = DEFAULT_FAN_IN


class EncoderRegistry:
    """Shared encoders keyed by (arity, input dim, B, seed, fan-in)."""

    def __init__(self):
        self._encoders: Dict[EncoderKey, RandomEncoder] = {}
        self._lock = threading.Lock()

    def get_or_create(self, key: EncoderKey) -> RandomEncoder:
        key = EncoderKey(*key)
        if key.arity < 1:
            raise InvalidArgument(f"arity must be positive, got {key.arity}")
        with self._lock:
            enc = self._encoders.get(key)
            if enc is None:
                enc = build_encoder(key.seed, key.input_dim, key.hidden, key.fan_in)
                self._encoders[key] = enc
            return enc

    def __len__(self):
        return len(self._encoders)

    def __contains__(self, key):
        return EncoderKey(*key) in self._encoders

    def count(self, arity: int) -> int:
        return sum(1 for k in self._encoders if k.arity == arity)

    def items(self):
        return list(self._encoders.items())
