"""Dense arrays, seeded sampling and finite-difference gradient checking.

Matrices and vectors are plain ``numpy`` float64 arrays.  The constructors
below validate shape and finiteness and hand back read-only arrays so a
value can be shared freely once built.

All randomness flows through :func:`make_rng`, which pins the bit generator
to PCG64.  PCG64 streams, and the normal/uniform transforms numpy applies
on top of them, are identical across platforms for a given numpy release.
"""
from __future__ import annotations

from typing import Callable, Tuple

import numpy as np

from .errors import InvalidArgument, NumericError

Rng = np.random.Generator

GRAD_CHECK_EPS = 1e-5


def make_rng(seed: int) -> Rng:
    """Return a PCG64-backed generator for a 64-bit integer seed."""
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise InvalidArgument(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) < 2**64:
        raise InvalidArgument(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(*parts: int) -> int:
    """Deterministically mix integers into a fresh 63-bit seed."""
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & (2**63 - 1)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_vector(data, dim: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.array(data, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidArgument(f"{name} must be one-dimensional, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise InvalidArgument(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise InvalidArgument(f"{name} contains non-finite entries")
    return _frozen(v)


def as_matrix(data, rows: int | None = None, cols: int | None = None,
              name: str = "matrix") -> np.ndarray:
    m = np.array(data, dtype=np.float64)
    if m.ndim != 2:
        raise InvalidArgument(f"{name} must be two-dimensional, got shape {m.shape}")
    if (rows is not None and m.shape[0] != rows) or (cols is not None and m.shape[1] != cols):
        raise InvalidArgument(f"{name} has shape {m.shape}, expected ({rows}, {cols})")
    if not np.all(np.isfinite(m)):
        raise InvalidArgument(f"{name} contains non-finite entries")
    return _frozen(m)


def sample_gaussian(rng: Rng, rows: int, cols: int) -> np.ndarray:
    """Draw a rows x cols matrix of i.i.d. standard normals."""
    if rows < 1 or cols < 1:
        raise InvalidArgument(f"dimensions must be positive, got {rows}x{cols}")
    return _frozen(rng.standard_normal((rows, cols)))


def sample_uniform(rng: Rng, dim: int, lo: float, hi: float) -> np.ndarray:
    """Draw ``dim`` i.i.d. values uniform on ``[lo, hi)``."""
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise InvalidArgument("interval bounds must be finite")
    if not lo < hi:
        raise InvalidArgument(f"empty interval [{lo}, {hi})")
    if dim < 1:
        raise InvalidArgument(f"dimension must be positive, got {dim}")
    return _frozen(rng.uniform(lo, hi, size=dim))


def grad_check(f: Callable[[np.ndarray], Tuple[float, np.ndarray]], theta,
               eps: float = GRAD_CHECK_EPS) -> float:
    """Compare an analytic gradient with central differences.

    ``f(theta)`` must return ``(value, gradient)``.  The result is the
    largest ``|analytic - numeric| / max(1, |analytic|)`` over coordinates.
    """
    if not eps > 0:
        raise InvalidArgument(f"eps must be positive, got {eps}")
    theta = np.array(theta, dtype=np.float64).ravel()
    value, analytic = f(theta.copy())
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    if not np.isfinite(value) or not np.all(np.isfinite(analytic)):
        raise NumericError("function or gradient is not finite at theta")
    if analytic.shape != theta.shape:
        raise InvalidArgument(
            f"gradient has {analytic.size} entries, parameters have {theta.size}")
    worst = 0.0
    for i in range(theta.size):
        step = np.zeros_like(theta)
        step[i] = eps
        up, _ = f(theta + step)
        down, _ = f(theta - step)
        if not (np.isfinite(up) and np.isfinite(down)):
            raise NumericError(f"non-finite value while perturbing coordinate {i}")
        numeric = (up - down) / (2 * eps)
        err = abs(analytic[i] - numeric) / max(1.0, abs(analytic[i]))
        worst = max(worst, err)
    return worst
