"""Shared numerical helpers: jittered Cholesky, quadrature, reparameterizations.

Everything operates in float64. The torch helpers preserve gradients; the
plain-float helpers mirror them for numpy callers.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import torch

from .errors import NumericsError

DTYPE = torch.float64

# Diagonal jitter added before every factorization, as a multiple of the
# kernel variance; escalated x10 on failure up to the cap, then error.
JITTER_BASE = 1e-6
JITTER_MAX = 1e-2


def stable_cholesky(mat: torch.Tensor, scale) -> torch.Tensor:
    """Lower Cholesky factor of ``mat + jitter * scale * I``.

    ``scale`` sets the jitter unit (the kernel variance); the base jitter is
    always applied, and is escalated by factors of 10 until factorization
    succeeds or the cap is reached.
    """
    n = mat.shape[0]
    eye = torch.eye(n, dtype=mat.dtype)
    scale_t = torch.as_tensor(scale, dtype=mat.dtype)
    mult = JITTER_BASE
    while True:
        chol, info = torch.linalg.cholesky_ex(mat + (mult * scale_t) * eye)
        if int(info) == 0 and bool(torch.isfinite(chol).all()):
            return chol
        if mult >= JITTER_MAX:
            raise NumericsError(
                f"Cholesky factorization failed at jitter {mult:g} * scale "
                f"(matrix size {n})"
            )
        mult *= 10.0


def stable_cholesky_np(mat: np.ndarray, scale: float) -> np.ndarray:
    """Numpy twin of :func:`stable_cholesky` for non-gradient paths."""
    n = mat.shape[0]
    eye = np.eye(n)
    mult = JITTER_BASE
    while True:
        try:
            return np.linalg.cholesky(mat + (mult * scale) * eye)
        except np.linalg.LinAlgError:
            if mult >= JITTER_MAX:
                raise NumericsError(
                    f"Cholesky factorization failed at jitter {mult:g} * scale "
                    f"(matrix size {n})"
                ) from None
            mult *= 10.0


@lru_cache(maxsize=8)
def gauss_hermite(n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes/weights for integrals against exp(-t^2)."""
    if n_points < 1:
        raise ValueError("need at least one quadrature point")
    nodes, weights = np.polynomial.hermite.hermgauss(n_points)
    return nodes, weights


def gauss_hermite_expectation(fn, means: torch.Tensor, variances: torch.Tensor,
                              n_points: int) -> torch.Tensor:
    """E[fn(f)] for f ~ N(mean, variance), elementwise over the inputs.

    Uses the substitution f = mean + sqrt(2 * variance) * t, so the result
    is ``pi^{-1/2} sum_i w_i fn(f_i)``.
    """
    nodes, weights = gauss_hermite(n_points)
    nodes_t = torch.as_tensor(nodes, dtype=means.dtype)
    weights_t = torch.as_tensor(weights, dtype=means.dtype)
    f = means[..., None] + torch.sqrt(2.0 * variances[..., None]) * nodes_t
    vals = fn(f)
    return (vals * weights_t).sum(dim=-1) / math.sqrt(math.pi)


def softplus(x):
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def softplus_inverse(y):
    """Inverse of log(1 + exp(x)), stable for small and large y."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0.0):
        raise ValueError("softplus_inverse requires positive input")
    return y + np.log1p(-np.exp(-y))


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("logit requires input strictly inside (0, 1)")
    return np.log(p) - np.log1p(-p)


def as_tensor(x) -> torch.Tensor:
    """float64 torch view of an array-like; passes tensors through."""
    if isinstance(x, torch.Tensor):
        return x.to(DTYPE)
    return torch.as_tensor(np.asarray(x, dtype=np.float64), dtype=DTYPE)
