"""Node-feature kernel and its graph-convolved variants.

The base kernel is an RBF with automatic relevance determination,
``k(x, x') = variance * exp(-0.5 * sum_d (x_d - x'_d)^2 / l_d^2)``.
The node-level covariance of the convolved process is ``P K P^T`` where
``P`` is the interpolated convolution product; the cross covariance
against inducing features applies the convolution to the input side only,
since inducing points live on the plain feature domain.

All functions return float64 torch tensors and are differentiable in the
kernel hyperparameters, the convolution weights, and the feature inputs;
numpy callers can wrap results in ``np.asarray``.
"""

from __future__ import annotations

import numpy as np
import torch

from .graph import GraphDomain, geodesic_distance_classes, preimage_nodes
from .numerics import as_tensor


class KernelParams:
    """Constrained RBF-ARD hyperparameters: variance > 0, lengthscales > 0."""

    def __init__(self, variance: float, lengthscales):
        self.variance = float(variance)
        self.lengthscales = np.asarray(lengthscales, dtype=np.float64).reshape(-1)
        if self.variance <= 0.0:
            raise ValueError("variance must be positive")
        if self.lengthscales.size == 0 or np.any(self.lengthscales <= 0.0):
            raise ValueError("lengthscales must be positive")

    @property
    def dimension(self) -> int:
        return self.lengthscales.shape[0]

    @classmethod
    def isotropic(cls, variance: float, lengthscale: float, dim: int) -> "KernelParams":
        return cls(variance, np.full(dim, float(lengthscale)))


def rbf_ard(variance, lengthscales, a, b) -> torch.Tensor:
    """RBF-ARD Gram matrix between the rows of ``a`` and ``b``.

    Shapes: a (Na, D), b (Nb, D), lengthscales (D,). Symmetric and positive
    semi-definite when a and b are the same matrix.
    """
    variance = as_tensor(variance)
    lengthscales = as_tensor(lengthscales).reshape(-1)
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("feature matrices must be 2-d")
    d = lengthscales.shape[0]
    if a.shape[1] != d or b.shape[1] != d:
        raise ValueError(
            f"feature dimension mismatch: a has {a.shape[1]}, b has "
            f"{b.shape[1]}, lengthscales have {d}"
        )
    a_s = a / lengthscales
    b_s = b / lengthscales
    sq = (
        (a_s * a_s).sum(dim=1, keepdim=True)
        + (b_s * b_s).sum(dim=1)
        - 2.0 * (a_s @ b_s.T)
    ).clamp_min(0.0)
    return variance * torch.exp(-0.5 * sq)


def interpolated_product_rows(s_block: torch.Tensor, weights: torch.Tensor,
                              rows: np.ndarray) -> torch.Tensor:
    """Selected rows of the interpolated convolution product.

    ``s_block`` is the convolution matrix (or a principal submatrix closed
    under the required neighborhoods); ``rows`` indexes it. Iterates
    ``M <- w_k (M @ S) + (1 - w_k) M`` starting from the row selector.
    """
    n = s_block.shape[0]
    out = torch.zeros((len(rows), n), dtype=s_block.dtype)
    out[torch.arange(len(rows)), torch.as_tensor(np.asarray(rows, dtype=np.int64))] = 1.0
    for k in range(weights.shape[0]):
        w = weights[k]
        out = w * (out @ s_block) + (1.0 - w) * out
    return out


def _conv_block(g: GraphDomain, nodes: np.ndarray, depth: int):
    """Pre-image node set for ``nodes`` and the dense convolution submatrix
    on it, along with the positions of ``nodes`` inside the pre-image."""
    pre = preimage_nodes(g, nodes, depth)
    s_sub = g.convolution_matrix[np.ix_(pre, pre)].toarray()
    positions = np.searchsorted(pre, nodes)
    return pre, torch.as_tensor(s_sub), positions


def convolved_node_kernel(g: GraphDomain, weights, variance, lengthscales, x,
                          *, nodes=None) -> torch.Tensor:
    """Covariance ``P K P^T`` of the convolved node process.

    With ``nodes`` given, returns only that principal block, computing the
    convolution on the pre-image of the requested nodes; otherwise the full
    N x N matrix. Depth is the length of ``weights``.
    """
    weights = as_tensor(weights).reshape(-1)
    x = as_tensor(x)
    if x.shape[0] != g.node_count:
        raise ValueError(
            f"feature rows ({x.shape[0]}) must match node count ({g.node_count})"
        )
    if nodes is None:
        nodes = np.arange(g.node_count)
    else:
        nodes = np.asarray(nodes, dtype=np.int64)
    pre, s_sub, positions = _conv_block(g, nodes, weights.shape[0])
    p_rows = interpolated_product_rows(s_sub, weights, positions)
    k_pre = rbf_ard(variance, lengthscales, x[pre], x[pre])
    return p_rows @ k_pre @ p_rows.T


def convolved_cross_kernel(g: GraphDomain, weights, variance, lengthscales, x, z,
                           *, nodes=None) -> torch.Tensor:
    """One-sided convolved cross covariance ``P K_xz``.

    The convolution applies to the input-graph side only; the second
    argument's features enter the base kernel untouched.
    """
    weights = as_tensor(weights).reshape(-1)
    x = as_tensor(x)
    z = as_tensor(z)
    if x.shape[0] != g.node_count:
        raise ValueError(
            f"feature rows ({x.shape[0]}) must match node count ({g.node_count})"
        )
    if nodes is None:
        nodes = np.arange(g.node_count)
    else:
        nodes = np.asarray(nodes, dtype=np.int64)
    pre, s_sub, positions = _conv_block(g, nodes, weights.shape[0])
    p_rows = interpolated_product_rows(s_sub, weights, positions)
    k_xz = rbf_ard(variance, lengthscales, x[pre], z)
    return p_rows @ k_xz


def covariance_distance_profile(g: GraphDomain, weights, variance, lengthscales,
                                x, center: int, max_d: int) -> np.ndarray:
    """Mean convolved covariance between ``center`` and each distance class.

    Entry d-1 averages ``Khat[center, j]`` over nodes j at geodesic distance
    exactly d; empty classes yield NaN.
    """
    classes = geodesic_distance_classes(g, center, max_d)
    needed = np.unique(np.concatenate([[center]] + [c for c in classes if c.size]))
    with torch.no_grad():
        block = convolved_node_kernel(
            g, weights, variance, lengthscales, x, nodes=needed
        ).numpy()
    pos = {int(n): i for i, n in enumerate(needed)}
    row = block[pos[center]]
    out = np.full(max_d, np.nan)
    for d, cls in enumerate(classes):
        if cls.size:
            out[d] = float(np.mean([row[pos[int(j)]] for j in cls]))
    return out
