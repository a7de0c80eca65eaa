"""Order-invariant covariance over node pairs.

A pair process built from products of i.i.d. node-level GPs has, in the
infinite-product limit, the closed-form kernel

    C((i,j),(i',j')) = Khat[i,i'] Khat[j,j'] + Khat[i,j'] Khat[j,i'],

which is symmetric under swapping the nodes within either pair. The same
two-term form applies to the cross block against inducing edges (with the
one-sided convolved cross kernel) and to the inducing-edge Gram (with the
plain RBF Gram over inducing features).

``sampled_link_covariance`` is a Monte-Carlo verification utility for the
closed form; the production scoring path never uses it.
"""

from __future__ import annotations

import numpy as np
import torch

from .graph import GraphDomain
from .kernels import convolved_cross_kernel, convolved_node_kernel, rbf_ard
from .numerics import as_tensor, stable_cholesky_np


def canonical_pairs(pairs, n_nodes: int | None = None) -> np.ndarray:
    """Validate and canonicalize an array of node pairs to (n, 2) with i < j."""
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("pairs must have shape (n, 2)")
    if np.any(pairs[:, 0] == pairs[:, 1]):
        raise ValueError("self-pairs are not allowed")
    if pairs.size and pairs.min() < 0:
        raise ValueError("negative node index")
    if n_nodes is not None and pairs.size and pairs.max() >= n_nodes:
        raise ValueError(f"node index out of range (>= {n_nodes})")
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    return np.stack([lo, hi], axis=1)


def pair_product_matrix(m, row_pairs, col_pairs) -> torch.Tensor:
    """Two-term pair covariance block from a node-level matrix.

    ``m`` is any node-level covariance block whose rows are indexed by the
    endpoints of ``row_pairs`` and columns by the endpoints of ``col_pairs``:
    out[a, b] = m[ia, ib] m[ja, jb] + m[ia, jb] m[ja, ib].
    """
    m = as_tensor(m)
    row_pairs = np.asarray(row_pairs, dtype=np.int64)
    col_pairs = np.asarray(col_pairs, dtype=np.int64)
    ri, rj = row_pairs[:, 0], row_pairs[:, 1]
    ci, cj = col_pairs[:, 0], col_pairs[:, 1]
    return (
        m[np.ix_(ri, ci)] * m[np.ix_(rj, cj)]
        + m[np.ix_(ri, cj)] * m[np.ix_(rj, ci)]
    )


def pair_prior_diagonal(m, pairs) -> torch.Tensor:
    """Prior self-covariance of each pair: m[i,i] m[j,j] + m[i,j]^2."""
    m = as_tensor(m)
    pairs = np.asarray(pairs, dtype=np.int64)
    i, j = pairs[:, 0], pairs[:, 1]
    return m[i, i] * m[j, j] + m[i, j] ** 2


def link_cov_input_input(khat, e1, e2) -> float:
    """Pair covariance between two input-graph edges given the node kernel."""
    khat = np.asarray(khat)
    i, j = e1
    a, b = e2
    return float(khat[i, a] * khat[j, b] + khat[i, b] * khat[j, a])


def link_cov_input_inducing(cross, e_in, e_ind) -> float:
    """Pair covariance between an input edge and an inducing edge.

    ``cross`` is the one-sided convolved cross kernel (input rows, inducing
    columns).
    """
    cross = np.asarray(cross)
    i, j = e_in
    a, b = e_ind
    return float(cross[i, a] * cross[j, b] + cross[i, b] * cross[j, a])


def link_cov_inducing_inducing(kzz, e1, e2) -> float:
    """Pair covariance between two inducing edges given the inducing Gram."""
    kzz = np.asarray(kzz)
    i, j = e1
    a, b = e2
    return float(kzz[i, a] * kzz[j, b] + kzz[i, b] * kzz[j, a])


def assemble_link_gram(g: GraphDomain, weights, variance, lengthscales, x, z,
                       inducing_edges, batch_pairs, *,
                       restrict_to_preimage: bool = True):
    """Pair-level covariance blocks for a batch of candidate edges.

    Returns ``(c_batch_ind, c_ind_ind, c_batch_diag)``: the cross block
    between batch pairs and inducing edges, the inducing-edge Gram, and the
    prior self-covariance of each batch pair. With ``restrict_to_preimage``
    the node-level convolution touches only the pre-image of the batch
    endpoints; the flag exists so tests can compare against the full-graph
    computation.
    """
    batch_pairs = np.asarray(batch_pairs, dtype=np.int64)
    inducing_edges = np.asarray(inducing_edges, dtype=np.int64)
    if batch_pairs.shape[0] == 0 or inducing_edges.shape[0] == 0:
        raise ValueError("batch and inducing edge lists must be non-empty")
    endpoints = np.unique(batch_pairs.reshape(-1))
    nodes = endpoints if restrict_to_preimage else None

    khat = convolved_node_kernel(g, weights, variance, lengthscales, x, nodes=nodes)
    cross = convolved_cross_kernel(g, weights, variance, lengthscales, x, z, nodes=nodes)
    kzz = rbf_ard(variance, lengthscales, z, z)

    if restrict_to_preimage:
        local = np.searchsorted(endpoints, batch_pairs)
    else:
        local = batch_pairs
    c_batch_ind = pair_product_matrix(cross, local, inducing_edges)
    c_ind_ind = pair_product_matrix(kzz, inducing_edges, inducing_edges)
    c_batch_diag = pair_prior_diagonal(khat, local)
    return c_batch_ind, c_ind_ind, c_batch_diag


def sampled_link_covariance(khat: np.ndarray, pairs, n_samples: int,
                            seed: int = 0) -> np.ndarray:
    """Monte-Carlo estimate of the pair covariance for verification.

    Draws ``n_samples`` node functions from N(0, khat), forms the product
    g[i] * g[j] for every requested pair, and returns the empirical
    covariance matrix of those products. Converges to the closed-form pair
    kernel at the usual 1/sqrt(n) rate.
    """
    khat = np.asarray(khat, dtype=np.float64)
    pairs = np.asarray(pairs, dtype=np.int64)
    rng = np.random.default_rng(seed)
    chol = stable_cholesky_np(khat, float(np.mean(np.diag(khat))))
    draws = rng.standard_normal((n_samples, khat.shape[0]))
    g = draws @ chol.T
    products = g[:, pairs[:, 0]] * g[:, pairs[:, 1]]
    return np.cov(products, rowvar=False)
