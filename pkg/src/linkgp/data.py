"""Dataset ingestion, train/test splitting, and split manifests.

Edge-list files are UTF-8 text with one edge per line as two
whitespace-separated node tokens; ``#`` lines are comments. Feature files
hold one node per line: token followed by D decimal floats, D inferred
from the first line. Node indices are assigned in order of first
appearance in the edge list.

Splitting removes ceil(test_fraction * E) edges uniformly at random as
test positives and samples an equal number of test negatives plus one
negative per remaining training edge, all uniformly over the non-edges of
the full graph without replacement across the union. The observed graph
(used for convolutions) contains exactly the training positives.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .graph import GraphDomain

MANIFEST_VERSION = 1

# Complements up to this many total pairs are materialized outright; larger
# graphs fall back to rejection sampling over encoded pair indices.
_ENUMERATE_LIMIT = 5_000_000


def parse_edge_list(path) -> tuple[list[str], np.ndarray]:
    """Read an edge-list file into node tokens and index edges.

    Returns the token list (first-appearance order) and an (E, 2) int64
    array of index pairs. Self-loops and duplicate edges (in either
    orientation) are rejected with the offending line number.
    """
    tokens: list[str] = []
    index: dict[str, int] = {}
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise DataError(
                    f"{path}:{lineno}: expected two node tokens, got {len(parts)}"
                )
            pair = []
            for tok in parts:
                if tok not in index:
                    index[tok] = len(tokens)
                    tokens.append(tok)
                pair.append(index[tok])
            a, b = pair
            if a == b:
                raise DataError(f"{path}:{lineno}: self-loop on node {parts[0]!r}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise DataError(
                    f"{path}:{lineno}: duplicate edge {parts[0]!r} {parts[1]!r}"
                )
            seen.add(key)
            edges.append(key)
    if not edges:
        raise DataError(f"{path}: no edges found")
    return tokens, np.asarray(edges, dtype=np.int64)


def parse_feature_file(path) -> tuple[list[str], np.ndarray]:
    """Read a feature file into tokens and an (N, D) float64 matrix."""
    tokens: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) < 2:
                raise DataError(
                    f"{path}:{lineno}: expected a token and at least one value"
                )
            tok = parts[0]
            if tok in seen:
                raise DataError(f"{path}:{lineno}: duplicate features for {tok!r}")
            seen.add(tok)
            try:
                values = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise DataError(
                    f"{path}:{lineno}: expected {dim} values, got {len(values)}"
                )
            tokens.append(tok)
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no feature rows found")
    return tokens, np.asarray(rows, dtype=np.float64)


def parse_pair_file(path) -> list[tuple[str, str]]:
    """Read candidate token pairs for scoring.

    Same line format as edge lists, but repeated pairs are allowed (they
    are queries, not graph structure). Self-pairs are still rejected.
    """
    pairs: list[tuple[str, str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise DataError(
                    f"{path}:{lineno}: expected two node tokens, got {len(parts)}"
                )
            if parts[0] == parts[1]:
                raise DataError(f"{path}:{lineno}: self-pair on {parts[0]!r}")
            pairs.append((parts[0], parts[1]))
    if not pairs:
        raise DataError(f"{path}: no pairs found")
    return pairs


def index_token_pairs(token_pairs, tokens: list[str]) -> np.ndarray:
    """Map token pairs onto canonical index pairs for a known token list."""
    index = {tok: i for i, tok in enumerate(tokens)}
    return _index_pairs(token_pairs, index, "candidate pair")


def align_features(node_tokens: list[str], feature_tokens: list[str],
                   features: np.ndarray) -> np.ndarray:
    """Reorder feature rows to match the graph's node order.

    Every graph node must have a feature row; extra rows are ignored.
    """
    lookup = {tok: i for i, tok in enumerate(feature_tokens)}
    missing = [tok for tok in node_tokens if tok not in lookup]
    if missing:
        raise DataError(
            f"missing features for {len(missing)} node(s), e.g. {missing[0]!r}"
        )
    order = np.asarray([lookup[tok] for tok in node_tokens], dtype=np.int64)
    return np.asarray(features, dtype=np.float64)[order]


def load_graph(edges_path) -> tuple[GraphDomain, list[str]]:
    tokens, edges = parse_edge_list(edges_path)
    return GraphDomain.from_edges(edges, node_count=len(tokens)), tokens


def load_features(features_path, node_tokens: list[str]) -> np.ndarray:
    feat_tokens, matrix = parse_feature_file(features_path)
    return align_features(node_tokens, feat_tokens, matrix)


# -- pair index encoding (unordered pairs i < j over N nodes) -----------------


def _row_offsets(n: int) -> np.ndarray:
    i = np.arange(n, dtype=np.int64)
    return i * n - (i * (i + 1)) // 2


def _encode_pairs(pairs: np.ndarray, n: int) -> np.ndarray:
    offsets = _row_offsets(n)
    return offsets[pairs[:, 0]] + (pairs[:, 1] - pairs[:, 0] - 1)


def _decode_pairs(codes: np.ndarray, n: int) -> np.ndarray:
    offsets = _row_offsets(n)
    i = np.searchsorted(offsets, codes, side="right") - 1
    j = codes - offsets[i] + i + 1
    return np.stack([i, j], axis=1).astype(np.int64)


def _sample_non_edges(graph: GraphDomain, count: int, rng: np.random.Generator
                      ) -> np.ndarray:
    """Sample ``count`` distinct non-edges uniformly, without replacement."""
    n = graph.node_count
    total = n * (n - 1) // 2
    available = total - graph.edge_count
    if count > available:
        raise DataError(
            f"negative sampling needs {count} non-edges but only "
            f"{available} exist"
        )
    if count == 0:
        return np.zeros((0, 2), dtype=np.int64)
    edge_codes = np.sort(_encode_pairs(graph.edges, n))
    if total <= _ENUMERATE_LIMIT:
        complement = np.setdiff1d(np.arange(total, dtype=np.int64), edge_codes,
                                  assume_unique=True)
        chosen = rng.choice(complement, size=count, replace=False)
        return _decode_pairs(chosen, n)
    taken: set[int] = set()
    picked: list[int] = []
    while len(picked) < count:
        draw = rng.integers(0, total, size=2 * (count - len(picked)))
        for code in draw.tolist():
            if code in taken:
                continue
            pos = np.searchsorted(edge_codes, code)
            if pos < edge_codes.shape[0] and edge_codes[pos] == code:
                continue
            taken.add(code)
            picked.append(code)
            if len(picked) == count:
                break
    return _decode_pairs(np.asarray(picked, dtype=np.int64), n)


# -- split construction --------------------------------------------------------


@dataclass(frozen=True)
class LinkDataset:
    """Train/test link-prediction split over one graph.

    ``observed_graph`` holds exactly the training positives and is the
    graph every convolution runs on. Negative pairs are absent from the
    original full edge set in both splits.
    """

    observed_graph: GraphDomain
    train_positives: np.ndarray
    train_negatives: np.ndarray
    test_positives: np.ndarray
    test_negatives: np.ndarray

    @property
    def train_pairs(self) -> np.ndarray:
        return np.concatenate([self.train_positives, self.train_negatives])

    @property
    def train_labels(self) -> np.ndarray:
        return np.concatenate([
            np.ones(len(self.train_positives)),
            np.zeros(len(self.train_negatives)),
        ])

    @property
    def test_pairs(self) -> np.ndarray:
        return np.concatenate([self.test_positives, self.test_negatives])

    @property
    def test_labels(self) -> np.ndarray:
        return np.concatenate([
            np.ones(len(self.test_positives)),
            np.zeros(len(self.test_negatives)),
        ])


def split_dataset(full_graph: GraphDomain, test_fraction: float = 0.1,
                  seed: int = 0) -> LinkDataset:
    """Remove random test edges and sample matching negatives, seeded."""
    if not 0.0 <= test_fraction < 1.0:
        raise ValueError("test_fraction must be in [0, 1)")
    n_edges = full_graph.edge_count
    if test_fraction > 0 and n_edges < 10:
        raise DataError(f"need at least 10 edges to split, got {n_edges}")
    rng = np.random.default_rng(seed)
    n_test = math.ceil(test_fraction * n_edges)
    test_idx = np.sort(rng.choice(n_edges, size=n_test, replace=False))
    mask = np.zeros(n_edges, dtype=bool)
    mask[test_idx] = True
    test_pos = full_graph.edges[mask]
    train_pos = full_graph.edges[~mask]
    negatives = _sample_non_edges(full_graph, n_edges, rng)
    observed = GraphDomain.from_edges(train_pos, node_count=full_graph.node_count)
    return LinkDataset(
        observed_graph=observed,
        train_positives=train_pos,
        train_negatives=negatives[n_test:],
        test_positives=test_pos,
        test_negatives=negatives[:n_test],
    )


def dataset_stats(g: GraphDomain) -> tuple[int, int, float]:
    """Node count, edge count, and average degree 2E/N."""
    return g.node_count, g.edge_count, 2.0 * g.edge_count / g.node_count


# -- manifests and fingerprints --------------------------------------------------


def _token_pairs(pairs: np.ndarray, tokens: list[str]) -> list[list[str]]:
    return [[tokens[i], tokens[j]] for i, j in pairs.tolist()]


def _index_pairs(token_pairs, index: dict[str, int], what: str) -> np.ndarray:
    out = []
    for a, b in token_pairs:
        if a not in index or b not in index:
            missing = a if a not in index else b
            raise DataError(f"{what}: unknown node token {missing!r}")
        i, j = index[a], index[b]
        out.append((min(i, j), max(i, j)))
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


def save_split_manifest(dataset: LinkDataset, tokens: list[str], path, *,
                        seed: int, test_fraction: float):
    """Persist a split as token pairs so external tools can reuse it."""
    doc = {
        "format_version": MANIFEST_VERSION,
        "seed": seed,
        "test_fraction": test_fraction,
        "node_count": dataset.observed_graph.node_count,
        "test_positives": _token_pairs(dataset.test_positives, tokens),
        "test_negatives": _token_pairs(dataset.test_negatives, tokens),
        "train_negatives": _token_pairs(dataset.train_negatives, tokens),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_split_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != MANIFEST_VERSION:
        raise DataError(
            f"unsupported split manifest version {doc.get('format_version')!r}"
        )
    return doc


def apply_split_manifest(full_graph: GraphDomain, tokens: list[str],
                         manifest: dict) -> LinkDataset:
    """Reconstruct a split on the full graph from a saved manifest."""
    if manifest.get("node_count") != full_graph.node_count:
        raise DataError(
            f"manifest node count {manifest.get('node_count')} does not match "
            f"graph ({full_graph.node_count})"
        )
    index = {tok: i for i, tok in enumerate(tokens)}
    test_pos = _index_pairs(manifest["test_positives"], index, "test positive")
    test_neg = _index_pairs(manifest["test_negatives"], index, "test negative")
    train_neg = _index_pairs(manifest["train_negatives"], index, "train negative")

    edge_set = {(int(i), int(j)) for i, j in full_graph.edges}
    for i, j in test_pos.tolist():
        if (i, j) not in edge_set:
            raise DataError(
                f"manifest test positive ({tokens[i]!r}, {tokens[j]!r}) is not "
                "an edge of the graph"
            )
    for name, block in (("test negative", test_neg), ("train negative", train_neg)):
        for i, j in block.tolist():
            if (i, j) in edge_set:
                raise DataError(
                    f"manifest {name} ({tokens[i]!r}, {tokens[j]!r}) is an edge "
                    "of the graph"
                )

    test_set = {tuple(p) for p in test_pos.tolist()}
    keep = np.asarray(
        [tuple(p) not in test_set for p in full_graph.edges.tolist()], dtype=bool
    )
    train_pos = full_graph.edges[keep]
    if train_pos.shape[0] + test_pos.shape[0] != full_graph.edge_count:
        raise DataError("manifest test positives contain duplicates")
    observed = GraphDomain.from_edges(train_pos, node_count=full_graph.node_count)
    return LinkDataset(
        observed_graph=observed,
        train_positives=train_pos,
        train_negatives=train_neg,
        test_positives=test_pos,
        test_negatives=test_neg,
    )


def graph_fingerprint(g: GraphDomain, tokens: list[str]) -> dict:
    """Node/edge counts plus a hash of the sorted token edge list."""
    if len(tokens) != g.node_count:
        raise ValueError("token list must match node count")
    lines = sorted(
        " ".join(sorted((tokens[i], tokens[j]))) for i, j in g.edges.tolist()
    )
    digest = hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
    return {
        "node_count": g.node_count,
        "edge_count": g.edge_count,
        "sha256": digest,
    }
