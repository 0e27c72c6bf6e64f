"""Graph dataset loading, synthesis, and statistics.

On-disk dataset directory format (all UTF-8 text, LF endings):
    meta.tsv      key<TAB>value lines: name, num_nodes, num_classes, feature_dim
    features.tsv  one node per line, feature_dim tab-separated reals
    edges.tsv     one undirected edge per line: u<TAB>v
    labels.tsv    one integer label per line (-1 = unlabeled)
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import errors

META_KEYS = ("name", "num_nodes", "num_classes", "feature_dim")


@dataclass
class GraphDataset:
    """One source or target graph held fully in memory.

    `edges` stores each undirected edge once as (min(u,v), max(u,v));
    `adjacency` is the symmetric binary CSR matrix derived from it.
    """

    name: str
    features: np.ndarray          # |V| x d, float32
    edges: np.ndarray             # m x 2 undirected pairs, int64
    labels: np.ndarray            # |V|, int64, -1 = unlabeled
    num_classes: int
    adjacency: sp.csr_matrix = field(repr=False, default=None)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float32)
        if self.features.ndim != 2:
            raise errors.ShapeMismatch("features must be 2-D")
        if not np.isfinite(self.features).all():
            raise errors.NonFiniteFeature(f"{self.name}: non-finite feature entry")
        n = self.features.shape[0]
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.edges.size:
            if self.edges.min() < 0 or self.edges.max() >= n:
                raise errors.IndexOutOfRange(
                    f"{self.name}: edge endpoint outside [0, {n})")
            if (self.edges[:, 0] == self.edges[:, 1]).any():
                raise errors.InvalidArgument(f"{self.name}: self-loop in edge list")
            # canonical order + dedup
            e = np.sort(self.edges, axis=1)
            self.edges = np.unique(e, axis=0)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != (n,):
            raise errors.ShapeMismatch(
                f"{self.name}: {self.labels.shape[0]} labels for {n} nodes")
        valid = (self.labels == -1) | ((self.labels >= 0) & (self.labels < self.num_classes))
        if not valid.all():
            raise errors.IndexOutOfRange(f"{self.name}: label outside [0, num_classes)")
        if self.adjacency is None:
            self.adjacency = edges_to_adjacency(self.edges, n)

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


@dataclass
class DatasetMeta:
    node_count: int
    edge_count: int      # directed entries, i.e. 2x undirected edges
    feature_dim: int
    label_count: int
    homophily: float


def edges_to_adjacency(edges: np.ndarray, n: int) -> sp.csr_matrix:
    """Symmetric binary CSR adjacency from an undirected edge list."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size == 0:
        return sp.csr_matrix((n, n), dtype=np.float32)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    a = sp.coo_matrix((np.ones(rows.size, dtype=np.float32), (rows, cols)), shape=(n, n))
    a = a.tocsr()
    a.data[:] = 1.0  # collapse any duplicates to binary
    return a


def compute_homophily(g: GraphDataset) -> float:
    """Edge homophily ratio: fraction of undirected edges joining same-label endpoints."""
    if g.edges.shape[0] == 0:
        raise errors.NoEdges(f"{g.name}: homophily undefined without edges")
    lab = g.labels
    if (lab[g.edges.ravel()] == -1).any():
        raise errors.UnlabeledNode(f"{g.name}: edge endpoint without a label")
    same = lab[g.edges[:, 0]] == lab[g.edges[:, 1]]
    return float(same.sum()) / g.edges.shape[0]


def describe(g: GraphDataset) -> DatasetMeta:
    return DatasetMeta(
        node_count=g.num_nodes,
        edge_count=2 * g.edges.shape[0],
        feature_dim=g.feature_dim,
        label_count=g.num_classes,
        homophily=compute_homophily(g),
    )


def synth_dataset(n: int, c: int, d: int, target_h: float, seed: int,
                  avg_degree: float = 4.0, mean_scale: float = 3.0) -> GraphDataset:
    """Stochastic generator with controllable edge homophily.

    Labels are assigned round-robin; each candidate edge is intra-class with
    probability `target_h`. Class features are isotropic Gaussians with
    per-class means drawn from the seed. Deterministic for fixed arguments.
    """
    if c < 2 or n < c:
        raise errors.InvalidArgument(f"need n >= c >= 2, got n={n}, c={c}")
    if not (0.0 <= target_h <= 1.0):
        raise errors.InvalidArgument(f"target_h must be in [0,1], got {target_h}")
    rng = np.random.default_rng([seed, n, c, d])
    labels = np.arange(n, dtype=np.int64) % c
    by_class = [np.flatnonzero(labels == k) for k in range(c)]
    multi = [k for k in range(c) if by_class[k].size >= 2]

    target_edges = max(n // 2, int(round(avg_degree * n / 2)))
    seen = set()
    edges = []

    def try_add(u, v):
        if u == v:
            return False
        key = (min(u, v), max(u, v))
        if key in seen:
            return False
        seen.add(key)
        edges.append(key)
        return True

    attempts = 0
    while len(edges) < target_edges and attempts < 50 * target_edges:
        attempts += 1
        intra = rng.random() < target_h
        if intra:
            if not multi:
                continue
            k = multi[rng.integers(len(multi))]
            u, v = rng.choice(by_class[k], size=2, replace=False)
        else:
            u = int(rng.integers(n))
            others = np.flatnonzero(labels != labels[u])
            if others.size == 0:
                continue
            v = int(others[rng.integers(others.size)])
        try_add(int(u), int(v))

    # every node needs degree >= 1
    deg = np.zeros(n, dtype=np.int64)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    for u in np.flatnonzero(deg == 0):
        intra = rng.random() < target_h
        pool = by_class[labels[u]] if intra else np.flatnonzero(labels != labels[u])
        pool = pool[pool != u]
        if pool.size == 0:
            pool = np.flatnonzero(np.arange(n) != u)
        for _ in range(100):
            v = int(pool[rng.integers(pool.size)])
            if try_add(int(u), v):
                deg[u] += 1
                deg[v] += 1
                break

    means = rng.normal(0.0, mean_scale, size=(c, d))
    feats = means[labels] + rng.normal(0.0, 1.0, size=(n, d))
    return GraphDataset(
        name=f"synth_n{n}_c{c}_h{target_h:g}_s{seed}",
        features=feats.astype(np.float32),
        edges=np.array(sorted(edges), dtype=np.int64).reshape(-1, 2),
        labels=labels,
        num_classes=c,
    )


def _fmt(x: float) -> str:
    return np.format_float_positional(np.float32(x), unique=True, trim="0")


def write_dataset(g: GraphDataset, dir_path: str) -> None:
    os.makedirs(dir_path, exist_ok=True)
    with open(os.path.join(dir_path, "meta.tsv"), "w", newline="\n") as f:
        f.write(f"name\t{g.name}\n")
        f.write(f"num_nodes\t{g.num_nodes}\n")
        f.write(f"num_classes\t{g.num_classes}\n")
        f.write(f"feature_dim\t{g.feature_dim}\n")
    with open(os.path.join(dir_path, "features.tsv"), "w", newline="\n") as f:
        for row in g.features:
            f.write("\t".join(_fmt(x) for x in row) + "\n")
    with open(os.path.join(dir_path, "edges.tsv"), "w", newline="\n") as f:
        for u, v in g.edges:
            f.write(f"{u}\t{v}\n")
    with open(os.path.join(dir_path, "labels.tsv"), "w", newline="\n") as f:
        for y in g.labels:
            f.write(f"{y}\n")


def load_dataset(dir_path: str) -> GraphDataset:
    for fname in ("meta.tsv", "features.tsv", "edges.tsv", "labels.tsv"):
        if not os.path.isfile(os.path.join(dir_path, fname)):
            raise errors.MissingFile(f"{dir_path}: missing {fname}")
    meta = {}
    with open(os.path.join(dir_path, "meta.tsv"), encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            key, _, val = line.partition("\t")
            meta[key] = val
    for key in META_KEYS:
        if key not in meta:
            raise errors.IoError(f"{dir_path}/meta.tsv: missing key {key!r}")
    n = int(meta["num_nodes"])
    d = int(meta["feature_dim"])

    feats = np.zeros((n, d), dtype=np.float32)
    with open(os.path.join(dir_path, "features.tsv"), encoding="utf-8") as f:
        rows = [line.rstrip("\n") for line in f if line.strip()]
    if len(rows) != n:
        raise errors.ShapeMismatch(f"{dir_path}: {len(rows)} feature rows for {n} nodes")
    for i, line in enumerate(rows):
        vals = line.split("\t")
        if len(vals) != d:
            raise errors.ShapeMismatch(f"{dir_path}: row {i} has {len(vals)} values, expected {d}")
        feats[i] = [float(v) for v in vals]
    if not np.isfinite(feats).all():
        raise errors.NonFiniteFeature(f"{dir_path}: non-finite feature entry")

    edges = []
    with open(os.path.join(dir_path, "edges.tsv"), encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            u, v = line.split("\t")
            edges.append((int(u), int(v)))
    edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise errors.IndexOutOfRange(f"{dir_path}: edge endpoint outside [0, {n})")

    with open(os.path.join(dir_path, "labels.tsv"), encoding="utf-8") as f:
        labels = np.array([int(line.strip()) for line in f if line.strip()], dtype=np.int64)
    if labels.shape[0] != n:
        raise errors.ShapeMismatch(f"{dir_path}: {labels.shape[0]} labels for {n} nodes")

    return GraphDataset(
        name=meta["name"],
        features=feats,
        edges=edges,
        labels=labels,
        num_classes=int(meta["num_classes"]),
    )
