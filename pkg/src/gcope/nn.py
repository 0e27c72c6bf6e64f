"""Encoders, reconstruction decoder, Adam optimizer, and graph readout."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import errors
from .autodiff import (Param, Tensor, concat_cols, gather_rows, scatter_add_rows,
                       spmm)


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
           shape=None, dtype=np.float32) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out)).astype(dtype)


def gcn_normalize(adj: sp.csr_matrix) -> sp.csr_matrix:
    """D^-1/2 (A + I) D^-1/2 with degrees of (A + I)."""
    n = adj.shape[0]
    a = (adj + sp.eye(n, format="csr", dtype=adj.dtype)).tocsr()
    a.data = np.minimum(a.data, 1.0)  # keep binary if adj already had self-loops
    deg = np.asarray(a.sum(axis=1)).ravel()
    dinv = 1.0 / np.sqrt(deg)
    d = sp.diags(dinv)
    return (d @ a @ d).tocsr()


_ACTS = {"relu": lambda t: t.relu(), "tanh": lambda t: t.tanh()}


class GcnEncoder:
    """Stack of GCN layers: H' = act(D^-1/2 (A+I) D^-1/2 H W + b)."""

    kind = "gcn"

    def __init__(self, dims: list[int], activation: str = "relu",
                 seed: int = 0, dtype=np.float32):
        if len(dims) < 2:
            raise errors.InvalidArgument("need at least input and output dims")
        if activation not in _ACTS:
            raise errors.InvalidArgument(f"unknown activation {activation!r}")
        self.dims = list(dims)
        self.activation = activation
        rng = np.random.default_rng([seed, 0xE0C])
        self.weights = [Param(glorot(rng, dims[i], dims[i + 1], dtype=dtype),
                              name=f"gcn.w{i}") for i in range(len(dims) - 1)]
        self.biases = [Param(np.zeros(dims[i + 1], dtype=dtype), name=f"gcn.b{i}")
                       for i in range(len(dims) - 1)]

    @property
    def out_dim(self) -> int:
        return self.dims[-1]

    def params(self) -> list[Param]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def forward(self, x: Tensor, adj: sp.csr_matrix) -> Tensor:
        if x.shape[1] != self.dims[0]:
            raise errors.ShapeMismatch(
                f"encoder expects {self.dims[0]} input dims, got {x.shape[1]}")
        a_hat = gcn_normalize(adj.astype(x.dtype))
        act = _ACTS[self.activation]
        h = x
        for w, b in zip(self.weights, self.biases):
            h = act(spmm(a_hat, h) @ w + b)
        if not np.isfinite(h.data).all():
            raise errors.NonFiniteActivation("encoder produced non-finite activations")
        return h

    def copy(self) -> "GcnEncoder":
        clone = GcnEncoder.__new__(GcnEncoder)
        clone.dims = list(self.dims)
        clone.activation = self.activation
        clone.weights = [Param(w.data.copy(), name=w.name) for w in self.weights]
        clone.biases = [Param(b.data.copy(), name=b.name) for b in self.biases]
        return clone


class FagcnEncoder:
    """Frequency-adaptive layers with gated signed edge weights.

    h0 = x @ W_in + b_in; each layer computes
    h_i' = eps * h0_i + sum_{j in N(i)} alpha_ij / sqrt(d_i d_j) * h_j
    with alpha_ij = tanh(g . [h_i || h_j]).
    """

    kind = "fagcn"

    def __init__(self, in_dim: int, hidden: int = 100, num_layers: int = 2,
                 eps: float = 0.3, seed: int = 0, dtype=np.float32):
        if not (0.0 <= eps <= 1.0):
            raise errors.InvalidArgument("eps must lie in [0, 1]")
        self.in_dim, self.hidden, self.num_layers, self.eps = in_dim, hidden, num_layers, eps
        rng = np.random.default_rng([seed, 0xFA6])
        self.w_in = Param(glorot(rng, in_dim, hidden, dtype=dtype), name="fagcn.w_in")
        self.b_in = Param(np.zeros(hidden, dtype=dtype), name="fagcn.b_in")
        self.gates = [Param(glorot(rng, 2 * hidden, 1, shape=(2 * hidden, 1), dtype=dtype),
                            name=f"fagcn.g{i}") for i in range(num_layers)]

    @property
    def out_dim(self) -> int:
        return self.hidden

    def params(self) -> list[Param]:
        return [self.w_in, self.b_in] + list(self.gates)

    def forward(self, x: Tensor, adj: sp.csr_matrix) -> Tensor:
        if x.shape[1] != self.in_dim:
            raise errors.ShapeMismatch(
                f"encoder expects {self.in_dim} input dims, got {x.shape[1]}")
        n = adj.shape[0]
        coo = adj.tocoo()
        rows, cols = coo.row.astype(np.int64), coo.col.astype(np.int64)
        deg = np.asarray(adj.sum(axis=1)).ravel()
        h0 = x @ self.w_in + self.b_in
        h = h0
        if rows.size:
            coef = (1.0 / np.sqrt(deg[rows] * deg[cols])).reshape(-1, 1).astype(x.dtype)
        for g in self.gates:
            if rows.size == 0:
                h = self.eps * h0
                continue
            hi = gather_rows(h, rows)
            hj = gather_rows(h, cols)
            alpha = (concat_cols(hi, hj) @ g).tanh()       # E x 1, in (-1, 1)
            agg = scatter_add_rows(hj * alpha * Tensor(coef), rows, n)
            h = self.eps * h0 + agg
        if not np.isfinite(h.data).all():
            raise errors.NonFiniteActivation("encoder produced non-finite activations")
        return h

    def copy(self) -> "FagcnEncoder":
        clone = FagcnEncoder.__new__(FagcnEncoder)
        clone.in_dim, clone.hidden = self.in_dim, self.hidden
        clone.num_layers, clone.eps = self.num_layers, self.eps
        clone.w_in = Param(self.w_in.data.copy(), name=self.w_in.name)
        clone.b_in = Param(self.b_in.data.copy(), name=self.b_in.name)
        clone.gates = [Param(g.data.copy(), name=g.name) for g in self.gates]
        return clone


def make_encoder(kind: str, in_dim: int, hidden: int = 100, num_layers: int = 2,
                 activation: str = "relu", eps: float = 0.3, seed: int = 0,
                 dtype=np.float32):
    if kind == "gcn":
        dims = [in_dim] + [hidden] * num_layers
        return GcnEncoder(dims, activation=activation, seed=seed, dtype=dtype)
    if kind == "fagcn":
        return FagcnEncoder(in_dim, hidden=hidden, num_layers=num_layers,
                            eps=eps, seed=seed, dtype=dtype)
    raise errors.InvalidArgument(f"unknown encoder kind {kind!r}")


class MlpDecoder:
    """Two affine layers d_emb -> hidden -> d_out with relu between."""

    def __init__(self, d_emb: int, hidden: int, d_out: int, seed: int = 0,
                 dtype=np.float32):
        rng = np.random.default_rng([seed, 0xDEC])
        self.d_emb, self.hidden, self.d_out = d_emb, hidden, d_out
        self.w1 = Param(glorot(rng, d_emb, hidden, dtype=dtype), name="dec.w1")
        self.b1 = Param(np.zeros(hidden, dtype=dtype), name="dec.b1")
        self.w2 = Param(glorot(rng, hidden, d_out, dtype=dtype), name="dec.w2")
        self.b2 = Param(np.zeros(d_out, dtype=dtype), name="dec.b2")

    def params(self) -> list[Param]:
        return [self.w1, self.b1, self.w2, self.b2]

    def forward(self, h: Tensor) -> Tensor:
        return (h @ self.w1 + self.b1).relu() @ self.w2 + self.b2

    def copy(self) -> "MlpDecoder":
        clone = MlpDecoder.__new__(MlpDecoder)
        clone.d_emb, clone.hidden, clone.d_out = self.d_emb, self.hidden, self.d_out
        for attr in ("w1", "b1", "w2", "b2"):
            p = getattr(self, attr)
            setattr(clone, attr, Param(p.data.copy(), name=p.name))
        return clone


class Adam:
    """Bias-corrected Adam; zeroes grads after each step."""

    def __init__(self, params: list[Param], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            g = g.astype(p.data.dtype, copy=False)
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            mhat = self.m[i] / (1 - b1 ** self.t)
            vhat = self.v[i] / (1 - b2 ** self.t)
            with np.errstate(invalid="ignore", over="ignore"):
                p.data = p.data - self.lr * mhat / (np.sqrt(vhat) + self.eps)
            p.check_finite()
            p.zero_grad()


def graph_readout(embeddings: Tensor, node_subset, mode: str = "mean") -> Tensor:
    """Pool rows of `embeddings` over a node subset into one vector.

    Indices are sorted before pooling so any ordering of the subset
    yields bit-identical output.
    """
    idx = np.unique(np.asarray(node_subset, dtype=np.int64))
    if idx.size == 0:
        raise errors.EmptySubset("readout over an empty node subset")
    if idx.min() < 0 or idx.max() >= embeddings.shape[0]:
        raise errors.IndexOutOfRange("readout subset index out of range")
    sub = gather_rows(embeddings, idx)
    if mode == "mean":
        return sub.mean(axis=0)
    if mode == "sum":
        return sub.sum(axis=0)
    if mode == "max":
        # subgradient: route to the first argmax per column
        am = sub.data.argmax(axis=0)
        mask = np.zeros_like(sub.data)
        mask[am, np.arange(sub.data.shape[1])] = 1.0
        return (sub * Tensor(mask)).sum(axis=0)
    raise errors.InvalidArgument(f"unknown readout mode {mode!r}")
