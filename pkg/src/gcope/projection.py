"""Truncated-SVD feature projection onto a shared target dimension.

Implemented without external solvers: orthogonal (block power) iteration
on the Gram matrix X^T X with modified Gram-Schmidt re-orthogonalization,
finished by a Rayleigh-Ritz rotation (small cyclic Jacobi). Output is the
score matrix U_k S_k so relative feature energy across nodes survives the
projection. Columns beyond the available rank are zero-padded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import errors
from .graphstore import GraphDataset


@dataclass
class ProjectionConfig:
    d_p: int = 100
    max_power_iterations: int = 300
    tolerance: float = 1e-9
    l2_normalize: bool = False

    def __post_init__(self):
        if self.d_p < 1:
            raise errors.InvalidArgument("d_p must be >= 1")
        if self.tolerance <= 0:
            raise errors.InvalidArgument("tolerance must be positive")


@dataclass
class ProjectedFeatures:
    matrix: np.ndarray              # |V| x d_p scores, float32
    singular_values: np.ndarray     # nonincreasing, length min(d_p, d, n)
    basis: np.ndarray = None        # d x k right singular vectors, float64
    source_name: str = ""


def _mgs(q: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt; columns that collapse become exact zeros."""
    q = q.copy()
    k = q.shape[1]
    for i in range(k):
        nrm = np.linalg.norm(q[:, i])
        if nrm > 1e-300:
            q[:, i] /= nrm
            if i + 1 < k:
                q[:, i + 1:] -= np.outer(q[:, i], q[:, i] @ q[:, i + 1:])
        else:
            q[:, i] = 0.0
    return q


def _jacobi_small(b: np.ndarray, sweeps: int = 60, tol: float = 1e-14):
    """Cyclic Jacobi for the small symmetric Ritz matrix. Returns (eigvals, V)."""
    a = b.copy()
    k = a.shape[0]
    v = np.eye(k)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol * max(np.linalg.norm(a, "fro"), 1e-300):
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(k)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    return np.diag(a).copy(), v


def svd_project(x: np.ndarray, cfg: ProjectionConfig) -> ProjectedFeatures:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise errors.ShapeMismatch(f"expected nonempty 2-D matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise errors.NonFiniteInput("projection input has non-finite entries")
    n, d = x.shape
    k = min(cfg.d_p, d, n)

    c = x.T @ x  # d x d Gram matrix
    scale = max(np.abs(c).max(), 1e-300)
    cn = c / scale
    # squaring accelerates separation of clustered eigenvalues
    c2 = cn @ cn
    c4 = c2 @ c2

    rng = np.random.default_rng(0xC0FFEE)
    q = _mgs(rng.standard_normal((d, k)))
    resid = np.inf
    converged = False
    ref = max(np.linalg.norm(cn, "fro"), 1e-300)
    for _ in range(cfg.max_power_iterations):
        q = _mgs(c4 @ q)
        cq = cn @ q
        b = q.T @ cq
        resid = np.linalg.norm(cq - q @ b, "fro") / ref
        if resid < cfg.tolerance:
            converged = True
            break
    if not converged:
        raise errors.ConvergenceFailure(
            f"orthogonal iteration residual {resid:.3e} > {cfg.tolerance:.0e} "
            f"after {cfg.max_power_iterations} iterations")

    lam, rot = _jacobi_small(b)
    q = q @ rot
    lam = np.maximum(lam * scale, 0.0)
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    q = q[:, order]
    sigma = np.sqrt(lam)

    scores = x @ q  # = U_k S_k
    # sign convention: largest-magnitude entry of each left singular vector positive
    for j in range(k):
        if sigma[j] > 1e-12 * max(sigma[0], 1e-300):
            idx = int(np.argmax(np.abs(scores[:, j])))
            if scores[idx, j] < 0:
                scores[:, j] = -scores[:, j]
                q[:, j] = -q[:, j]
        else:
            sigma[j] = 0.0
            scores[:, j] = 0.0
            q[:, j] = 0.0

    out = np.zeros((n, cfg.d_p), dtype=np.float32)
    out[:, :k] = scores.astype(np.float32)
    if cfg.l2_normalize:
        nrm = np.linalg.norm(out, axis=1, keepdims=True)
        nrm[nrm == 0] = 1.0
        out = out / nrm
    return ProjectedFeatures(matrix=out, singular_values=sigma.astype(np.float64),
                             basis=q)


def project_all(graphs: list[GraphDataset], cfg: ProjectionConfig) -> list[ProjectedFeatures]:
    if not graphs:
        raise errors.EmptyDatasetList("need at least one dataset to project")
    out = []
    for g in graphs:
        try:
            p = svd_project(g.features, cfg)
        except errors.GcopeError as e:
            raise type(e)(f"{g.name}: {e}") from e
        p.source_name = g.name
        out.append(p)
    return out
