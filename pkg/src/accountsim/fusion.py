"""Network + content fusion without deep models.

warm_start_factorize seeds graph factorization with a content embedding
(PCA-projected when dimensions differ); concat_spaces glues two L2-
normalized spaces side by side with a mix weight.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, ConfigError
from .graph import CommGraph
from .linalg import pca_project
from .netembed import graph_factorize
from .spaces import EmbeddingSpace


@dataclass
class FusionConfig:
    method: str  # "warm_start" or "concat"
    content_space: str
    network_space: str | None = None  # concat only
    mix_weight: float = 0.5
    dim: int = 32

    def __post_init__(self):
        if self.method not in ("warm_start", "concat"):
            raise ConfigError(f"unknown fusion method {self.method!r}")
        if not 0.0 <= self.mix_weight <= 1.0:
            raise ConfigError("mix_weight must be in [0, 1]")


def project_to_dim(vectors: np.ndarray, dim: int) -> np.ndarray:
    """Identity when widths match; PCA down, zero-pad up otherwise."""
    n, width = vectors.shape
    if width == dim:
        return np.array(vectors, dtype=np.float64, copy=True)
    if width > dim:
        return pca_project(vectors, dim)
    scores = pca_project(vectors, min(width, n))
    out = np.zeros((n, dim), dtype=np.float64)
    out[:, : scores.shape[1]] = scores
    return out


def warm_start_factorize(
    g: CommGraph,
    content: EmbeddingSpace,
    dim: int = 32,
    lambda_reg: float = 0.01,
    lr: float = 0.05,
    epochs: int = 200,
    seed: int = 0,
    name: str = "warmstart",
    loss_log: list | None = None,
) -> EmbeddingSpace:
    """Graph factorization initialized from a content embedding.

    The content space must cover every graph node; rows are aligned to
    graph node order before projection. Zero training epochs return the
    projected content unchanged.
    """
    content_index = {a: i for i, a in enumerate(content.account_ids)}
    missing = [a for a in g.ids if a not in content_index]
    if missing:
        raise AlignmentError(f"content space lacks {len(missing)} graph nodes, e.g. {missing[0]!r}")
    aligned = content.vectors[[content_index[a] for a in g.ids]]
    init = project_to_dim(aligned, dim)
    result = graph_factorize(g, dim=dim, lambda_reg=lambda_reg, lr=lr, epochs=epochs,
                             seed=seed, init=init, name=name, kind="fused",
                             loss_log=loss_log)
    return result


def concat_spaces(
    a: EmbeddingSpace,
    b: EmbeddingSpace,
    mix_weight: float = 0.5,
    name: str = "concat",
) -> EmbeddingSpace:
    """Rows [w * a_hat | (1-w) * b_hat] over L2-normalized rows.

    Requires identical node sets; rows of `b` are aligned to `a`'s order.
    Zero rows stay zero.
    """
    if not 0.0 <= mix_weight <= 1.0:
        raise ConfigError("mix_weight must be in [0, 1]")
    if set(a.account_ids) != set(b.account_ids):
        raise AlignmentError("spaces cover different node sets")
    b_index = {acc: i for i, acc in enumerate(b.account_ids)}
    b_aligned = b.vectors[[b_index[acc] for acc in a.account_ids]]

    def normalized(m: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(m, axis=1, keepdims=True)
        return np.divide(m, norms, out=np.zeros_like(m), where=norms > 0)

    rows = np.hstack([mix_weight * normalized(a.vectors), (1.0 - mix_weight) * normalized(b_aligned)])
    return EmbeddingSpace(name=name, account_ids=a.account_ids, vectors=rows,
                          metric="cosine", kind="fused", seed=None)
