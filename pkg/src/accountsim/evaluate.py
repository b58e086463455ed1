"""Precision@k evaluation, synthetic planted-community generators, and 2-D
projection (PCA and exact t-SNE) for visual validation.

Evaluation queries are independent single-seed lookups: for every
positively labeled account, retrieve k neighbors (seed excluded) and score
the fraction that are positive; report the mean over positive seeds. The
random baseline is positive prevalence among candidates, P/(N-1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EvaluationError, SizeError
from .graph import CommGraph, from_edges
from .ingest import EdgeRecord
from .knn import query
from .linalg import pca_fit
from .spaces import EmbeddingSpace

TSNE_MAX_POINTS = 5000
TSNE_ENTROPY_TOL = 1e-6
EARLY_EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250


@dataclass(frozen=True)
class LabelSet:
    labels: dict[str, int]  # account_id -> {0, 1}

    @property
    def positives(self) -> list[str]:
        return [a for a, v in self.labels.items() if v == 1]

    @property
    def positive_count(self) -> int:
        return sum(self.labels.values())


@dataclass
class EvalReport:
    space: str
    ks: tuple[int, ...]
    p_at: dict[int, float]
    random_baseline: float
    per_seed: dict[int, dict[str, float]]

    def to_json(self) -> dict:
        return {
            "space": self.space,
            "ks": list(self.ks),
            "p_at": {str(k): v for k, v in self.p_at.items()},
            "random_baseline": self.random_baseline,
            "per_seed": {str(k): dict(sorted(v.items())) for k, v in self.per_seed.items()},
        }


def precision_at_k(space, labels: LabelSet, ks=(10, 50)) -> EvalReport:
    """Mean precision@k over single-seed queries from every positive account."""
    ids = set(space.account_ids)
    unknown = [a for a in labels.labels if a not in ids]
    if unknown:
        raise EvaluationError(f"labels reference unknown accounts, e.g. {unknown[0]!r}")
    positives = sorted(labels.positives)
    if not positives:
        raise EvaluationError("no positively labeled accounts to evaluate")
    n = space.n
    baseline = labels.positive_count / (n - 1) if n > 1 else 0.0
    p_at: dict[int, float] = {}
    per_seed: dict[int, dict[str, float]] = {}
    for k in ks:
        seed_precisions = {}
        for seed in positives:
            hits = query(space, [seed], k).hits
            n_pos = sum(1 for h in hits if labels.labels.get(h.account_id) == 1)
            seed_precisions[seed] = n_pos / k
        per_seed[k] = seed_precisions
        p_at[k] = sum(seed_precisions.values()) / len(seed_precisions)
    return EvalReport(space=space.name, ks=tuple(ks), p_at=p_at,
                      random_baseline=baseline, per_seed=per_seed)


def report_table(reports: list[EvalReport]) -> str:
    """Aligned text table: one model per row, one column per k, baseline row."""
    if not reports:
        return ""
    ks = reports[0].ks
    header = ["Model"] + [f"p@{k}" for k in ks]
    rows = [["Random Baseline"] + [f"{reports[0].random_baseline:.3f}" for _ in ks]]
    for rep in reports:
        rows.append([rep.space] + [f"{rep.p_at[k]:.3f}" for k in ks])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Synthetic planted-community data

def gen_planted_graph(
    block_sizes: list[int],
    intra_p: float,
    inter_p: float,
    seed: int = 0,
) -> tuple[CommGraph, LabelSet]:
    """Directed stochastic block model; block 0 is the positive class.

    Every ordered pair (i, j), i != j, gets an edge with probability
    intra_p inside a block and inter_p across blocks.
    """
    if not intra_p > inter_p:
        raise ConfigError("intra_p must exceed inter_p")
    if not (0 <= inter_p <= 1 and 0 < intra_p <= 1):
        raise ConfigError("edge probabilities must be in [0, 1]")
    n = sum(block_sizes)
    width = len(str(n - 1))
    ids = [f"n{i:0{width}d}" for i in range(n)]
    block = np.repeat(np.arange(len(block_sizes)), block_sizes)
    rng = np.random.default_rng(seed)
    prob = np.where(block[:, None] == block[None, :], intra_p, inter_p)
    np.fill_diagonal(prob, 0.0)
    adj = rng.random((n, n)) < prob
    sources, targets = np.nonzero(adj)
    edges = [
        EdgeRecord(source=ids[s], target=ids[t], edge_type="mention", weight=1)
        for s, t in zip(sources, targets)
    ]
    graph = from_edges(ids, edges)
    labels = LabelSet(labels={ids[i]: int(block[i] == 0) for i in range(n)})
    return graph, labels


def gen_topic_corpus(
    labels: LabelSet,
    vocab_per_class: int = 50,
    doc_len: int = 200,
    noise_frac: float = 0.3,
    seed: int = 0,
) -> dict[str, list[str]]:
    """Per-node token lists: class-private vocabulary diluted by a shared one.

    Each token comes from the node's class vocabulary with probability
    1 - noise_frac, otherwise from the shared vocabulary.
    """
    if not 0.0 <= noise_frac < 1.0:
        raise ConfigError("noise_frac must be in [0, 1)")
    rng = np.random.default_rng(seed)
    classes = sorted(set(labels.labels.values()))
    private = {
        c: [f"c{c}w{i}" for i in range(vocab_per_class)] for c in classes
    }
    shared = [f"sharedw{i}" for i in range(vocab_per_class)]
    docs: dict[str, list[str]] = {}
    for node_id in sorted(labels.labels):
        c = labels.labels[node_id]
        own = private[c]
        tokens = []
        for _ in range(doc_len):
            if rng.random() < noise_frac:
                tokens.append(shared[rng.integers(len(shared))])
            else:
                tokens.append(own[rng.integers(len(own))])
        docs[node_id] = tokens
    return docs


# ---------------------------------------------------------------------------
# 2-D projection

def conditional_affinities(x: np.ndarray, perplexity: float) -> tuple[np.ndarray, np.ndarray]:
    """Row-stochastic conditional P with per-point precision binary search.

    Each row's entropy is driven to log(perplexity) within 1e-6 (bisection
    on the Gaussian precision beta). Returns (P, beta).
    """
    n = x.shape[0]
    sq_norms = np.einsum("nd,nd->n", x, x)
    d2 = np.maximum(sq_norms[:, None] - 2.0 * (x @ x.T) + sq_norms[None, :], 0.0)
    target = math.log(perplexity)
    p = np.zeros((n, n), dtype=np.float64)
    betas = np.ones(n, dtype=np.float64)
    for i in range(n):
        di = np.delete(d2[i], i)
        beta, beta_min, beta_max = 1.0, 0.0, np.inf
        row = None
        for _ in range(200):
            w = np.exp(-di * beta)
            total = w.sum()
            if total <= 0:
                entropy, row = 0.0, np.zeros_like(di)
            else:
                row = w / total
                entropy = math.log(total) + beta * float((di * w).sum()) / total
            diff = entropy - target
            if abs(diff) <= TSNE_ENTROPY_TOL:
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = (beta + beta_min) / 2.0
        else:
            if abs(diff) > 1e-4:
                raise ConfigError(
                    f"perplexity {perplexity} infeasible for point {i} (entropy off by {diff:.2e})"
                )
        betas[i] = beta
        p[i, np.arange(n) != i] = row
    return p, betas


def tsne_project(
    x: np.ndarray,
    perplexity: float = 30.0,
    iters: int = 500,
    seed: int = 0,
    learning_rate: float = 200.0,
) -> np.ndarray:
    """Exact O(N^2) symmetric-neighbor embedding into 2-D.

    PCA init with seeded jitter; early exaggeration 12 for the first 250
    iterations; momentum 0.5 then 0.8.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n > TSNE_MAX_POINTS:
        raise SizeError(f"exact projection caps at {TSNE_MAX_POINTS} points, got {n}")
    if not perplexity < n / 3:
        raise ConfigError(f"perplexity {perplexity} must be < N/3 = {n / 3:.1f}")
    cond, _ = conditional_affinities(x, perplexity)
    p = (cond + cond.T) / (2.0 * n)
    p = np.maximum(p, 1e-12)

    rng = np.random.default_rng(seed)
    y = pca_init(x) + rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(y)
    gains = np.ones_like(y)
    for it in range(iters):
        exaggeration = EARLY_EXAGGERATION if it < EXAGGERATION_ITERS else 1.0
        momentum = 0.5 if it < EXAGGERATION_ITERS else 0.8
        sq = np.einsum("nd,nd->n", y, y)
        num = 1.0 / (1.0 + np.maximum(sq[:, None] - 2.0 * (y @ y.T) + sq[None, :], 0.0))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), 1e-12)
        pq = (exaggeration * p - q) * num
        grad = 4.0 * ((np.diag(pq.sum(axis=1)) - pq) @ y)
        flips = np.sign(grad) != np.sign(velocity)
        gains = np.maximum(np.where(flips, gains + 0.2, gains * 0.8), 0.01)
        velocity = momentum * velocity - learning_rate * gains * grad
        y = y + velocity
        y = y - y.mean(axis=0)
    return y


def pca_init(x: np.ndarray) -> np.ndarray:
    mean, components = pca_fit(x, 2)
    scores = (x - mean) @ components.T
    if scores.shape[1] < 2:
        scores = np.hstack([scores, np.zeros((x.shape[0], 2 - scores.shape[1]))])
    return scores * 1e-4 / max(scores.std() or 1.0, 1e-12)


def project_2d(
    space: EmbeddingSpace,
    method: str = "pca",
    perplexity: float = 30.0,
    iters: int = 500,
    seed: int = 0,
) -> np.ndarray:
    """N x 2 projection of an embedding space (pca or tsne)."""
    if method == "pca":
        mean, components = pca_fit(space.vectors, 2)
        scores = (space.vectors - mean) @ components.T
        if scores.shape[1] < 2:
            scores = np.hstack([scores, np.zeros((space.n, 2 - scores.shape[1]))])
        return scores
    if method == "tsne":
        return tsne_project(space.vectors, perplexity=perplexity, iters=iters, seed=seed)
    raise ConfigError(f"unknown projection method {method!r}")


def projection_csv(space: EmbeddingSpace, points: np.ndarray, labels: LabelSet | None = None) -> str:
    """CSV dump `account_id,x,y,label` (label blank when unlabeled)."""
    lines = ["account_id,x,y,label"]
    label_map = labels.labels if labels else {}
    for account_id, (px, py) in zip(space.account_ids, points):
        label = label_map.get(account_id, "")
        lines.append(f"{account_id},{px:.9g},{py:.9g},{label}")
    return "\n".join(lines) + "\n"
