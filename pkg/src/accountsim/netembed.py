"""Network-side embedders over the communication graph.

- katz_matrix / hope_embed: attenuated walk-count proximity S = sum a^k A^k
  solved in closed form, factorized into source/target halves by SVD.
- sample_walks / skipgram_train: second-order biased random walks trained
  with negative-sampling SGD.
- graph_factorize: SGD on squared reconstruction error of edge weights.
- role2vec_embed: degree-seeded Weisfeiler-Lehman role ids, walks over
  role tokens.
- sybil_rank: degree-normalized trust propagation from a seed set,
  returning a one-dimensional ranked space.

Walkers, role extraction, and trust propagation run on the symmetrized
graph; proximity factorization runs on the directed graph. Walk samplers
ignore edge weights unless `weighted` is set.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, QueryError, SpectralError, TrainingError
from .graph import CommGraph, UndirectedGraph, symmetrize
from .linalg import power_iteration_lambda_max, truncated_svd
from .spaces import EmbeddingSpace

KATZ_RESIDUAL_TOL = 1e-8

ROLE_BINS = 2 ** 14
ROLE_WL_ITERS = 2


# ---------------------------------------------------------------------------
# Katz proximity and its SVD factorization

@dataclass
class KatzMatrix:
    matrix: np.ndarray  # N x N attenuated walk counts, k >= 1
    alpha: float
    lambda_max: float
    residual: float


def katz_matrix(g: CommGraph, alpha: float | None = None) -> KatzMatrix:
    """Closed-form S = (I - alpha*A)^-1 - I with alpha < 1/lambda_max.

    lambda_max is estimated by 100-step power iteration on |A|; the default
    attenuation is 0.5/lambda_max. The recurrence residual
    ||S - alpha*A*(I + S)||_F must come out below 1e-8.
    """
    a = g.dense_adjacency()
    lam = power_iteration_lambda_max(a, steps=100)
    if alpha is None:
        alpha = 0.5 / lam if lam > 0 else 0.5
    if alpha <= 0:
        raise ConfigError("attenuation must be positive")
    if lam > 0 and alpha >= 1.0 / lam:
        raise SpectralError(
            f"attenuation {alpha:.6g} >= 1/lambda_max = {1.0 / lam:.6g}; series diverges"
        )
    eye = np.eye(g.n)
    try:
        s = np.linalg.solve(eye - alpha * a, eye) - eye
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"proximity system is singular: {exc}") from exc
    residual = float(np.linalg.norm(s - alpha * a @ (eye + s)))
    if residual > KATZ_RESIDUAL_TOL:
        raise SpectralError(f"proximity recurrence residual {residual:.3g} exceeds {KATZ_RESIDUAL_TOL}")
    return KatzMatrix(matrix=s, alpha=alpha, lambda_max=lam, residual=residual)


def hope_embed(
    g: CommGraph,
    dim: int = 128,
    alpha: float | None = None,
    name: str = "hope",
    seed: int = 0,
) -> EmbeddingSpace:
    """Source/target factorization of the Katz proximity matrix.

    SVD of S gives Y_s = U*sqrt(Sigma), Y_t = V*sqrt(Sigma), each dim/2
    wide; the node vector is their concatenation.
    """
    if dim % 2 != 0:
        raise ConfigError("dim must be even (source and target halves)")
    half = dim // 2
    if half > g.n:
        raise ConfigError(f"dim/2={half} exceeds node count {g.n}")
    km = katz_matrix(g, alpha)
    u, s, vt = truncated_svd(km.matrix, half, seed=seed)
    root = np.sqrt(s)
    vectors = np.hstack([u * root, vt.T * root])
    return EmbeddingSpace(name=name, account_ids=g.ids, vectors=vectors,
                          metric="cosine", kind="network", seed=seed)


# ---------------------------------------------------------------------------
# Biased random walks

@dataclass
class WalkCorpus:
    walks: list[np.ndarray]
    walk_length: int
    walks_per_node: int
    p: float
    q: float
    seed: int


def step_distribution(
    gu: UndirectedGraph,
    prev: int | None,
    cur: int,
    p: float,
    q: float,
    weighted: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Transition neighbors and probabilities for one walk step.

    Unnormalized weight is 1/p back to the previous node, 1 to nodes
    adjacent to it, and 1/q to the rest; the first step is uniform.
    """
    nbrs = gu.neighbors[cur]
    if len(nbrs) == 0:
        return nbrs, np.empty(0, dtype=np.float64)
    base = gu.edge_weights[cur].astype(np.float64) if weighted else np.ones(len(nbrs))
    if prev is None:
        weights = base
    else:
        prev_set = gu.neighbor_set(prev)
        bias = np.array(
            [1.0 / p if int(x) == prev else (1.0 if int(x) in prev_set else 1.0 / q) for x in nbrs]
        )
        weights = base * bias
    return nbrs, weights / weights.sum()


def sample_walks(
    gu: UndirectedGraph,
    walks_per_node: int = 10,
    walk_length: int = 80,
    p: float = 1.0,
    q: float = 1.0,
    seed: int = 0,
    weighted: bool = False,
) -> WalkCorpus:
    """Second-order walks from every node, one seeded RNG stream per root.

    Dead-end nodes truncate the walk. The corpus order is (root, repeat),
    so equal inputs give identical corpora regardless of scheduling.
    """
    if walks_per_node < 1 or walk_length < 1:
        raise ConfigError("walks_per_node and walk_length must be >= 1")
    if p <= 0 or q <= 0:
        raise ConfigError("p and q must be positive")
    streams = np.random.SeedSequence(seed).spawn(gu.n)
    walks: list[np.ndarray] = []
    for root in range(gu.n):
        rng = np.random.default_rng(streams[root])
        for _ in range(walks_per_node):
            walk = [root]
            prev: int | None = None
            while len(walk) < walk_length:
                cur = walk[-1]
                nbrs, probs = step_distribution(gu, prev, cur, p, q, weighted)
                if len(nbrs) == 0:
                    break
                choice = np.searchsorted(np.cumsum(probs), rng.random(), side="right")
                choice = min(choice, len(nbrs) - 1)
                prev = cur
                walk.append(int(nbrs[choice]))
            walks.append(np.array(walk, dtype=np.int64))
    return WalkCorpus(walks=walks, walk_length=walk_length, walks_per_node=walks_per_node,
                      p=p, q=q, seed=seed)


def dump_walks(corpus: WalkCorpus, path) -> None:
    """One space-separated walk of node indices per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for walk in corpus.walks:
            fh.write(" ".join(str(int(v)) for v in walk) + "\n")


# ---------------------------------------------------------------------------
# Skip-gram with negative sampling

def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def make_pairs(walks: list[np.ndarray], window: int) -> tuple[np.ndarray, np.ndarray]:
    """(center, context) pairs within the fixed window, in corpus order."""
    centers: list[int] = []
    contexts: list[int] = []
    for walk in walks:
        n = len(walk)
        for i in range(n):
            lo = max(0, i - window)
            hi = min(n, i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    centers.append(int(walk[i]))
                    contexts.append(int(walk[j]))
    return np.array(centers, dtype=np.int64), np.array(contexts, dtype=np.int64)


def noise_distribution(walks: list[np.ndarray], vocab_size: int) -> np.ndarray:
    """Unigram token distribution raised to the 3/4 power."""
    freq = np.zeros(vocab_size, dtype=np.float64)
    for walk in walks:
        np.add.at(freq, walk, 1.0)
    weighted = freq ** 0.75
    total = weighted.sum()
    if total == 0:
        raise ConfigError("empty walk corpus")
    return weighted / total


def scatter_add(target: np.ndarray, idx: np.ndarray, values: np.ndarray) -> None:
    """target[idx] += values with duplicate indices, faster than np.add.at.

    Groups rows by sorted index and sums each group with one reduceat;
    deterministic (stable sort, fixed summation order).
    """
    if len(idx) == 0:
        return
    order = np.argsort(idx, kind="stable")
    sorted_idx = idx[order]
    sorted_vals = values[order]
    starts = np.concatenate([[0], np.flatnonzero(np.diff(sorted_idx)) + 1])
    target[sorted_idx[starts]] += np.add.reduceat(sorted_vals, starts, axis=0)


def _batch_grads(w_in, w_out, centers, contexts, negatives):
    """Loss and per-row gradients for one batch of (center, context, negatives).

    Negatives equal to their pair's true context are masked out, matching
    the usual negative-sampling practice.
    """
    u = w_in[centers]
    v_pos = w_out[contexts]
    v_neg = w_out[negatives]
    pos_x = np.einsum("bd,bd->b", u, v_pos)
    neg_x = np.einsum("bd,bmd->bm", u, v_neg)
    mask = (negatives != contexts[:, None]).astype(np.float64)
    loss = -(_log_sigmoid(pos_x).sum() + (mask * _log_sigmoid(-neg_x)).sum())
    g_pos = _sigmoid(pos_x) - 1.0  # d(-loss terms)/d(pos_x)
    g_neg = _sigmoid(neg_x) * mask
    grad_u = g_pos[:, None] * v_pos + np.einsum("bm,bmd->bd", g_neg, v_neg)
    grad_v_pos = g_pos[:, None] * u
    grad_v_neg = g_neg[:, :, None] * u[:, None, :]
    return float(loss), grad_u, grad_v_pos, grad_v_neg


def skipgram_loss_and_grad(w_in, w_out, centers, contexts, negatives):
    """Dense-gradient view of the batch objective, for gradient checks."""
    loss, grad_u, grad_v_pos, grad_v_neg = _batch_grads(w_in, w_out, centers, contexts, negatives)
    grad_in = np.zeros_like(w_in)
    grad_out = np.zeros_like(w_out)
    np.add.at(grad_in, centers, grad_u)
    np.add.at(grad_out, contexts, grad_v_pos)
    np.add.at(grad_out, negatives.reshape(-1), grad_v_neg.reshape(-1, w_out.shape[1]))
    return loss, grad_in, grad_out


def skipgram_train(
    walks: list[np.ndarray],
    vocab_size: int,
    dim: int = 64,
    window: int = 10,
    negatives: int = 5,
    epochs: int = 5,
    lr: float = 0.025,
    seed: int = 0,
    batch_size: int = 2048,
    loss_log: list | None = None,
    on_epoch=None,
) -> np.ndarray:
    """Negative-sampling SGD over window pairs; returns the input vectors.

    Learning rate decays linearly to lr/1e4 over all batches. Tokens that
    never occur as a pair keep their initial vectors. `on_epoch(w_in,
    w_out, mean_loss)` is called after each epoch when given.
    """
    rng = np.random.default_rng(seed)
    w_in = (rng.random((vocab_size, dim)) - 0.5) / dim
    w_out = np.zeros((vocab_size, dim))
    centers, contexts = make_pairs(walks, window)
    n_pairs = len(centers)
    if n_pairs == 0:
        return w_in
    noise = noise_distribution(walks, vocab_size)
    n_batches = math.ceil(n_pairs / batch_size)
    total_steps = epochs * n_batches
    step = 0
    for _ in range(epochs):
        order = rng.permutation(n_pairs)
        epoch_negs = rng.choice(vocab_size, size=(n_pairs, negatives), p=noise)
        epoch_loss = 0.0
        for b in range(n_batches):
            sel = order[b * batch_size:(b + 1) * batch_size]
            negs = epoch_negs[b * batch_size:(b + 1) * batch_size]
            loss, grad_u, grad_v_pos, grad_v_neg = _batch_grads(
                w_in, w_out, centers[sel], contexts[sel], negs
            )
            lr_t = lr * max(1e-4, 1.0 - step / total_steps)
            scatter_add(w_in, centers[sel], -lr_t * grad_u)
            scatter_add(w_out, contexts[sel], -lr_t * grad_v_pos)
            scatter_add(w_out, negs.reshape(-1), -lr_t * grad_v_neg.reshape(-1, dim))
            epoch_loss += loss
            step += 1
        if not np.isfinite(epoch_loss):
            raise TrainingError("skip-gram loss diverged; lower the learning rate")
        if loss_log is not None:
            loss_log.append(epoch_loss / n_pairs)
        if on_epoch is not None:
            on_epoch(w_in, w_out, epoch_loss / n_pairs)
    return w_in


def node2vec_embed(
    g: CommGraph | UndirectedGraph,
    dim: int = 64,
    walks_per_node: int = 10,
    walk_length: int = 80,
    window: int = 10,
    negatives: int = 5,
    epochs: int = 5,
    lr: float = 0.025,
    p: float = 1.0,
    q: float = 1.0,
    seed: int = 0,
    name: str = "node2vec",
    batch_size: int = 2048,
) -> EmbeddingSpace:
    """Biased walks on the symmetrized graph, then skip-gram training."""
    gu = symmetrize(g)
    corpus = sample_walks(gu, walks_per_node, walk_length, p, q, seed)
    vectors = skipgram_train(corpus.walks, gu.n, dim=dim, window=window,
                             negatives=negatives, epochs=epochs, lr=lr, seed=seed,
                             batch_size=batch_size)
    return EmbeddingSpace(name=name, account_ids=gu.ids, vectors=vectors,
                          metric="cosine", kind="network", seed=seed)


# ---------------------------------------------------------------------------
# Graph factorization

def factorization_objective(y, sources, targets, weights, lambda_reg):
    """Full objective sum (w_ij - <y_i, y_j>)^2 + (lambda/2) * ||y||^2 and its gradient."""
    preds = np.einsum("ed,ed->e", y[sources], y[targets])
    errs = weights - preds
    loss = float((errs ** 2).sum() + 0.5 * lambda_reg * (y * y).sum())
    grad = lambda_reg * y.copy()
    np.add.at(grad, sources, -2.0 * errs[:, None] * y[targets])
    np.add.at(grad, targets, -2.0 * errs[:, None] * y[sources])
    return loss, grad


def _collapsed_arrays(g: CommGraph):
    items = sorted(g.collapsed_edges().items())
    sources = np.array([k[0] for k, _ in items], dtype=np.int64)
    targets = np.array([k[1] for k, _ in items], dtype=np.int64)
    weights = np.array([w for _, w in items], dtype=np.float64)
    return sources, targets, weights


def graph_factorize(
    g: CommGraph,
    dim: int = 32,
    lambda_reg: float = 0.01,
    lr: float = 0.05,
    epochs: int = 200,
    seed: int = 0,
    init: np.ndarray | None = None,
    name: str = "gf",
    kind: str = "network",
    loss_log: list | None = None,
) -> EmbeddingSpace:
    """Per-edge SGD on the collapsed directed adjacency.

    Each epoch shuffles edge order, applies data-term updates, then one
    full regularizer step, so regularization acts even on empty graphs.
    """
    if dim > g.n:
        raise ConfigError(f"dim={dim} exceeds node count {g.n}")
    rng = np.random.default_rng(seed)
    if init is not None:
        if init.shape != (g.n, dim):
            raise ConfigError(f"init shape {init.shape} != ({g.n}, {dim})")
        y = np.array(init, dtype=np.float64, copy=True)
    else:
        y = rng.normal(0.0, 0.1, size=(g.n, dim))
    sources, targets, weights = _collapsed_arrays(g)
    # Overflow during an exploding run is caught by the loss check below.
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(epochs):
            for idx in rng.permutation(len(sources)):
                i, j, w = int(sources[idx]), int(targets[idx]), weights[idx]
                err = w - y[i] @ y[j]
                yi = y[i].copy()
                y[i] += lr * 2.0 * err * y[j]
                y[j] += lr * 2.0 * err * yi
            y *= 1.0 - lr * lambda_reg
            loss, _ = factorization_objective(y, sources, targets, weights, lambda_reg)
            if not np.isfinite(loss):
                raise TrainingError("factorization diverged; lower the learning rate")
            if loss_log is not None:
                loss_log.append(loss)
    return EmbeddingSpace(name=name, account_ids=g.ids, vectors=y,
                          metric="cosine", kind=kind, seed=seed)


# ---------------------------------------------------------------------------
# Role extraction and role-token embedding

def _stable_hash(obj) -> int:
    digest = hashlib.blake2b(repr(obj).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def wl_role_ids(gu: UndirectedGraph, wl_iters: int = ROLE_WL_ITERS, bins: int = ROLE_BINS) -> np.ndarray:
    """Weisfeiler-Lehman role ids seeded by log2-binned degree."""
    if wl_iters < 0:
        raise ConfigError("wl_iters must be >= 0")
    degrees = gu.degrees()
    labels = np.floor(np.log2(degrees + 1)).astype(np.int64)
    for _ in range(wl_iters):
        labels = np.array(
            [
                _stable_hash((int(labels[v]), tuple(sorted(int(labels[u]) for u in gu.neighbors[v])))) % bins
                for v in range(gu.n)
            ],
            dtype=np.int64,
        )
    return labels


def role2vec_embed(
    g: CommGraph | UndirectedGraph,
    dim: int = 128,
    wl_iters: int = ROLE_WL_ITERS,
    bins: int = ROLE_BINS,
    walks_per_node: int = 10,
    walk_length: int = 80,
    window: int = 10,
    negatives: int = 5,
    epochs: int = 5,
    lr: float = 0.025,
    p: float = 1.0,
    q: float = 1.0,
    seed: int = 0,
    name: str = "role2vec",
) -> EmbeddingSpace:
    """Walks with node ids replaced by role ids; each node gets its role's vector."""
    gu = symmetrize(g)
    roles = wl_role_ids(gu, wl_iters, bins)
    unique_roles, dense = np.unique(roles, return_inverse=True)
    corpus = sample_walks(gu, walks_per_node, walk_length, p, q, seed)
    role_walks = [dense[walk] for walk in corpus.walks]
    role_vectors = skipgram_train(role_walks, len(unique_roles), dim=dim, window=window,
                                  negatives=negatives, epochs=epochs, lr=lr, seed=seed)
    return EmbeddingSpace(name=name, account_ids=gu.ids, vectors=role_vectors[dense],
                          metric="cosine", kind="network", seed=seed)


# ---------------------------------------------------------------------------
# Trust propagation

@dataclass
class TrustVector:
    trust: np.ndarray
    iterations: int
    seeds: tuple[str, ...]
    history: list[np.ndarray]  # trust after each iteration, index 0 = init


def sybil_rank(
    g: CommGraph | UndirectedGraph,
    seeds: list[str],
    iters: int | None = None,
    name: str = "sybilrank",
) -> tuple[EmbeddingSpace, TrustVector]:
    """Degree-normalized trust propagation from the seed accounts.

    Trust starts at 1/|seeds| on each seed; each iteration sends
    T(u)/deg(u) along every incident edge (isolated nodes keep theirs).
    After ceil(log2 N) iterations by default, the score is T(v)/deg(v),
    returned as a one-dimensional ranked space (descending = most similar
    to the seed region).
    """
    if not seeds:
        raise QueryError("seed set is empty")
    gu = symmetrize(g)
    try:
        seed_idx = [gu.index_of(s) for s in seeds]
    except KeyError as exc:
        raise QueryError(f"seed account {exc.args[0]!r} is not in the graph") from exc
    n = gu.n
    if iters is None:
        iters = max(1, math.ceil(math.log2(n))) if n > 1 else 1
    degrees = gu.degrees().astype(np.float64)
    rows, cols = [], []
    for u, nbrs in enumerate(gu.neighbors):
        rows.extend([u] * len(nbrs))
        cols.extend(int(x) for x in nbrs)
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    trust = np.zeros(n, dtype=np.float64)
    trust[seed_idx] = 1.0 / len(seeds)
    history = [trust.copy()]
    isolated = degrees == 0
    for _ in range(iters):
        share = np.divide(trust, degrees, out=np.zeros_like(trust), where=degrees > 0)
        new = adj @ share
        new[isolated] += trust[isolated]
        trust = new
        history.append(trust.copy())
    scores = trust / np.maximum(degrees, 1.0)
    space = EmbeddingSpace(name=name, account_ids=gu.ids, vectors=scores[:, None],
                           metric="cosine", kind="ranked", seed=None)
    return space, TrustVector(trust=trust, iterations=iters, seeds=tuple(seeds), history=history)
