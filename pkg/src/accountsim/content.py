"""Content-side models: Jaccard/cosine similarity, topic mixtures, latent
semantic vectors.

The topic model is fit by collapsed Gibbs sampling over a term-frequency
matrix; document vectors are the smoothed topic proportions
(n_dk + alpha) / (len_d + K*alpha). The latent-semantic space is the
row-side factor U_D * Sigma_D of a truncated SVD of the tf-idf matrix.

Jaccard and cosine retrieval need no fitted vectors: a SimilaritySpace
wraps the document-term matrix and scores pairs at query time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .linalg import truncated_svd
from .spaces import EmbeddingSpace
from .textpipe import DocTermMatrix

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a normal dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

DEFAULT_TOPICS = 200
DEFAULT_BETA = 0.01
DEFAULT_ITERS = 500
DEFAULT_LSA_DIM = 200


def jaccard_similarity(d1, d2) -> float:
    """|intersection| / |union| of two token sets; both empty -> 0."""
    s1, s2 = set(d1), set(d2)
    union = len(s1 | s2)
    if union == 0:
        return 0.0
    return len(s1 & s2) / union


def cosine_similarity(v1, v2) -> float:
    """Cosine of two vectors; any zero vector -> 0."""
    v1 = np.asarray(v1, dtype=np.float64).ravel()
    v2 = np.asarray(v2, dtype=np.float64).ravel()
    n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
    if n1 == 0.0 or n2 == 0.0:
        return 0.0
    return float(v1 @ v2 / (n1 * n2))


@dataclass
class SimilaritySpace:
    """Query-time pairwise similarity over document-term rows (no vectors)."""

    name: str
    account_ids: tuple[str, ...]
    dtm: DocTermMatrix
    sim: str  # "jaccard" (binary rows) or "cosine" (tfidf rows)

    def __post_init__(self):
        if self.sim == "jaccard" and self.dtm.mode != "binary":
            raise ConfigError("jaccard similarity requires a binary matrix")
        if self.sim == "cosine" and self.dtm.mode != "tfidf":
            raise ConfigError("cosine similarity requires a tfidf matrix")
        if len(self.account_ids) != self.dtm.n_docs:
            raise ConfigError("account ids and matrix rows disagree")
        self.account_ids = tuple(self.account_ids)

    @property
    def n(self) -> int:
        return self.dtm.n_docs

    def index_of(self, account_id: str) -> int:
        cached = getattr(self, "_id_index", None)
        if cached is None:
            cached = {a: i for i, a in enumerate(self.account_ids)}
            self._id_index = cached
        return cached[account_id]

    def similarities_to(self, row_index: int) -> np.ndarray:
        """Similarity of every document to document `row_index`."""
        m = self.dtm.matrix
        row = m.getrow(row_index)
        dots = np.asarray(m @ row.T.toarray()).ravel()
        if self.sim == "cosine":
            norms = self.dtm.row_norms
            denom = norms * norms[row_index]
            out = np.zeros(self.n, dtype=np.float64)
            nz = denom > 0
            out[nz] = dots[nz] / denom[nz]
            return out
        # Binary rows: |A & B| = dot, |A | B| = |A| + |B| - dot.
        sizes = np.asarray(m.sum(axis=1)).ravel()
        union = sizes + sizes[row_index] - dots
        out = np.zeros(self.n, dtype=np.float64)
        nz = union > 0
        out[nz] = dots[nz] / union[nz]
        return out


@dataclass
class LdaModel:
    n_topics: int
    alpha: float
    beta: float
    topic_word: np.ndarray  # K x V counts
    doc_topic: np.ndarray  # N x K counts
    assignments: np.ndarray  # z per token instance
    doc_lengths: np.ndarray
    iters: int
    seed: int

    def theta(self) -> np.ndarray:
        """Smoothed topic proportions per document; rows sum to 1."""
        k = self.n_topics
        denom = self.doc_lengths[:, None] + k * self.alpha
        return (self.doc_topic + self.alpha) / denom

    def topic_word_dist(self) -> np.ndarray:
        v = self.topic_word.shape[1]
        denom = self.topic_word.sum(axis=1, keepdims=True) + v * self.beta
        return (self.topic_word + self.beta) / denom


@njit(cache=True)
def _gibbs_sweep(z, doc_ids, word_ids, n_dk, n_kw, n_k, alpha, beta, uniforms, probs):
    n_tokens = z.shape[0]
    k = n_dk.shape[1]
    v = n_kw.shape[1]
    vbeta = v * beta
    for t in range(n_tokens):
        d = doc_ids[t]
        w = word_ids[t]
        old = z[t]
        n_dk[d, old] -= 1
        n_kw[old, w] -= 1
        n_k[old] -= 1
        total = 0.0
        for topic in range(k):
            p = (n_dk[d, topic] + alpha) * (n_kw[topic, w] + beta) / (n_k[topic] + vbeta)
            total += p
            probs[topic] = total
        u = uniforms[t] * total
        new = k - 1
        for topic in range(k):
            if u < probs[topic]:
                new = topic
                break
        z[t] = new
        n_dk[d, new] += 1
        n_kw[new, w] += 1
        n_k[new] += 1


def _expand_tokens(dtm: DocTermMatrix) -> tuple[np.ndarray, np.ndarray]:
    coo = dtm.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    rows = coo.row[order]
    cols = coo.col[order]
    counts = coo.data[order].astype(np.int64)
    doc_ids = np.repeat(rows.astype(np.int64), counts)
    word_ids = np.repeat(cols.astype(np.int64), counts)
    return doc_ids, word_ids


def lda_fit(
    dtm: DocTermMatrix,
    n_topics: int = DEFAULT_TOPICS,
    alpha: float | None = None,
    beta: float = DEFAULT_BETA,
    iters: int = DEFAULT_ITERS,
    seed: int = 0,
    account_ids: tuple[str, ...] | None = None,
    name: str = "lda",
) -> tuple[LdaModel, EmbeddingSpace]:
    """Collapsed Gibbs sampling; deterministic for a fixed seed.

    alpha defaults to 50/K. Token counts are asserted conserved after
    every sweep. Requires a term-frequency matrix and 1 <= K <= V.
    """
    if dtm.mode != "tf":
        raise ConfigError(f"topic model requires mode 'tf', got {dtm.mode!r}")
    v = dtm.vocab.size
    if n_topics > v:
        raise ConfigError(f"n_topics={n_topics} exceeds vocabulary size {v}")
    if n_topics < 1:
        raise ConfigError("n_topics must be >= 1")
    if alpha is None:
        alpha = 50.0 / n_topics
    n_docs = dtm.n_docs
    doc_ids, word_ids = _expand_tokens(dtm)
    n_tokens = len(doc_ids)

    rng = np.random.default_rng(seed)
    z = rng.integers(0, n_topics, size=n_tokens).astype(np.int64)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_kw = np.zeros((n_topics, v), dtype=np.int64)
    np.add.at(n_dk, (doc_ids, z), 1)
    np.add.at(n_kw, (z, word_ids), 1)
    n_k = n_kw.sum(axis=1)
    probs = np.empty(n_topics, dtype=np.float64)

    for _ in range(iters):
        uniforms = rng.random(n_tokens)
        if n_tokens:
            _gibbs_sweep(z, doc_ids, word_ids, n_dk, n_kw, n_k, alpha, beta, uniforms, probs)
        assert n_dk.sum() == n_tokens and n_kw.sum() == n_tokens, "token count drifted"

    doc_lengths = np.asarray(dtm.matrix.sum(axis=1)).ravel()
    model = LdaModel(
        n_topics=n_topics, alpha=alpha, beta=beta,
        topic_word=n_kw, doc_topic=n_dk, assignments=z,
        doc_lengths=doc_lengths, iters=iters, seed=seed,
    )
    ids = account_ids if account_ids is not None else tuple(str(i) for i in range(n_docs))
    space = EmbeddingSpace(
        name=name, account_ids=ids, vectors=model.theta(),
        metric="cosine", kind="content", seed=seed,
    )
    return model, space


def hellinger_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Hellinger distance between two probability vectors."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return float(np.sqrt(0.5 * np.sum((np.sqrt(p) - np.sqrt(q)) ** 2)))


def lsa_fit(
    dtm: DocTermMatrix,
    dim: int = DEFAULT_LSA_DIM,
    account_ids: tuple[str, ...] | None = None,
    name: str = "lsa",
    seed: int = 0,
) -> EmbeddingSpace:
    """Rows are U_D * Sigma_D of the truncated SVD of the tf-idf matrix."""
    if dtm.mode != "tfidf":
        raise ConfigError(f"latent semantic analysis requires mode 'tfidf', got {dtm.mode!r}")
    n, v = dtm.matrix.shape
    if dim > min(n, v) or dim < 1:
        raise ConfigError(f"dim={dim} not in [1, {min(n, v)}]")
    u, s, _ = truncated_svd(dtm.matrix, dim, seed=seed)
    vectors = u * s[np.newaxis, :]
    ids = account_ids if account_ids is not None else tuple(str(i) for i in range(n))
    return EmbeddingSpace(name=name, account_ids=ids, vectors=vectors,
                          metric="cosine", kind="content", seed=seed)


def similarity_space(
    dtm: DocTermMatrix,
    sim: str,
    account_ids: tuple[str, ...],
    name: str | None = None,
) -> SimilaritySpace:
    return SimilaritySpace(name=name or sim, account_ids=account_ids, dtm=dtm, sim=sim)
