"""Exact nearest-neighbor retrieval over embedding, similarity, and ranked
spaces, plus breadth-first recursive expansion from seed accounts.

Search is brute force by design: every candidate is scored and fully
sorted, so tie order is reproducible (ties break by ascending account id)
and results match an O(N^2) oracle exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .content import SimilaritySpace
from .errors import QueryError
from .spaces import EmbeddingSpace

AGGREGATIONS = ("mean", "min_dist")


@dataclass(frozen=True)
class Hit:
    account_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class QueryResult:
    seeds: tuple[str, ...]
    space: str
    k: int
    hits: tuple[Hit, ...]
    score_kind: str  # distance | similarity | trust

    def hit_ids(self) -> list[str]:
        return [h.account_id for h in self.hits]

    def to_json(self) -> dict:
        return {
            "seeds": list(self.seeds),
            "space": self.space,
            "k": self.k,
            "score_kind": self.score_kind,
            "hits": [
                {"id": h.account_id, "score": h.score, "rank": h.rank} for h in self.hits
            ],
        }


def _seed_indices(space, seeds) -> list[int]:
    indices = []
    for s in seeds:
        try:
            indices.append(space.index_of(s))
        except KeyError:
            raise QueryError(f"seed account {s!r} is not in space {space.name!r}") from None
    return indices


def _metric_distances(vectors: np.ndarray, query: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        diff = vectors - query[np.newaxis, :]
        return np.sqrt(np.einsum("nd,nd->n", diff, diff))
    norms = np.linalg.norm(vectors, axis=1)
    q_norm = np.linalg.norm(query)
    sims = np.zeros(len(vectors), dtype=np.float64)
    if q_norm > 0:
        nz = norms > 0
        sims[nz] = (vectors[nz] @ query) / (norms[nz] * q_norm)
    return 1.0 - sims


def query(
    space: EmbeddingSpace | SimilaritySpace,
    seeds: list[str],
    k: int,
    aggregation: str = "mean",
) -> QueryResult:
    """Top-k neighbors of a seed set, seeds excluded.

    Embedding spaces rank ascending by metric distance to the seed
    centroid (mean) or to the nearest seed (min_dist); similarity spaces
    rank descending by the max pairwise similarity over seeds; ranked
    spaces return their stored descending order. Ties break by ascending
    account id and |hits| = min(k, N - |seeds|).
    """
    if k < 1:
        raise QueryError("k must be >= 1")
    if aggregation not in AGGREGATIONS:
        raise QueryError(f"unknown aggregation {aggregation!r}")
    if not seeds:
        raise QueryError("seed set is empty")
    seeds = list(dict.fromkeys(seeds))  # dedup, keep caller order for reporting
    seed_idx = _seed_indices(space, seeds)
    n = space.n
    ids = space.account_ids

    if isinstance(space, SimilaritySpace):
        sims = np.max([space.similarities_to(i) for i in seed_idx], axis=0)
        score_kind = "similarity"
        sort_scores = -sims
        scores = sims
    elif space.kind == "ranked":
        scores = space.vectors[:, 0]
        score_kind = "trust"
        sort_scores = -scores
    else:
        vectors = space.vectors
        # Sum in account-id order so seed order cannot change the centroid.
        ordered = sorted(seed_idx)
        if aggregation == "mean":
            centroid = vectors[ordered].mean(axis=0)
            dists = _metric_distances(vectors, centroid, space.metric)
        else:
            per_seed = np.stack(
                [_metric_distances(vectors, vectors[i], space.metric) for i in ordered]
            )
            dists = per_seed.min(axis=0)
        score_kind = "distance"
        sort_scores = dists
        scores = dists

    seed_set = set(seed_idx)
    candidates = [i for i in range(n) if i not in seed_set]
    candidates.sort(key=lambda i: (sort_scores[i], ids[i]))
    top = candidates[: min(k, len(candidates))]
    hits = tuple(
        Hit(account_id=ids[i], score=float(scores[i]), rank=r + 1) for r, i in enumerate(top)
    )
    return QueryResult(seeds=tuple(seeds), space=space.name, k=k, hits=hits, score_kind=score_kind)


@dataclass(frozen=True)
class Provenance:
    hop: int
    parent: str  # the seed whose query surfaced this account


@dataclass
class ExpandResult:
    initial_seeds: tuple[str, ...]
    found: dict[str, Provenance]  # insertion-ordered, dedup across hops
    hops_run: int

    def accounts(self) -> list[str]:
        return list(self.found)


def recursive_expand(
    space,
    seeds: list[str],
    k: int,
    hops: int,
    accept=None,
    aggregation: str = "mean",
) -> ExpandResult:
    """Breadth-first expansion: every accepted account from hop h-1 seeds
    its own k-NN query at hop h.

    `accept` is a predicate on account id (None or "all" accepts every
    hit). Accounts are deduplicated across hops and keep the provenance
    of their first discovery. Expansion stops early once no new hit is
    accepted.
    """
    if hops < 1:
        raise QueryError("hops must be >= 1")
    if accept is None or accept == "all":
        accept = lambda _account: True
    found: dict[str, Provenance] = {}
    frontier = list(dict.fromkeys(seeds))
    initial = set(frontier)
    hops_run = 0
    for hop in range(1, hops + 1):
        if not frontier:
            break
        hops_run = hop
        accepted: list[str] = []
        for seed in frontier:
            result = query(space, [seed], k, aggregation=aggregation)
            for hit in result.hits:
                account = hit.account_id
                if account in initial:
                    continue
                if account not in found:
                    found[account] = Provenance(hop=hop, parent=seed)
                    if accept(account):
                        accepted.append(account)
        frontier = accepted
    return ExpandResult(initial_seeds=tuple(dict.fromkeys(seeds)), found=found, hops_run=hops_run)
