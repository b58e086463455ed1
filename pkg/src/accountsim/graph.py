"""Immutable indexed directed communication graph with typed, weighted edges.

Node indices are dense 0..N-1, assigned by sorting account ids, so equal
inputs always produce the same graph. A binary snapshot format ("BMG1")
serializes the structure: magic, little-endian u64 N, u64 E, then one
(u64 source, u64 target, u64 packed) triple per edge where
packed = type_code * 2**32 + weight.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SizeError
from .ingest import EDGE_TYPES, AccountRecord, EdgeRecord

DENSE_CAP = 10_000
_MAGIC = b"BMG1"
TYPE_CODES = {t: i for i, t in enumerate(EDGE_TYPES)}


def _account_id(item) -> str:
    return item.account_id if isinstance(item, AccountRecord) else str(item)


@dataclass(frozen=True)
class CommGraph:
    """Directed multigraph over dense node indices; immutable once built."""

    ids: tuple[str, ...]
    sources: np.ndarray  # E int64 node indices
    targets: np.ndarray  # E int64
    type_codes: np.ndarray  # E int64 into EDGE_TYPES
    weights: np.ndarray  # E int64, >= 1

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def edge_count(self) -> int:
        return len(self.sources)

    def index_of(self, account_id: str) -> int:
        return self._index()[account_id]

    def _index(self) -> dict[str, int]:
        cached = getattr(self, "_id_index", None)
        if cached is None:
            cached = {a: i for i, a in enumerate(self.ids)}
            object.__setattr__(self, "_id_index", cached)
        return cached

    def out_degrees(self) -> np.ndarray:
        """Typed-edge out-degree per node (parallel typed edges count once each)."""
        return np.bincount(self.sources, minlength=self.n).astype(np.int64)

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.targets, minlength=self.n).astype(np.int64)

    def out_adj(self) -> tuple[tuple[tuple[int, str, int], ...], ...]:
        """Per-node (neighbor, edge_type, weight) lists, sorted for determinism."""
        return self._adj("out")

    def in_adj(self) -> tuple[tuple[tuple[int, str, int], ...], ...]:
        return self._adj("in")

    def _adj(self, direction: str):
        attr = f"_{direction}_adj"
        cached = getattr(self, attr, None)
        if cached is None:
            lists: list[list[tuple[int, str, int]]] = [[] for _ in range(self.n)]
            anchors = self.sources if direction == "out" else self.targets
            others = self.targets if direction == "out" else self.sources
            for a, b, tc, w in zip(anchors, others, self.type_codes, self.weights):
                lists[a].append((int(b), EDGE_TYPES[tc], int(w)))
            cached = tuple(tuple(sorted(entries)) for entries in lists)
            object.__setattr__(self, attr, cached)
        return cached

    def collapsed_edges(self) -> dict[tuple[int, int], int]:
        """Parallel typed edges merged with summed weights."""
        merged: dict[tuple[int, int], int] = {}
        for s, t, w in zip(self.sources, self.targets, self.weights):
            key = (int(s), int(t))
            merged[key] = merged.get(key, 0) + int(w)
        return merged

    def dense_adjacency(self, cap: int = DENSE_CAP) -> np.ndarray:
        """N x N matrix of collapsed weights; refuses graphs over `cap` nodes."""
        if self.n > cap:
            raise SizeError(f"graph has {self.n} nodes, dense cap is {cap}")
        a = np.zeros((self.n, self.n), dtype=np.float64)
        np.add.at(a, (self.sources, self.targets), self.weights.astype(np.float64))
        return a

    def save_snapshot(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<QQ", self.n, self.edge_count))
            for s, t, tc, w in zip(self.sources, self.targets, self.type_codes, self.weights):
                fh.write(struct.pack("<QQQ", s, t, (int(tc) << 32) | int(w)))

    def snapshot_bytes(self) -> bytes:
        parts = [_MAGIC, struct.pack("<QQ", self.n, self.edge_count)]
        for s, t, tc, w in zip(self.sources, self.targets, self.type_codes, self.weights):
            parts.append(struct.pack("<QQQ", s, t, (int(tc) << 32) | int(w)))
        return b"".join(parts)


def from_edges(accounts, edges: list[EdgeRecord]) -> CommGraph:
    """Build a graph from account records (or bare ids) and typed edges.

    Node order is account_id-sorted; edges are sorted by
    (source index, target index, type) and deduplicated by summing weights.
    """
    ids = tuple(sorted(_account_id(a) for a in accounts))
    index = {a: i for i, a in enumerate(ids)}
    merged: dict[tuple[int, int, int], int] = {}
    for e in edges:
        try:
            s, t = index[e.source], index[e.target]
        except KeyError as exc:
            raise ValueError(f"edge endpoint {exc.args[0]!r} is not a known account") from exc
        if s == t:
            raise ValueError(f"self-loop on {e.source!r}")
        key = (s, t, TYPE_CODES[e.edge_type])
        merged[key] = merged.get(key, 0) + e.weight
    triples = sorted(merged.items())
    sources = np.array([k[0] for k, _ in triples], dtype=np.int64)
    targets = np.array([k[1] for k, _ in triples], dtype=np.int64)
    type_codes = np.array([k[2] for k, _ in triples], dtype=np.int64)
    weights = np.array([w for _, w in triples], dtype=np.int64)
    return CommGraph(ids=ids, sources=sources, targets=targets, type_codes=type_codes, weights=weights)


def load_snapshot(path: str | Path, ids: tuple[str, ...] | None = None) -> CommGraph:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a BMG1 snapshot")
    n, e = struct.unpack_from("<QQ", data, 4)
    sources = np.empty(e, dtype=np.int64)
    targets = np.empty(e, dtype=np.int64)
    type_codes = np.empty(e, dtype=np.int64)
    weights = np.empty(e, dtype=np.int64)
    offset = 20
    for i in range(e):
        s, t, packed = struct.unpack_from("<QQQ", data, offset)
        offset += 24
        sources[i], targets[i] = s, t
        type_codes[i], weights[i] = packed >> 32, packed & 0xFFFFFFFF
    if ids is None:
        ids = tuple(str(i) for i in range(n))
    if len(ids) != n:
        raise ValueError(f"snapshot has {n} nodes but {len(ids)} ids supplied")
    return CommGraph(ids=tuple(ids), sources=sources, targets=targets,
                     type_codes=type_codes, weights=weights)


@dataclass(frozen=True)
class UndirectedGraph:
    """Symmetrized view: weight(u,v) = w(u->v) + w(v->u) over collapsed edges."""

    ids: tuple[str, ...]
    neighbors: tuple[np.ndarray, ...]  # per node, sorted distinct neighbor indices
    edge_weights: tuple[np.ndarray, ...]  # aligned with neighbors

    @property
    def n(self) -> int:
        return len(self.ids)

    def index_of(self, account_id: str) -> int:
        cached = getattr(self, "_id_index", None)
        if cached is None:
            cached = {a: i for i, a in enumerate(self.ids)}
            object.__setattr__(self, "_id_index", cached)
        return cached[account_id]

    def degree(self, node: int) -> int:
        return len(self.neighbors[node])

    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=np.int64)

    def neighbor_set(self, node: int) -> frozenset:
        cached = getattr(self, "_nbr_sets", None)
        if cached is None:
            cached = tuple(frozenset(int(x) for x in nb) for nb in self.neighbors)
            object.__setattr__(self, "_nbr_sets", cached)
        return cached[node]

    def dense_adjacency(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self.n > cap:
            raise SizeError(f"graph has {self.n} nodes, dense cap is {cap}")
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for u, (nbrs, ws) in enumerate(zip(self.neighbors, self.edge_weights)):
            a[u, nbrs] = ws
        return a


def symmetrize(g: CommGraph | UndirectedGraph) -> UndirectedGraph:
    """Undirected view of a graph; idempotent on already-symmetrized input."""
    if isinstance(g, UndirectedGraph):
        return g
    merged: dict[tuple[int, int], float] = {}
    for (s, t), w in g.collapsed_edges().items():
        merged[(s, t)] = merged.get((s, t), 0.0) + w
        merged[(t, s)] = merged.get((t, s), 0.0) + w
    per_node: list[dict[int, float]] = [{} for _ in range(g.n)]
    for (s, t), w in merged.items():
        per_node[s][t] = w
    neighbors = []
    weights = []
    for entry in per_node:
        nbrs = np.array(sorted(entry), dtype=np.int64)
        neighbors.append(nbrs)
        weights.append(np.array([entry[i] for i in nbrs], dtype=np.float64))
    return UndirectedGraph(ids=g.ids, neighbors=tuple(neighbors), edge_weights=tuple(weights))
