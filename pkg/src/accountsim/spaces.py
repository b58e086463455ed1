"""Embedding spaces: per-account vector matrices plus metric/provenance metadata.

File format ("BME1"): one header line `BME1 <name> <N> <D> <metric>`, then
N lines `account_id v1 ... vD` with values printed to 9 significant digits.
Kind/seed/model parameters travel in an optional sidecar `<file>.meta.json`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

METRICS = ("cosine", "euclidean")
KINDS = ("content", "network", "fused", "ranked")


@dataclass
class EmbeddingSpace:
    name: str
    account_ids: tuple[str, ...]
    vectors: np.ndarray  # N x D float64
    metric: str = "cosine"
    kind: str = "content"
    seed: int | None = None

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be a 2-D matrix")
        if " " in self.name or not self.name:
            raise ValueError("space name must be nonempty without spaces")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.kind == "ranked" and self.dim != 1:
            raise ValueError("ranked spaces are one-dimensional score columns")
        if len(self.account_ids) != self.vectors.shape[0]:
            raise ValueError("account_ids and vectors disagree on N")
        if not np.isfinite(self.vectors).all():
            raise ValueError(f"space {self.name!r} contains non-finite entries")
        self.account_ids = tuple(self.account_ids)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def index_of(self, account_id: str) -> int:
        try:
            return self._id_index[account_id]
        except AttributeError:
            self._id_index = {a: i for i, a in enumerate(self.account_ids)}
            return self._id_index[account_id]


def format_value(v: float) -> str:
    return f"{v:.9g}"


def save_space(space: EmbeddingSpace, path: str | Path, meta: dict | None = None) -> None:
    path = Path(path)
    lines = [f"BME1 {space.name} {space.n} {space.dim} {space.metric}"]
    for account_id, row in zip(space.account_ids, space.vectors):
        lines.append(account_id + " " + " ".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    sidecar = {"kind": space.kind, "seed": space.seed}
    if meta:
        sidecar.update(meta)
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    meta_path.write_text(
        json.dumps(sidecar, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_space(path: str | Path) -> EmbeddingSpace:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 5 or header[0] != "BME1":
            raise ValueError(f"{path}: not a BME1 embedding file")
        _, name, n_str, d_str, metric = header
        n, d = int(n_str), int(d_str)
        ids: list[str] = []
        vectors = np.empty((n, d), dtype=np.float64)
        for i in range(n):
            parts = fh.readline().split()
            if len(parts) != d + 1:
                raise ValueError(f"{path}: row {i} has {len(parts) - 1} values, expected {d}")
            ids.append(parts[0])
            vectors[i] = [float(p) for p in parts[1:]]
    kind, seed = "content", None
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        kind = meta.get("kind", kind)
        seed = meta.get("seed", seed)
    return EmbeddingSpace(name=name, account_ids=tuple(ids), vectors=vectors, metric=metric, kind=kind, seed=seed)
