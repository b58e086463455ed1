"""On-disk dataset layout shared by the CLI and the HTTP service.

    <dataset>/
      accounts.jsonl          account records, node-index order
      graph.bmg               binary graph snapshot
      labels.csv              optional node labels
      spaces/<name>.bme       embedding files (+ .meta.json sidecars)
      spaces/<name>.sim.json  query-time similarity space definitions
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import ingest
from .content import SimilaritySpace, similarity_space
from .errors import DatasetError
from .evaluate import LabelSet
from .graph import CommGraph, load_snapshot
from .spaces import EmbeddingSpace, load_space, save_space
from .textpipe import (DEFAULT_MAX_DF_FRAC, DEFAULT_MAX_TERMS, DEFAULT_MIN_DF,
                       build_vocab, count_matrix)

SIM_MODES = {"jaccard": "binary", "cosine": "tfidf"}


def save_dataset(path: str | Path, accounts, graph: CommGraph, labels: dict[str, int] | None = None) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "spaces").mkdir(exist_ok=True)
    by_id = {a.account_id: a for a in accounts}
    ordered = [by_id[i] for i in graph.ids]
    ingest.save_accounts_jsonl(ordered, path / "accounts.jsonl")
    graph.save_snapshot(path / "graph.bmg")
    if labels is not None:
        lines = ["node_id,label"] + [f"{k},{v}" for k, v in sorted(labels.items())]
        (path / "labels.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class Dataset:
    name: str
    path: Path
    accounts: list[ingest.AccountRecord]
    graph: CommGraph
    labels: LabelSet | None

    def __post_init__(self):
        self.by_id = {a.account_id: a for a in self.accounts}
        self._spaces: dict[str, EmbeddingSpace | SimilaritySpace] = {}
        self._dtm_cache: dict[str, object] = {}

    def space_names(self) -> list[str]:
        names = set(self._spaces)
        spaces_dir = self.path / "spaces"
        if spaces_dir.is_dir():
            for f in spaces_dir.iterdir():
                if f.suffix == ".bme":
                    names.add(f.stem)
                elif f.name.endswith(".sim.json"):
                    names.add(f.name[: -len(".sim.json")])
        return sorted(names)

    def space(self, name: str) -> EmbeddingSpace | SimilaritySpace:
        if name in self._spaces:
            return self._spaces[name]
        bme = self.path / "spaces" / f"{name}.bme"
        sim = self.path / "spaces" / f"{name}.sim.json"
        if bme.exists():
            loaded = load_space(bme)
        elif sim.exists():
            loaded = self._build_sim_space(name, json.loads(sim.read_text(encoding="utf-8")))
        else:
            raise KeyError(name)
        self._spaces[name] = loaded
        return loaded

    def add_space(self, space: EmbeddingSpace | SimilaritySpace) -> None:
        self._spaces[space.name] = space

    def _build_sim_space(self, name: str, config: dict) -> SimilaritySpace:
        sim = config["sim"]
        mode = SIM_MODES[sim]
        key = json.dumps({**config, "mode": mode}, sort_keys=True)
        dtm = self._dtm_cache.get(key)
        if dtm is None:
            docs = [a.clean_text for a in self.accounts]
            vocab = build_vocab(
                docs,
                min_df=config.get("min_df", DEFAULT_MIN_DF),
                max_df_frac=config.get("max_df_frac", DEFAULT_MAX_DF_FRAC),
                max_terms=config.get("max_terms", DEFAULT_MAX_TERMS),
            )
            dtm = count_matrix(docs, vocab, mode)
            self._dtm_cache[key] = dtm
        ids = tuple(a.account_id for a in self.accounts)
        return similarity_space(dtm, sim, ids, name=name)


def save_similarity_space(path: str | Path, name: str, sim: str, **vocab_params) -> None:
    if sim not in SIM_MODES:
        raise ValueError(f"unknown similarity kind {sim!r}")
    target = Path(path) / "spaces" / f"{name}.sim.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(
        json.dumps({"sim": sim, **vocab_params}, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def save_embedding_space(path: str | Path, space: EmbeddingSpace, meta: dict | None = None) -> None:
    target = Path(path) / "spaces" / f"{space.name}.bme"
    target.parent.mkdir(parents=True, exist_ok=True)
    save_space(space, target, meta=meta)


def load_dataset(path: str | Path, name: str | None = None) -> Dataset:
    path = Path(path)
    accounts_file = path / "accounts.jsonl"
    graph_file = path / "graph.bmg"
    if not accounts_file.exists() or not graph_file.exists():
        raise DatasetError(f"{path} is not a dataset directory (need accounts.jsonl and graph.bmg)")
    accounts = ingest.load_accounts_jsonl(accounts_file)
    graph = load_snapshot(graph_file, ids=tuple(a.account_id for a in accounts))
    labels = None
    labels_file = path / "labels.csv"
    if labels_file.exists():
        labels = LabelSet(labels=ingest.load_label_csv(labels_file.read_text(encoding="utf-8")))
    return Dataset(name=name or path.name, path=path, accounts=accounts, graph=graph, labels=labels)
