"""Vocabulary and sparse document-term matrices (tf, tf-idf, binary).

IDF is the smoothed 1 + ln(N/df) so terms present in every document still
contribute. Default caps: min_df=2, max_df_frac=0.8, max_terms=50000.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError

DEFAULT_MIN_DF = 2
DEFAULT_MAX_DF_FRAC = 0.8
DEFAULT_MAX_TERMS = 50_000

MODES = ("tf", "tfidf", "binary")


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]  # term_id -> term, ids dense 0..V-1
    term_to_id: dict[str, int]
    df: np.ndarray  # document frequency per term id
    n_docs: int

    @property
    def size(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class DocTermMatrix:
    matrix: sp.csr_matrix  # N x V float64
    mode: str
    vocab: Vocabulary
    row_norms: np.ndarray  # cached L2 norms

    @property
    def n_docs(self) -> int:
        return self.matrix.shape[0]


def build_vocab(
    docs: list[list[str]] | list[tuple[str, ...]],
    min_df: int = DEFAULT_MIN_DF,
    max_df_frac: float = DEFAULT_MAX_DF_FRAC,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> Vocabulary:
    """Document-frequency filtered vocabulary over tokenized documents.

    Terms with df < min_df or df/N > max_df_frac are dropped; the top
    max_terms by df are kept, ties broken lexicographically.
    """
    if not docs:
        raise ConfigError("cannot build a vocabulary from an empty corpus")
    n_docs = len(docs)
    df_counter: Counter[str] = Counter()
    for doc in docs:
        df_counter.update(set(doc))
    eligible = [
        (term, df) for term, df in df_counter.items()
        if df >= min_df and df / n_docs <= max_df_frac
    ]
    # Highest df first; lexicographic among equals so truncation is stable.
    eligible.sort(key=lambda item: (-item[1], item[0]))
    kept = eligible[:max_terms]
    if not kept:
        raise ConfigError(
            f"vocabulary is empty after filtering (min_df={min_df}, max_df_frac={max_df_frac})"
        )
    terms = tuple(sorted(term for term, _ in kept))
    term_to_id = {t: i for i, t in enumerate(terms)}
    df = np.array([df_counter[t] for t in terms], dtype=np.int64)
    return Vocabulary(terms=terms, term_to_id=term_to_id, df=df, n_docs=n_docs)


def count_matrix(docs, vocab: Vocabulary, mode: str = "tf") -> DocTermMatrix:
    """Sparse N x V matrix in the requested mode.

    tf = raw counts; tfidf = tf * (1 + ln(N/df)); binary = presence.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown matrix mode {mode!r}")
    rows, cols, vals = [], [], []
    for i, doc in enumerate(docs):
        counts: Counter[int] = Counter()
        for token in doc:
            term_id = vocab.term_to_id.get(token)
            if term_id is not None:
                counts[term_id] += 1
        for term_id, c in sorted(counts.items()):
            rows.append(i)
            cols.append(term_id)
            vals.append(1.0 if mode == "binary" else float(c))
    matrix = sp.csr_matrix(
        (vals, (rows, cols)), shape=(len(docs), vocab.size), dtype=np.float64
    )
    if mode == "tfidf":
        idf = 1.0 + np.log(vocab.n_docs / vocab.df.astype(np.float64))
        matrix = matrix.multiply(idf[np.newaxis, :]).tocsr()
    row_norms = np.sqrt(np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel())
    return DocTermMatrix(matrix=matrix, mode=mode, vocab=vocab, row_norms=row_norms)


def dump_tsv(dtm: DocTermMatrix, path) -> None:
    """Optional dump: one `doc_id term_id value` line per nonzero."""
    coo = dtm.matrix.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, v in sorted(zip(coo.row, coo.col, coo.data), key=lambda t: (t[0], t[1])):
            fh.write(f"{i}\t{j}\t{v:.9g}\n")
