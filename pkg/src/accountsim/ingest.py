"""Parse raw posts into account records and a typed directed edge list.

Supports tweet-style JSONL (subset schema) and a generic CSV post corpus,
plus the prebuilt table formats: edge CSV `source,target,type,weight`,
node-text CSV `node_id,text`, and label CSV `node_id,label`.

Cleaning removes URLs, punctuation, the reserved words {rt, via}, and
Extended_Pictographic codepoints. Tag tokens (leading '#'/'@') keep their
marker and word characters unless `strip_tags` is set, in which case they
are dropped entirely. Tokens are lowercased; non-Latin scripts survive.
"""
from __future__ import annotations

import csv
import io
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass

import regex

from .errors import DatasetError, FormatError

EDGE_TYPES = ("mention", "reply", "retweet")

URL_RE = regex.compile(r"(?:https?://\S+|\bt\.co/\S+|\bwww\.\S+)", regex.IGNORECASE)
PICTOGRAPHIC_RE = regex.compile(r"\p{Extended_Pictographic}")
RESERVED_WORDS = frozenset({"rt", "via"})

CSV_POST_FIELDS = ("post_id", "author_id", "author_screen_name", "text")


@dataclass(frozen=True)
class RawPost:
    post_id: str
    author_id: str
    author_screen_name: str
    text: str
    retweeted_author_id: str | None = None
    replied_author_id: str | None = None
    mentioned_author_ids: tuple[str, ...] = ()
    timestamp: str | None = None


@dataclass(frozen=True)
class AccountRecord:
    account_id: str
    screen_name: str
    raw_text: str
    clean_text: tuple[str, ...]
    n_posts: int
    retweet_fraction: float


@dataclass(frozen=True)
class EdgeRecord:
    source: str
    target: str
    edge_type: str
    weight: int


def _is_removable_char(c: str) -> bool:
    # '_' stays: it is word-internal in handles and hashtags.
    if c == "_":
        return False
    if unicodedata.category(c).startswith("P"):
        return True
    return PICTOGRAPHIC_RE.match(c) is not None


_char_removable: dict[str, bool] = {}


def _strip_chars(token: str) -> str:
    out = []
    for c in token:
        removable = _char_removable.get(c)
        if removable is None:
            removable = _is_removable_char(c)
            _char_removable[c] = removable
        if not removable:
            out.append(c)
    return "".join(out)


def clean_text(raw: str, strip_tags: bool = False) -> list[str]:
    """Clean and tokenize one blob of post text."""
    tokens: list[str] = []
    for tok in URL_RE.sub(" ", raw).split():
        tok = tok.lower()
        if tok[0] in "#@":
            if strip_tags:
                continue
            body = _strip_chars(tok[1:])
            if body:
                tokens.append(tok[0] + body)
            continue
        tok = _strip_chars(tok)
        if not tok or tok in RESERVED_WORDS:
            continue
        tokens.append(tok)
    return tokens


def _dedup(ids) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for i in ids:
        if i and i not in seen:
            seen[i] = None
    return tuple(seen)


def _post_from_json(obj: dict) -> RawPost:
    user = obj["user"]
    post_id = str(obj["id"])
    author_id = str(user["id_str"])
    text = obj["text"]
    if not post_id or not author_id or not isinstance(text, str):
        raise ValueError("missing required post fields")
    retweeted = obj.get("retweeted_status") or {}
    retweeted_author = retweeted.get("user", {}).get("id_str") if retweeted else None
    mentions = [m.get("id_str", "") for m in obj.get("entities", {}).get("user_mentions", [])]
    return RawPost(
        post_id=post_id,
        author_id=author_id,
        author_screen_name=str(user.get("screen_name", "")),
        text=text,
        retweeted_author_id=retweeted_author or None,
        replied_author_id=obj.get("in_reply_to_user_id_str") or None,
        mentioned_author_ids=_dedup(mentions),
        timestamp=obj.get("timestamp") or obj.get("created_at"),
    )


def _post_from_csv_row(row: dict) -> RawPost:
    if any(not (row.get(k) or "").strip() for k in ("post_id", "author_id")) or row.get("text") is None:
        raise ValueError("missing required post fields")
    mentions = (row.get("mentioned_author_ids") or "").split(";")
    return RawPost(
        post_id=row["post_id"].strip(),
        author_id=row["author_id"].strip(),
        author_screen_name=(row.get("author_screen_name") or "").strip(),
        text=row["text"],
        retweeted_author_id=(row.get("retweeted_author_id") or "").strip() or None,
        replied_author_id=(row.get("replied_author_id") or "").strip() or None,
        mentioned_author_ids=_dedup(m.strip() for m in mentions),
        timestamp=(row.get("timestamp") or "").strip() or None,
    )


def parse_posts(stream, fmt: str = "jsonl") -> tuple[list[RawPost], int]:
    """Parse a UTF-8 byte or text stream of posts.

    Malformed lines are skipped and counted; more than 50% malformed is a
    FormatError. Returns (posts, n_skipped) with input order preserved.
    """
    if isinstance(stream, (str, bytes)):
        stream = io.BytesIO(stream.encode("utf-8") if isinstance(stream, str) else stream)
    try:
        raw = stream.read()
    except OSError as exc:
        raise FormatError(f"unreadable input stream: {exc}") from exc
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"input is not UTF-8: {exc}") from exc

    posts: list[RawPost] = []
    skipped = 0
    if fmt == "jsonl":
        lines = [ln for ln in raw.splitlines() if ln.strip()]
        for line in lines:
            try:
                posts.append(_post_from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                skipped += 1
        total = len(lines)
    elif fmt == "csv":
        reader = csv.DictReader(io.StringIO(raw))
        if reader.fieldnames is None:
            return [], 0
        missing = [k for k in CSV_POST_FIELDS if k not in reader.fieldnames]
        if missing:
            raise FormatError(f"post CSV missing columns: {', '.join(missing)}")
        total = 0
        for row in reader:
            total += 1
            try:
                posts.append(_post_from_csv_row(row))
            except (KeyError, ValueError):
                skipped += 1
    else:
        raise ValueError(f"unknown post format {fmt!r}")

    if total and skipped * 2 > total:
        raise FormatError(f"{skipped}/{total} lines malformed; input is probably not {fmt}")
    return posts, skipped


def build_edges(posts: list[RawPost]) -> list[EdgeRecord]:
    """Directed typed edges with weight = interaction multiplicity.

    Retweets and replies point from the acting author to the original
    author; mentions point from the author to each mentioned id.
    Self-loops are dropped. Output sorted by (source, target, type).
    """
    counts: Counter[tuple[str, str, str]] = Counter()
    for post in posts:
        a = post.author_id
        if post.retweeted_author_id and post.retweeted_author_id != a:
            counts[(a, post.retweeted_author_id, "retweet")] += 1
        if post.replied_author_id and post.replied_author_id != a:
            counts[(a, post.replied_author_id, "reply")] += 1
        for m in post.mentioned_author_ids:
            if m != a:
                counts[(a, m, "mention")] += 1
    return [
        EdgeRecord(source=s, target=t, edge_type=ty, weight=w)
        for (s, t, ty), w in sorted(counts.items())
    ]


def _build_account(account_id: str, posts: list[RawPost], strip_tags: bool) -> AccountRecord:
    raw_text = "\n".join(p.text for p in posts)
    screen_name = ""
    for p in posts:
        if p.author_screen_name:
            screen_name = p.author_screen_name
    n_retweets = sum(1 for p in posts if p.retweeted_author_id)
    return AccountRecord(
        account_id=account_id,
        screen_name=screen_name,
        raw_text=raw_text,
        clean_text=tuple(clean_text(raw_text, strip_tags=strip_tags)),
        n_posts=len(posts),
        retweet_fraction=n_retweets / len(posts),
    )


def _prune(accounts: dict[str, AccountRecord], edges: list[EdgeRecord]):
    """Drop edges with unknown endpoints, then degree-0 accounts, to fixpoint."""
    kept_edges = edges
    while True:
        kept_edges = [e for e in kept_edges if e.source in accounts and e.target in accounts]
        touched = {e.source for e in kept_edges} | {e.target for e in kept_edges}
        isolates = [a for a in accounts if a not in touched]
        if not isolates:
            return accounts, kept_edges
        for a in isolates:
            del accounts[a]


def assemble_dataset(
    posts: list[RawPost],
    edges: list[EdgeRecord],
    strip_tags: bool = False,
) -> tuple[list[AccountRecord], list[EdgeRecord]]:
    """Account records plus the edge list restricted to retained authors.

    Accounts that authored no posts (phantom mention/reply targets) are
    removed, then edges touching them, then isolate accounts, iterated to
    a fixpoint. Raises DatasetError when nothing survives.
    """
    by_author: dict[str, list[RawPost]] = {}
    for p in posts:
        by_author.setdefault(p.author_id, []).append(p)

    accounts = {
        a: _build_account(a, author_posts, strip_tags)
        for a, author_posts in by_author.items()
    }
    n_authors = len(accounts)
    accounts, kept_edges = _prune(accounts, edges)
    if not accounts:
        raise DatasetError(
            "no accounts survive pruning",
            counts={
                "posts": len(posts),
                "authors": n_authors,
                "edges_in": len(edges),
                "edges_kept": len(kept_edges),
            },
        )
    ordered = sorted(accounts.values(), key=lambda r: r.account_id)
    return ordered, kept_edges


def assemble_from_tables(
    texts: dict[str, str],
    edges: list[EdgeRecord],
    strip_tags: bool = False,
) -> tuple[list[AccountRecord], list[EdgeRecord]]:
    """Same pruning rules for datasets given as node-text + edge tables.

    Each node is treated as one authored document; nodes with missing or
    empty text count as phantom targets and are pruned.
    """
    accounts = {}
    for node_id, text in texts.items():
        if not text:
            continue
        accounts[node_id] = AccountRecord(
            account_id=node_id,
            screen_name="",
            raw_text=text,
            clean_text=tuple(clean_text(text, strip_tags=strip_tags)),
            n_posts=1,
            retweet_fraction=0.0,
        )
    n_nodes = len(accounts)
    accounts, kept_edges = _prune(accounts, edges)
    if not accounts:
        raise DatasetError(
            "no accounts survive pruning",
            counts={"nodes": n_nodes, "edges_in": len(edges), "edges_kept": len(kept_edges)},
        )
    ordered = sorted(accounts.values(), key=lambda r: r.account_id)
    return ordered, kept_edges


def load_edge_csv(stream) -> list[EdgeRecord]:
    """Edge CSV with header `source,target,type,weight`."""
    reader = csv.DictReader(_as_text(stream))
    required = {"source", "target", "type", "weight"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise FormatError("edge CSV must have header source,target,type,weight")
    edges = []
    for row in reader:
        edge_type = row["type"].strip()
        if edge_type not in EDGE_TYPES:
            raise FormatError(f"unknown edge type {edge_type!r}")
        weight = int(row["weight"])
        if weight < 1:
            raise FormatError("edge weight must be >= 1")
        if row["source"] == row["target"]:
            continue
        edges.append(EdgeRecord(row["source"], row["target"], edge_type, weight))
    return edges


def load_node_text_csv(stream) -> dict[str, str]:
    """Node-text CSV with header `node_id,text`."""
    reader = csv.DictReader(_as_text(stream))
    if reader.fieldnames is None or not {"node_id", "text"}.issubset(reader.fieldnames):
        raise FormatError("node-text CSV must have header node_id,text")
    return {row["node_id"]: row["text"] for row in reader}


def load_label_csv(stream) -> dict[str, int]:
    """Label CSV with header `node_id,label`, label in {0,1}."""
    reader = csv.DictReader(_as_text(stream))
    if reader.fieldnames is None or not {"node_id", "label"}.issubset(reader.fieldnames):
        raise FormatError("label CSV must have header node_id,label")
    labels = {}
    for row in reader:
        value = row["label"].strip()
        if value not in ("0", "1"):
            raise FormatError(f"label must be 0 or 1, got {value!r}")
        labels[row["node_id"]] = int(value)
    return labels


def _as_text(stream):
    if isinstance(stream, str):
        return io.StringIO(stream)
    if isinstance(stream, bytes):
        return io.StringIO(stream.decode("utf-8"))
    return stream


def save_accounts_jsonl(accounts: list[AccountRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in accounts:
            fh.write(json.dumps({
                "account_id": rec.account_id,
                "screen_name": rec.screen_name,
                "raw_text": rec.raw_text,
                "clean_text": list(rec.clean_text),
                "n_posts": rec.n_posts,
                "retweet_fraction": rec.retweet_fraction,
            }, sort_keys=True, separators=(",", ":")) + "\n")


def load_accounts_jsonl(path) -> list[AccountRecord]:
    accounts = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            accounts.append(AccountRecord(
                account_id=obj["account_id"],
                screen_name=obj["screen_name"],
                raw_text=obj["raw_text"],
                clean_text=tuple(obj["clean_text"]),
                n_posts=obj["n_posts"],
                retweet_fraction=obj["retweet_fraction"],
            ))
    return accounts
