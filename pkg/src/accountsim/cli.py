"""Batch command-line entry points for the full pipeline.

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 numeric/training error. Progress goes to stderr; data to stdout or
--out. A --config file of `key = value` lines supplies defaults that
explicit flags override.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import content, fusion, ingest, netembed, randstring, store
from .errors import (AlignmentError, ConfigError, DatasetError, EvaluationError,
                     FormatError, QueryError, SizeError, SpectralError, TrainingError)
from .evaluate import (LabelSet, gen_planted_graph, gen_topic_corpus,
                       precision_at_k, project_2d, projection_csv, report_table)
from .knn import query as knn_query, recursive_expand
from .spaces import format_value
from .textpipe import build_vocab, count_matrix

USAGE_EXIT, DATA_EXIT, NUMERIC_EXIT = 1, 2, 3

MODEL_NAMES = ("jaccard", "cosine", "lda", "lsa", "node2vec", "hope", "gf",
               "role2vec", "sybilrank", "warmstart", "concat")


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


class _SubRegistry:
    """Records subparsers by command name so config lookup can find defaults."""

    def __init__(self, actions, registry):
        self._actions = actions
        self._registry = registry

    def add_parser(self, name, **kwargs):
        sub = self._actions.add_parser(name, **kwargs)
        self._registry[name] = sub
        return sub


def log(message: str) -> None:
    print(message, file=sys.stderr)


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def parse_config_file(path: str) -> dict[str, str]:
    values = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line is not key = value: {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip().strip('"').strip("'")
    return values


def apply_config(args: argparse.Namespace, parser: "CliParser") -> None:
    """Config-file values fill in any argument still at its parser default."""
    if not getattr(args, "config", None):
        return
    sub = parser.sub_parsers[args.command]
    values = parse_config_file(args.config)
    for key, raw in values.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            continue
        default = sub.get_default(attr)
        if getattr(args, attr) == default:
            if isinstance(default, bool):
                parsed = raw.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                parsed = int(raw)
            elif isinstance(default, float):
                parsed = float(raw)
            else:
                parsed = raw
            setattr(args, attr, parsed)


def build_parser() -> CliParser:
    parser = CliParser(prog="accountsim", description=__doc__,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.sub_parsers = {}
    sub = _SubRegistry(
        parser.add_subparsers(dest="command", required=True, parser_class=CliParser),
        parser.sub_parsers,
    )

    p = sub.add_parser("gen", help="generate a planted-community dataset (edge/text/label CSVs)")
    p.add_argument("--blocks", default="100,100", help="comma-separated block sizes")
    p.add_argument("--intra", type=float, default=0.1)
    p.add_argument("--inter", type=float, default=0.005)
    p.add_argument("--noise", type=float, default=0.3, help="shared-vocabulary token fraction")
    p.add_argument("--vocab-per-class", type=int, default=50)
    p.add_argument("--doc-len", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config")

    p = sub.add_parser("ingest", help="parse raw data into a dataset directory")
    p.add_argument("--posts", help="post stream (jsonl or csv)")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--edges", help="prebuilt edge CSV (with --texts)")
    p.add_argument("--texts", help="node-text CSV (with --edges)")
    p.add_argument("--labels", help="optional label CSV to copy through")
    p.add_argument("--strip-tags", action="store_true")
    p.add_argument("--out", required=True, help="dataset directory")
    p.add_argument("--config")

    p = sub.add_parser("embed", help="fit an embedding space into the dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True, choices=MODEL_NAMES)
    p.add_argument("--name", help="space name (defaults to the model name)")
    p.add_argument("--dim", type=int, default=0, help="0 = model default")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--topics", type=int, default=20)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--alpha", type=float, default=0.0, help="0 = model default")
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--walks", type=int, default=10)
    p.add_argument("--walk-length", type=int, default=80)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.0, help="0 = model default")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--lambda-reg", type=float, default=0.01)
    p.add_argument("--katz-alpha", type=float, default=0.0, help="0 = 0.5/lambda_max")
    p.add_argument("--wl-iters", type=int, default=2)
    p.add_argument("--seeds", help="seed accounts for sybilrank (comma-separated)")
    p.add_argument("--content-space", help="content space for warmstart/concat")
    p.add_argument("--network-space", help="second space for concat")
    p.add_argument("--mix-weight", type=float, default=0.5)
    p.add_argument("--min-df", type=int, default=2)
    p.add_argument("--max-df-frac", type=float, default=0.8)
    p.add_argument("--max-terms", type=int, default=50000)
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads; the bundled models are deterministic and single-threaded")
    p.add_argument("--config")

    p = sub.add_parser("query", help="k nearest neighbors of seed accounts")
    p.add_argument("--dataset", required=True)
    p.add_argument("--space", required=True)
    p.add_argument("--seeds", required=True, help="comma-separated account ids")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--agg", choices=("mean", "min_dist"), default="mean")
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("expand", help="recursive nearest-neighbor expansion")
    p.add_argument("--dataset", required=True)
    p.add_argument("--space", required=True)
    p.add_argument("--seeds", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--hops", type=int, default=2)
    p.add_argument("--agg", choices=("mean", "min_dist"), default="mean")
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("eval", help="precision@k over labeled accounts")
    p.add_argument("--dataset", required=True)
    p.add_argument("--space", required=True, help="comma-separated space names")
    p.add_argument("--labels", help="label CSV (defaults to the dataset's labels.csv)")
    p.add_argument("--k", default="10,50", help="comma-separated k values")
    p.add_argument("--json", dest="json_out", help="also write the report as JSON here")
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("project", help="2-D projection of a space")
    p.add_argument("--dataset", required=True)
    p.add_argument("--space", required=True)
    p.add_argument("--method", choices=("pca", "tsne"), default="pca")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("randstring", help="random-string screen-name detector")
    p.add_argument("--train-bench", action="store_true",
                   help="train on the synthetic benchmark and report held-out metrics")
    p.add_argument("--n-per-class", type=int, default=10000)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", help="model JSON to load or save")
    p.add_argument("--names", help="file of names, one per line, to score")
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--data-dir", required=True, help="directory of dataset directories")
    p.add_argument("--sessions-dir", default="sessions")
    p.add_argument("--static-dir", help="built console assets to serve")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--config")

    return parser


def _split_csv(value: str) -> list[str]:
    return [v for v in (s.strip() for s in value.split(",")) if v]


def cmd_gen(args) -> int:
    blocks = [int(b) for b in _split_csv(args.blocks)]
    graph, labels = gen_planted_graph(blocks, args.intra, args.inter, seed=args.seed)
    docs = gen_topic_corpus(labels, vocab_per_class=args.vocab_per_class,
                            doc_len=args.doc_len, noise_frac=args.noise, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    edge_lines = ["source,target,type,weight"]
    adj = graph.out_adj()
    for i, entries in enumerate(adj):
        for j, edge_type, weight in entries:
            edge_lines.append(f"{graph.ids[i]},{graph.ids[j]},{edge_type},{weight}")
    (out / "edges.csv").write_text("\n".join(edge_lines) + "\n", encoding="utf-8")
    text_lines = ["node_id,text"]
    for node_id in graph.ids:
        text_lines.append(f"{node_id},{' '.join(docs[node_id])}")
    (out / "texts.csv").write_text("\n".join(text_lines) + "\n", encoding="utf-8")
    label_lines = ["node_id,label"] + [f"{k},{v}" for k, v in sorted(labels.labels.items())]
    (out / "labels.csv").write_text("\n".join(label_lines) + "\n", encoding="utf-8")
    meta = {"blocks": blocks, "intra": args.intra, "inter": args.inter,
            "noise": args.noise, "vocab_per_class": args.vocab_per_class,
            "doc_len": args.doc_len, "seed": args.seed}
    (out / "gen.meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")
    log(f"wrote {graph.n} nodes, {graph.edge_count} edges to {out}")
    return 0


def cmd_ingest(args) -> int:
    if args.posts:
        with open(args.posts, "rb") as fh:
            posts, skipped = ingest.parse_posts(fh, fmt=args.format)
        if skipped:
            log(f"skipped {skipped} malformed lines")
        edges = ingest.build_edges(posts)
        accounts, kept = ingest.assemble_dataset(posts, edges, strip_tags=args.strip_tags)
    elif args.edges and args.texts:
        edges = ingest.load_edge_csv(Path(args.edges).read_text(encoding="utf-8"))
        texts = ingest.load_node_text_csv(Path(args.texts).read_text(encoding="utf-8"))
        accounts, kept = ingest.assemble_from_tables(texts, edges, strip_tags=args.strip_tags)
    else:
        raise ConfigError("ingest needs --posts or both --edges and --texts")
    from .graph import from_edges

    graph = from_edges(accounts, kept)
    labels = None
    if args.labels:
        raw = ingest.load_label_csv(Path(args.labels).read_text(encoding="utf-8"))
        labels = {k: v for k, v in raw.items() if k in {a.account_id for a in accounts}}
    store.save_dataset(args.out, accounts, graph, labels=labels)
    log(f"dataset: {graph.n} accounts, {graph.edge_count} edges -> {args.out}")
    return 0


def _dtm_for(ds: store.Dataset, mode: str, args):
    docs = [a.clean_text for a in ds.accounts]
    vocab = build_vocab(docs, min_df=args.min_df, max_df_frac=args.max_df_frac,
                        max_terms=args.max_terms)
    return count_matrix(docs, vocab, mode)


def cmd_embed(args) -> int:
    ds = store.load_dataset(args.dataset)
    name = args.name or args.model
    ids = tuple(a.account_id for a in ds.accounts)
    meta = {"model": args.model, "seed": args.seed, "argv_dim": args.dim}
    model = args.model
    if model in ("jaccard", "cosine"):
        store.save_similarity_space(ds.path, name, model, min_df=args.min_df,
                                    max_df_frac=args.max_df_frac, max_terms=args.max_terms)
        log(f"registered {model} similarity space {name!r}")
        return 0
    if model == "lda":
        dtm = _dtm_for(ds, "tf", args)
        alpha = args.alpha or None
        _, space = content.lda_fit(dtm, n_topics=args.topics, alpha=alpha, beta=args.beta,
                                   iters=args.iters, seed=args.seed, account_ids=ids, name=name)
        meta.update({"topics": args.topics, "iters": args.iters})
    elif model == "lsa":
        dtm = _dtm_for(ds, "tfidf", args)
        space = content.lsa_fit(dtm, dim=args.dim or 200, account_ids=ids, name=name, seed=args.seed)
    elif model == "node2vec":
        space = netembed.node2vec_embed(
            ds.graph, dim=args.dim or 64, walks_per_node=args.walks,
            walk_length=args.walk_length, window=args.window, negatives=args.negatives,
            epochs=args.epochs, lr=args.lr or 0.025, p=args.p, q=args.q,
            seed=args.seed, name=name)
    elif model == "hope":
        space = netembed.hope_embed(ds.graph, dim=args.dim or 128,
                                    alpha=args.katz_alpha or None, name=name, seed=args.seed)
    elif model == "gf":
        space = netembed.graph_factorize(ds.graph, dim=args.dim or 32,
                                         lambda_reg=args.lambda_reg, lr=args.lr or 0.05,
                                         epochs=args.epochs, seed=args.seed, name=name)
    elif model == "role2vec":
        space = netembed.role2vec_embed(
            ds.graph, dim=args.dim or 128, wl_iters=args.wl_iters,
            walks_per_node=args.walks, walk_length=args.walk_length, window=args.window,
            negatives=args.negatives, epochs=args.epochs, lr=args.lr or 0.025,
            p=args.p, q=args.q, seed=args.seed, name=name)
    elif model == "sybilrank":
        if not args.seeds:
            raise ConfigError("sybilrank needs --seeds")
        space, _ = netembed.sybil_rank(ds.graph, _split_csv(args.seeds),
                                       iters=args.iters if args.iters != 200 else None, name=name)
        meta["seeds"] = _split_csv(args.seeds)
    elif model == "warmstart":
        if not args.content_space:
            raise ConfigError("warmstart needs --content-space")
        content_space = ds.space(args.content_space)
        space = fusion.warm_start_factorize(ds.graph, content_space, dim=args.dim or 32,
                                            lambda_reg=args.lambda_reg, lr=args.lr or 0.05,
                                            epochs=args.epochs, seed=args.seed, name=name)
        meta["content_space"] = args.content_space
    elif model == "concat":
        if not (args.content_space and args.network_space):
            raise ConfigError("concat needs --content-space and --network-space")
        a = ds.space(args.content_space)
        b = ds.space(args.network_space)
        space = fusion.concat_spaces(a, b, mix_weight=args.mix_weight, name=name)
        meta.update({"content_space": args.content_space, "network_space": args.network_space,
                     "mix_weight": args.mix_weight})
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown model {model!r}")
    store.save_embedding_space(ds.path, space, meta=meta)
    log(f"wrote space {name!r} ({space.vectors.shape[0]}x{space.vectors.shape[1]})")
    return 0


def cmd_query(args) -> int:
    ds = store.load_dataset(args.dataset)
    try:
        space = ds.space(args.space)
    except KeyError:
        raise QueryError(f"no space named {args.space!r}") from None
    result = knn_query(space, _split_csv(args.seeds), args.k, aggregation=args.agg)
    emit(json.dumps(result.to_json(), indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_expand(args) -> int:
    ds = store.load_dataset(args.dataset)
    try:
        space = ds.space(args.space)
    except KeyError:
        raise QueryError(f"no space named {args.space!r}") from None
    result = recursive_expand(space, _split_csv(args.seeds), args.k, args.hops,
                              aggregation=args.agg)
    payload = {
        "seeds": list(result.initial_seeds),
        "hops_run": result.hops_run,
        "found": [
            {"id": account, "hop": prov.hop, "parent": prov.parent}
            for account, prov in result.found.items()
        ],
    }
    emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_eval(args) -> int:
    ds = store.load_dataset(args.dataset)
    if args.labels:
        labels = LabelSet(labels=ingest.load_label_csv(Path(args.labels).read_text(encoding="utf-8")))
    elif ds.labels is not None:
        labels = ds.labels
    else:
        raise EvaluationError("no labels: pass --labels or add labels.csv to the dataset")
    ks = tuple(int(k) for k in _split_csv(args.k))
    reports = []
    for space_name in _split_csv(args.space):
        try:
            space = ds.space(space_name)
        except KeyError:
            raise QueryError(f"no space named {space_name!r}") from None
        reports.append(precision_at_k(space, labels, ks=ks))
    emit(report_table(reports) + "\n", args.out)
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps([r.to_json() for r in reports], indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    return 0


def cmd_project(args) -> int:
    ds = store.load_dataset(args.dataset)
    try:
        space = ds.space(args.space)
    except KeyError:
        raise QueryError(f"no space named {args.space!r}") from None
    if not hasattr(space, "vectors"):
        raise ConfigError(f"space {args.space!r} has no vectors to project")
    points = project_2d(space, method=args.method, perplexity=args.perplexity,
                        iters=args.iters, seed=args.seed)
    emit(projection_csv(space, points, labels=ds.labels), args.out)
    return 0


def cmd_randstring(args) -> int:
    if args.train_bench:
        (train_pos, train_neg), (test_pos, test_neg) = randstring.benchmark_dataset(
            n_per_class=args.n_per_class, seed=args.seed)
        model = randstring.train(train_pos, train_neg, lr=args.lr, epochs=args.epochs,
                                 l2=args.l2, seed=args.seed)
        correct = sum(1 for nm in test_pos if randstring.predict(model, nm) >= 0.5)
        correct += sum(1 for nm in test_neg if randstring.predict(model, nm) < 0.5)
        accuracy = correct / (len(test_pos) + len(test_neg))
        log(f"held-out accuracy: {accuracy:.4f}")
        if args.model:
            randstring.save_model(model, args.model)
            log(f"saved model to {args.model}")
        emit(json.dumps({"accuracy": accuracy}, sort_keys=True) + "\n", args.out)
        return 0
    if not (args.model and args.names):
        raise ConfigError("randstring needs --train-bench, or --model with --names")
    model = randstring.load_model(args.model)
    lines = []
    for raw in Path(args.names).read_text(encoding="utf-8").splitlines():
        name = raw.strip()
        if name:
            lines.append(f"{name},{format_value(randstring.predict(model, name))}")
    emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    config = ServiceConfig(
        data_dir=Path(args.data_dir),
        sessions_dir=Path(args.sessions_dir),
        static_dir=Path(args.static_dir) if args.static_dir else None,
    )
    serve(config, host=args.host, port=args.port)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "ingest": cmd_ingest,
    "embed": cmd_embed,
    "query": cmd_query,
    "expand": cmd_expand,
    "eval": cmd_eval,
    "project": cmd_project,
    "randstring": cmd_randstring,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        apply_config(args, parser)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    except ConfigError as exc:
        log(f"error: {exc}")
        return USAGE_EXIT
    except (FormatError, DatasetError, QueryError, AlignmentError, SizeError,
            EvaluationError, FileNotFoundError) as exc:
        log(f"error: {exc}")
        return DATA_EXIT
    except (TrainingError, SpectralError) as exc:
        log(f"error: {exc}")
        return NUMERIC_EXIT


if __name__ == "__main__":
    raise SystemExit(main())
