"""Local HTTP service: datasets, spaces, queries, sessions, flags,
projections. Backend for the analyst console and for scripting.

Sessions are JSON files written atomically (write-temp-rename) in a
sessions directory; per-session mutations are serialized by an in-process
lock. Mutating endpoints accept a client-supplied `request_id` and replay
the recorded response on retry.
"""
from __future__ import annotations

import json
import os
import re
import secrets
import threading
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import randstring
from .errors import AccountSimError, ConfigError, QueryError, SizeError
from .evaluate import project_2d
from .knn import query as knn_query
from .store import Dataset, load_dataset

HASHTAG_RE = re.compile(r"#(\w+)", re.UNICODE)
FLAG_VALUES = ("suspicious", "benign", "unknown")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class ServiceConfig:
    data_dir: Path
    sessions_dir: Path
    static_dir: Path | None = None
    randstring_model: Path | None = None


@dataclass
class ServiceState:
    config: ServiceConfig
    datasets: dict[str, Dataset] = field(default_factory=dict)
    session_locks: dict[str, threading.Lock] = field(default_factory=dict)
    projections: dict[tuple, dict] = field(default_factory=dict)
    name_model: randstring.LogisticModel | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def dataset(self, name: str) -> Dataset:
        with self.lock:
            if name not in self.datasets:
                path = self.config.data_dir / name
                if not path.is_dir():
                    raise ApiError(404, "dataset_not_found", f"no dataset named {name!r}")
                try:
                    self.datasets[name] = load_dataset(path, name=name)
                except AccountSimError as exc:
                    raise ApiError(404, "dataset_not_found", str(exc)) from exc
            return self.datasets[name]

    def dataset_names(self) -> list[str]:
        if not self.config.data_dir.is_dir():
            return []
        return sorted(
            d.name for d in self.config.data_dir.iterdir()
            if (d / "accounts.jsonl").exists() and (d / "graph.bmg").exists()
        )

    def session_lock(self, session_id: str) -> threading.Lock:
        with self.lock:
            return self.session_locks.setdefault(session_id, threading.Lock())

    def screen_name_model(self) -> randstring.LogisticModel:
        with self.lock:
            if self.name_model is None:
                if self.config.randstring_model and self.config.randstring_model.exists():
                    self.name_model = randstring.load_model(self.config.randstring_model)
                else:
                    (pos, neg), _ = randstring.benchmark_dataset(n_per_class=1500, seed=0)
                    self.name_model = randstring.train(pos, neg, epochs=5, seed=0)
            return self.name_model


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _session_path(state: ServiceState, session_id: str) -> Path:
    if not re.fullmatch(r"s-[0-9a-f]{16}", session_id):
        raise ApiError(404, "session_not_found", f"no session {session_id!r}")
    return state.config.sessions_dir / f"{session_id}.json"


def _load_session(state: ServiceState, session_id: str) -> dict:
    path = _session_path(state, session_id)
    if not path.exists():
        raise ApiError(404, "session_not_found", f"no session {session_id!r}")
    return json.loads(path.read_text(encoding="utf-8"))


def _write_session(state: ServiceState, session: dict) -> None:
    path = _session_path(state, session["session_id"])
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(
        json.dumps(session, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )
    os.replace(tmp, path)


def account_card(state: ServiceState, ds: Dataset, account_id: str) -> dict:
    record = ds.by_id.get(account_id)
    if record is None:
        raise ApiError(404, "account_not_found", f"no account {account_id!r} in {ds.name!r}")
    tags = Counter(t.lower() for t in HASHTAG_RE.findall(record.raw_text))
    top_hashtags = [t for t, _ in sorted(tags.items(), key=lambda kv: (-kv[1], kv[0]))[:5]]
    probability = None
    if record.screen_name:
        probability = randstring.predict(state.screen_name_model(), record.screen_name)
    return {
        "account_id": record.account_id,
        "screen_name": record.screen_name,
        "n_posts": record.n_posts,
        "retweet_fraction": record.retweet_fraction,
        "top_hashtags": top_hashtags,
        "randstring_probability": probability,
    }


def _get_space(ds: Dataset, name: str):
    try:
        return ds.space(name)
    except (KeyError, AccountSimError):
        raise ApiError(404, "space_not_found", f"no space {name!r} in dataset {ds.name!r}") from None


def _replayed(session: dict, request_id: str | None):
    if request_id:
        return session.get("request_log", {}).get(request_id)
    return None


def _find_parent(session: dict, seeds: list[str]) -> str | None:
    for entry in reversed(session["queries"]):
        if any(s in entry["hit_ids"] for s in seeds) or any(s in entry["seeds"] for s in seeds):
            return entry["query_id"]
    return None


def create_app(config: ServiceConfig) -> FastAPI:
    state = ServiceState(config=config)
    app = FastAPI(title="accountsim service")
    app.state.service = state

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/datasets")
    def datasets():
        return state.dataset_names()

    @app.get("/datasets/{name}/spaces")
    def dataset_spaces(name: str):
        ds = state.dataset(name)
        out = []
        for space_name in ds.space_names():
            space = _get_space(ds, space_name)
            if hasattr(space, "vectors"):
                out.append({"name": space_name, "dim": space.dim, "metric": space.metric, "kind": space.kind})
            else:
                out.append({"name": space_name, "dim": None, "metric": space.sim, "kind": "content"})
        return out

    @app.get("/datasets/{name}/accounts/{account_id}")
    def dataset_account(name: str, account_id: str):
        return account_card(state, state.dataset(name), account_id)

    @app.get("/datasets/{name}/projection")
    def dataset_projection(name: str, space: str, method: str = "pca",
                           perplexity: float = 30.0, iters: int = 500, seed: int = 0):
        ds = state.dataset(name)
        key = (name, space, method, perplexity, iters, seed)
        cached = state.projections.get(key)
        if cached is None:
            sp = _get_space(ds, space)
            if not hasattr(sp, "vectors"):
                raise ApiError(400, "invalid_space", f"{space!r} has no vectors to project")
            try:
                points = project_2d(sp, method=method, perplexity=perplexity, iters=iters, seed=seed)
            except (ConfigError, SizeError) as exc:
                raise ApiError(400, "invalid_projection", str(exc)) from exc
            labels = ds.labels.labels if ds.labels else {}
            cached = {
                "space": space,
                "method": method,
                "points": [
                    {"id": a, "x": float(x), "y": float(y), "label": labels.get(a)}
                    for a, (x, y) in zip(sp.account_ids, points)
                ],
            }
            state.projections[key] = cached
        return cached

    @app.post("/sessions")
    def create_session(body: dict):
        dataset_name = body.get("dataset")
        if not dataset_name:
            raise ApiError(400, "invalid_dataset", "body must name a dataset")
        ds = state.dataset(dataset_name)
        request_id = body.get("request_id")
        if request_id:
            for f in sorted(state.config.sessions_dir.glob("s-*.json")):
                existing = json.loads(f.read_text(encoding="utf-8"))
                if existing.get("create_request_id") == request_id:
                    return existing
        space = body.get("space")
        if space:
            _get_space(ds, space)
        session = {
            "session_id": f"s-{secrets.token_hex(8)}",
            "dataset": dataset_name,
            "space": space,
            "created_at": _now(),
            "queries": [],
            "flags": {},
            "notes": body.get("notes", ""),
            "request_log": {},
            "create_request_id": request_id,
        }
        state.config.sessions_dir.mkdir(parents=True, exist_ok=True)
        _write_session(state, session)
        return session

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _load_session(state, session_id)

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        return _load_session(state, session_id)

    @app.post("/sessions/{session_id}/query")
    def session_query(session_id: str, body: dict):
        with state.session_lock(session_id):
            session = _load_session(state, session_id)
            replay = _replayed(session, body.get("request_id"))
            if replay is not None:
                return replay
            ds = state.dataset(session["dataset"])
            space_name = body.get("space") or session.get("space")
            if not space_name:
                raise ApiError(400, "invalid_space", "no space given and session has no active space")
            space = _get_space(ds, space_name)
            seeds = body.get("seeds") or []
            k = body.get("k", 10)
            if not isinstance(k, int) or k < 1:
                raise ApiError(400, "invalid_k", f"k must be a positive integer, got {k!r}")
            if not seeds:
                raise ApiError(400, "invalid_seeds", "seeds must be a nonempty list")
            aggregation = body.get("aggregation", "mean")
            try:
                result = knn_query(space, seeds, k, aggregation=aggregation)
            except QueryError as exc:
                message = str(exc)
                code = "seed_not_found" if "seed account" in message else "invalid_query"
                raise ApiError(404 if code == "seed_not_found" else 400, code, message) from exc
            query_id = f"q{len(session['queries']) + 1}"
            parent_id = _find_parent(session, list(seeds))
            entry = {
                "query_id": query_id,
                "parent_id": parent_id,
                "seeds": list(result.seeds),
                "k": k,
                "space": space_name,
                "aggregation": aggregation,
                "hit_ids": result.hit_ids(),
                "at": _now(),
            }
            session["queries"].append(entry)
            session["space"] = space_name
            response = {
                "query_id": query_id,
                "parent_id": parent_id,
                "result": result.to_json(),
                "cards": [account_card(state, ds, h.account_id) for h in result.hits],
            }
            if body.get("request_id"):
                session.setdefault("request_log", {})[body["request_id"]] = response
            _write_session(state, session)
            return response

    @app.post("/sessions/{session_id}/flags")
    def session_flag(session_id: str, body: dict):
        with state.session_lock(session_id):
            session = _load_session(state, session_id)
            replay = _replayed(session, body.get("request_id"))
            if replay is not None:
                return replay
            account_id = body.get("account_id")
            flag = body.get("flag")
            if flag not in FLAG_VALUES:
                raise ApiError(400, "invalid_flag", f"flag must be one of {FLAG_VALUES}")
            ds = state.dataset(session["dataset"])
            if account_id not in ds.by_id:
                raise ApiError(404, "account_not_found", f"no account {account_id!r}")
            session["flags"][account_id] = {"flag": flag, "at": _now()}
            response = {"account_id": account_id, "flag": flag, "flags": session["flags"]}
            if body.get("request_id"):
                session.setdefault("request_log", {})[body["request_id"]] = response
            _write_session(state, session)
            return response

    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(config.static_dir), html=True), name="console")

    return app


def serve(config: ServiceConfig, host: str = "127.0.0.1", port: int = 840) -> None:
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=host, port=port, log_level="warning")
