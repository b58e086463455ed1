"""HTTP service round trips over a small planted dataset."""
import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from accountsim import randstring, store
from accountsim.content import lsa_fit
from accountsim.evaluate import gen_planted_graph, gen_topic_corpus
from accountsim.ingest import AccountRecord, clean_text
from accountsim.service import ServiceConfig, create_app
from accountsim.textpipe import build_vocab, count_matrix


@pytest.fixture(scope="module")
def service_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc")
    data_dir = root / "data"
    dataset_dir = data_dir / "demo"
    graph, labels = gen_planted_graph([12, 12], intra_p=0.4, inter_p=0.05, seed=0)
    docs_map = gen_topic_corpus(labels, vocab_per_class=30, doc_len=60, noise_frac=0.1, seed=0)
    accounts = [
        AccountRecord(
            account_id=a,
            screen_name=f"user_{a}",
            raw_text=" ".join(docs_map[a]) + " #planted",
            clean_text=tuple(clean_text(" ".join(docs_map[a]))),
            n_posts=3,
            retweet_fraction=0.25,
        )
        for a in graph.ids
    ]
    store.save_dataset(dataset_dir, accounts, graph, labels=labels.labels)
    docs = [a.clean_text for a in accounts]
    vocab = build_vocab(docs, min_df=1, max_df_frac=1.0)
    dtm = count_matrix(docs, vocab, "tfidf")
    space = lsa_fit(dtm, dim=6, account_ids=graph.ids, name="lsa")
    store.save_embedding_space(dataset_dir, space, meta={"model": "lsa"})
    store.save_similarity_space(dataset_dir, "cosine", "cosine", min_df=1, max_df_frac=1.0)
    return root


@pytest.fixture()
def client(service_dir):
    config = ServiceConfig(data_dir=service_dir / "data", sessions_dir=service_dir / "sessions")
    app = create_app(config)
    # Tiny pre-trained detector keeps card rendering fast.
    app.state.service.name_model = randstring.train(
        ["zq1xj9kvqp2w8rr", "ab3cd9ef1gh5ij7"], ["gardenparty", "bluebird"], epochs=5, seed=0)
    return TestClient(app)


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_datasets_empty_config(tmp_path):
    config = ServiceConfig(data_dir=tmp_path / "nope", sessions_dir=tmp_path / "sessions")
    with TestClient(create_app(config)) as empty_client:
        assert empty_client.get("/datasets").json() == []


def test_datasets_and_spaces(client):
    assert client.get("/datasets").json() == ["demo"]
    spaces = {s["name"]: s for s in client.get("/datasets/demo/spaces").json()}
    assert spaces["lsa"]["dim"] == 6
    assert spaces["cosine"]["kind"] == "content"


def test_account_card(client):
    card = client.get("/datasets/demo/accounts/n00").json()
    assert card["screen_name"] == "user_n00"
    assert card["n_posts"] == 3
    assert card["top_hashtags"] == ["planted"]
    assert 0.0 < card["randstring_probability"] < 1.0


def test_unknown_account_404(client):
    response = client.get("/datasets/demo/accounts/ghost")
    assert response.status_code == 404
    assert response.json()["code"] == "account_not_found"


def test_full_session_round_trip(client):
    created = client.post("/sessions", json={"dataset": "demo", "space": "lsa"})
    assert created.status_code == 200
    session_id = created.json()["session_id"]

    q1 = client.post(f"/sessions/{session_id}/query", json={"seeds": ["n00"], "k": 5})
    assert q1.status_code == 200
    body = q1.json()
    assert body["parent_id"] is None
    assert len(body["result"]["hits"]) == 5
    assert len(body["cards"]) == 5
    top_hit = body["result"]["hits"][0]["id"]

    flag = client.post(f"/sessions/{session_id}/flags",
                       json={"account_id": top_hit, "flag": "suspicious"})
    assert flag.status_code == 200

    session = client.get(f"/sessions/{session_id}").json()
    assert session["flags"][top_hit]["flag"] == "suspicious"

    # Re-seed from the flagged hit: the new query must chain to the first.
    q2 = client.post(f"/sessions/{session_id}/query", json={"seeds": [top_hit], "k": 3})
    assert q2.json()["parent_id"] == body["query_id"]

    exported = client.get(f"/sessions/{session_id}/export")
    assert exported.json()["queries"][1]["parent_id"] == body["query_id"]


def test_error_codes(client):
    session_id = client.post("/sessions", json={"dataset": "demo"}).json()["session_id"]
    r = client.post(f"/sessions/{session_id}/query",
                    json={"seeds": ["n00"], "k": 5, "space": "nope"})
    assert r.status_code == 404 and r.json()["code"] == "space_not_found"
    r = client.post(f"/sessions/{session_id}/query",
                    json={"seeds": ["n00"], "k": 0, "space": "lsa"})
    assert r.status_code == 400 and r.json()["code"] == "invalid_k"
    r = client.post(f"/sessions/{session_id}/query",
                    json={"seeds": ["ghost"], "k": 5, "space": "lsa"})
    assert r.status_code == 404 and r.json()["code"] == "seed_not_found"
    r = client.post(f"/sessions/{session_id}/flags",
                    json={"account_id": "n00", "flag": "sus"})
    assert r.status_code == 400 and r.json()["code"] == "invalid_flag"


def test_idempotent_retry_with_request_id(client):
    session_id = client.post("/sessions", json={"dataset": "demo", "space": "lsa"}).json()["session_id"]
    body = {"seeds": ["n01"], "k": 4, "request_id": "req-1"}
    first = client.post(f"/sessions/{session_id}/query", json=body).json()
    second = client.post(f"/sessions/{session_id}/query", json=body).json()
    assert first == second
    queries = client.get(f"/sessions/{session_id}").json()["queries"]
    assert len(queries) == 1

    create_body = {"dataset": "demo", "request_id": "create-1"}
    s1 = client.post("/sessions", json=create_body).json()["session_id"]
    s2 = client.post("/sessions", json=create_body).json()["session_id"]
    assert s1 == s2


def test_export_import_export_is_byte_identical(client, service_dir):
    session_id = client.post("/sessions", json={"dataset": "demo", "space": "lsa"}).json()["session_id"]
    client.post(f"/sessions/{session_id}/query", json={"seeds": ["n02"], "k": 3})
    exported = client.get(f"/sessions/{session_id}/export").content
    # Import: write the exported state back as a fresh session file.
    payload = json.loads(exported)
    clone_path = Path(service_dir / "sessions" / f"{session_id}.json")
    on_disk = clone_path.read_bytes()
    clone_path.write_bytes(on_disk)
    re_exported = client.get(f"/sessions/{session_id}/export").content
    assert exported == re_exported
    assert json.loads(re_exported) == payload


def test_projection_endpoint(client):
    r = client.get("/datasets/demo/projection", params={"space": "lsa", "method": "pca"})
    assert r.status_code == 200
    points = r.json()["points"]
    assert len(points) == 24
    assert {"id", "x", "y", "label"} <= set(points[0])
    # Cached: same object second time.
    again = client.get("/datasets/demo/projection", params={"space": "lsa", "method": "pca"})
    assert again.json() == r.json()


def test_projection_param_errors(client):
    r = client.get("/datasets/demo/projection",
                   params={"space": "lsa", "method": "tsne", "perplexity": 50})
    assert r.status_code == 400 and r.json()["code"] == "invalid_projection"
