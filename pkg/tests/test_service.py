import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from causenet.data import SyntheticSpec, save_synthetic_bundle
from causenet.discovery import extract_edges
from causenet.network import network_from_checkpoint
from causenet.service import create_app


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "bundle"
    save_synthetic_bundle(path, SyntheticSpec(node_count=6, edge_multiplier=1, sample_multiplier=30, seed=8))
    return path


@pytest.fixture()
def client():
    return TestClient(create_app())


def create_session(client, bundle_dir, **overrides):
    body = {
        "dataset": str(bundle_dir),
        "tau": 0.0,
        "config": {"max_steps": 80, "patience": 20, "seed": 3},
    }
    body.update(overrides)
    response = client.post("/sessions", json=body)
    assert response.status_code == 201, response.text
    return response.json()


def wait_ready(client, session_id, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        state = client.get(f"/sessions/{session_id}").json()
        if state["status"] != "training":
            return state
        time.sleep(0.05)
    raise TimeoutError("session stayed in training")


class TestLifecycle:
    def test_health(self, client):
        assert client.get("/health").json() == {"status": "ok"}

    def test_create_returns_graph_and_metrics(self, client, bundle_dir):
        state = create_session(client, bundle_dir)
        assert state["status"] == "ready"
        assert state["graph"]["kind"] == "full"
        assert "mse" in state["metrics"]
        assert state["adjacency"] and len(state["adjacency"]) == 6
        assert all({"edge", "w"} == set(e) for e in state["candidate_edges"])

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404
        assert client.post("/sessions/nope/revise", json={"kind": "set-tau", "tau": 0.1}).status_code == 404
        assert client.post("/sessions/nope/accept").status_code == 404

    def test_malformed_body_400(self, client):
        assert client.post("/sessions", json={"tau": "not-a-number"}).status_code == 400

    def test_bad_dataset_path_400(self, client):
        response = client.post("/sessions", json={"dataset": "/does/not/exist.csv"})
        assert response.status_code == 400


class TestRevisions:
    def test_set_tau_reduces_edges_without_training(self, client, bundle_dir):
        state = create_session(client, bundle_dir)
        sid = state["session_id"]
        full_edges = len(state["graph"]["edges"])
        response = client.post(f"/sessions/{sid}/revise", json={"kind": "set-tau", "tau": 0.08})
        assert response.status_code == 200
        after = response.json()
        assert after["status"] == "ready"  # no background training for tau
        assert len(after["graph"]["edges"]) <= full_edges
        assert after["tau"] == 0.08

    def test_cut_edges_trains_then_excludes_edge(self, client, bundle_dir):
        state = create_session(client, bundle_dir)
        sid = state["session_id"]
        victim = state["graph"]["edges"][0]
        response = client.post(f"/sessions/{sid}/revise", json={"kind": "cut-edges", "edges": [victim]})
        assert response.status_code == 200
        assert response.json()["status"] == "training"
        final = wait_ready(client, sid)
        assert final["status"] == "ready"
        assert victim not in final["graph"]["edges"]
        assert victim in final["banned_edges"]
        adjacency = np.asarray(final["adjacency"])
        assert adjacency[victim[0], victim[1]] == 0.0

    def test_revise_while_training_409(self, client, bundle_dir):
        state = create_session(client, bundle_dir, config={"max_steps": 2000, "patience": 500, "seed": 3})
        sid = state["session_id"]
        victim = state["graph"]["edges"][0]
        assert client.post(f"/sessions/{sid}/revise", json={"kind": "cut-edges", "edges": [victim]}).status_code == 200
        blocked = client.post(f"/sessions/{sid}/revise", json={"kind": "set-tau", "tau": 0.1})
        assert blocked.status_code == 409
        wait_ready(client, sid, timeout=120)

    def test_cut_unknown_edge_400(self, client, bundle_dir):
        state = create_session(client, bundle_dir)
        sid = state["session_id"]
        edges = {tuple(e) for e in state["graph"]["edges"]}
        missing = next(
            [i, k] for i in range(6) for k in range(6)
            if i != k and (i, k) not in edges
        )
        response = client.post(f"/sessions/{sid}/revise", json={"kind": "cut-edges", "edges": [missing]})
        assert response.status_code == 400

    def test_extract_preview_matches_eq2_for_random_taus(self, client, bundle_dir):
        state = create_session(client, bundle_dir)
        sid = state["session_id"]
        w = np.asarray(state["adjacency"])
        g = np.random.default_rng(5)
        for tau in g.uniform(0, float(w.max()) * 1.1, size=5):
            server = client.get(f"/sessions/{sid}/extract", params={"tau": float(tau)}).json()
            assert {tuple(e) for e in server["edges"]} == extract_edges(w, float(tau))


class TestAccept:
    def test_accept_closes_and_serves_checkpoint(self, client, bundle_dir):
        state = create_session(client, bundle_dir)
        sid = state["session_id"]
        response = client.post(f"/sessions/{sid}/accept")
        assert response.status_code == 200
        payload = response.json()
        assert payload["checkpoint"] == f"/sessions/{sid}/checkpoint"
        ckpt = client.get(payload["checkpoint"])
        assert ckpt.status_code == 200
        net = network_from_checkpoint(ckpt.json())
        assert net.d == 5

    def test_second_accept_409(self, client, bundle_dir):
        state = create_session(client, bundle_dir)
        sid = state["session_id"]
        assert client.post(f"/sessions/{sid}/accept").status_code == 200
        assert client.post(f"/sessions/{sid}/accept").status_code == 409

    def test_revise_after_accept_409(self, client, bundle_dir):
        state = create_session(client, bundle_dir)
        sid = state["session_id"]
        client.post(f"/sessions/{sid}/accept")
        response = client.post(f"/sessions/{sid}/revise", json={"kind": "set-tau", "tau": 0.1})
        assert response.status_code == 409


class TestHistory:
    def test_history_matches_revision_sequence(self, client, bundle_dir):
        state = create_session(client, bundle_dir)
        sid = state["session_id"]
        client.post(f"/sessions/{sid}/revise", json={"kind": "set-tau", "tau": 0.02})
        client.post(f"/sessions/{sid}/accept")
        history = client.get(f"/sessions/{sid}").json()["history"]
        kinds = [None if h["revision"] is None else h["revision"]["kind"] for h in history]
        assert kinds == [None, "set-tau", "accept"]
