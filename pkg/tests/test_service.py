import json
from random import Random

import pytest
from fastapi.testclient import TestClient

from proftap.judging import Judge, RatingStore, plan_assignments
from proftap.service import PoolPoem, ServiceState, create_app

ALLOWED_POEM_FIELDS = {"poem_id", "title", "body", "progress"}
FORBIDDEN_KEYS = {"source", "model", "model_id", "orig_id", "author", "j"}


def make_state(tmp_path=None, n_poems=6, n_judges=3, k=2, seed=1):
    poems = {
        f"u{i:03d}": PoolPoem(f"u{i:03d}", f"题{i}", f"字字字字字，句句句句句。")
        for i in range(n_poems)
    }
    judges = [Judge(f"judge{i}", f"token{i}") for i in range(n_judges)]
    plan = plan_assignments(sorted(poems), [j.judge_id for j in judges], k, seed)
    store = RatingStore(plan=plan, log_path=tmp_path / "ratings.jsonl" if tmp_path else None)
    return ServiceState(
        poems=poems, plan=plan, judges=judges, admin_token="admintok", store=store
    )


@pytest.fixture
def state(tmp_path):
    return make_state(tmp_path)


@pytest.fixture
def client(state):
    return TestClient(create_app(state))


def auth(token):
    return {"Authorization": f"Bearer {token}"}


class TestSession:
    def test_valid_token(self, client, state):
        resp = client.post("/api/v1/session", json={"token": "token0"})
        assert resp.status_code == 200
        data = resp.json()
        assert data["judge_id"] == "judge0"
        assert data["progress"]["rated"] == 0
        assert data["progress"]["total"] == len(state.plan.assignments["judge0"])

    def test_unknown_token(self, client):
        assert client.post("/api/v1/session", json={"token": "nope"}).status_code == 401


class TestNextAndRating:
    def test_next_follows_plan_order(self, client, state):
        first_planned = state.plan.assignments["judge0"][0]
        resp = client.get("/api/v1/next", headers=auth("token0"))
        assert resp.status_code == 200
        assert resp.json()["poem_id"] == first_planned

    def test_rating_advances_progress(self, client):
        poem = client.get("/api/v1/next", headers=auth("token0")).json()
        resp = client.post(
            "/api/v1/rating",
            headers=auth("token0"),
            json={"poem_id": poem["poem_id"], "probability": 0.75},
        )
        assert resp.status_code == 201
        assert resp.json()["progress"]["rated"] == 1
        following = client.get("/api/v1/next", headers=auth("token0")).json()
        assert following["poem_id"] != poem["poem_id"]

    def test_boundary_probabilities(self, client, state):
        assigned = state.plan.assignments["judge0"]
        for poem_id, value in zip(assigned[:2], (0.0, 1.0)):
            resp = client.post(
                "/api/v1/rating",
                headers=auth("token0"),
                json={"poem_id": poem_id, "probability": value},
            )
            assert resp.status_code == 201

    def test_out_of_range_rejected(self, client, state):
        poem_id = state.plan.assignments["judge0"][0]
        resp = client.post(
            "/api/v1/rating",
            headers=auth("token0"),
            json={"poem_id": poem_id, "probability": 1.2},
        )
        assert resp.status_code == 422

    def test_duplicate_conflict_store_unchanged(self, client, state):
        poem_id = state.plan.assignments["judge0"][0]
        ok = client.post(
            "/api/v1/rating", headers=auth("token0"),
            json={"poem_id": poem_id, "probability": 0.3},
        )
        assert ok.status_code == 201
        dup = client.post(
            "/api/v1/rating", headers=auth("token0"),
            json={"poem_id": poem_id, "probability": 0.9},
        )
        assert dup.status_code == 409
        records = state.store.records()
        assert len(records) == 1
        assert records[0].probability == 0.3

    def test_unassigned_poem(self, client, state):
        all_ids = set(state.poems)
        unassigned = sorted(all_ids - set(state.plan.assignments["judge0"]))
        if not unassigned:
            pytest.skip("judge0 covers the whole pool in this plan")
        resp = client.post(
            "/api/v1/rating", headers=auth("token0"),
            json={"poem_id": unassigned[0], "probability": 0.5},
        )
        assert resp.status_code == 404

    def test_done_returns_204(self, client, state):
        for poem_id in state.plan.assignments["judge0"]:
            client.post(
                "/api/v1/rating", headers=auth("token0"),
                json={"poem_id": poem_id, "probability": 0.5},
            )
        resp = client.get("/api/v1/next", headers=auth("token0"))
        assert resp.status_code == 204
        assert resp.content == b""

    def test_unknown_token_next(self, client):
        assert client.get("/api/v1/next", headers=auth("bad")).status_code == 401


def scan_for_forbidden(node):
    if isinstance(node, dict):
        for key, value in node.items():
            assert key not in FORBIDDEN_KEYS, f"leaky key {key!r}"
            scan_for_forbidden(value)
    elif isinstance(node, list):
        for item in node:
            scan_for_forbidden(item)


class TestBlindness:
    def test_payload_fields_exact_over_randomized_session(self, tmp_path):
        state = make_state(tmp_path, n_poems=40, n_judges=5, k=3, seed=9)
        client = TestClient(create_app(state))
        rng = Random(4)
        tokens = [j.access_token for j in state.judges]
        calls = 0
        while calls < 1000:
            token = rng.choice(tokens)
            resp = client.get("/api/v1/next", headers=auth(token))
            calls += 1
            if resp.status_code == 204:
                continue
            payload = resp.json()
            assert set(payload) == ALLOWED_POEM_FIELDS
            assert set(payload["progress"]) == {"rated", "total"}
            scan_for_forbidden(payload)
            if rng.random() < 0.7:
                rate = client.post(
                    "/api/v1/rating", headers=auth(token),
                    json={"poem_id": payload["poem_id"], "probability": rng.random()},
                )
                scan_for_forbidden(rate.json())
        assert calls == 1000


class TestAdmin:
    def test_export_requires_admin(self, client):
        assert client.get("/api/v1/export", headers=auth("token0")).status_code == 401

    def test_export_csv(self, client, state):
        poem_id = state.plan.assignments["judge1"][0]
        client.post(
            "/api/v1/rating", headers=auth("token1"),
            json={"poem_id": poem_id, "probability": 0.37},
        )
        resp = client.get("/api/v1/export", headers=auth("admintok"))
        assert resp.status_code == 200
        lines = resp.text.strip().splitlines()
        assert lines[0] == "judge_id,poem_id,probability,submitted_at"
        assert len(lines) == 2
        assert lines[1].startswith(f"judge1,{poem_id},0.37,")

    def test_get_plan(self, client, state):
        resp = client.get("/api/v1/plan", headers=auth("admintok"))
        assert resp.status_code == 200
        assert resp.json()["k_min"] == state.plan.k_min

    def test_upload_plan_replaces_state(self, client, state):
        new_poems = [
            {"poem_id": "n1", "title": "新", "body": "新句新句新。"},
            {"poem_id": "n2", "title": "旧", "body": "旧句旧句旧。"},
        ]
        plan = plan_assignments(["n1", "n2"], ["fresh"], 1, seed=2)
        payload = {
            "plan": plan.to_json(),
            "poems": new_poems,
            "judges": [{"judge_id": "fresh", "access_token": "freshtok"}],
        }
        resp = client.post("/api/v1/plan", headers=auth("admintok"), json=payload)
        assert resp.status_code == 200
        nxt = client.get("/api/v1/next", headers=auth("freshtok"))
        assert nxt.status_code == 200
        assert nxt.json()["poem_id"] in {"n1", "n2"}

    def test_void_reoffers_poem(self, client, state):
        poem_id = state.plan.assignments["judge0"][0]
        client.post(
            "/api/v1/rating", headers=auth("token0"),
            json={"poem_id": poem_id, "probability": 0.9},
        )
        resp = client.post(
            "/api/v1/void", headers=auth("admintok"),
            json={"judge_id": "judge0", "poem_id": poem_id},
        )
        assert resp.status_code == 200
        offered = client.get("/api/v1/next", headers=auth("token0")).json()
        assert offered["poem_id"] == poem_id
        again = client.post(
            "/api/v1/rating", headers=auth("token0"),
            json={"poem_id": poem_id, "probability": 0.1},
        )
        assert again.status_code == 201

    def test_void_requires_admin_and_existing_rating(self, client):
        assert client.post(
            "/api/v1/void", headers=auth("token0"),
            json={"judge_id": "judge0", "poem_id": "u000"},
        ).status_code == 401
        assert client.post(
            "/api/v1/void", headers=auth("admintok"),
            json={"judge_id": "judge0", "poem_id": "u000"},
        ).status_code == 404

    def test_upload_plan_with_unknown_poems_rejected(self, client):
        plan = plan_assignments(["ghost"], ["fresh"], 1, seed=2)
        payload = {
            "plan": plan.to_json(),
            "poems": [],
            "judges": [{"judge_id": "fresh", "access_token": "t"}],
        }
        resp = client.post("/api/v1/plan", headers=auth("admintok"), json=payload)
        assert resp.status_code == 422


class TestDurability:
    def test_ratings_survive_restart(self, tmp_path):
        state = make_state(tmp_path)
        client = TestClient(create_app(state))
        poem_id = state.plan.assignments["judge0"][0]
        client.post(
            "/api/v1/rating", headers=auth("token0"),
            json={"poem_id": poem_id, "probability": 0.42},
        )
        # new store over the same log simulates a crash and restart
        revived = RatingStore(plan=state.plan, log_path=tmp_path / "ratings.jsonl")
        assert revived.has("judge0", poem_id)
        log_lines = (tmp_path / "ratings.jsonl").read_text().splitlines()
        assert json.loads(log_lines[0])["probability"] == 0.42
