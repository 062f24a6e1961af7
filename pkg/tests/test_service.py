import json
import socket
import threading
import time

import httpx
import numpy as np
import pytest
import uvicorn
from fastapi.testclient import TestClient

from fdastream import (
    EngineConfig,
    PushPolicy,
    RawPanel,
    ScenarioSpec,
    StreamingEngine,
    create_app,
    generate_synthetic,
)


def constant_engine():
    engine = StreamingEngine()
    engine.batch_fit(RawPanel(["a", "b", "c"], [[1.0] * 4, [2.0] * 4, [3.0] * 4]))
    return engine


def rank_one_engine():
    """Rows mean + a_i * f with amplitudes matching the spec's score fixture."""
    t = np.linspace(0.0, 1.0, 60)
    f = np.sin(2 * np.pi * t)
    amplitudes = {"A": 5.0, "B": -7.0, "C": 1.0}
    rows = [1.0 + a * f for a in amplitudes.values()]
    engine = StreamingEngine()
    engine.batch_fit(RawPanel(list(amplitudes), rows))
    return engine


class TestMsplotEndpoint:
    def test_constant_fixture(self):
        client = TestClient(create_app(constant_engine()))
        body = client.get("/msplot").json()
        assert body["epoch"] == 1 and body["t_count"] == 4
        assert [p["mo"] for p in body["points"]] == [-1.0, 0.0, 1.0]
        assert [p["vo"] for p in body["points"]] == [0.0, 0.0, 0.0]

    def test_empty_engine_404(self):
        client = TestClient(create_app(StreamingEngine()))
        response = client.get("/msplot")
        assert response.status_code == 404
        assert "no data" in response.json()["detail"]

    def test_idempotent_reads(self):
        client = TestClient(create_app(constant_engine()))
        assert client.get("/msplot").content == client.get("/msplot").content


class TestSeriesEndpoint:
    def test_mean_of_selection(self):
        client = TestClient(create_app(constant_engine()))
        body = client.get("/series", params={"ids": "a,b,c"}).json()
        assert body["mean"] == [2.0, 2.0, 2.0, 2.0]
        assert body["series"]["a"] == [1.0, 1.0, 1.0, 1.0]

    def test_window(self):
        client = TestClient(create_app(constant_engine()))
        body = client.get("/series", params={"ids": "a", "start": 1, "end": 3}).json()
        assert body["series"]["a"] == [1.0, 1.0]
        assert body["timestamps"] == [1.0, 2.0]

    def test_unknown_ids_listed(self):
        client = TestClient(create_app(constant_engine()))
        response = client.get("/series", params={"ids": "a,nope,zilch"})
        assert response.status_code == 422
        assert "nope" in response.json()["detail"]
        assert "zilch" in response.json()["detail"]


class TestIngestEndpoint:
    def test_wrong_arity_400_and_engine_untouched(self):
        engine = constant_engine()
        client = TestClient(create_app(engine))
        response = client.post("/ingest", json={"kind": "add_time_point", "values": [1.0, 2.0]})
        assert response.status_code == 400
        assert engine.state.t_count == 4

    def test_add_time_point(self):
        client = TestClient(create_app(constant_engine()))
        body = client.post("/ingest", json={"kind": "add_time_point", "values": [1.0, 2.0, 3.0]}).json()
        assert body == {"status": "ok", "epoch": 1, "t_count": 5}

    def test_unknown_kind_400(self):
        client = TestClient(create_app(constant_engine()))
        assert client.post("/ingest", json={"kind": "noop"}).status_code == 400

    def test_bootstraps_empty_engine(self):
        client = TestClient(create_app(StreamingEngine()))
        body = client.post(
            "/ingest",
            json={"kind": "add_time_point", "values": [1.0, 2.0], "series_ids": ["x", "y"]},
        ).json()
        assert body["t_count"] == 1
        points = client.get("/msplot").json()["points"]
        assert {p["id"] for p in points} == {"x", "y"}


class TestFpcaEndpoint:
    def test_rank_one_selection(self):
        client = TestClient(create_app(rank_one_engine()))
        body = client.post("/fpca", json={"series_ids": ["A", "B", "C"], "lambda": 1e-8}).json()
        assert body["explained_ratio"][0] == pytest.approx(1.0, abs=1e-9)
        assert len(body["times"]) == 60
        assert len(body["fpcs"][0]["values"]) == 60
        assert set(body["scores"]) == {"A", "B", "C"}

    def test_unknown_ids_listed(self):
        client = TestClient(create_app(rank_one_engine()))
        response = client.post("/fpca", json={"series_ids": ["A", "Q"]})
        assert response.status_code == 422
        assert "Q" in response.json()["detail"]

    def test_selection_too_small(self):
        client = TestClient(create_app(rank_one_engine()))
        assert client.post("/fpca", json={"series_ids": ["A"]}).status_code == 422

    def test_sincos_two_components(self):
        rng = np.random.default_rng(15)
        grid = np.linspace(0.0, 1.0, 120)
        rows = (
            np.outer(rng.normal(0, 1, 25), np.sin(2 * np.pi * grid))
            + np.outer(rng.normal(0, 0.5, 25), np.cos(2 * np.pi * grid))
            + rng.normal(0, 0.01, (25, 120))
        )
        engine = StreamingEngine()
        engine.batch_fit(RawPanel([f"s{i}" for i in range(25)], rows))
        client = TestClient(create_app(engine))
        body = client.post("/fpca", json={"series_ids": [f"s{i}" for i in range(25)]}).json()
        assert body["explained_ratio"][1] >= 0.99

    def test_perturbations_match_mean_and_fpcs(self):
        client = TestClient(create_app(rank_one_engine()))
        body = client.post("/fpca", json={"series_ids": ["A", "B", "C"], "lambda": 1e-8}).json()
        assert len(body["perturbations"]) == len(body["fpcs"])
        mean = np.array(body["mean_curve"])
        for j, pert in enumerate(body["perturbations"]):
            fpc = np.array(body["fpcs"][j]["values"])
            multiple = np.sqrt(2.0 * body["eigenvalues"][j])
            assert np.allclose(pert["plus"], mean + multiple * fpc, atol=1e-9)
            assert np.allclose(pert["minus"], mean - multiple * fpc, atol=1e-9)


class TestTopKEndpoint:
    def test_top_two(self):
        client = TestClient(create_app(rank_one_engine()))
        body = client.get("/fpca/topk", params={"ids": "A,B,C", "component": 1, "k": 2}).json()
        assert body["ranking"] == ["B", "A"]

    def test_bottom_one(self):
        client = TestClient(create_app(rank_one_engine()))
        body = client.get(
            "/fpca/topk", params={"ids": "A,B,C", "component": 1, "k": 1, "mode": "bottom"}
        ).json()
        assert body["ranking"] == ["C"]

    def test_zero_k_rejected(self):
        client = TestClient(create_app(rank_one_engine()))
        assert client.get("/fpca/topk", params={"ids": "A,B,C", "k": 0}).status_code == 422


class TestConfigEndpoint:
    def test_get_defaults(self):
        client = TestClient(create_app(constant_engine()))
        body = client.get("/config").json()
        assert body["push_policy"]["points_per_update"] == 10
        assert body["classify"]["mo_band"] == [0.25, 0.75]
        assert body["drift"]["threshold"] == 10.0
        assert body["fpca"]["basis"] == "bspline"

    def test_put_updates_and_returns(self):
        client = TestClient(create_app(constant_engine()))
        body = client.put(
            "/config",
            json={"push_policy": {"points_per_update": 5}, "drift": {"threshold": 5.0}},
        ).json()
        assert body["push_policy"]["points_per_update"] == 5
        assert body["drift"]["threshold"] == 5.0
        assert client.get("/config").json()["drift"]["threshold"] == 5.0

    def test_invalid_band_rejected(self):
        client = TestClient(create_app(constant_engine()))
        response = client.put("/config", json={"classify": {"mo_band": [0.9, 0.1]}})
        assert response.status_code == 422

    def test_lowered_threshold_triggers_recompute(self):
        panel, _ = generate_synthetic(ScenarioSpec(n_central=16, t_points=500, noise_sd=0.1, seed=6))
        engine = StreamingEngine()
        engine.batch_fit(panel)
        client = TestClient(create_app(engine))
        client.put("/config", json={"drift": {"threshold": 5.0}})
        z, mad = engine.panel.stats_arrays()
        offset = (z + 100.0 * mad.max()).tolist()
        client.post("/ingest", json={"kind": "add_series", "id": "shifted", "values": offset})
        assert engine.wait_for_recompute(timeout=10.0)
        assert client.get("/msplot").json()["epoch"] == 2

    def test_classify_band_change_relabels(self):
        client = TestClient(create_app(constant_engine()))
        before = {p["id"]: p["label"] for p in client.get("/msplot").json()["points"]}
        assert before == {"a": "outlying", "b": "central", "c": "outlying"}
        client.put("/config", json={"classify": {"mo_band": [0.0, 1.0]}})
        after = {p["id"]: p["label"] for p in client.get("/msplot").json()["points"]}
        assert after == {"a": "central", "b": "central", "c": "central"}


class TestLayoutEndpoint:
    def test_absent_layout_404(self):
        client = TestClient(create_app(constant_engine()))
        assert client.get("/layout").status_code == 404

    def test_outlier_counts(self):
        layout = {
            "cells": [
                {"id": "rack0", "row": 0, "col": 0, "series": ["a", "b"]},
                {"id": "rack1", "row": 0, "col": 1, "series": ["c"]},
            ]
        }
        client = TestClient(create_app(constant_engine(), layout=layout))
        body = client.get("/layout").json()
        counts = {c["id"]: c["outlier_count"] for c in body["cells"]}
        assert counts == {"rack0": 1, "rack1": 1}  # 'a' and 'c' are outlying


# -- server-push over a live HTTP server ------------------------------------


class SseCollector:
    def __init__(self, url: str):
        self.events: list[tuple[str, dict]] = []
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, args=(url,), daemon=True)
        self._thread.start()

    def _run(self, url: str) -> None:
        try:
            with httpx.stream("GET", url, timeout=httpx.Timeout(5.0, read=30.0)) as response:
                name = None
                for line in response.iter_lines():
                    if self._stop.is_set():
                        return
                    if line.startswith("event: "):
                        name = line[len("event: "):]
                    elif line.startswith("data: ") and name is not None:
                        self.events.append((name, json.loads(line[len("data: "):])))
                        name = None
        except httpx.HTTPError:
            pass

    def named(self, name: str) -> list[dict]:
        return [payload for n, payload in self.events if n == name]

    def wait_for(self, predicate, timeout: float = 5.0) -> bool:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if predicate(self):
                return True
            time.sleep(0.02)
        return predicate(self)

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=5.0)


@pytest.fixture
def live_server():
    started: list[tuple[uvicorn.Server, threading.Thread]] = []

    def launch(app) -> str:
        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        sock.close()
        config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{port}"
        deadline = time.monotonic() + 10.0
        while time.monotonic() < deadline:
            try:
                httpx.get(base + "/config", timeout=1.0)
                break
            except httpx.HTTPError:
                time.sleep(0.02)
        started.append((server, thread))
        return base

    yield launch
    for server, thread in started:
        server.should_exit = True
        thread.join(timeout=5.0)


class TestServerPush:
    def test_throttle_emits_every_ten_points(self, live_server, rng):
        engine = StreamingEngine()
        engine.batch_fit(RawPanel(["a", "b"], rng.normal(0, 1, (2, 5))))
        base = live_server(create_app(engine, heartbeat=0.05))
        collector = SseCollector(base + "/events")
        time.sleep(0.1)
        with httpx.Client() as client:
            for _ in range(25):
                column = rng.normal(0.0, 1.0, 2).tolist()
                client.post(base + "/ingest", json={"kind": "add_time_point", "values": column})
        assert collector.wait_for(lambda c: len(c.named("msplot_delta")) >= 2)
        time.sleep(0.3)  # allow any extra (incorrect) deltas to surface
        collector.stop()
        assert len(collector.named("msplot_delta")) == 2

    def test_series_add_pushes_immediately(self, live_server, rng):
        engine = StreamingEngine()
        engine.batch_fit(RawPanel(["a", "b"], rng.normal(0, 1, (2, 50))))
        base = live_server(create_app(engine, heartbeat=0.05))
        collector = SseCollector(base + "/events")
        time.sleep(0.1)
        values = rng.normal(0.0, 1.0, 50).tolist()
        httpx.post(base + "/ingest", json={"kind": "add_series", "id": "c", "values": values})
        assert collector.wait_for(lambda c: len(c.named("msplot_delta")) == 1)
        collector.stop()
        delta = collector.named("msplot_delta")[0]
        assert {p["id"] for p in delta["points"]} == {"a", "b", "c"}

    def test_recompute_pushes_started_done_pair(self, live_server):
        panel, _ = generate_synthetic(ScenarioSpec(n_central=12, t_points=400, noise_sd=0.1, seed=21))
        engine = StreamingEngine(EngineConfig(drift_threshold=2.0))
        engine.batch_fit(panel)
        base = live_server(create_app(engine, heartbeat=0.05))
        collector = SseCollector(base + "/events")
        time.sleep(0.1)
        z, mad = engine.panel.stats_arrays()
        offset = (z + 60.0 * mad.max()).tolist()
        httpx.post(base + "/ingest", json={"kind": "add_series", "id": "shift", "values": offset})
        assert collector.wait_for(lambda c: c.named("recompute_done"))
        collector.stop()
        assert collector.named("recompute_started") != []
        assert collector.named("recompute_done")[0]["epoch"] == 2

    def test_idle_stream_heartbeats_only(self, live_server):
        base = live_server(create_app(constant_engine(), heartbeat=0.05))
        collector = SseCollector(base + "/events")
        time.sleep(0.4)
        collector.stop()
        assert collector.events == []

    def test_resume_epoch_handshake_sends_snapshot(self, live_server):
        base = live_server(create_app(constant_engine(), heartbeat=0.05))
        collector = SseCollector(base + "/events?resume_epoch=0")
        assert collector.wait_for(lambda c: c.named("msplot_delta"))
        collector.stop()
        assert collector.named("msplot_delta")[0]["epoch"] == 1
