#!/usr/bin/env python3
"""Capture service payloads as frontend test fixtures.

Runs the real service against the deterministic synthetic scenario and dumps
each endpoint's JSON, plus an oracle ranking computed directly through the
library (independent of the HTTP layer) for the UI round-trip test.
"""

import json
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from fdastream import (
    BasisSpec,
    ScenarioSpec,
    SmoothedCurve,
    StreamingEngine,
    build_basis,
    create_app,
    fit_fpca,
    generate_synthetic,
    smooth_curves,
    top_k_series,
)

OUT = Path(__file__).resolve().parents[1] / "frontend" / "test" / "fixtures"

SELECTION: list = []  # filled with every series id; a whole-plot lasso selects all
LAYOUT = {
    "cells": [
        {"id": "rack0", "row": 0, "col": 0, "series": [f"central_{i:03d}" for i in range(10)]},
        {"id": "rack1", "row": 0, "col": 1, "series": [f"central_{i:03d}" for i in range(10, 20)]},
        {"id": "rack2", "row": 1, "col": 0, "series": ["magnitude_000", "magnitude_001"]},
        {"id": "rack3", "row": 1, "col": 1, "series": ["shape_000", "shape_001"]},
    ]
}


def dump(name: str, payload) -> None:
    OUT.joinpath(name).write_text(json.dumps(payload, indent=1), encoding="utf-8")
    print(f"wrote {name}")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    panel, _ = generate_synthetic(
        ScenarioSpec(n_central=20, n_magnitude_outliers=2, n_shape_outliers=2,
                     t_points=200, noise_sd=0.1, seed=42)
    )
    engine = StreamingEngine()
    engine.batch_fit(panel)
    SELECTION.extend(panel.series_ids)
    client = TestClient(create_app(engine, layout=LAYOUT))

    dump("msplot.json", client.get("/msplot").json())
    dump("config.json", client.get("/config").json())
    dump("layout.json", client.get("/layout").json())
    dump("series_sel.json", client.get("/series", params={"ids": ",".join(SELECTION)}).json())

    fpca = client.post("/fpca", json={"series_ids": SELECTION}).json()
    dump("fpca_sel.json", fpca)
    ids = ",".join(SELECTION)
    dump("topk_c1_k3.json", client.get("/fpca/topk", params={"ids": ids, "component": 1, "k": 3}).json())
    dump("topk_c1_k10.json", client.get("/fpca/topk", params={"ids": ids, "component": 1, "k": 10}).json())
    dump(
        "topk_c1_bottom1.json",
        client.get("/fpca/topk", params={"ids": ids, "component": 1, "k": 1, "mode": "bottom"}).json(),
    )
    magnitudes = sorted((abs(fpca["scores"][s][0]) for s in SELECTION), reverse=True)
    threshold = float(magnitudes[4])  # keeps exactly the top 5
    dump(
        "topk_c1_k10_threshold.json",
        client.get(
            "/fpca/topk",
            params={"ids": ids, "component": 1, "k": 10, "threshold": threshold},
        ).json(),
    )

    # oracle ranking straight through the library, bypassing the HTTP layer;
    # must run on the same panel state the /fpca fixture was served from
    rows, timestamps = engine.selection_matrix(SELECTION)
    basis = build_basis(BasisSpec(), timestamps)
    from fdastream import select_lambda_gcv

    lam = select_lambda_gcv(rows, basis)
    coefs = smooth_curves(rows, basis, lam)
    model = fit_fpca([SmoothedCurve(c, lam, s) for c, s in zip(coefs, SELECTION)], basis)
    oracle = {
        "selection": SELECTION,
        "topk_c1_k3": top_k_series(model.series_ids, model.scores, 1, 3),
        "topk_c1_k10": top_k_series(model.series_ids, model.scores, 1, 10),
        "bottom_c1_k1": top_k_series(model.series_ids, model.scores, 1, 1, mode="bottom"),
        "threshold": threshold,
        "topk_c1_k10_threshold": top_k_series(
            model.series_ids, model.scores, 1, 10, threshold=threshold
        ),
    }
    dump("oracle.json", oracle)

    # a same-epoch delta payload (snapshot after one more time point)
    rng = np.random.default_rng(99)
    engine.add_time_point(rng.normal(0.0, 1.0, engine.panel.n_series))
    dump("msplot_delta.json", engine.snapshot().to_dict())

    # a cross-epoch snapshot after a full recompute
    engine.recompute_now()
    dump("msplot_epoch2.json", engine.snapshot().to_dict())


if __name__ == "__main__":
    main()
