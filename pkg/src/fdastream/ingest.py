"""Data ingestion: wide CSV files, JSON-lines event streams, synthetic scenarios, replay.

Wide CSV format: UTF-8, header row whose first column is ``ts`` and whose
remaining columns are unique series ids; each data row is one time point.
Blank cells are errors, never imputed.

Event protocol (one JSON object per line):

    {"kind": "add_time_point", "values": [..N..], "ts": 12.5, "series_ids": [..]?}
    {"kind": "add_series", "id": "s9", "values": [..T..]}
    {"kind": "remove_time_point", "index": 0}
    {"kind": "remove_series", "id": "s9"}

``series_ids`` is honored only when the first event bootstraps an empty
engine.  New-series events must carry the full T-length history.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .engine import StreamingEngine
from .errors import ConfigurationError, DataQualityError
from .panel import RawPanel

EVENT_KINDS = ("add_time_point", "add_series", "remove_time_point", "remove_series")


@dataclass(frozen=True)
class StreamEvent:
    """One typed ingestion event."""

    kind: str
    values: Optional[tuple[float, ...]] = None
    series_id: Optional[str] = None
    index: Optional[int] = None
    event_time: Optional[float] = None
    series_ids: Optional[tuple[str, ...]] = None


def event_from_dict(obj: dict) -> StreamEvent:
    """Validate a decoded JSON object into a StreamEvent."""
    if not isinstance(obj, dict):
        raise DataQualityError("event must be a JSON object")
    kind = obj.get("kind")
    if kind not in EVENT_KINDS:
        raise DataQualityError(f"unknown event kind {kind!r}")

    def finite_values(field: str) -> tuple[float, ...]:
        raw = obj.get(field)
        if not isinstance(raw, (list, tuple)) or not raw:
            raise DataQualityError(f"event {kind!r} needs a non-empty {field!r} list")
        vals = []
        for i, v in enumerate(raw):
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise DataQualityError(f"non-finite or non-numeric value at index {i} in {field!r}")
            vals.append(float(v))
        return tuple(vals)

    ts = obj.get("ts")
    if ts is not None and (not isinstance(ts, (int, float)) or not math.isfinite(ts)):
        raise DataQualityError("event 'ts' must be a finite number")

    if kind == "add_time_point":
        ids = obj.get("series_ids")
        if ids is not None:
            if not isinstance(ids, list) or not all(isinstance(s, str) for s in ids):
                raise DataQualityError("'series_ids' must be a list of strings")
            ids = tuple(ids)
        return StreamEvent(kind=kind, values=finite_values("values"), event_time=ts, series_ids=ids)
    if kind == "add_series":
        sid = obj.get("id")
        if not isinstance(sid, str) or not sid:
            raise DataQualityError("event 'add_series' needs a non-empty string 'id'")
        return StreamEvent(kind=kind, series_id=sid, values=finite_values("values"), event_time=ts)
    if kind == "remove_time_point":
        idx = obj.get("index")
        if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
            raise DataQualityError("event 'remove_time_point' needs an integer 'index' >= 0")
        return StreamEvent(kind=kind, index=idx, event_time=ts)
    sid = obj.get("id")
    if not isinstance(sid, str) or not sid:
        raise DataQualityError("event 'remove_series' needs a non-empty string 'id'")
    return StreamEvent(kind=kind, series_id=sid, event_time=ts)


def event_to_dict(event: StreamEvent) -> dict:
    """Inverse of event_from_dict, for forwarding events over HTTP."""
    obj: dict = {"kind": event.kind}
    if event.values is not None:
        obj["values"] = list(event.values)
    if event.series_id is not None:
        obj["id"] = event.series_id
    if event.index is not None:
        obj["index"] = event.index
    if event.event_time is not None:
        obj["ts"] = event.event_time
    if event.series_ids is not None:
        obj["series_ids"] = list(event.series_ids)
    return obj


def parse_event_jsonl(line: str) -> StreamEvent:
    """Parse one JSON-lines event; every line yields one event or one error."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataQualityError(f"invalid JSON event: {exc}") from None
    return event_from_dict(obj)


def read_event_jsonl(path) -> list[StreamEvent]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(parse_event_jsonl(line))
            except DataQualityError as exc:
                raise DataQualityError(f"line {lineno}: {exc}") from None
    return events


def apply_event(engine: StreamingEngine, event: StreamEvent) -> None:
    """Apply one event through the engine's single-writer interface."""
    if event.kind == "add_time_point":
        engine.add_time_point(event.values, event.event_time, series_ids=event.series_ids)
    elif event.kind == "add_series":
        engine.add_series_approx(event.series_id, event.values)
    elif event.kind == "remove_time_point":
        engine.remove_time_point(event.index)
    else:
        engine.remove_series(event.series_id)


# -- wide CSV -------------------------------------------------------------


def parse_wide_csv(path) -> RawPanel:
    """Read a wide CSV (header: ts, series ids; rows: time points) into a panel."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataQualityError(f"{path}: empty file") from None
        if len(header) < 2 or header[0] != "ts":
            raise DataQualityError(f"{path}: line 1: header must be 'ts' followed by series ids")
        ids = header[1:]
        if len(set(ids)) != len(ids):
            dupes = sorted({s for s in ids if ids.count(s) > 1})
            raise DataQualityError(f"{path}: line 1: duplicate series ids {dupes}")
        if any(not s for s in ids):
            raise DataQualityError(f"{path}: line 1: empty series id")

        timestamps: list[float] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataQualityError(
                    f"{path}: line {lineno}: expected {len(header)} cells, got {len(row)}"
                )
            parsed = []
            for col, cell in enumerate(row):
                if cell.strip() == "":
                    raise DataQualityError(f"{path}: line {lineno}: blank cell in column {col + 1}")
                try:
                    value = float(cell)
                except ValueError:
                    raise DataQualityError(
                        f"{path}: line {lineno}: non-numeric cell {cell!r} in column {col + 1}"
                    ) from None
                if not math.isfinite(value):
                    raise DataQualityError(
                        f"{path}: line {lineno}: non-finite cell in column {col + 1}"
                    )
                parsed.append(value)
            timestamps.append(parsed[0])
            rows.append(parsed[1:])
        if not rows:
            raise DataQualityError(f"{path}: no data rows")

    values = np.asarray(rows, dtype=float).T  # (N, T)
    try:
        return RawPanel(ids, values, timestamps=timestamps)
    except (DataQualityError, ConfigurationError) as exc:
        raise DataQualityError(f"{path}: {exc}") from None


def write_wide_csv(panel: RawPanel, path) -> None:
    """Inverse of parse_wide_csv; floats use repr so round-trips are exact."""
    values = panel.values
    ts = panel.timestamps
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ts", *panel.series_ids])
        for t in range(panel.t_count):
            writer.writerow([repr(float(ts[t])), *(repr(float(v)) for v in values[:, t])])


# -- synthetic scenarios ----------------------------------------------------


@dataclass(frozen=True)
class ScenarioSpec:
    """Synthetic panel recipe: a central cluster plus magnitude/shape outliers."""

    n_central: int
    n_magnitude_outliers: int = 0
    n_shape_outliers: int = 0
    t_points: int = 100
    noise_sd: float = 0.1
    seed: int = 0


def generate_synthetic(spec: ScenarioSpec) -> tuple[RawPanel, dict[str, str]]:
    """Deterministic panel of a sine base curve with labeled outlier clusters.

    Central series are base + Gaussian noise.  Magnitude outliers add a
    constant offset of alternating sign with magnitude 5 * noise_sd: far
    enough to dominate the magnitude axis, but small enough that per-column
    MAD estimation noise does not inflate their shape outlyingness past the
    genuine shape outliers.  Shape outliers swap in a doubled-frequency
    oscillation whose mean matches the base curve.  Returns the panel and a
    ground-truth label per series id.
    """
    total = spec.n_central + spec.n_magnitude_outliers + spec.n_shape_outliers
    if min(spec.n_central, spec.n_magnitude_outliers, spec.n_shape_outliers) < 0:
        raise ConfigurationError("series counts must be >= 0")
    if total < 3:
        raise ConfigurationError("scenario needs at least 3 series in total")
    if spec.t_points < 2:
        raise ConfigurationError("scenario needs at least 2 time points")
    if spec.noise_sd <= 0:
        raise ConfigurationError("noise_sd must be > 0")

    rng = np.random.default_rng(spec.seed)
    tau = np.linspace(0.0, 1.0, spec.t_points)
    base = np.sin(2.0 * np.pi * tau)
    offset = 5.0 * spec.noise_sd

    rows = []
    ids = []
    labels: dict[str, str] = {}
    for i in range(spec.n_central):
        sid = f"central_{i:03d}"
        rows.append(base + rng.normal(0.0, spec.noise_sd, spec.t_points))
        ids.append(sid)
        labels[sid] = "central"
    for i in range(spec.n_magnitude_outliers):
        sid = f"magnitude_{i:03d}"
        sign = 1.0 if i % 2 == 0 else -1.0
        rows.append(base + sign * offset + rng.normal(0.0, spec.noise_sd, spec.t_points))
        ids.append(sid)
        labels[sid] = "magnitude"
    for i in range(spec.n_shape_outliers):
        sid = f"shape_{i:03d}"
        rows.append(np.sin(4.0 * np.pi * tau) + rng.normal(0.0, spec.noise_sd, spec.t_points))
        ids.append(sid)
        labels[sid] = "shape"

    panel = RawPanel(ids, np.asarray(rows), timestamps=np.arange(spec.t_points, dtype=float))
    return panel, labels


# -- replay -----------------------------------------------------------------


@dataclass
class ReplayReport:
    delivered: int
    total: int
    duration_s: float
    completed: bool
    error: Optional[str] = None
    latency_quantiles: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "delivered": self.delivered,
            "total": self.total,
            "duration_s": self.duration_s,
            "completed": self.completed,
            "error": self.error,
            "latency_quantiles": self.latency_quantiles,
        }


def panel_to_events(panel: RawPanel) -> list[StreamEvent]:
    """One add_time_point event per column; the first carries the series ids."""
    values = panel.values
    ts = panel.timestamps
    events = []
    for t in range(panel.t_count):
        events.append(
            StreamEvent(
                kind="add_time_point",
                values=tuple(float(v) for v in values[:, t]),
                event_time=float(ts[t]),
                series_ids=panel.series_ids if t == 0 else None,
            )
        )
    return events


def replay(
    source: Union[RawPanel, Iterable[StreamEvent]],
    rate: Union[float, str],
    sink: Callable[[StreamEvent], None],
) -> ReplayReport:
    """Deliver events to a sink in order, paced at ``rate`` events per second.

    ``rate="max"`` disables pacing.  A sink exception aborts the replay and
    the partial report carries the error.  Latency quantiles cover the sink
    call itself.
    """
    if isinstance(source, RawPanel):
        events = panel_to_events(source)
    else:
        events = list(source)
    if isinstance(rate, str):
        if rate != "max":
            raise ConfigurationError(f"rate must be a positive number or 'max', got {rate!r}")
        interval = 0.0
    else:
        if not rate > 0:
            raise ConfigurationError("rate must be > 0")
        interval = 1.0 / float(rate)

    start = time.perf_counter()
    latencies: list[float] = []
    delivered = 0
    error = None
    for i, event in enumerate(events):
        if interval:
            target = start + i * interval
            now = time.perf_counter()
            if target > now:
                time.sleep(target - now)
        began = time.perf_counter()
        try:
            sink(event)
        except Exception as exc:  # noqa: BLE001 - reported, not swallowed
            error = f"{type(exc).__name__}: {exc}"
            break
        latencies.append(time.perf_counter() - began)
        delivered += 1

    duration = time.perf_counter() - start
    quantiles = None
    if latencies:
        arr = np.asarray(latencies)
        quantiles = {
            "p50": float(np.percentile(arr, 50)),
            "p90": float(np.percentile(arr, 90)),
            "p99": float(np.percentile(arr, 99)),
            "max": float(arr.max()),
        }
    return ReplayReport(
        delivered=delivered,
        total=len(events),
        duration_s=duration,
        completed=error is None and delivered == len(events),
        error=error,
        latency_quantiles=quantiles,
    )
