"""Streaming magnitude/shape outlyingness engine.

For every series n the engine maintains the running mean directional
outlyingness ``mo`` and the running mean of its square ``fo`` over the T time
points seen so far; the shape outlyingness is derived as ``vo = fo - mo**2``.
Each reading's directional outlyingness is its deviation from the
cross-section median scaled by the cross-section MAD.

Adding or removing a time point updates every series exactly in O(N) work:

    mo' = (T * mo + O_new) / (T + 1)        fo' = (T * fo + O_new**2) / (T + 1)

because one time point's cross-section statistics do not depend on any other
time point.  Adding a *series*, by contrast, would shift every cached median,
so new series are admitted approximately against the cached statistics and a
KL-divergence drift monitor decides when a full background recompute is due.

Concurrency: single writer, many readers.  All mutations serialize through
one lock; ``snapshot()`` returns immutable epoch-consistent views.  A full
recompute runs on a background thread over a copied panel while live events
keep applying; the events are also queued and replayed against the fresh
result before it is atomically swapped in, so incremental and progressive
results never overwrite each other.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import rel_entr

from .errors import ConfigurationError, DataQualityError
from .panel import MAD_FLOOR_SCALE, CrossSectionStats, RawPanel

LABEL_CENTRAL = "central"
LABEL_OUTLYING = "outlying"

# vo is a variance and may only dip below zero by floating noise.
VO_TOLERANCE = 1e-9


def directional_outlyingness(x: float, stats: CrossSectionStats) -> float:
    """Signed, scale-normalized deviation of one reading from its cross-section."""
    return (x - stats.z) / stats.denominator


def _column_outlyingness(column: np.ndarray, z, mad) -> np.ndarray:
    denom = np.maximum(mad, MAD_FLOOR_SCALE * np.maximum(1.0, np.abs(z)))
    return (column - z) / denom


def kl_divergence_histogram(p_samples, q_samples, bin_count: int = 32) -> float:
    """KL(P||Q) between two sample sets histogrammed over their pooled range.

    Bin counts get add-one (Laplace) smoothing so empty bins never produce
    log(0).  Identical sample multisets give exactly 0; a degenerate pooled
    range (all values equal) is defined as 0.
    """
    if bin_count < 2:
        raise ConfigurationError("bin_count must be >= 2")
    p = np.asarray(p_samples, dtype=float)
    q = np.asarray(q_samples, dtype=float)
    lo = min(p.min(), q.min())
    hi = max(p.max(), q.max())
    if not hi > lo:
        return 0.0
    edges = np.linspace(lo, hi, bin_count + 1)
    pc = np.histogram(p, bins=edges)[0] + 1.0
    qc = np.histogram(q, bins=edges)[0] + 1.0
    pp = pc / pc.sum()
    qq = qc / qc.sum()
    return float(np.sum(rel_entr(pp, qq)))


def drift_check(panel: RawPanel, new_series, bin_count: int = 32) -> float:
    """Drift score for admitting ``new_series`` without refreshing medians.

    Compares the distribution over t of the new series' absolute deviations
    from the cached medians against the distribution of the cached MAD
    values.  Flags low confidence when fewer time points than bins exist.
    """
    values = np.asarray(new_series, dtype=float)
    z, mad = panel.stats_arrays()
    if values.shape != z.shape:
        raise DataQualityError(f"expected {z.shape[0]} readings, got {values.shape}")
    if values.shape[0] < bin_count:
        warnings.warn(
            f"drift check over {values.shape[0]} time points with {bin_count} bins is low-confidence",
            stacklevel=2,
        )
    return kl_divergence_histogram(np.abs(values - z), mad, bin_count)


@dataclass(frozen=True)
class MsPoint:
    """One circle of the MS plot."""

    series_id: str
    mo: float
    vo: float
    label: str = LABEL_CENTRAL
    approximate: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.series_id,
            "mo": self.mo,
            "vo": self.vo,
            "label": self.label,
            "approximate": self.approximate,
        }


@dataclass(frozen=True)
class MsView:
    """Immutable, epoch-consistent MS-plot snapshot."""

    points: tuple[MsPoint, ...]
    epoch: int
    t_count: int

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "t_count": self.t_count,
            "points": [p.to_dict() for p in self.points],
        }


def _central_mask(
    mo: np.ndarray, vo: np.ndarray, mo_band: tuple[float, float], vo_cap: float
) -> np.ndarray:
    lo_f, hi_f = mo_band
    if not (0.0 <= lo_f <= hi_f <= 1.0) or not (0.0 <= vo_cap <= 1.0):
        raise ConfigurationError("classification bands must be fractions within [0, 1]")
    mo_min = mo.min()
    mo_rng = mo.max() - mo_min
    vo_min = vo.min()
    vo_rng = vo.max() - vo_min
    lo = mo_min + lo_f * mo_rng
    hi = mo_min + hi_f * mo_rng
    cap = vo_min + vo_cap * vo_rng
    return (mo >= lo) & (mo <= hi) & (vo <= cap)


def classify(
    points: Sequence[MsPoint],
    mo_band: tuple[float, float] = (0.25, 0.75),
    vo_cap: float = 0.75,
) -> list[MsPoint]:
    """Label points central/outlying by their position in the value ranges.

    A point is central when its mo lies inside the configured band of the mo
    range and its vo does not exceed the configured fraction of the vo range.
    Degenerate (zero-width) ranges count as inside, so a single point or a
    set of identical points is central.
    """
    if not points:
        _central_mask(np.zeros(1), np.zeros(1), mo_band, vo_cap)  # still validate bands
        return []
    mo = np.array([p.mo for p in points])
    vo = np.array([p.vo for p in points])
    central = _central_mask(mo, vo, mo_band, vo_cap)
    return [
        replace(p, label=LABEL_CENTRAL if c else LABEL_OUTLYING)
        for p, c in zip(points, central)
    ]


@dataclass
class DriftMonitor:
    """Gate between approximate series admission and full recomputation."""

    threshold: float = 10.0
    bin_count: int = 32
    approx_budget: int = 64
    pending_recompute: bool = False
    approx_count: int = 0
    last_kl: Optional[float] = None

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ConfigurationError("drift threshold must be > 0")
        if self.bin_count < 2:
            raise ConfigurationError("bin_count must be >= 2")
        if self.approx_budget < 1:
            raise ConfigurationError("approx_budget must be >= 1")

    def should_recompute(self, kl: float) -> bool:
        self.last_kl = kl
        self.approx_count += 1
        return kl > self.threshold or self.approx_count >= self.approx_budget


@dataclass
class EngineConfig:
    drift_threshold: float = 10.0
    drift_bins: int = 32
    approx_budget: int = 64
    mo_band: tuple[float, float] = (0.25, 0.75)
    vo_cap: float = 0.75


@dataclass
class OutlyingnessState:
    """Per-series running (mo, fo) plus bookkeeping; the MS plot's backing store."""

    mo: np.ndarray = field(default_factory=lambda: np.empty(0))
    fo: np.ndarray = field(default_factory=lambda: np.empty(0))
    approx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    t_count: int = 0
    epoch: int = 0

    def vo(self) -> np.ndarray:
        vo = self.fo - self.mo**2
        if vo.size and float(vo.min()) < -VO_TOLERANCE:
            raise AssertionError(f"vo fell below -{VO_TOLERANCE}: {float(vo.min())}")
        return np.maximum(vo, 0.0)

    def fold_in_column(self, o_col: np.ndarray) -> None:
        t = self.t_count
        self.mo = (t * self.mo + o_col) / (t + 1)
        self.fo = (t * self.fo + o_col**2) / (t + 1)
        self.t_count = t + 1

    def fold_out_column(self, o_col: np.ndarray) -> None:
        t = self.t_count
        if t <= 1:
            raise ConfigurationError("state must retain at least one time point")
        self.mo = (t * self.mo - o_col) / (t - 1)
        self.fo = (t * self.fo - o_col**2) / (t - 1)
        self.t_count = t - 1


class StreamingEngine:
    """Maintains exact and approximate directional outlyingness for a panel.

    All mutators raise without side effects on bad input.  ``snapshot()`` is
    safe from any thread.
    """

    def __init__(self, config: Optional[EngineConfig] = None, *, auto_recompute: bool = True) -> None:
        self._config = config or EngineConfig()
        self._drift = DriftMonitor(
            threshold=self._config.drift_threshold,
            bin_count=self._config.drift_bins,
            approx_budget=self._config.approx_budget,
        )
        self._auto_recompute = auto_recompute
        self._panel: Optional[RawPanel] = None
        self._state = OutlyingnessState()
        self._lock = threading.RLock()
        self._listeners: list[Callable[[dict], None]] = []
        self._worker: Optional[threading.Thread] = None
        self._replaying = False
        self._replay_queue: list[tuple] = []
        self._recompute_cv = threading.Condition()
        self._active_recomputes = 0

    # -- configuration and observers -------------------------------------

    @property
    def config(self) -> EngineConfig:
        return self._config

    @property
    def drift_monitor(self) -> DriftMonitor:
        return self._drift

    @property
    def panel(self) -> Optional[RawPanel]:
        return self._panel

    @property
    def state(self) -> OutlyingnessState:
        return self._state

    def add_listener(self, fn: Callable[[dict], None]) -> None:
        """Register a callback for recompute/degenerate notifications."""
        self._listeners.append(fn)

    def configure(self, **kwargs) -> None:
        """Update tunables (classification bands, drift gate) in place."""
        with self._lock:
            cfg = replace(self._config, **kwargs)
            classify([], cfg.mo_band, cfg.vo_cap)  # validates the bands
            drift = DriftMonitor(
                threshold=cfg.drift_threshold,
                bin_count=cfg.drift_bins,
                approx_budget=cfg.approx_budget,
                pending_recompute=self._drift.pending_recompute,
                approx_count=self._drift.approx_count,
                last_kl=self._drift.last_kl,
            )
            self._config = cfg
            self._drift = drift

    # -- fitting and incremental updates ----------------------------------

    def batch_fit(self, panel: RawPanel) -> MsView:
        """Fit from scratch over a whole panel; the engine takes ownership."""
        self.wait_for_recompute()
        with self._lock:
            self._panel = panel
            self._refit_locked()
            return self._snapshot_locked()

    def add_time_point(
        self,
        column: Sequence[float],
        timestamp: Optional[float] = None,
        series_ids: Optional[Sequence[str]] = None,
    ) -> None:
        """Fold one new cross-section into every series, exactly, in O(N).

        On an empty engine this bootstraps a panel of T=1; ``series_ids``
        names the series then (generated ids otherwise) and is ignored once
        a panel exists.
        """
        events: list[dict] = []
        with self._lock:
            if self._panel is None:
                col = np.asarray(column, dtype=float)
                ids = [str(s) for s in series_ids] if series_ids else [f"s{i}" for i in range(col.size)]
                ts = [timestamp] if timestamp is not None else None
                panel = RawPanel(ids, col.reshape(-1, 1), timestamps=ts)
                self._panel = panel
                self._refit_locked()
                return

            col = np.asarray(column, dtype=float)
            stats = self._panel.append_time_point(col, timestamp)
            z, mad = self._panel.stats_arrays()
            o_col = _column_outlyingness(col, z[-1], mad[-1])
            self._state.fold_in_column(o_col)
            if stats.degenerate:
                events.append(
                    {
                        "type": "degenerate_warning",
                        "t_index": stats.t_index,
                        "degenerate_count": self._panel.degenerate_count,
                    }
                )
            if self._replaying:
                self._replay_queue.append(("add_tp", col.copy(), float(self._panel.timestamps[-1])))
            window = self._panel.retention_window
            if window is not None and self._panel.t_count > window:
                self._remove_time_point_locked(0)
        self._emit(events)

    def remove_time_point(self, t_index: int) -> None:
        """Inverse of add_time_point; exact downdate from cached statistics."""
        with self._lock:
            self._require_panel()
            self._remove_time_point_locked(t_index)

    def _remove_time_point_locked(self, t_index: int) -> None:
        column, stats = self._panel.remove_time_point(t_index)
        o_col = _column_outlyingness(column, stats.z, stats.mad)
        self._state.fold_out_column(o_col)
        if self._replaying:
            self._replay_queue.append(("rm_tp", int(t_index)))

    # -- progressive series updates ---------------------------------------

    def add_series_approx(self, series_id: str, values: Sequence[float]) -> tuple[MsPoint, float]:
        """Admit a new series against cached medians; returns (point, drift score).

        The new series' history is scored with the statistics already cached
        for every time point (medians are not refreshed).  If the drift score
        exceeds the threshold, or the budget of approximate admissions runs
        out, a full background recompute is scheduled; the approximate point
        is still returned immediately.
        """
        events: list[dict] = []
        with self._lock:
            self._require_panel()
            kl = drift_check(self._panel, values, self._drift.bin_count)
            vals = np.asarray(values, dtype=float)
            self._panel.append_series(series_id, vals)
            z, mad = self._panel.stats_arrays()
            o_hist = _column_outlyingness(vals, z, mad)
            self._state.mo = np.append(self._state.mo, o_hist.mean())
            self._state.fo = np.append(self._state.fo, np.mean(o_hist**2))
            self._state.approx = np.append(self._state.approx, True)
            if self._replaying:
                self._replay_queue.append(("add_series", str(series_id), vals.copy()))
            if self._drift.should_recompute(kl):
                if self._auto_recompute:
                    events.extend(self._schedule_recompute_locked())
                else:
                    self._drift.pending_recompute = True
            point = self._label_one_locked(self._panel.n_series - 1)
        self._emit(events)
        return point, kl

    def remove_series(self, series_id: str) -> float:
        """Drop a series; medians stay cached, gated by the same drift check."""
        events: list[dict] = []
        with self._lock:
            self._require_panel()
            idx = self._panel.index_of(series_id)
            kl = drift_check(self._panel, self._panel.series_values(series_id), self._drift.bin_count)
            self._panel.remove_series(series_id)
            self._state.mo = np.delete(self._state.mo, idx)
            self._state.fo = np.delete(self._state.fo, idx)
            self._state.approx = np.delete(self._state.approx, idx)
            if self._replaying:
                self._replay_queue.append(("rm_series", str(series_id)))
            if self._drift.should_recompute(kl):
                if self._auto_recompute:
                    events.extend(self._schedule_recompute_locked())
                else:
                    self._drift.pending_recompute = True
        self._emit(events)
        return kl

    # -- recomputation ----------------------------------------------------

    def recompute_now(self) -> MsView:
        """Synchronous full recompute; waits out any background run first."""
        self.wait_for_recompute()
        with self._lock:
            self._require_panel()
            started = {"type": "recompute_started", "epoch": self._state.epoch}
            self._refit_locked()
            done = self._done_event_locked()
            view = self._snapshot_locked()
        self._emit([started, done])
        return view

    def wait_for_recompute(self, timeout: Optional[float] = None) -> bool:
        """Block until no background recompute is in flight (events included)."""
        with self._recompute_cv:
            return self._recompute_cv.wait_for(lambda: self._active_recomputes == 0, timeout)

    def _refit_locked(self) -> None:
        panel = self._panel
        panel.refresh_stats()
        data = panel.values.T  # (T, N), time-major view
        z, mad = panel.stats_arrays()
        o = _column_outlyingness(data, z[:, None], mad[:, None])
        self._state.mo = o.mean(axis=0)
        self._state.fo = np.mean(o**2, axis=0)
        self._state.approx = np.zeros(panel.n_series, dtype=bool)
        self._state.t_count = panel.t_count
        self._state.epoch += 1
        self._drift.approx_count = 0
        self._drift.pending_recompute = False

    def _schedule_recompute_locked(self) -> list[dict]:
        # A trigger while a recompute is in flight coalesces into that run:
        # every event since the copy (including the triggering one) is queued
        # and replayed against the fresh result, so one pass suffices and the
        # epoch increments exactly once.
        self._drift.pending_recompute = True
        if self._replaying:
            return []
        with self._recompute_cv:
            self._active_recomputes += 1
        self._replaying = True
        self._replay_queue = []
        panel_copy = self._panel.copy()
        base_epoch = self._state.epoch
        self._worker = threading.Thread(
            target=self._recompute_worker, args=(panel_copy,), daemon=True
        )
        self._worker.start()
        return [{"type": "recompute_started", "epoch": base_epoch}]

    def _recompute_worker(self, panel_copy: RawPanel) -> None:
        try:
            shadow = StreamingEngine(replace(self._config), auto_recompute=False)
            shadow.batch_fit(panel_copy)
            with self._lock:
                for record in self._replay_queue:
                    _apply_replay(shadow, record)
                self._replay_queue = []
                self._adopt_locked(shadow)
                done = self._done_event_locked()
                self._replaying = False
            self._emit([done])
        finally:
            with self._recompute_cv:
                self._active_recomputes -= 1
                self._recompute_cv.notify_all()

    def _adopt_locked(self, shadow: "StreamingEngine") -> None:
        assert shadow.panel.t_count == self._panel.t_count
        assert shadow.panel.n_series == self._panel.n_series
        epoch = self._state.epoch + 1
        self._panel = shadow.panel
        self._state = shadow.state
        self._state.epoch = epoch
        self._drift.approx_count = shadow.drift_monitor.approx_count
        self._drift.pending_recompute = False

    def _done_event_locked(self) -> dict:
        return {
            "type": "recompute_done",
            "epoch": self._state.epoch,
            "t_count": self._state.t_count,
            "n_series": self._panel.n_series,
        }

    # -- read side ----------------------------------------------------------

    def snapshot(self) -> MsView:
        """Consistent immutable MS-plot view for the current epoch."""
        with self._lock:
            return self._snapshot_locked()

    def _snapshot_locked(self) -> MsView:
        if self._panel is None:
            return MsView(points=(), epoch=0, t_count=0)
        mo = self._state.mo
        vo = self._state.vo()
        central = _central_mask(mo, vo, self._config.mo_band, self._config.vo_cap)
        points = tuple(
            MsPoint(
                series_id=sid,
                mo=float(mo[i]),
                vo=float(vo[i]),
                label=LABEL_CENTRAL if central[i] else LABEL_OUTLYING,
                approximate=bool(self._state.approx[i]),
            )
            for i, sid in enumerate(self._panel.series_ids)
        )
        return MsView(points=points, epoch=self._state.epoch, t_count=self._state.t_count)

    def _label_one_locked(self, idx: int) -> MsPoint:
        mo = self._state.mo
        vo = self._state.vo()
        central = _central_mask(mo, vo, self._config.mo_band, self._config.vo_cap)
        return MsPoint(
            series_id=self._panel.series_id_at(idx),
            mo=float(mo[idx]),
            vo=float(vo[idx]),
            label=LABEL_CENTRAL if central[idx] else LABEL_OUTLYING,
            approximate=bool(self._state.approx[idx]),
        )

    def status(self) -> tuple[int, int]:
        """(epoch, t_count) without building a snapshot."""
        with self._lock:
            return self._state.epoch, self._state.t_count

    def get_series(
        self,
        series_ids: Sequence[str],
        start: Optional[int] = None,
        end: Optional[int] = None,
    ) -> dict:
        """Raw values plus the cross-series mean of a selection, for the data view."""
        with self._lock:
            self._require_panel()
            ids = [str(s) for s in series_ids]
            rows = np.stack([self._panel.series_values(s) for s in ids])
            ts = self._panel.timestamps
        sl = slice(start, end)
        rows = rows[:, sl]
        return {
            "ids": ids,
            "timestamps": ts[sl].tolist(),
            "series": {s: rows[i].tolist() for i, s in enumerate(ids)},
            "mean": rows.mean(axis=0).tolist(),
        }

    def selection_matrix(self, series_ids: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """Copies of (rows, timestamps) for a selection; input to FPCA."""
        with self._lock:
            self._require_panel()
            rows = np.stack([self._panel.series_values(str(s)) for s in series_ids])
            return rows, self._panel.timestamps

    def diagnostics(self) -> dict:
        with self._lock:
            return {
                "epoch": self._state.epoch,
                "t_count": self._state.t_count,
                "n_series": self._panel.n_series if self._panel else 0,
                "degenerate_columns": self._panel.degenerate_count if self._panel else 0,
                "approx_series": int(self._state.approx.sum()),
                "approx_admissions": self._drift.approx_count,
                "pending_recompute": self._drift.pending_recompute,
                "last_drift_kl": self._drift.last_kl,
            }

    # -- internals -----------------------------------------------------------

    def _require_panel(self) -> None:
        if self._panel is None:
            raise ConfigurationError("engine has no data; fit a panel or add a time point first")

    def _emit(self, events: list[dict]) -> None:
        for ev in events:
            for fn in self._listeners:
                fn(ev)


def _apply_replay(shadow: StreamingEngine, record: tuple) -> None:
    kind = record[0]
    if kind == "add_tp":
        shadow.add_time_point(record[1], record[2])
    elif kind == "rm_tp":
        shadow.remove_time_point(record[1])
    elif kind == "add_series":
        shadow.add_series_approx(record[1], record[2])
    elif kind == "rm_series":
        shadow.remove_series(record[1])
    else:  # pragma: no cover - defensive
        raise AssertionError(f"unknown replay record {kind!r}")
