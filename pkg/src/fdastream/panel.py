"""Growing panel of univariate time series with per-time-point robust statistics.

The panel stores readings time-major (one contiguous row per time point) so
that appending a time point touches a single contiguous block regardless of
how many points already exist.  Cross-section statistics (median and MAD of
the N readings at each time point) are cached alongside the data; appending
a *series* deliberately leaves the cached statistics untouched, which is what
the progressive approximation path relies on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DataQualityError

# Scale of the guard applied to a vanishing MAD denominator.
MAD_FLOOR_SCALE = 1e-12


def mad_floor(z: float) -> float:
    """Smallest denominator admitted for a cross-section with median ``z``."""
    return MAD_FLOOR_SCALE * max(1.0, abs(z))


@dataclass(frozen=True)
class CrossSectionStats:
    """Robust location and scale of one time point across all series.

    ``z`` is the median of the N readings, ``mad`` the median of absolute
    deviations from it.  ``degenerate`` marks cross-sections whose MAD fell
    below the guard floor (e.g. more than half the readings identical).
    """

    z: float
    mad: float
    t_index: int = 0
    degenerate: bool = False

    @property
    def denominator(self) -> float:
        """MAD guarded away from zero; the scale used for outlyingness."""
        return max(self.mad, mad_floor(self.z))


def cross_section_stats(column: Sequence[float], t_index: int = 0) -> CrossSectionStats:
    """Compute median and MAD of one cross-section (the N readings at time t).

    Even N uses the mean of the two middle order statistics.  Non-finite
    readings are rejected with the offending series index named.
    """
    col = np.asarray(column, dtype=float)
    if col.ndim != 1 or col.size == 0:
        raise ConfigurationError("cross-section must be a non-empty 1-d sequence")
    bad = np.flatnonzero(~np.isfinite(col))
    if bad.size:
        raise DataQualityError(
            f"non-finite reading at series index {int(bad[0])} in cross-section {t_index}"
        )
    z = float(np.median(col))
    mad = float(np.median(np.abs(col - z)))
    return CrossSectionStats(z=z, mad=mad, t_index=int(t_index), degenerate=mad < mad_floor(z))


def _check_finite_vector(values: np.ndarray, what: str) -> None:
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise DataQualityError(f"non-finite value at index {int(bad[0])} in {what}")


class RawPanel:
    """Append-only N x T matrix of readings plus cached cross-section stats.

    Rows are series, columns are time points.  Internally the data is stored
    transposed (time-major) in a capacity-doubling buffer so both time-point
    and series appends are amortized O(size of the new slice).
    """

    def __init__(
        self,
        series_ids: Sequence[str],
        values,
        timestamps: Optional[Sequence[float]] = None,
        retention_window: Optional[int] = None,
    ) -> None:
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ConfigurationError("panel values must be a non-empty 2-d array (series x time)")
        n, t = values.shape
        ids = [str(s) for s in series_ids]
        if len(ids) != n:
            raise ConfigurationError(f"{len(ids)} series ids for {n} rows")
        if len(set(ids)) != len(ids):
            raise DataQualityError("series ids must be unique")
        for i in range(n):
            _check_finite_vector(values[i], f"series {ids[i]!r}")

        if timestamps is None:
            ts = np.arange(t, dtype=float)
        else:
            ts = np.asarray(timestamps, dtype=float)
            if ts.shape != (t,):
                raise ConfigurationError(f"expected {t} timestamps, got {ts.shape}")
            _check_finite_vector(ts, "timestamps")
            if t > 1 and not np.all(np.diff(ts) > 0):
                raise DataQualityError("timestamps must be strictly increasing")
            _warn_if_irregular(ts)
        if retention_window is not None and retention_window < 1:
            raise ConfigurationError("retention_window must be >= 1")

        self._ids: list[str] = ids
        self._id_index: dict[str, int] = {s: i for i, s in enumerate(ids)}
        self._n = n
        self._t = t
        self.retention_window = retention_window

        t_cap = max(64, _next_pow2(t))
        n_cap = max(8, n)
        self._data = np.empty((t_cap, n_cap), dtype=float)
        self._data[:t, :n] = values.T
        self._ts = np.empty(t_cap, dtype=float)
        self._ts[:t] = ts
        self._z = np.empty(t_cap, dtype=float)
        self._mad = np.empty(t_cap, dtype=float)
        self._degenerate = np.zeros(t_cap, dtype=bool)
        self.refresh_stats()

    # -- shape and identity ------------------------------------------------

    @property
    def n_series(self) -> int:
        return self._n

    @property
    def t_count(self) -> int:
        return self._t

    @property
    def series_ids(self) -> tuple[str, ...]:
        return tuple(self._ids)

    @property
    def timestamps(self) -> np.ndarray:
        return self._ts[: self._t].copy()

    @property
    def values(self) -> np.ndarray:
        """Readings as an (N, T) read-only view, one row per series."""
        view = self._data[: self._t, : self._n].T
        view.setflags(write=False)
        return view

    def index_of(self, series_id: str) -> int:
        try:
            return self._id_index[series_id]
        except KeyError:
            raise DataQualityError(f"unknown series id {series_id!r}") from None

    def series_id_at(self, idx: int) -> str:
        return self._ids[idx]

    def column(self, t_index: int) -> np.ndarray:
        """The N readings at one time point (read-only view)."""
        view = self._data[t_index, : self._n]
        view.setflags(write=False)
        return view

    def series_values(self, series_id: str) -> np.ndarray:
        view = self._data[: self._t, self.index_of(series_id)]
        view.setflags(write=False)
        return view

    # -- cached cross-section statistics ------------------------------------

    def stats(self, t_index: int) -> CrossSectionStats:
        if not 0 <= t_index < self._t:
            raise ConfigurationError(f"time index {t_index} out of range [0, {self._t})")
        return CrossSectionStats(
            z=float(self._z[t_index]),
            mad=float(self._mad[t_index]),
            t_index=t_index,
            degenerate=bool(self._degenerate[t_index]),
        )

    def stats_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached (z, mad) arrays over the current T (read-only views)."""
        z = self._z[: self._t]
        mad = self._mad[: self._t]
        z.setflags(write=False)
        mad.setflags(write=False)
        return z, mad

    @property
    def degenerate_count(self) -> int:
        return int(self._degenerate[: self._t].sum())

    def refresh_stats(self) -> None:
        """Recompute every cached cross-section statistic from the raw data."""
        data = self._data[: self._t, : self._n]
        z = np.median(data, axis=1)
        mad = np.median(np.abs(data - z[:, None]), axis=1)
        self._z[: self._t] = z
        self._mad[: self._t] = mad
        self._degenerate[: self._t] = mad < MAD_FLOOR_SCALE * np.maximum(1.0, np.abs(z))

    # -- mutation ------------------------------------------------------------

    def append_time_point(self, column: Sequence[float], timestamp: Optional[float] = None) -> CrossSectionStats:
        """Append one cross-section; computes and caches its statistics.

        Validates before mutating so a rejected column leaves the panel
        unchanged.
        """
        col = np.asarray(column, dtype=float)
        if col.shape != (self._n,):
            raise DataQualityError(f"expected {self._n} readings, got {col.shape}")
        stats = cross_section_stats(col, t_index=self._t)
        if timestamp is None:
            timestamp = self._next_timestamp()
        elif self._t > 0 and timestamp <= self._ts[self._t - 1]:
            raise DataQualityError("timestamp must exceed the last one")

        if self._t == self._data.shape[0]:
            self._grow_time(self._t + 1)
        t = self._t
        self._data[t, : self._n] = col
        self._ts[t] = float(timestamp)
        self._z[t] = stats.z
        self._mad[t] = stats.mad
        self._degenerate[t] = stats.degenerate
        self._t += 1
        return stats

    def remove_time_point(self, t_index: int) -> tuple[np.ndarray, CrossSectionStats]:
        """Drop one cross-section, returning its raw column and cached stats."""
        if self._t <= 1:
            raise ConfigurationError("panel must retain at least one time point")
        if not 0 <= t_index < self._t:
            raise ConfigurationError(f"time index {t_index} out of range [0, {self._t})")
        column = self._data[t_index, : self._n].copy()
        stats = self.stats(t_index)
        tail = slice(t_index + 1, self._t)
        dest = slice(t_index, self._t - 1)
        self._data[dest, : self._n] = self._data[tail, : self._n]
        self._ts[dest] = self._ts[tail]
        self._z[dest] = self._z[tail]
        self._mad[dest] = self._mad[tail]
        self._degenerate[dest] = self._degenerate[tail]
        self._t -= 1
        return column, stats

    def append_series(self, series_id: str, values: Sequence[float]) -> None:
        """Append one series row. Cached statistics are intentionally left stale."""
        series_id = str(series_id)
        if series_id in self._id_index:
            raise DataQualityError(f"duplicate series id {series_id!r}")
        vals = np.asarray(values, dtype=float)
        if vals.shape != (self._t,):
            raise DataQualityError(f"expected {self._t} readings for new series, got {vals.shape}")
        _check_finite_vector(vals, f"series {series_id!r}")

        if self._n == self._data.shape[1]:
            self._grow_series(self._n + 1)
        self._data[: self._t, self._n] = vals
        self._id_index[series_id] = self._n
        self._ids.append(series_id)
        self._n += 1

    def remove_series(self, series_id: str) -> np.ndarray:
        """Drop one series row, returning its values. Stats left stale."""
        idx = self.index_of(series_id)
        if self._n <= 1:
            raise ConfigurationError("panel must retain at least one series")
        removed = self._data[: self._t, idx].copy()
        self._data[: self._t, idx : self._n - 1] = self._data[: self._t, idx + 1 : self._n]
        self._ids.pop(idx)
        self._n -= 1
        self._id_index = {s: i for i, s in enumerate(self._ids)}
        return removed

    def copy(self) -> "RawPanel":
        """Deep copy; used to hand a stable snapshot to a background recompute."""
        dup = RawPanel.__new__(RawPanel)
        dup._ids = list(self._ids)
        dup._id_index = dict(self._id_index)
        dup._n = self._n
        dup._t = self._t
        dup.retention_window = self.retention_window
        dup._data = self._data[: self._t, : self._n].copy()
        dup._ts = self._ts[: self._t].copy()
        dup._z = self._z[: self._t].copy()
        dup._mad = self._mad[: self._t].copy()
        dup._degenerate = self._degenerate[: self._t].copy()
        return dup

    # -- internals -------------------------------------------------------

    def _next_timestamp(self) -> float:
        if self._t == 0:
            return 0.0
        if self._t == 1:
            return float(self._ts[0]) + 1.0
        step = float(self._ts[self._t - 1] - self._ts[self._t - 2])
        return float(self._ts[self._t - 1]) + (step if step > 0 else 1.0)

    def _grow_time(self, needed: int) -> None:
        new_cap = max(needed, 2 * self._data.shape[0])
        data = np.empty((new_cap, self._data.shape[1]), dtype=float)
        data[: self._t] = self._data[: self._t]
        self._data = data
        for name in ("_ts", "_z", "_mad"):
            old = getattr(self, name)
            arr = np.empty(new_cap, dtype=float)
            arr[: self._t] = old[: self._t]
            setattr(self, name, arr)
        deg = np.zeros(new_cap, dtype=bool)
        deg[: self._t] = self._degenerate[: self._t]
        self._degenerate = deg

    def _grow_series(self, needed: int) -> None:
        new_cap = max(needed, 2 * self._data.shape[1])
        data = np.empty((self._data.shape[0], new_cap), dtype=float)
        data[: self._t, : self._n] = self._data[: self._t, : self._n]
        self._data = data


def _warn_if_irregular(ts: np.ndarray) -> None:
    if ts.size < 3:
        return
    diffs = np.diff(ts)
    med = float(np.median(diffs))
    if med > 0 and float(np.max(np.abs(diffs - med))) > 0.01 * med:
        warnings.warn(
            "timestamps are not uniformly spaced; time points are weighted uniformly",
            stacklevel=3,
        )


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p
