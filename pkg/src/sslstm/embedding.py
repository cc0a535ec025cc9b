"""Trajectory matrices, sliding snapshots and diagonal averaging.

Indexing is 0-based throughout: row ``i``, column ``j`` of a trajectory
matrix holds ``values[i + j * tau]``, which is the 1-based
``x_{i+1+j*tau}`` of the usual Takens layout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmbeddingTooLong,
    EmptyMatrix,
    InvalidStep,
    NonFiniteInput,
    WindowTooLarge,
)


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real series."""

    values: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size < 1:
            raise NonFiniteInput("time series must contain at least one value")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise NonFiniteInput(f"non-finite value at index {bad}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class EmbeddingParams:
    d: int
    tau: int = 1

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"embedding dimension must be a positive integer, got {self.d}")
        if int(self.tau) != self.tau or self.tau < 1:
            raise ValueError(f"delay must be a positive integer, got {self.tau}")

    def span(self):
        """Number of samples covered by one trajectory row."""
        return (self.d - 1) * self.tau + 1


@dataclass(frozen=True)
class TrajectoryMatrix:
    data: np.ndarray
    params: EmbeddingParams
    source_length: int

    @property
    def rows(self):
        return self.data.shape[0]


@dataclass(frozen=True)
class SnapshotSet:
    snapshots: list = field(repr=False)
    window_length: int
    step: int

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, k):
        return self.snapshots[k]


def _as_series(series):
    if isinstance(series, TimeSeries):
        return series
    return TimeSeries(np.asarray(series, dtype=float))


def build_trajectory_matrix(series, params) -> TrajectoryMatrix:
    """Embed ``series`` into an ``m x d`` trajectory matrix.

    ``m = n - (d - 1) * tau`` rows; with ``tau == 1`` the result is Hankel.
    ``params`` may be an :class:`EmbeddingParams` or a bare ``d``.
    """
    series = _as_series(series)
    if not isinstance(params, EmbeddingParams):
        params = EmbeddingParams(int(params))
    n = len(series)
    if (params.d - 1) * params.tau >= n:
        raise EmbeddingTooLong(
            f"(d-1)*tau = {(params.d - 1) * params.tau} must be < series length {n}"
        )
    m = n - (params.d - 1) * params.tau
    idx = np.arange(m)[:, None] + params.tau * np.arange(params.d)[None, :]
    data = series.values[idx]
    data.setflags(write=False)
    return TrajectoryMatrix(data=data, params=params, source_length=n)


def build_snapshots(traj, L, step=1) -> SnapshotSet:
    """Cut ``traj`` into windows of ``L`` consecutive rows, advancing ``step`` rows."""
    data = traj.data if isinstance(traj, TrajectoryMatrix) else np.asarray(traj)
    rows = data.shape[0]
    if int(step) != step or step < 1:
        raise InvalidStep(f"step must be a positive integer, got {step}")
    if int(L) != L or L < 1 or L > rows:
        raise WindowTooLarge(f"window length {L} must lie in [1, {rows}]")
    count = (rows - L) // step + 1
    snaps = [data[k * step:k * step + L] for k in range(count)]
    return SnapshotSet(snapshots=snaps, window_length=int(L), step=int(step))


def diagonal_average(matrix) -> np.ndarray:
    """Average the anti-diagonals of ``matrix`` into a series of length ``m + d - 1``.

    Anti-diagonal sets are the same for a matrix and its transpose, so the
    orientation convention for tall matrices needs no special handling.
    """
    a = np.asarray(matrix)
    if a.ndim != 2 or a.size == 0:
        raise EmptyMatrix(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    m, d = a.shape
    n = m + d - 1
    k = (np.arange(m)[:, None] + np.arange(d)[None, :]).ravel()
    counts = np.bincount(k, minlength=n)
    if np.iscomplexobj(a):
        sums = (np.bincount(k, weights=a.real.ravel(), minlength=n)
                + 1j * np.bincount(k, weights=a.imag.ravel(), minlength=n))
    else:
        sums = np.bincount(k, weights=a.ravel().astype(float), minlength=n)
    return sums / counts
