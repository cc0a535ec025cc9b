"""Spatially smoothed correlation matrices and ESPRIT dynamic features.

A snapshot window is treated as an array: its rows are array elements and
its columns are observations.  Sub-array ``k`` is the block of rows
``[k, k + subarray_len)``; averaging the sub-array correlations restores the
rank that coherent components would otherwise collapse.

The signal subspace of the smoothed matrix is split into an upper block
(all rows but the last) and a lower block (all rows but the first).  The
least-squares operator mapping one onto the other has the complex modal
ratios ``V_i`` as eigenvalues; ``log(V_i) / dt`` separates growth (real part)
from oscillation frequency (imaginary part).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .embedding import SnapshotSet
from .errors import (
    DegenerateSpectrum,
    EmptyInput,
    InsufficientRows,
    RankDeficientBlock,
    StageError,
)

# eigengap (relative to the largest eigenvalue) below which a split is ambiguous
GAP_TOL = 1e-12
# condition number of the normal matrix above which the solve switches to lstsq
NORMAL_COND_LIMIT = 1e8

FEATURE_LABELS = ("Trend", "Frequency", "Residue")


@dataclass(frozen=True)
class CorrelationMatrix:
    data: np.ndarray
    sample_count: int

    @property
    def size(self):
        return self.data.shape[0]


@dataclass(frozen=True)
class ModelOrder:
    """Rule picking the signal-subspace dimension.

    With ``fixed`` set, that many eigenvectors are kept.  Otherwise the
    smallest ``m`` whose leading eigenvalues hold at least ``energy`` of the
    total is used.
    """

    energy: float = 0.95
    fixed: Optional[int] = None

    def __post_init__(self):
        if self.fixed is not None and self.fixed < 1:
            raise ValueError(f"fixed model order must be >= 1, got {self.fixed}")
        if not 0.0 < self.energy <= 1.0:
            raise ValueError(f"energy threshold must lie in (0, 1], got {self.energy}")

    def select(self, eigenvalues):
        lam = np.clip(np.asarray(eigenvalues, dtype=float), 0.0, None)
        if self.fixed is not None:
            if self.fixed > lam.size:
                raise ValueError(f"model order {self.fixed} exceeds matrix size {lam.size}")
            return int(self.fixed)
        total = lam.sum()
        if total <= 0:
            raise DegenerateSpectrum("correlation matrix has zero energy")
        mass = np.cumsum(lam) / total
        return int(min(np.searchsorted(mass, self.energy - 1e-15) + 1, lam.size))


@dataclass(frozen=True)
class SubspaceSplit:
    signal_basis: np.ndarray
    noise_basis: np.ndarray
    eigenvalues: np.ndarray
    model_order: int


@dataclass(frozen=True)
class DynamicFeature:
    value: complex
    dt: float = 1.0

    @property
    def growth(self):
        return float(np.log(abs(self.value)) / self.dt)

    @property
    def frequency(self):
        return float(np.angle(self.value) / self.dt)

    @property
    def rate(self):
        """Continuous-time exponent ``log(V) / dt`` (principal branch)."""
        return complex(np.log(complex(self.value)) / self.dt)


@dataclass
class DynamicFeatureSeries:
    features: np.ndarray
    row_index: int
    label: Optional[str] = None
    dt: float = 1.0

    def __len__(self):
        return self.features.size

    @property
    def growth(self):
        return np.log(np.abs(self.features)) / self.dt

    @property
    def frequency(self):
        return np.angle(self.features) / self.dt


@dataclass(frozen=True)
class ExtractionConfig:
    subarray_len: int = 50
    smoothing_degree: int = 51
    order: ModelOrder = field(default_factory=ModelOrder)
    dt: float = 1.0
    solver: str = "auto"
    # leading snapshots used to vote on the common model order (None = all)
    order_from: Optional[int] = None

    def __post_init__(self):
        if self.subarray_len < 2:
            raise ValueError("sub-array length must be at least 2")
        if self.smoothing_degree < 1:
            raise ValueError("smoothing degree must be at least 1")
        if self.solver not in ("auto", "normal", "lstsq"):
            raise ValueError(f"unknown solver {self.solver!r}")


@dataclass
class FeatureExtraction:
    """Everything extracted from a snapshot set.

    ``values[k, r]`` is feature ``r`` of snapshot ``k`` after alignment.
    ``bases[k]`` is that snapshot's signal basis and ``modes[k]`` holds the
    eigenvectors of its rotation operator, with columns in aligned order, so
    ``rotation[k] = modes[k] @ diag(values[k]) @ inv(modes[k])``.
    """

    series: list
    values: np.ndarray
    bases: np.ndarray
    modes: np.ndarray
    order: int
    config: ExtractionConfig

    def rotation(self, k, values=None):
        w = self.modes[k]
        v = self.values[k] if values is None else np.asarray(values)
        return (w * v) @ np.linalg.inv(w)


def sample_correlation(snapshot) -> CorrelationMatrix:
    """``X X^H / ncols`` with columns as observations."""
    x = np.asarray(snapshot)
    if x.ndim == 1:
        x = x[:, None]
    if x.size == 0:
        raise EmptyInput("snapshot is empty")
    r = x @ x.conj().T / x.shape[1]
    r = 0.5 * (r + r.conj().T)
    return CorrelationMatrix(data=r, sample_count=x.shape[1])


def spatial_smooth(window, subarray_len, smoothing_degree) -> CorrelationMatrix:
    """Mean of the ``smoothing_degree`` overlapping sub-array correlations."""
    x = np.asarray(window)
    if x.ndim == 1:
        x = x[:, None]
    if x.size == 0:
        raise EmptyInput("window is empty")
    L, P = int(subarray_len), int(smoothing_degree)
    if P < 1 or L < 1:
        raise InsufficientRows("sub-array length and smoothing degree must be positive")
    if L + P - 1 > x.shape[0]:
        raise InsufficientRows(
            f"sub-array length {L} with smoothing degree {P} needs {L + P - 1} rows, "
            f"window has {x.shape[0]}"
        )
    stacked = np.concatenate([x[k:k + L] for k in range(P)], axis=1)
    r = stacked @ stacked.conj().T / stacked.shape[1]
    r = 0.5 * (r + r.conj().T)
    return CorrelationMatrix(data=r, sample_count=x.shape[1])


def split_subspace(R, order=None) -> SubspaceSplit:
    """Eigen-split ``R`` into signal and noise bases.

    ``order`` is a :class:`ModelOrder`, an ``int`` (fixed order) or ``None``
    for the default energy rule.
    """
    data = R.data if isinstance(R, CorrelationMatrix) else np.asarray(R)
    rule = _as_order(order)
    lam, vec = np.linalg.eigh(data)
    lam, vec = lam[::-1], vec[:, ::-1]
    m = rule.select(lam)
    if m < lam.size:
        gap = lam[m - 1] - lam[m]
        if gap <= GAP_TOL * max(abs(lam[0]), np.finfo(float).tiny):
            raise DegenerateSpectrum(
                f"eigengap {gap:.3e} at order {m} is too small to separate subspaces"
            )
    return SubspaceSplit(
        signal_basis=vec[:, :m],
        noise_basis=vec[:, m:],
        eigenvalues=lam,
        model_order=m,
    )


def _as_order(order):
    if order is None:
        return ModelOrder()
    if isinstance(order, ModelOrder):
        return order
    if isinstance(order, (int, np.integer)):
        return ModelOrder(fixed=int(order))
    raise TypeError(f"cannot interpret model order {order!r}")


def rotation_operator(split, solver="auto") -> np.ndarray:
    """Least-squares solution of ``U1 @ Phi = U2`` for the shifted signal blocks."""
    u = split.signal_basis if isinstance(split, SubspaceSplit) else np.asarray(split)
    if u.shape[0] < 2:
        raise RankDeficientBlock("signal basis needs at least two rows")
    upper, lower = u[:-1], u[1:]
    m = u.shape[1]
    sv = np.linalg.svd(upper, compute_uv=False)
    if sv.size < m or sv[-1] <= sv[0] * max(upper.shape) * np.finfo(float).eps:
        raise RankDeficientBlock(f"upper block has column rank < {m}")
    gram = upper.conj().T @ upper
    use_lstsq = solver == "lstsq" or (solver == "auto" and (sv[0] / sv[-1]) ** 2 > NORMAL_COND_LIMIT)
    if use_lstsq:
        return np.linalg.lstsq(upper, lower, rcond=None)[0]
    return np.linalg.solve(gram, upper.conj().T @ lower)


def esprit_features(split, dt=1.0, solver="auto") -> list:
    """Eigenvalues of the rotation operator, wrapped as :class:`DynamicFeature`."""
    phi = rotation_operator(split, solver)
    values = np.linalg.eigvals(phi)
    order = np.lexsort((np.angle(values), -np.abs(values)))
    return [DynamicFeature(complex(v), dt) for v in values[order]]


def _align(previous, current):
    """Permutation of ``current`` matching each entry of ``previous``.

    Candidates are pre-sorted by descending modulus so equal-cost pairings
    resolve the same way every time.
    """
    pre = np.lexsort((np.angle(current), -np.abs(current)))
    cost = np.abs(previous[:, None] - current[pre][None, :])
    _, cols = linear_sum_assignment(cost)
    return pre[cols]


def extract_feature_series(snapshots, cfg=None) -> FeatureExtraction:
    """Run smoothing, subspace split and ESPRIT on every snapshot.

    A common model order is chosen first: the most frequent per-snapshot
    order under ``cfg.order`` (ties go to the larger order) over the first
    ``cfg.order_from`` snapshots.  Features are then chained across
    snapshots by minimum-distance assignment to the previous snapshot.
    """
    cfg = cfg or ExtractionConfig()
    snaps = snapshots.snapshots if isinstance(snapshots, SnapshotSet) else list(snapshots)
    if len(snaps) < 2:
        raise EmptyInput("need at least two snapshots")

    spectra = []
    for k, snap in enumerate(snaps):
        try:
            R = spatial_smooth(snap, cfg.subarray_len, cfg.smoothing_degree)
            lam, vec = np.linalg.eigh(R.data)
        except Exception as exc:  # noqa: BLE001 - re-raised with snapshot tag
            raise StageError("extract", exc, index=k) from exc
        spectra.append((lam[::-1], vec[:, ::-1]))

    if cfg.order.fixed is not None:
        m = cfg.order.fixed
    else:
        upto = len(spectra) if cfg.order_from is None else max(1, min(cfg.order_from, len(spectra)))
        votes = []
        for k in range(upto):
            try:
                votes.append(cfg.order.select(spectra[k][0]))
            except Exception as exc:  # noqa: BLE001
                raise StageError("extract", exc, index=k) from exc
        counts = np.bincount(votes)
        m = int(np.flatnonzero(counts == counts.max())[-1])
    fixed = ModelOrder(fixed=m)

    K = len(snaps)
    values = np.empty((K, m), dtype=complex)
    bases = np.empty((K, cfg.subarray_len, m), dtype=complex)
    modes = np.empty((K, m, m), dtype=complex)
    prev = None
    for k, (lam, vec) in enumerate(spectra):
        try:
            if m < lam.size and lam[m - 1] - lam[m] <= GAP_TOL * max(abs(lam[0]), np.finfo(float).tiny):
                raise DegenerateSpectrum(f"eigengap at order {m} vanishes")
            split = SubspaceSplit(vec[:, :m], vec[:, m:], lam, m)
            phi = rotation_operator(split, cfg.solver)
            v, w = np.linalg.eig(phi)
        except Exception as exc:  # noqa: BLE001
            raise StageError("extract", exc, index=k) from exc
        perm = np.lexsort((np.angle(v), -np.abs(v))) if prev is None else _align(prev, v)
        values[k] = v[perm]
        modes[k] = w[:, perm]
        bases[k] = split.signal_basis
        prev = values[k]

    series = [DynamicFeatureSeries(values[:, r].copy(), row_index=r, dt=cfg.dt) for r in range(m)]
    return FeatureExtraction(series=series, values=values, bases=bases, modes=modes,
                             order=m, config=cfg)
