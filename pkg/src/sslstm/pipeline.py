"""End-to-end forecasting: features, classification, per-type LSTMs, reconstruction.

Time bookkeeping (0-based samples, ``n`` points, ``T`` test points):

* snapshot ``k`` covers samples ``[k, k + span]`` where
  ``span = (d - 1) * tau + L - 1``, so it ends at sample ``k + span``;
* test targets are samples ``n - T .. n - 1``; target ``t`` is predicted
  from snapshot ``t - span - 1`` (the last one ending before ``t``) and the
  forecast feature values for snapshot ``t - span``;
* LSTMs learn from snapshots ending inside the ``train_size`` samples that
  precede the test region.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import lstm as nn
from .embedding import EmbeddingParams, TimeSeries, build_snapshots, build_trajectory_matrix, diagonal_average
from .errors import ConfigError, SsLstmError, StageError
from .metrics import all_metrics
from .sgvmd import FREQUENCY, RESIDUE, TREND, ClassifyConfig, classify_detailed
from .subspace import ExtractionConfig, ModelOrder, extract_feature_series


@dataclass(frozen=True)
class PipelineConfig:
    embedding: EmbeddingParams = field(default_factory=lambda: EmbeddingParams(100, 1))
    window_length: int = 100
    extraction: ExtractionConfig = field(
        default_factory=lambda: ExtractionConfig(order=ModelOrder(energy=0.9999))
    )
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)
    hyperparams: dict = field(default_factory=lambda: dict(nn.SMALL_OSCILLATION))
    baseline: nn.Hyperparams = field(default_factory=lambda: nn.SMALL_OSCILLATION[TREND])
    feature_window: int = 20
    train_size: int = 750
    test_size: int = 150
    seed: int = 0

    def __post_init__(self):
        if self.test_size < 1:
            raise ConfigError("split.test must be at least 1")
        if self.train_size < 1:
            raise ConfigError("split.train must be at least 1")
        if self.window_length < self.extraction.subarray_len + self.extraction.smoothing_degree - 1:
            raise ConfigError(
                "embedding.window must be >= extract.subarray_len + extract.smoothing_degree - 1"
            )
        if self.feature_window < 1:
            raise ConfigError("lstm.window must be at least 1")
        missing = {TREND, FREQUENCY, RESIDUE} - set(self.hyperparams)
        if missing:
            raise ConfigError(f"missing hyperparameters for {sorted(missing)}")

    @property
    def span(self):
        return (self.embedding.d - 1) * self.embedding.tau + self.window_length - 1

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass
class ForecastReport:
    model: str
    metrics: dict
    times: np.ndarray
    actual: np.ndarray
    predicted: np.ndarray
    persistence: dict
    diagnostics: list = field(default_factory=list)
    seed: int = 0

    def to_dict(self):
        return {
            "model": self.model,
            "seed": self.seed,
            "metrics": self.metrics,
            "persistence": self.persistence,
            "diagnostics": self.diagnostics,
            "n_test": int(self.actual.size),
        }


@dataclass
class Prepared:
    """Seed-independent part of an SS-LSTM run, shared across trials."""

    raw: np.ndarray
    normalizer: nn.Normalizer
    normalized: np.ndarray
    extraction: object
    train_rows: slice
    test_rows: np.ndarray
    labels: list
    details: list


def _check_lengths(n, cfg, span):
    test_start = n - cfg.test_size
    first_target_snapshot = test_start - span
    if first_target_snapshot < 2:
        raise ConfigError(
            f"series of {n} points is too short: test region starts at {test_start} "
            f"but the first snapshot ends at {span}"
        )
    lo = max(0, test_start - cfg.train_size - span)
    return lo, first_target_snapshot


def prepare(series, cfg) -> Prepared:
    """Normalise, embed, extract and classify; no randomness involved."""
    ts = series if isinstance(series, TimeSeries) else TimeSeries(series)
    x = ts.values
    n = x.size
    span = cfg.span
    lo, hi = _check_lengths(n, cfg, span)
    if hi - lo <= cfg.feature_window:
        raise ConfigError(
            f"only {hi - lo} training snapshots for feature windows of {cfg.feature_window}"
        )
    norm = nn.Normalizer.fit(x[: n - cfg.test_size])
    z = norm.normalize(x)
    try:
        traj = build_trajectory_matrix(z, cfg.embedding)
        snaps = build_snapshots(traj, cfg.window_length)
    except SsLstmError as exc:
        raise StageError("embed", exc) from exc
    # the snapshot ending at the final sample is only needed by the oracle
    ex_cfg = replace(cfg.extraction, order_from=hi)
    ex = extract_feature_series(snaps, ex_cfg)

    labels, details = [], []
    for r, s in enumerate(ex.series):
        try:
            label, info = classify_detailed(s.features[lo:hi], cfg.classify)
        except Exception as exc:  # noqa: BLE001
            raise StageError("classify", exc, index=r) from exc
        s.label = label
        labels.append(label)
        details.append(info)
    test_rows = np.arange(hi, hi + cfg.test_size)
    return Prepared(x, norm, z, ex, slice(lo, hi), test_rows, labels, details)


def persistence_forecast(x, test_size):
    x = np.asarray(x, dtype=float)
    return x[x.size - test_size - 1:-1]


def assemble_forecast(basis, modes, vstar, history):
    """One-step forecast from predicted features.

    The rotation operator is rebuilt from the aligned eigenvectors ``modes``
    and the predicted eigenvalues ``vstar``.  The last ``len(history)``
    samples are arranged as a Hankel matrix with ``basis.shape[0]`` rows,
    projected onto the signal subspace and advanced one step; diagonal
    averaging turns the advanced matrix back into a series whose final
    element is the forecast.
    """
    ls = basis.shape[0]
    h = np.asarray(history)
    if h.size < ls:
        raise ValueError(f"need at least {ls} history samples, got {h.size}")
    phi = (modes * vstar) @ np.linalg.inv(modes)
    cols = h.size - ls + 1
    Y = h[np.arange(ls)[:, None] + np.arange(cols)[None, :]]
    shifted = basis @ (phi @ (basis.conj().T @ Y))
    return diagonal_average(shifted)[-1].real


def _reconstruct(prep, cfg, vstar):
    ex = prep.extraction
    ls = ex.bases.shape[1]
    hist = ls + cfg.extraction.smoothing_degree - 1
    z = prep.normalized
    out = np.empty(prep.test_rows.size)
    for i, j in enumerate(prep.test_rows):
        k = j - 1
        t = j + cfg.span
        out[i] = assemble_forecast(ex.bases[k], ex.modes[k], vstar[i], z[t - hist:t])
    return prep.normalizer.denormalize(out)


def _predict_features(prep, cfg, seed):
    ex = prep.extraction
    W = cfg.feature_window
    vstar = np.empty((prep.test_rows.size, ex.order), dtype=complex)
    losses = []
    for r in range(ex.order):
        feats = nn.to_channels(ex.values[:, r])
        windows = nn.TrainingWindowSet.from_series(feats[prep.train_rows], W)
        hp = cfg.hyperparams[prep.labels[r]]
        try:
            model = nn.train(windows, hp, seed=seed + r)
        except Exception as exc:  # noqa: BLE001
            raise StageError("train", exc, index=r) from exc
        idx = prep.test_rows[:, None] - W + np.arange(W)[None, :]
        vstar[:, r] = nn.from_channels(model.predict(feats[idx]))
        losses.append(model.final_loss)
    return vstar, losses


def _report(model, x, cfg, predicted, diagnostics, seed):
    n = x.size
    actual = x[n - cfg.test_size:]
    times = np.arange(n - cfg.test_size, n)
    if not np.all(np.isfinite(predicted)):
        raise StageError("reconstruct", FloatingPointError("non-finite forecast"))
    return ForecastReport(
        model=model,
        metrics=all_metrics(actual, predicted),
        times=times,
        actual=actual.copy(),
        predicted=predicted,
        persistence=all_metrics(actual, persistence_forecast(x, cfg.test_size)),
        diagnostics=diagnostics,
        seed=int(seed),
    )


def _diagnostics(prep, losses=None):
    out = []
    for r, (label, info) in enumerate(zip(prep.labels, prep.details)):
        entry = {
            "series": r,
            "label": label,
            "converged": all(c["converged"] for c in info),
            "channels": info,
        }
        if losses is not None:
            entry["final_loss"] = losses[r]
        out.append(entry)
    return out


def run_ss_lstm(series, cfg=None, prepared=None, oracle=False) -> ForecastReport:
    """Full SS-LSTM forecast of the test region.

    With ``oracle=True`` the LSTMs are skipped and the extracted feature
    values of the target snapshots are used as predictions; the result then
    measures reconstruction error alone.
    """
    cfg = cfg or PipelineConfig()
    prep = prepared or prepare(series, cfg)
    if oracle:
        vstar = prep.extraction.values[prep.test_rows]
        losses = None
    else:
        vstar, losses = _predict_features(prep, cfg, cfg.seed)
    try:
        predicted = _reconstruct(prep, cfg, vstar)
    except Exception as exc:  # noqa: BLE001
        raise StageError("reconstruct", exc) from exc
    name = "ss-lstm-oracle" if oracle else "ss-lstm"
    return _report(name, prep.raw, cfg, predicted, _diagnostics(prep, losses), cfg.seed)


def run_lstm_baseline(series, cfg=None) -> ForecastReport:
    """Plain windowed LSTM on the normalised series, same split and metrics."""
    cfg = cfg or PipelineConfig()
    ts = series if isinstance(series, TimeSeries) else TimeSeries(series)
    x = ts.values
    n = x.size
    W = cfg.feature_window
    start = n - cfg.test_size
    if start - W < 1:
        raise ConfigError(f"series of {n} points leaves no training windows")
    lo = max(0, start - cfg.train_size)
    norm = nn.Normalizer.fit(x[:start])
    z = norm.normalize(x)
    if start - lo <= W:
        raise ConfigError(f"training region of {start - lo} points is shorter than the window")
    windows = nn.TrainingWindowSet.from_series(z[lo:start], W)
    try:
        model = nn.train(windows, cfg.baseline, seed=cfg.seed, normalizer=nn.Normalizer(np.zeros(1), np.ones(1)))
    except Exception as exc:  # noqa: BLE001
        raise StageError("train", exc) from exc
    idx = np.arange(start, n)[:, None] - W + np.arange(W)[None, :]
    pred = norm.denormalize(model.predict(z[idx])[:, 0])
    diag = [{"series": 0, "label": None, "converged": True, "final_loss": model.final_loss}]
    return _report("lstm", x, cfg, pred, diag, cfg.seed)


def _aggregate(reports):
    keys = list(reports[0].metrics)
    mean, std = {}, {}
    for k in keys:
        vals = [r.metrics[k] for r in reports]
        if any(v is None for v in vals):
            mean[k] = std[k] = None
            continue
        a = np.array(vals, dtype=float)
        mean[k] = float(a.mean())
        std[k] = float(a.std())
    return mean, std


@dataclass
class AggregateReport:
    model: str
    trials: list
    mean: dict
    std: dict

    def to_dict(self):
        return {
            "model": self.model,
            "n_trials": len(self.trials),
            "mean": self.mean,
            "std": self.std,
            "persistence": self.trials[0].persistence,
            "trials": [t.to_dict() for t in self.trials],
        }


def repeat_experiment(series, cfg=None, trials=10, model="ss-lstm") -> AggregateReport:
    """Run ``trials`` seeds ``cfg.seed + i``; mean and population std per metric.

    Feature extraction does not depend on the seed, so it is done once.
    """
    cfg = cfg or PipelineConfig()
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    if model not in ("ss-lstm", "lstm"):
        raise ConfigError(f"unknown model {model!r}")
    prep = prepare(series, cfg) if model == "ss-lstm" else None
    reports = []
    for i in range(trials):
        c = cfg.with_seed(cfg.seed + i)
        if model == "ss-lstm":
            reports.append(run_ss_lstm(series, c, prepared=prep))
        else:
            reports.append(run_lstm_baseline(series, c))
    mean, std = _aggregate(reports)
    return AggregateReport(model, reports, mean, std)
