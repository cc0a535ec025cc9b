"""Forecast error measures.

``r2`` is the explained-to-total sum of squares ratio
``sum((yhat - mean(y))**2) / sum((y - mean(y))**2)``, not ``1 - SSE/SST``,
so it can exceed one when predictions are more dispersed than the data.
"""
from __future__ import annotations

import numpy as np

from .errors import LengthMismatch, ZeroDenominator


def _pair(y, yhat):
    y = np.asarray(y, dtype=float).reshape(-1)
    yhat = np.asarray(yhat, dtype=float).reshape(-1)
    if y.size != yhat.size:
        raise LengthMismatch(f"actual has {y.size} values, predicted has {yhat.size}")
    if y.size == 0:
        raise LengthMismatch("metrics need at least one value")
    return y, yhat


def rmse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def mape(y, yhat) -> float:
    """Mean absolute relative error, as a fraction (not percent)."""
    y, yhat = _pair(y, yhat)
    if np.any(y == 0):
        raise ZeroDenominator("mape is undefined when an actual value is zero")
    return float(np.mean(np.abs((y - yhat) / y)))


def r2(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    ybar = y.mean()
    sst = float(np.sum((y - ybar) ** 2))
    if sst == 0:
        raise ZeroDenominator("r2 is undefined for constant actuals")
    return float(np.sum((yhat - ybar) ** 2)) / sst


def all_metrics(y, yhat) -> dict:
    """All four measures; undefined ones are reported as ``None``."""
    out = {"RMSE": rmse(y, yhat), "MAE": mae(y, yhat)}
    for name, fn in (("MAPE", mape), ("R2", r2)):
        try:
            out[name] = fn(y, yhat)
        except ZeroDenominator:
            out[name] = None
    return {k: out[k] for k in ("RMSE", "MAPE", "MAE", "R2")}
