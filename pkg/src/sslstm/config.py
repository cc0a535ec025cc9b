"""Flat ``section.key = value`` configuration files.

Lines are ``key = value``; blank lines and lines starting with ``#`` are
ignored.  Every key has a default (see :data:`DEFAULTS` or
``sslstm.cli`` ``config --defaults``) and unknown keys are rejected.
Environment variables ``SSLSTM_<SECTION>__<KEY>`` override file values, with
dots written as double underscores, e.g. ``SSLSTM_SGVMD__ALPHA=50``.
Optional values accept ``none``.
"""
from __future__ import annotations

import os

from .embedding import EmbeddingParams
from .errors import ConfigError
from .lstm import LARGE_OSCILLATION, SMALL_OSCILLATION, Hyperparams
from .pipeline import PipelineConfig
from .sgvmd import ClassifyConfig, SgvmdConfig
from .subspace import ExtractionConfig, ModelOrder

ENV_PREFIX = "SSLSTM_"

PRESETS = {"small-oscillation": SMALL_OSCILLATION, "large-oscillation": LARGE_OSCILLATION}
TYPES = (("trend", "Trend"), ("frequency", "Frequency"), ("residue", "Residue"))
HP_FIELDS = ("hidden_size", "initial_lr", "max_epochs", "lr_drop_period", "lr_drop_factor", "grad_clip")


def _hp_defaults(prefix, hp):
    return {f"{prefix}.{f}": getattr(hp, f) for f in HP_FIELDS}


def _defaults():
    d = {
        "seed": 0,
        "embedding.d": 100,
        "embedding.tau": 1,
        "embedding.window": 100,
        "extract.subarray_len": 50,
        "extract.smoothing_degree": 51,
        "extract.order_energy": 0.9999,
        "extract.order_fixed": None,
        "extract.solver": "auto",
        "extract.dt": 1.0,
        "sgvmd.alpha": SgvmdConfig.alpha,
        "sgvmd.beta": SgvmdConfig.beta,
        "sgvmd.eta": SgvmdConfig.eta,
        "sgvmd.epsilon": SgvmdConfig.epsilon,
        "sgvmd.max_modes": SgvmdConfig.max_modes,
        "sgvmd.max_inner_iters": SgvmdConfig.max_inner_iters,
        "sgvmd.init_halfwidth": SgvmdConfig.init_halfwidth,
        "classify.trend_cutoff": None,
        "classify.trend_share": 0.5,
        "classify.frequency_share": 0.5,
        "split.train": 750,
        "split.test": 150,
        "lstm.window": 20,
        "lstm.preset": "small-oscillation",
    }
    for key, label in TYPES:
        d.update(_hp_defaults(f"lstm.{key}", SMALL_OSCILLATION[label]))
    d.update(_hp_defaults("baseline", SMALL_OSCILLATION["Trend"]))
    return d


DEFAULTS = _defaults()
# keys whose value may be ``none``
OPTIONAL = {"extract.order_fixed": int, "classify.trend_cutoff": float}


def _convert(key, raw):
    if key not in DEFAULTS:
        raise ConfigError(f"unknown config key {key!r}")
    if isinstance(raw, str):
        text = raw.strip()
    else:
        return raw
    if key in OPTIONAL:
        if text.lower() in ("none", ""):
            return None
        kind = OPTIONAL[key]
    else:
        kind = type(DEFAULTS[key])
    try:
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind.__name__}") from None
    return text


def parse_text(text, source="<config>"):
    """Parse config text into a ``{key: value}`` dict of explicitly set keys."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source} line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            out[key] = _convert(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{source} line {lineno}: {exc}") from None
    return out


def env_overrides(environ=None):
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower().replace("__", ".")
        try:
            out[key] = _convert(key, value)
        except ConfigError as exc:
            raise ConfigError(f"environment {name}: {exc}") from None
    return out


def resolve(path=None, overrides=None, environ=None):
    """Defaults, then the preset, then file values, env vars and ``overrides``."""
    explicit = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            explicit.update(parse_text(fh.read(), str(path)))
    explicit.update(env_overrides(environ))
    for key, value in (overrides or {}).items():
        explicit[key] = _convert(key, value)
    flat = dict(DEFAULTS)
    preset = explicit.get("lstm.preset", flat["lstm.preset"])
    if preset not in PRESETS:
        raise ConfigError(f"lstm.preset must be one of {sorted(PRESETS)}, got {preset!r}")
    for key, label in TYPES:
        flat.update(_hp_defaults(f"lstm.{key}", PRESETS[preset][label]))
    flat.update(explicit)
    return flat


def build(flat) -> PipelineConfig:
    """Validate a resolved flat dict and turn it into a :class:`PipelineConfig`."""
    unknown = set(flat) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    g = flat.get
    try:
        hps = {
            label: Hyperparams(**{f: g(f"lstm.{key}.{f}") for f in HP_FIELDS})
            for key, label in TYPES
        }
        order = ModelOrder(energy=g("extract.order_energy"), fixed=g("extract.order_fixed"))
        sg = SgvmdConfig(**{k: g(f"sgvmd.{k}") for k in (
            "alpha", "beta", "eta", "epsilon", "max_modes", "max_inner_iters", "init_halfwidth")})
        return PipelineConfig(
            embedding=EmbeddingParams(g("embedding.d"), g("embedding.tau")),
            window_length=g("embedding.window"),
            extraction=ExtractionConfig(
                subarray_len=g("extract.subarray_len"),
                smoothing_degree=g("extract.smoothing_degree"),
                order=order,
                dt=g("extract.dt"),
                solver=g("extract.solver"),
            ),
            classify=ClassifyConfig(
                trend_cutoff=g("classify.trend_cutoff"),
                trend_share=g("classify.trend_share"),
                frequency_share=g("classify.frequency_share"),
                sgvmd=sg,
            ),
            hyperparams=hps,
            baseline=Hyperparams(**{f: g(f"baseline.{f}") for f in HP_FIELDS}),
            feature_window=g("lstm.window"),
            train_size=g("split.train"),
            test_size=g("split.test"),
            seed=g("seed"),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load(path=None, overrides=None, environ=None):
    """Resolve and build; returns ``(PipelineConfig, flat dict)``."""
    flat = resolve(path, overrides, environ)
    return build(flat), flat


def format_config(flat):
    """Render ``flat`` in the file format, one line per known key."""
    lines = []
    for key in DEFAULTS:
        v = flat[key]
        text = "none" if v is None else (v if isinstance(v, str) else repr(v))
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
