"""Command-line entry point: ``sslstm {decompose,extract,forecast,evaluate,config}``."""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .embedding import build_snapshots, build_trajectory_matrix
from .errors import ConfigError, SsLstmError, StageError
from .io import read_series, write_columns, write_json
from .lstm import Normalizer
from .metrics import all_metrics
from .pipeline import repeat_experiment, run_lstm_baseline, run_ss_lstm
from .sgvmd import NoConvergence, classify_detailed, decompose
from .subspace import extract_feature_series


def _overrides(args):
    out = {}
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    return out


def _load(args):
    cfg, flat = cfgmod.load(args.config, _overrides(args))
    return cfg, flat


def _outdir(args):
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo(args, flat, **extra):
    echo = {"config": flat, "input": str(args.input), "column": args.column}
    echo.update(extra)
    return echo


def cmd_decompose(args):
    cfg, flat = _load(args)
    x = read_series(args.input, args.column)
    out = _outdir(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergence)
        dec = decompose(x, cfg.classify.sgvmd)
    t = np.arange(x.size)
    modes = []
    for i, m in enumerate(dec.modes):
        write_columns(out / f"mode_{i}.csv", {"t": t, "value": m.time_domain})
        modes.append({
            "index": i,
            "center_frequency": m.center_frequency,
            # share of the input energy: these plus the residual share sum to it
            "energy": float(np.dot(m.time_domain, x)),
            "own_energy": m.energy(),
            "converged": m.converged,
            "iterations": m.iterations,
        })
    write_columns(out / "residual.csv", {"t": t, "value": dec.residual})
    summary = _echo(args, flat)
    summary.update({
        "input_energy": dec.input_energy,
        "residual_energy": float(np.dot(dec.residual, x)),
        "modes": modes,
    })
    write_json(out / "summary.json", summary)
    return 0


def cmd_extract(args):
    cfg, flat = _load(args)
    x = read_series(args.input, args.column)
    out = _outdir(args)
    z = Normalizer.fit(x).normalize(x)
    try:
        snaps = build_snapshots(build_trajectory_matrix(z, cfg.embedding), cfg.window_length)
    except SsLstmError as exc:
        raise StageError("embed", exc) from exc
    ex = extract_feature_series(snaps, cfg.extraction)
    k = np.arange(ex.values.shape[0])
    rows = {"series": [], "label": [], "real_label": [], "imag_label": [], "converged": []}
    for r, s in enumerate(ex.series):
        label, info = classify_detailed(s.features, cfg.classify)
        write_columns(out / f"feature_{r}.csv", {"snapshot": k, "real": s.features.real,
                                                 "imag": s.features.imag})
        rows["series"].append(r)
        rows["label"].append(label)
        rows["real_label"].append(info[0]["label"])
        rows["imag_label"].append(info[1]["label"])
        rows["converged"].append(all(c["converged"] for c in info))
    with open(out / "labels.csv", "w", encoding="utf-8") as fh:
        fh.write("series,label,real_label,imag_label,converged\n")
        for i in range(len(rows["series"])):
            fh.write(",".join(str(rows[c][i]) for c in rows) + "\n")
    summary = _echo(args, flat, order=ex.order, labels=rows["label"])
    write_json(out / "summary.json", summary)
    return 0


def cmd_forecast(args):
    cfg, flat = _load(args)
    x = read_series(args.input, args.column)
    out = _outdir(args)
    trials = args.trials
    if trials < 1:
        raise ConfigError("--trials must be at least 1")
    if trials > 1:
        agg = repeat_experiment(x, cfg, trials, model=args.model)
        report = agg.trials[0]
        doc = agg.to_dict()
    else:
        report = run_ss_lstm(x, cfg) if args.model == "ss-lstm" else run_lstm_baseline(x, cfg)
        doc = report.to_dict()
    doc.update(_echo(args, flat, n_trials=trials, model=args.model))
    write_json(out / "report.json", doc)
    write_columns(out / "predictions.csv",
                  {"t": report.times, "actual": report.actual, "predicted": report.predicted})
    return 0


def cmd_evaluate(args):
    y = read_series(args.actual, args.column, min_rows=1)
    yhat = read_series(args.predicted, args.predicted_column, min_rows=1)
    doc = {"actual": str(args.actual), "predicted": str(args.predicted),
           "n": int(y.size), "metrics": all_metrics(y, yhat)}
    if args.output:
        out = Path(args.output)
        if out.suffix != ".json":
            out.mkdir(parents=True, exist_ok=True)
            out = out / "metrics.json"
        write_json(out, doc)
    else:
        import json

        print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_config(args):
    flat = cfgmod.DEFAULTS if args.defaults else cfgmod.resolve(args.config, _overrides(args))
    sys.stdout.write(cfgmod.format_config(flat))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="sslstm", description="SS-LSTM forecasting toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, output_required=True):
        sp.add_argument("--input", "-i", required=True, help="input CSV")
        sp.add_argument("--output", "-o", required=output_required, help="output directory")
        sp.add_argument("--config", "-c", help="config file (key = value lines)")
        sp.add_argument("--column", help="column name or 0-based index (default: last)")
        sp.add_argument("--seed", type=int, help="overrides the config seed")

    sp = sub.add_parser("decompose", help="SGVMD modes of a series")
    common(sp)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("extract", help="dynamic feature series and labels")
    common(sp)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("forecast", help="one-step forecasts of the test region")
    common(sp)
    sp.add_argument("--model", choices=("ss-lstm", "lstm"), default="ss-lstm")
    sp.add_argument("--trials", type=int, default=1)
    sp.set_defaults(func=cmd_forecast)

    sp = sub.add_parser("evaluate", help="metrics between two CSV columns")
    sp.add_argument("--actual", "--input", "-i", dest="actual", required=True)
    sp.add_argument("--predicted", "-p", required=True)
    sp.add_argument("--column", help="column in the actual file (default: last)")
    sp.add_argument("--predicted-column", help="column in the predicted file (default: last)")
    sp.add_argument("--output", "-o", help="JSON file or directory (default: stdout)")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("config", help="print the resolved configuration")
    sp.add_argument("--config", "-c")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--defaults", action="store_true", help="print built-in defaults")
    sp.set_defaults(func=cmd_config)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SsLstmError, OSError) as exc:
        print(f"sslstm {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
