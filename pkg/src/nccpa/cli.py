"""Command-line experiment runner.

Configuration files are flat ``key = value`` text. Keys are the
:class:`~nccpa.scenario.ScenarioConfig` field names (plus ``snr_db`` as an
alternative to the linear ``snr``); interval values are written ``low, high``;
blank lines and ``#`` comments are ignored. Example::

    num_antennas = 64
    num_uts = 16
    ut_distance_range = 5, 20
    snr_db = 10
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
import typing

from .experiment import ALGORITHMS, ExperimentSpec, db_to_linear, export_chart, rows_to_csv, run_experiment
from .scenario import ScenarioConfig

_TYPES = typing.get_type_hints(ScenarioConfig)


def _base_type(hint):
    args = [a for a in typing.get_args(hint) if a is not type(None)]
    if typing.get_origin(hint) is tuple:
        return tuple
    return args[0] if args else hint


def _convert(key: str, raw: str):
    hint = _base_type(_TYPES[key])
    text = raw.strip()
    if hint is tuple:
        parts = [p for p in text.replace("(", "").replace(")", "").split(",") if p.strip()]
        if len(parts) != 2:
            raise ValueError(f"{key}: expected 'low, high', got {raw!r}")
        return tuple(float(p) for p in parts)
    if text.lower() in ("none", ""):
        return None
    if hint is bool:
        if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"{key}: expected a boolean, got {raw!r}")
        return text.lower() in ("true", "1", "yes")
    if hint is str:
        return text
    if hint is int:
        return int(text)
    return float(text)


def parse_config_text(text: str) -> ScenarioConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key == "snr_db":
            values["snr"] = db_to_linear(float(raw))
        elif key in _TYPES:
            values[key] = _convert(key, raw)
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    return ScenarioConfig(**values)


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())


def dump_config(config: ScenarioConfig) -> str:
    lines = []
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        if isinstance(v, tuple):
            v = ", ".join(repr(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def _list(conv):
    def parse(text):
        return [conv(x) for x in text.split(",") if x.strip()]
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nccpa", description="Near-field channel-charting pilot allocation sweeps")
    p.add_argument("--config", help="key=value scenario file (defaults: full-scale parameters)")
    p.add_argument("--sweep-tau", type=_list(int), help="comma-separated pilot lengths")
    p.add_argument("--sweep-snr-db", type=_list(float), help="comma-separated SNR values in dB")
    p.add_argument("--algos", type=_list(str), default=list(ALGORITHMS), help="subset of ncc,fcc,random")
    p.add_argument("--features", choices=("projection", "somp"), help="polar feature extraction method")
    p.add_argument("--seeds", type=int, default=1, help="number of scenario seeds")
    p.add_argument("--out", help="result CSV path (default: stdout)")
    p.add_argument("--export-charts", metavar="DIR", help="write per-seed chart CSVs here")
    p.add_argument("--no-rate", action="store_true", help="skip the Monte-Carlo sum-rate evaluation")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config) if args.config else ScenarioConfig()
        spec = ExperimentSpec(
            config=config,
            taus=args.sweep_tau or [config.pilot_length],
            snrs_db=args.sweep_snr_db or [10.0 * math.log10(config.snr)],
            algorithms=args.algos,
            num_seeds=args.seeds,
            feature_method=args.features,
            compute_rate=not args.no_rate,
            out_path=args.out,
            chart_dir=args.export_charts,
        )
        callback = None
        if spec.chart_dir:
            os.makedirs(spec.chart_dir, exist_ok=True)

            def callback(seed, run):
                export_chart(run.near_chart, run.geometry, os.path.join(spec.chart_dir, f"ncc_seed{seed}.csv"))
                export_chart(run.far_chart, run.geometry, os.path.join(spec.chart_dir, f"fcc_seed{seed}.csv"))

        rows = run_experiment(spec, chart_callback=callback)
        text = rows_to_csv(rows)
        if spec.out_path:
            with open(spec.out_path, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except Exception as exc:  # noqa: BLE001 - reported as a machine-readable line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
