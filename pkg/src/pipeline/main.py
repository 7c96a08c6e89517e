from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.geometry.errors import ConfigError, DomainError, NumericError, ResourceCapError
from src.geometry.specfun import set_series_max_terms

from . import __version__
from .config import EXPERIMENT_KINDS, ExperimentConfig, RuntimeSettings
from .data_loaders import canonical_hash, dump_json, file_hash, load_config_file, write_frame
from .experiments import ExperimentResult, ExperimentRunner

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_NUMERIC = 4

BASE_DIR = Path(__file__).resolve().parents[2]


def _output_stem(config: ExperimentConfig, settings: RuntimeSettings) -> Path:
    if config.out:
        return Path(config.out)
    return settings.outputs_dir / config.kind


def run(config: ExperimentConfig, settings: Optional[RuntimeSettings] = None) -> ExperimentResult:
    """Execute one experiment and write ``<out>.csv`` and ``<out>.meta.json``."""
    settings = settings or RuntimeSettings.from_env(base_dir=BASE_DIR)
    set_series_max_terms(settings.series_max_terms)
    started = time.perf_counter()
    frame, summary = ExperimentRunner(config, workers=settings.workers).run()
    elapsed = time.perf_counter() - started

    stem = _output_stem(config, settings)
    csv_path = stem.parent / f"{stem.name}.csv"
    meta_path = stem.parent / f"{stem.name}.meta.json"
    write_frame(csv_path, frame)
    echo = config.echo()
    result = ExperimentResult(
        config=echo,
        rows=frame,
        summary=summary,
        config_hash=canonical_hash(echo),
        version=__version__,
        wall_clock_seconds=elapsed,
        csv_path=csv_path,
        meta_path=meta_path,
    )
    dump_json(
        meta_path,
        {
            "config": echo,
            "seed": config.seed,
            "version": __version__,
            "config_sha256": result.config_hash,
            "csv_sha256": file_hash(csv_path),
            "wall_clock_seconds": elapsed,
            "summary": summary,
        },
    )
    logger.info("wrote %s (%d rows) in %.2fs", csv_path, len(frame), elapsed)
    return result


def _merge_overrides(payload: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    merged = dict(payload)
    merged["kind"] = args.kind
    if args.d:
        if len(args.d) == 1:
            merged["d"] = args.d[0]
            merged.pop("d_ladder", None)
        else:
            merged["d_ladder"] = args.d
            merged.pop("d", None)
    if args.L is not None and args.x is not None:
        raise ConfigError("intensity: --L and --x are mutually exclusive")
    if args.L is not None:
        merged["intensity"] = {"L": args.L}
    if args.x is not None:
        merged["intensity"] = {"x": args.x, "regime": "critical"}
    for key, value in (("m", args.m), ("tau_grid", args.tau), ("reps", args.reps), ("seed", args.seed), ("out", args.out), ("workers", args.workers)):
        if value is not None:
            merged[key] = value
    return merged


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppl", description="Support-function experiments for Poisson polytopes.")
    parser.add_argument("kind", choices=EXPERIMENT_KINDS)
    parser.add_argument("--config", type=str, default=None, help="JSON file mirroring ExperimentConfig")
    parser.add_argument("--d", type=int, nargs="+", default=None, help="dimension, or a ladder when several are given")
    parser.add_argument("--L", type=float, default=None, help="explicit L = ln(lambda kappa_d)")
    parser.add_argument("--x", type=float, default=None, help="critical regime L = d*x")
    parser.add_argument("--m", type=int, default=None)
    parser.add_argument("--tau", type=float, nargs="+", default=None)
    parser.add_argument("--reps", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=str, default=None, help="output stem; .csv and .meta.json are appended")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--base-dir", type=str, default=str(BASE_DIR))
    parser.add_argument("--outputs-dir", type=str, default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    base_dir = Path(args.base_dir).resolve()
    try:
        settings = RuntimeSettings.from_env(
            base_dir=base_dir,
            outputs_dir=Path(args.outputs_dir).resolve() if args.outputs_dir else None,
        )
        logging.basicConfig(level=settings.resolved_log_level)
        payload = load_config_file(Path(args.config)) if args.config else {}
        config = ExperimentConfig.build(_merge_overrides(payload, args))
        result = run(config, settings)
    except (ConfigError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    print(
        json.dumps(
            {
                "csv": str(result.csv_path),
                "meta": str(result.meta_path),
                "config_sha256": result.config_hash,
                "summary": result.summary,
            },
            indent=2,
        )
    )
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
