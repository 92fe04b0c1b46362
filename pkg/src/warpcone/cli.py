"""Command-line front end: preset experiments with CSV + JSON reports.

Exit codes: 0 all declared windows pass, 1 a window failed, 2 bad
configuration, 3 an enumeration or budget cap was hit.  Reports contain
no timestamps or floats, so identical configurations produce identical
bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import BudgetExceededError, CapacityError, ConfigError, WarpconeError
from .presets import PRESETS, ExperimentReport, run_preset

EXIT_PASS = 0
EXIT_WINDOW_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_CAPACITY_ERROR = 3

SCHEMA_NOTES = {
    "thm-main": "per level index i: t = q_i^2, the decomposition (q, p, l), the certified substitution gap t|alpha - p/q|, the substitution constant, and the composite embedding constants (C, A, codensity).",
    "faithfulness": "per case and level: the measured faithfulness radius relative to the computed window and the lexicographically first witness if the probe failed earlier.",
    "dihedral": "per level: exact mismatch count between the one-step and two-step warped metrics, plus the torus-involution quotient constants.",
    "higher-tori": "per construction: the common denominator q, the level split l and t = l*q, the certified K, and the substitution and composite embedding constants.",
    "unbalanced": "separated-set census rows: grid rows score v_N * N^2 / area against the window, liminf rows track q_i/q_{i+1}.",
    "ultrametric-asdim": "per level and scale R: component count, exact maximal component diameter, and the S of the single-color cover certificate.",
}


def write_report(report: ExperimentReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "data.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(report.columns))
        writer.writeheader()
        for row in report.rows:
            writer.writerow({k: row.get(k, "") for k in report.columns})
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    schema = {
        "preset": report.preset,
        "columns": list(report.columns),
        "notes": SCHEMA_NOTES[report.preset],
        "window_sources": ["paper-bound", "artifact-window"],
    }
    with open(out_dir / "schema.json", "w") as fh:
        json.dump(schema, fh, indent=2, sort_keys=True)
        fh.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warpcone",
        description="Exact warped-cone experiments over group actions.",
    )
    parser.add_argument("preset", choices=sorted(PRESETS), help="experiment preset")
    parser.add_argument("--config", type=Path, default=None, help="JSON config overriding preset defaults")
    parser.add_argument("--out", type=Path, default=Path("warpcone-out"), help="output directory")
    parser.add_argument("--depth", type=int, default=40, help="continued-fraction depth")
    parser.add_argument("--cap", type=int, default=10**6, help="group-ball enumeration cap")
    parser.add_argument("--workers", type=int, default=1, help="parallel level workers")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.depth < 2:
            raise ConfigError("depth must be at least 2")
        if args.workers < 1:
            raise ConfigError("workers must be at least 1")
        if args.cap < 1:
            raise ConfigError("cap must be positive")
        config = None
        if args.config is not None:
            try:
                config = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"cannot read config: {e}") from e
            if not isinstance(config, dict):
                raise ConfigError("config JSON must be an object")
        report = run_preset(args.preset, config, depth=args.depth, workers=args.workers)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (CapacityError, BudgetExceededError) as e:
        print(f"capacity error: {e}", file=sys.stderr)
        return EXIT_CAPACITY_ERROR
    except WarpconeError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    write_report(report, args.out)
    for window in report.windows:
        status = "pass" if window.passed else "FAIL"
        print(f"[{status}] {window.name} ({window.source}): {window.detail}")
    print(f"report written to {args.out}")
    return EXIT_PASS if report.passed else EXIT_WINDOW_FAILURE


if __name__ == "__main__":
    raise SystemExit(main())
