"""Command-line experiments: single sessions, verification statistics,
detection/leakage sweeps and CHSH estimates.

Trial ``t`` of sweep point ``p`` uses seed ``derive_seed(base, p, t)``; the
seed of trial 0 is written to each CSV row as ``seed0``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence, TextIO

from .adversary import AdversaryKind, LeakageReport, binomial_half_width, leakage_report
from .protocol import (
    SessionConfig,
    chsh_exact,
    chsh_test,
    distribute_pairs,
    run_session,
    verification_only,
)
from .rng import RNG_ALGORITHM, derive_seed, session_streams

CSV_HEADER = (
    "sweep_value",
    "trials",
    "detect_rate",
    "detect_ci",
    "eve_acc",
    "alice_acc",
    "z_mismatch",
    "x_mismatch",
    "seed0",
)

SWEEP_FIELDS = ("test_pairs", "noise_p", "adversary")

DEFAULT_SEED = 1


@dataclass
class ExperimentSpec:
    base: SessionConfig
    sweep_field: str
    values: list
    trials: int = 1
    out: Optional[str] = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sweep_field not in SWEEP_FIELDS:
            raise ValueError(f"sweep variable must be one of {', '.join(SWEEP_FIELDS)}")
        self.values = [parse_sweep_value(self.sweep_field, v) for v in self.values]
        for v in self.values:
            self.point_config(v)  # validates

    def point_config(self, value) -> SessionConfig:
        return replace(self.base, **{self.sweep_field: value})


def parse_sweep_value(name: str, raw):
    if name == "test_pairs":
        value = int(raw)
        if value < 0:
            raise ValueError("test_pairs must be non-negative")
        return value
    if name == "noise_p":
        return float(raw)
    return AdversaryKind.parse(raw)


def _fmt(x) -> str:
    if isinstance(x, AdversaryKind):
        return x.value
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


@dataclass
class SweepRow:
    sweep_value: object
    report: LeakageReport

    def as_csv(self) -> list[str]:
        r = self.report
        return [
            _fmt(self.sweep_value),
            str(r.trials),
            _fmt(r.detection_probability),
            _fmt(r.detection_ci),
            _fmt(r.eve_bit_accuracy),
            _fmt(r.alice_bit_accuracy),
            _fmt(r.z_mismatch_rate),
            _fmt(r.x_mismatch_rate),
            str(r.seed0),
        ]

    def as_dict(self) -> dict:
        return dict(zip(CSV_HEADER, self.as_csv()))


def emit_csv(rows: Iterable[SweepRow], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_csv())


def run_trials(config: SessionConfig, trials: int, point: int = 0) -> list:
    return [run_session(replace(config, seed=derive_seed(config.seed, point, t))) for t in range(trials)]


def run_sweep(spec: ExperimentSpec) -> list[SweepRow]:
    rows = []
    for p, value in enumerate(spec.values):
        transcripts = run_trials(spec.point_config(value), spec.trials, p)
        rows.append(SweepRow(value, leakage_report(transcripts)))
    return rows


def verify_summary(config: SessionConfig, trials: int) -> dict:
    verdicts = [verification_only(replace(config, seed=derive_seed(config.seed, 0, t))) for t in range(trials)]
    zc = sum(v.z_compared for v in verdicts)
    xc = sum(v.x_compared for v in verdicts)
    rejected = sum(not v.accept for v in verdicts)
    reject_rate = rejected / trials
    return {
        "config": config.to_dict(),
        "rng_algorithm": RNG_ALGORITHM,
        "trials": trials,
        "reject_rate": reject_rate,
        "reject_ci": binomial_half_width(reject_rate, trials),
        "z_compared": zc,
        "z_mismatch_rate": sum(v.z_mismatch for v in verdicts) / zc if zc else None,
        "x_compared": xc,
        "x_mismatch_rate": sum(v.x_mismatch for v in verdicts) / xc if xc else None,
        "verdicts": [v.to_dict() for v in verdicts],
    }


def chsh_summary(config: SessionConfig) -> dict:
    streams = session_streams(config.seed)
    pairs = distribute_pairs(
        config.test_pairs, config.adversary, config.noise_p, streams["distribution"], attack_rate=config.attack_rate
    )
    result = chsh_test(pairs, streams["chsh"])
    exact = [chsh_exact(p.state) for p in pairs]
    return {
        "config": config.to_dict(),
        "rng_algorithm": RNG_ALGORITHM,
        "pairs": len(pairs),
        "S": result.s,
        "half_width": result.half_width,
        "S_exact_mean": sum(exact) / len(exact) if exact else None,
        "correlators": result.correlators,
        "rounds": result.rounds,
        "low_confidence": result.low_confidence,
    }


# --- CLI --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, bits: int, test_pairs: int) -> None:
    env_seed = os.environ.get("QSDC_SEED")
    try:
        default_seed = int(env_seed) if env_seed is not None else DEFAULT_SEED
    except ValueError:
        default_seed = DEFAULT_SEED
    p.add_argument("--seed", type=int, default=default_seed, help="base seed (default: $QSDC_SEED or 1)")
    p.add_argument("--bits", type=int, default=bits, help="message length")
    p.add_argument("--test-pairs", type=int, default=test_pairs, help="pairs sacrificed to verification")
    p.add_argument("--eve", choices=[k.value for k in AdversaryKind], default="none")
    p.add_argument("--noise", type=float, default=0.0, help="per-half X/Z flip probability")
    p.add_argument("--threshold", type=float, default=0.05, help="max tolerated mismatch rate")
    p.add_argument("--attack-rate", type=float, default=1.0)
    p.add_argument("--bases", default="ZX", help="verification bases, e.g. ZX or Z")
    p.add_argument("--coordinated", action="store_true", help="Bob reuses Alice's basis on every test pair")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsdc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("session", help="run one session and print its transcript")
    _common(p, bits=64, test_pairs=200)
    p.add_argument("--message", default=None, help="payload bits, e.g. 01001")

    p = sub.add_parser("verify", help="channel verification statistics")
    _common(p, bits=0, test_pairs=200)

    p = sub.add_parser("attack-sweep", help="detection/leakage versus a swept parameter")
    _common(p, bits=16, test_pairs=16)
    p.add_argument("--sweep", required=True, help="FIELD=v1,v2,... with FIELD in test_pairs, noise_p, adversary")
    # sweeps are indexed by compared rounds, so every test pair is compared by default
    p.add_argument("--independent", dest="coordinated", action="store_false", help="independent basis choices")
    p.set_defaults(coordinated=True)

    p = sub.add_parser("chsh", help="CHSH estimate over --test-pairs pairs")
    _common(p, bits=0, test_pairs=40000)
    return parser


def _config(args) -> SessionConfig:
    return SessionConfig(
        seed=args.seed,
        n_message_bits=args.bits,
        test_pairs=args.test_pairs,
        noise_p=args.noise,
        adversary=args.eve,
        mismatch_threshold=args.threshold,
        attack_rate=args.attack_rate,
        verify_bases=args.bases,
        coordinated_bases=args.coordinated,
        message=getattr(args, "message", None),
    )


def _render(args, payload, rows: Optional[list[SweepRow]] = None) -> str:
    if rows is not None:
        if args.format == "csv":
            buf = io.StringIO(newline="")
            emit_csv(rows, buf)
            return buf.getvalue()
        payload = {**payload, "rows": [r.as_dict() for r in rows]}
        return json.dumps(payload, indent=2) + "\n"
    if args.format == "csv":
        flat = {k: v for k, v in payload.items() if not isinstance(v, (dict, list))}
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(flat.keys())
        writer.writerow([_fmt(v) for v in flat.values()])
        return buf.getvalue()
    return json.dumps(payload, indent=2) + "\n"


def cli_run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.trials < 1:
        parser.error("--trials must be >= 1")
    meta = None
    try:
        config = _config(args)
        if args.command == "session":
            text = run_session(config).to_json()
        elif args.command == "verify":
            text = _render(args, verify_summary(config, args.trials))
        elif args.command == "chsh":
            text = _render(args, chsh_summary(config))
        else:
            name, _, raw = args.sweep.partition("=")
            spec = ExperimentSpec(config, name.strip(), [v for v in raw.split(",") if v.strip()], args.trials, args.out)
            if not spec.values:
                raise ValueError("--sweep needs at least one value")
            meta = {"config": config.to_dict(), "rng_algorithm": RNG_ALGORITHM, "sweep": spec.sweep_field,
                    "values": [_fmt(v) for v in spec.values], "trials": spec.trials}
            text = _render(args, meta, run_sweep(spec))
    except ValueError as exc:
        parser.error(str(exc))

    if args.out is None:
        sys.stdout.write(text)
        return 0
    try:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        if meta is not None and args.format == "csv":
            # the CSV header is fixed, so the resolved config goes alongside it
            with open(args.out + ".meta.json", "w") as fh:
                fh.write(json.dumps(meta, indent=2) + "\n")
    except OSError as exc:
        print(f"qsdc: cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_run())


if __name__ == "__main__":
    main()
