"""Command-line interface: sample, certify, run, fit, report.

Seeded campaigns are reproducible end to end: data outputs are
byte-identical for identical (config, seed, version), and every run writes
a manifest holding the effective config, the seed (auto-generated ones
included), and digests of the emitted files.

Exit codes: 0 success, 1 configuration or validation error, 2 numerical
failure (broken channels, non-identifiable fits).
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

import realrb
from realrb.clifford import enumerate_closure, real_clifford_generators, sample_real_clifford
from realrb.config import (
    ConfigError,
    experiment_from_document,
    load_config_document,
    serialize_config,
    validate_config,
)
from realrb.design import certify_orthogonal_2design, commutant_dimension, frame_potential
from realrb.engine import DATASET_LABELS, DecayDataset, SimulationError, run_campaign
from realrb.fitting import decay_offsets, difference_estimators, estimate_fidelities

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

_CERTIFY_MAX_N = 3  # commutant system is d^4 = 4096 at n = 3; enough for the desk


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _resolve_threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("REALRB_THREADS")
    return max(1, int(env)) if env else 1


def _auto_seed() -> int:
    return int(np.random.SeedSequence().entropy % (1 << 63))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_sample(args) -> int:
    if args.n < 1:
        raise ConfigError("need n >= 1")
    rng = np.random.default_rng(args.seed)
    for _ in range(args.count):
        el = sample_real_clifford(args.n, rng)
        record = {
            "n": el.n,
            "symplectic": [el.symplectic.column(j).to_bits() for j in range(2 * el.n)],
            "pauli": {
                "p": [(el.pauli.x.p >> i) & 1 for i in range(el.n)],
                "q": [(el.pauli.x.q >> i) & 1 for i in range(el.n)],
                "sign": el.pauli.sign,
            },
        }
        # stored column-major: entry [j][i] is row i of column j
        if args.dense:
            record["dense"] = [[float(x) for x in row] for row in el.dense]
        print(json.dumps(record))
    return EXIT_OK


def cmd_certify(args) -> int:
    n = args.n
    if not 1 <= n <= _CERTIFY_MAX_N:
        raise ConfigError(f"certification supports 1 <= n <= {_CERTIFY_MAX_N}")
    if args.group == "pauli":
        if n != 1:
            raise ConfigError("the Pauli control ensemble is enumerated for n = 1 only")
        x = np.array([[0.0, 1.0], [1.0, 0.0]])
        z = np.diag([1.0, -1.0])
        result = certify_orthogonal_2design(ensemble=enumerate_closure([x, z], cap=16))
        verdict = "certified" if result.certified else "not certified"
        print(f"pauli ensemble: P = {result.frame_potential:.6f}, {verdict}")
        return EXIT_OK
    parts = []
    certified = []
    if n == 1:
        z = np.diag([1.0, -1.0])
        h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
        pot = frame_potential(enumerate_closure([z, h], cap=32))
        parts.append(f"P = {pot:.6f}")
        certified.append(abs(pot - 3.0) <= 1e-6)
    dim = commutant_dimension(real_clifford_generators(n))
    parts.append(f"commutant dim = {dim}")
    certified.append(dim == 3)
    verdict = "certified" if all(certified) else "not certified"
    print(f"real Clifford group, n = {n}: " + ", ".join(parts) + f", {verdict}")
    return EXIT_OK


def cmd_run(args) -> int:
    doc = load_config_document(args.config)
    validate_config(doc)
    seed = args.seed if args.seed is not None else doc.get("seed")
    if seed is None:
        seed = _auto_seed()
        print(f"no seed given; generated {seed}")
    config = experiment_from_document(doc, seed_override=seed, shots_override=args.shots)
    threads = _resolve_threads(args.threads)
    data = run_campaign(config, threads=threads)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "dataset.csv"
    json_path = out_dir / "dataset.json"
    csv_path.write_text(data.to_csv())
    json_path.write_text(data.to_json())

    effective = dict(doc)
    effective["seed"] = int(seed)
    manifest = {
        "tool": "realrb",
        "version": realrb.__version__,
        "created_utc": _utc_now(),
        "seed": int(seed),
        "threads": threads,
        "config": json.loads(serialize_config(effective)),
        "outputs": {p.name: _sha256(p) for p in (csv_path, json_path)},
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for p in (csv_path, json_path, manifest_path):
        print(f"wrote {p}")
    return EXIT_OK


def _load_dataset(path: str, n_override: int | None) -> tuple[DecayDataset, int]:
    p = Path(path)
    if p.suffix.lower() == ".csv":
        data = DecayDataset.from_csv(p.read_text())
    else:
        data = DecayDataset.from_json(p.read_text())
    n = n_override if n_override is not None else data.config.get("n")
    if n is None:
        raise ConfigError("dataset carries no qubit count; pass --n")
    return data, int(n)


def cmd_fit(args) -> int:
    data, n = _load_dataset(args.data, args.n)
    b_fit, c_fit = difference_estimators(data)
    fidelities = estimate_fidelities(b_fit, c_fit, d=1 << n)
    doc = {
        "n": n,
        "d": 1 << n,
        "method": "difference-curves",
        "b": _rate_summary(b_fit),
        "c": _rate_summary(c_fit),
        "fidelities": fidelities.to_dict(),
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    print(
        f"b = {b_fit.value('rate'):.6f} +- {b_fit.stderr('rate'):.2g}, "
        f"c = {c_fit.value('rate'):.6f} +- {c_fit.stderr('rate'):.2g}, "
        f"avg fidelity = {fidelities.average:.6f}, rebit fidelity = {fidelities.rebit:.6f}"
    )
    if "non-identifiable" in b_fit.flags or "non-identifiable" in c_fit.flags:
        print("fit flagged non-identifiable", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _rate_summary(fit) -> dict:
    return {
        "amplitude": fit.value("amplitude"),
        "amplitude_stderr": fit.stderr("amplitude"),
        "rate": fit.value("rate"),
        "rate_stderr": fit.stderr("rate"),
        "rates_valid": fit.rates_valid,
        "flags": list(fit.flags),
        "method": fit.method,
    }


def cmd_report(args) -> int:
    data, _ = _load_dataset(args.data, args.n)
    fit_doc = json.loads(Path(args.fit).read_text())
    b_rate = fit_doc["b"]["rate"]
    c_rate = fit_doc["c"]["rate"]
    offsets = decay_offsets(data)
    rows = data.row_map()
    lines = ["curve,m,observed,model"]
    for prep, meas in DATASET_LABELS:
        a0, b0, c0 = offsets[(prep, meas)]
        for m in data.lengths():
            observed = rows[(m, prep, meas)].mean
            model = a0 + b0 * b_rate**m + c0 * c_rate**m
            lines.append(f"{prep}_{meas},{m},{observed:.17g},{model:.17g}")
    for curve, prep, rate, amp in (
        ("difference_b", "plus", b_rate, fit_doc["b"]["amplitude"]),
        ("difference_c", "minus", c_rate, fit_doc["c"]["amplitude"]),
    ):
        for m in data.lengths():
            diff = rows[(m, prep, "plus")].mean - rows[(m, prep, "minus")].mean
            lines.append(f"{curve},{m},{diff:.17g},{amp * rate**m:.17g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="realrb",
        description="Randomized benchmarking over the real Clifford group: "
        "sample group elements, certify the 2-design property, run seeded "
        "campaigns, fit decay curves, and emit plot data.",
    )
    parser.add_argument("--version", action="version", version=f"realrb {realrb.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="stream uniformly random group elements as JSON lines")
    p.add_argument("-n", type=int, required=True, help="number of qubits")
    p.add_argument("-c", "--count", type=int, default=1, help="number of samples")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dense", action="store_true", help="include dense matrices")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("certify", help="certify the orthogonal-2-design property")
    p.add_argument("-n", type=int, required=True)
    p.add_argument(
        "--group",
        choices=("clifford", "pauli"),
        default="clifford",
        help="pauli is the negative-control ensemble",
    )
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("run", help="run a benchmarking campaign from a config file")
    p.add_argument("--config", required=True, help="TOML or JSON config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--shots", type=int, default=None, help="override shots per sequence")
    p.add_argument("--threads", type=int, default=None, help="fallback: REALRB_THREADS")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fit", help="fit difference curves and estimate fidelities")
    p.add_argument("--data", required=True, help="dataset.json (or .csv with --n)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", default=None, help="fit report JSON; stdout if omitted")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="emit per-curve (m, observed, model) plot data")
    p.add_argument("--data", required=True)
    p.add_argument("--fit", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", default=None, help="report CSV; stdout if omitted")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
