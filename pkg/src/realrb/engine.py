"""Benchmarking sequence generation, noisy simulation, and decay datasets.

A sequence of length m is m uniformly random group elements followed by the
exact inversion element, so the ideal net action is the identity.  The
simulated model applies the noise channel before every gate except the
first, i.e. the physical gates are (gate o noise) for gates 2..m+1 while
the first gate's noise slot is treated as absorbed into state preparation;
survival data then follows A + b^m B + c^m C with offsets computed from the
bare preparation and effect.

Four datasets are produced per run, labelled by preparation symmetry
(plus: symmetric, minus: antisymmetric) and by the +-1 eigenspace projector
of the preparation's defining Pauli.  Differences within a preparation
isolate single exponentials.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from realrb.channels import Channel, noise_model, pauli_string_matrix
from realrb.clifford import (
    RealCliffordElement,
    _element_from_parts,
    sample_real_clifford,
)
from realrb.f2 import BitMatrix, invert_symplectic

PREP_LABELS = ("plus", "minus")
MEAS_LABELS = ("plus", "minus")
DATASET_LABELS = tuple((p, e) for p in PREP_LABELS for e in MEAS_LABELS)

_PROBABILITY_SLACK = 1e-9


class SimulationError(RuntimeError):
    """Raised when a simulated probability leaves [0, 1]; the channel is broken."""


def default_lengths(max_length: int = 256) -> tuple[int, ...]:
    """Sequence lengths exponentially spaced from 4 up to max_length."""
    if max_length < 4:
        raise ValueError("max_length must be at least 4")
    out = []
    m = 4
    while m <= max_length:
        out.append(m)
        m *= 2
    return tuple(out)


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    noise: dict
    seed: int
    lengths: tuple[int, ...] = field(default_factory=default_lengths)
    sequences_per_length: int = 50
    shots: int = 0
    prep_error: dict | None = None
    meas_error: dict | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need n >= 1")
        if not self.lengths or min(self.lengths) < 1:
            raise ValueError("sequence lengths must be >= 1")
        if self.sequences_per_length < 2:
            raise ValueError("need at least 2 sequences per length")
        if self.shots < 0:
            raise ValueError("shots must be 0 (exact) or positive")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lengths"] = list(self.lengths)  # JSON-stable form
        return out


def prepared_states(n: int) -> dict[str, np.ndarray]:
    """Default preparations: |0..0> and the +1 eigenstate of Y on qubit 0.

    The minus preparation has an antisymmetric traceless part, which makes
    its symmetric-sector offset vanish and isolates the c^m decay.
    """
    d = 1 << n
    ket0 = np.zeros((d, d), dtype=complex)
    ket0[0, 0] = 1.0
    y_plus = np.array([[0.5, -0.5j], [0.5j, 0.5]], dtype=complex)
    minus = y_plus
    for _ in range(n - 1):
        minus = np.kron(minus, np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex))
    return {"plus": ket0, "minus": minus}


def measurement_effects(n: int) -> dict[tuple[str, str], np.ndarray]:
    """Projectors onto the +-1 eigenspaces of each preparation's Pauli."""
    d = 1 << n
    paulis = {"plus": pauli_string_matrix("Z" + "I" * (n - 1)),
              "minus": pauli_string_matrix("Y" + "I" * (n - 1))}
    out = {}
    for prep, pauli in paulis.items():
        out[(prep, "plus")] = (np.eye(d) + pauli) / 2.0
        out[(prep, "minus")] = (np.eye(d) - pauli) / 2.0
    return out


def generate_sequence(m: int, n: int, rng: np.random.Generator) -> list[RealCliffordElement]:
    """m iid uniform elements plus the exact inversion of their product."""
    if m < 1:
        raise ValueError("need m >= 1")
    elems = [sample_real_clifford(n, rng) for _ in range(m)]
    s_tot = BitMatrix.identity(n)
    dense_tot = np.eye(1 << n)
    for el in elems:
        s_tot = el.symplectic @ s_tot
        dense_tot = el.dense @ dense_tot
    inv = _element_from_parts(dense_tot.T.copy(), invert_symplectic(s_tot))
    elems.append(inv)
    return elems


def simulate_sequence(
    gates: list[RealCliffordElement],
    noise: Channel | None,
    rho: np.ndarray,
    effect: np.ndarray,
    shots: int = 0,
    rng: np.random.Generator | None = None,
) -> float:
    """Survival probability tr[E S(rho)] of one noisy sequence.

    shots = 0 returns the exact expectation; otherwise a binomial sample
    mean with ``shots`` draws.
    """
    sigma = np.asarray(rho, dtype=complex)
    for j, g in enumerate(gates):
        if j > 0 and noise is not None:
            sigma = noise.apply(sigma)
        sigma = g.dense @ sigma @ g.dense.T
    prob = complex(np.trace(effect @ sigma))
    if abs(prob.imag) > 1e-8:
        raise SimulationError(f"survival probability has imaginary part {prob.imag:.2e}")
    p = prob.real
    if p < -_PROBABILITY_SLACK or p > 1.0 + _PROBABILITY_SLACK:
        raise SimulationError(f"survival probability {p} outside [0, 1]; broken channel")
    p = min(max(p, 0.0), 1.0)
    if shots:
        if rng is None:
            raise ValueError("shot sampling needs a random generator")
        return float(rng.binomial(shots, p)) / shots
    return p


def abc_from_spam(rho: np.ndarray, effect: np.ndarray) -> tuple[float, float, float]:
    """Decay offsets A = tr[E I/d], B = tr[E (sym(rho) - I/d)], C = tr[E antisym(rho)]."""
    rho = np.asarray(rho, dtype=complex)
    effect = np.asarray(effect, dtype=complex)
    d = rho.shape[0]
    a = np.trace(effect) / d
    b = np.trace(effect @ ((rho + rho.T) / 2.0 - np.eye(d) / d))
    c = np.trace(effect @ (rho - rho.T) / 2.0)
    vals = (a, b, c)
    if max(abs(v.imag) for v in vals) > 1e-10:
        raise ValueError("offsets are not real; invalid state or effect")
    return tuple(float(v.real) for v in vals)


@dataclass(frozen=True)
class DecayRow:
    m: int
    prep: str
    meas: str
    mean: float
    stderr: float
    sequences: int
    shots: int


@dataclass(frozen=True)
class DecayDataset:
    rows: tuple[DecayRow, ...]
    config: dict

    def lengths(self) -> tuple[int, ...]:
        return tuple(sorted({r.m for r in self.rows}))

    def row_map(self) -> dict[tuple[int, str, str], DecayRow]:
        return {(r.m, r.prep, r.meas): r for r in self.rows}

    def series(self, prep: str, meas: str) -> list[DecayRow]:
        return sorted(
            (r for r in self.rows if r.prep == prep and r.meas == meas), key=lambda r: r.m
        )

    # -- persistence ---------------------------------------------------

    CSV_HEADER = ("m", "prep", "meas", "mean", "stderr", "M", "shots")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_HEADER)
        for r in self.rows:
            writer.writerow(
                (r.m, r.prep, r.meas, f"{r.mean:.17g}", f"{r.stderr:.17g}", r.sequences, r.shots)
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, config: dict | None = None) -> "DecayDataset":
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        if header != cls.CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = tuple(
            DecayRow(int(m), prep, meas, float(mean), float(stderr), int(mm), int(shots))
            for m, prep, meas, mean, stderr, mm, shots in reader
        )
        return cls(rows, config or {})

    def to_json(self) -> str:
        doc = {"config": self.config, "rows": [asdict(r) for r in self.rows]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DecayDataset":
        doc = json.loads(text)
        rows = tuple(DecayRow(**r) for r in doc["rows"])
        return cls(rows, doc.get("config", {}))


def spam_arrays(config: ExperimentConfig) -> tuple[dict, dict]:
    """Preparations and effects with any configured SPAM error folded in."""
    preps = prepared_states(config.n)
    effects = measurement_effects(config.n)
    if config.prep_error is not None:
        chan = noise_model(config.prep_error, config.n)
        preps = {k: chan.apply(v) for k, v in preps.items()}
    if config.meas_error is not None:
        chan = noise_model(config.meas_error, config.n)
        effects = {k: chan.apply_adjoint(v) for k, v in effects.items()}
    return preps, effects


def run_campaign(config: ExperimentConfig, threads: int = 1) -> DecayDataset:
    """Protocol run over all lengths and the four dataset labels.

    Every (length, label, repetition) cell derives its own random stream
    from the campaign seed via a spawn key, so results are independent of
    execution order and thread count.
    """
    noise = noise_model(config.noise, config.n)
    preps, effects = spam_arrays(config)

    def one_row(mi: int, li: int) -> DecayRow:
        m = config.lengths[mi]
        prep, meas = DATASET_LABELS[li]
        rho = preps[prep]
        effect = effects[(prep, meas)]
        vals = np.empty(config.sequences_per_length)
        for rep in range(config.sequences_per_length):
            ss = np.random.SeedSequence(entropy=config.seed, spawn_key=(mi, li, rep))
            rng = np.random.Generator(np.random.PCG64(ss))
            seq = generate_sequence(m, config.n, rng)
            vals[rep] = simulate_sequence(seq, noise, rho, effect, config.shots, rng)
        return DecayRow(
            m=m,
            prep=prep,
            meas=meas,
            mean=float(vals.mean()),
            stderr=float(vals.std(ddof=1) / np.sqrt(len(vals))),
            sequences=config.sequences_per_length,
            shots=config.shots,
        )

    cells = [(mi, li) for mi in range(len(config.lengths)) for li in range(len(DATASET_LABELS))]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda c: one_row(*c), cells))
    else:
        rows = [one_row(*c) for c in cells]
    return DecayDataset(tuple(rows), config.to_dict())
