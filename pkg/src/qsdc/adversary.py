"""Eavesdropper strategies and leakage accounting.

Eve acts once per pair at distribution time, then listens to the public
Bell-outcome broadcast during the message phase. Everything she later uses
to guess a message bit lives in her ``EveRecord`` (the qubits she holds plus
what she measured herself) together with the public ``ij``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .qcore import (
    BellKind,
    MeasBasis,
    PauliCorrection,
    StateVector,
    apply_single,
    basis_vectors,
    bell_measure,
    bell_probabilities,
    encode_bit,
    make_bell,
    make_ghz3,
    measure_single,
    single_qubit,
    tensor,
)

if TYPE_CHECKING:
    from .protocol import SessionTranscript


class AdversaryKind(enum.Enum):
    None_ = "none"
    Swap = "swap"
    Ghz = "ghz"
    InterceptResend = "ir"

    @classmethod
    def parse(cls, name: str | AdversaryKind | None) -> AdversaryKind:
        if name is None:
            return cls.None_
        if isinstance(name, cls):
            return name
        aliases = {"intercept-resend": "ir", "interceptresend": "ir", "": "none"}
        key = str(name).strip().lower()
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown adversary {name!r}; expected one of none, swap, ghz, ir") from None


# Labels of the qubits Eve keeps, per strategy.
EVE_QUBITS = {
    AdversaryKind.None_: (),
    AdversaryKind.Swap: ("D", "E"),
    AdversaryKind.Ghz: ("F",),
    AdversaryKind.InterceptResend: (),
}

# Correction Eve applies to D, indexed [her (B,D) Bell outcome][Bob's public ij].
# Frozen from an exhaustive teleportation enumeration over all 16 cells with a
# generic input state; see tests/test_adversary.py::test_swap_table_matches_oracle.
SWAP_CORRECTION: dict[str, dict[str, str]] = {
    "00": {"00": "00", "01": "01", "10": "10", "11": "11"},
    "01": {"00": "01", "01": "00", "10": "11", "11": "10"},
    "10": {"00": "10", "01": "11", "10": "00", "11": "01"},
    "11": {"00": "11", "01": "10", "10": "01", "11": "00"},
}


@dataclass
class EveRecord:
    """Strategy-private memory for one tampered pair."""

    kind: AdversaryKind
    swap_outcome: Optional[BellKind] = None
    ir_basis: Optional[MeasBasis] = None
    ir_outcome: Optional[int] = None
    # Eve's qubits once the pair has been consumed; filled by the session
    held: Optional[StateVector] = None


@dataclass
class PairInstance:
    """Joint state of one distributed pair plus any qubits Eve entangled with it."""

    index: int
    state: StateVector
    eve: Optional[EveRecord] = None

    @property
    def tampered(self) -> bool:
        return self.eve is not None


def honest_distribute(index: int = 0) -> PairInstance:
    return PairInstance(index, make_bell(BellKind.PhiPlus, ("A", "B")))


def swap_attack_distribute(pair_rng: np.random.Generator, index: int = 0) -> PairInstance:
    """Entanglement swapping: Bell-measure (B, D) against Eve's own |Phi+>_DE."""
    joint = tensor(make_bell(BellKind.PhiPlus, ("A", "B")), make_bell(BellKind.PhiPlus, ("D", "E")))
    outcome, joint = bell_measure(joint, ("B", "D"), pair_rng)
    return PairInstance(index, joint, EveRecord(AdversaryKind.Swap, swap_outcome=outcome))


def ghz_attack_distribute(index: int = 0) -> PairInstance:
    return PairInstance(index, make_ghz3(("A", "B", "F")), EveRecord(AdversaryKind.Ghz))


def intercept_resend_distribute(rng: np.random.Generator, index: int = 0) -> PairInstance:
    basis = MeasBasis.Z if rng.random() < 0.5 else MeasBasis.X
    outcome, alice = measure_single(make_bell(BellKind.PhiPlus, ("A", "B")), "B", basis, rng)
    resent = single_qubit(basis_vectors(basis)[outcome], "B")
    record = EveRecord(AdversaryKind.InterceptResend, ir_basis=basis, ir_outcome=outcome)
    return PairInstance(index, tensor(alice, resent), record)


def attack_distribute(kind: AdversaryKind, rng: np.random.Generator, index: int = 0) -> PairInstance:
    if kind is AdversaryKind.Swap:
        return swap_attack_distribute(rng, index)
    if kind is AdversaryKind.Ghz:
        return ghz_attack_distribute(index)
    if kind is AdversaryKind.InterceptResend:
        return intercept_resend_distribute(rng, index)
    return honest_distribute(index)


def _measure_x_after(held: StateVector, label: str, correction: PauliCorrection, rng) -> int:
    corrected = apply_single(held, label, correction.inverse)
    bit, _ = measure_single(corrected, label, MeasBasis.X, rng)
    return bit


def _ir_guess(record: EveRecord, ij: str, rng: np.random.Generator) -> int:
    # Eve knows the exact state she resent as B; pick the message bit that
    # makes Bob's announced outcome most likely.
    resent = single_qubit(basis_vectors(record.ir_basis)[record.ir_outcome], "B")
    kind = BellKind.from_bits(ij)
    like = [bell_probabilities(tensor(resent, encode_bit(b, "C")), ("B", "C"))[kind] for b in (0, 1)]
    if math.isclose(like[0], like[1], abs_tol=1e-12):
        return int(rng.random() < 0.5)
    return int(like[1] > like[0])


def eve_decode(record: Optional[EveRecord], ij: str, rng: np.random.Generator) -> Optional[int]:
    """Eve's guess of one message bit, or ``None`` (no claim) for an untampered pair.

    ``record.held`` must contain Eve's qubits after Bob's Bell measurement.
    """
    if record is None or record.kind is AdversaryKind.None_:
        return None
    if record.kind is AdversaryKind.Swap:
        correction = PauliCorrection(SWAP_CORRECTION[record.swap_outcome.bits][ij])
        return _measure_x_after(record.held, "D", correction, rng)
    if record.kind is AdversaryKind.Ghz:
        return _measure_x_after(record.held, "F", PauliCorrection.for_outcome(ij), rng)
    return _ir_guess(record, ij, rng)


def binomial_half_width(p: float, n: int, sigmas: float = 4.0) -> float:
    """Normal-approximation half-width of a binomial proportion."""
    if n <= 0 or math.isnan(p):
        return float("nan")
    return sigmas * math.sqrt(max(p * (1.0 - p), 0.0) / n)


@dataclass
class LeakageReport:
    eve_bit_accuracy: float
    alice_bit_accuracy: float
    detection_probability: float
    compared_rounds: int
    trials: int = 0
    eve_bits_claimed: int = 0
    alice_bits: int = 0
    detection_ci: float = float("nan")
    eve_ci: float = float("nan")
    alice_ci: float = float("nan")
    z_mismatch_rate: float = float("nan")
    x_mismatch_rate: float = float("nan")
    seed0: Optional[int] = field(default=None)


def _ratio(num: int, den: int) -> float:
    return num / den if den else float("nan")


def leakage_report(transcripts: Sequence[SessionTranscript]) -> LeakageReport:
    """Aggregate accuracies and empirical detection over repeated sessions."""
    if not transcripts:
        raise ValueError("leakage_report needs at least one transcript")
    base = transcripts[0].config.without_seed()
    for t in transcripts[1:]:
        if t.config.without_seed() != base:
            raise ValueError("transcripts must share a configuration apart from the seed")

    rejected = eve_ok = eve_n = alice_ok = alice_n = 0
    z_cmp = z_mis = x_cmp = x_mis = 0
    for t in transcripts:
        v = t.verdict
        rejected += not v.accept
        z_cmp += v.z_compared
        z_mis += v.z_mismatch
        x_cmp += v.x_compared
        x_mis += v.x_mismatch
        for sent, got in zip(t.sent_bits, t.received_bits):
            alice_n += 1
            alice_ok += sent == got
        if t.eve_bits is not None:
            for sent, guess in zip(t.sent_bits, t.eve_bits):
                if guess in "01":
                    eve_n += 1
                    eve_ok += sent == guess

    n = len(transcripts)
    detect = rejected / n
    eve_acc = _ratio(eve_ok, eve_n)
    alice_acc = _ratio(alice_ok, alice_n)
    return LeakageReport(
        eve_bit_accuracy=eve_acc,
        alice_bit_accuracy=alice_acc,
        detection_probability=detect,
        compared_rounds=z_cmp + x_cmp,
        trials=n,
        eve_bits_claimed=eve_n,
        alice_bits=alice_n,
        detection_ci=binomial_half_width(detect, n),
        eve_ci=binomial_half_width(eve_acc, eve_n),
        alice_ci=binomial_half_width(alice_acc, alice_n),
        z_mismatch_rate=_ratio(z_mis, z_cmp),
        x_mismatch_rate=_ratio(x_mis, x_cmp),
        seed0=transcripts[0].config.seed,
    )
