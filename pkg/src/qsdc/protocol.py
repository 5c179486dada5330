"""Two-phase direct-communication session over shared |Phi+> pairs.

Phase one distributes pairs (possibly through an eavesdropper) and checks a
sacrificed prefix of them by random Z/X correlation tests. Phase two
teleports each message bit, encoded as |+> (0) or |-> (1), from Bob to Alice;
Bob broadcasts his Bell outcome ``ij`` and Alice undoes U_ij before reading
her qubit in the X basis.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import qcore
from .adversary import (
    EVE_QUBITS,
    AdversaryKind,
    EveRecord,
    PairInstance,
    attack_distribute,
    binomial_half_width,
    eve_decode,
    honest_distribute,
)
from .qcore import MeasBasis, PauliCorrection, StateVector
from .rng import RNG_ALGORITHM, session_streams

CHSH_ANGLES = {"a": 0.0, "a'": math.pi / 2, "b": math.pi / 4, "b'": -math.pi / 4}
# (alice setting, bob setting, sign in S)
CHSH_TERMS = (("a", "b", 1), ("a", "b'", 1), ("a'", "b", 1), ("a'", "b'", -1))
CHSH_MIN_ROUNDS = 100


# --- public classical channel -------------------------------------------------


@dataclass(frozen=True)
class BellOutcome:
    index: int
    ij: str
    type: str = field(default="BellOutcome", init=False)

    def __post_init__(self) -> None:
        if self.ij not in ("00", "01", "10", "11"):
            raise ValueError(f"invalid Bell outcome bits {self.ij!r}")


@dataclass(frozen=True)
class BasisReveal:
    pair: int
    party: str
    basis: str
    type: str = field(default="BasisReveal", init=False)


@dataclass(frozen=True)
class OutcomeReveal:
    pair: int
    party: str
    bit: int
    type: str = field(default="OutcomeReveal", init=False)


@dataclass(frozen=True)
class Verdict:
    accept: bool
    type: str = field(default="Verdict", init=False)


ClassicalMsg = Union[BellOutcome, BasisReveal, OutcomeReveal, Verdict]

_MSG_TYPES = {cls.__name__: cls for cls in (BellOutcome, BasisReveal, OutcomeReveal, Verdict)}


def msg_to_dict(msg: ClassicalMsg) -> dict:
    d = asdict(msg)
    return {"type": d.pop("type"), **d}


def msg_from_dict(d: dict) -> ClassicalMsg:
    d = dict(d)
    return _MSG_TYPES[d.pop("type")](**d)


# --- configuration and records ---------------------------------------------------


@dataclass(frozen=True)
class SessionConfig:
    seed: int = 1
    n_message_bits: int = 64
    test_pairs: int = 200
    noise_p: float = 0.0
    adversary: AdversaryKind = AdversaryKind.None_
    mismatch_threshold: float = 0.05
    attack_rate: float = 1.0
    # which bases the verification draws from, e.g. "ZX" or "Z"
    verify_bases: str = "ZX"
    # Bob reuses Alice's basis, so every test pair is a compared round
    coordinated_bases: bool = False
    # caller-supplied payload; overrides n_message_bits when given
    message: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "adversary", AdversaryKind.parse(self.adversary))
        if self.message is not None:
            if any(c not in "01" for c in self.message):
                raise ValueError("message must be a string of '0'/'1'")
            object.__setattr__(self, "n_message_bits", len(self.message))
        if self.n_message_bits < 0 or self.test_pairs < 0:
            raise ValueError("pair counts must be non-negative")
        if not 0.0 <= self.noise_p <= 1.0:
            raise ValueError("noise_p must lie in [0, 1]")
        if not 0.0 <= self.mismatch_threshold < 0.5:
            raise ValueError("mismatch_threshold must lie in [0, 0.5)")
        if not 0.0 <= self.attack_rate <= 1.0:
            raise ValueError("attack_rate must lie in [0, 1]")
        bases = "".join(dict.fromkeys(self.verify_bases.upper()))
        if not bases or set(bases) - {"Z", "X"}:
            raise ValueError("verify_bases must be drawn from 'Z' and 'X'")
        object.__setattr__(self, "verify_bases", bases)

    def without_seed(self) -> SessionConfig:
        return replace(self, seed=0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["adversary"] = self.adversary.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SessionConfig:
        return cls(**d)


@dataclass(frozen=True)
class ChannelVerdict:
    accept: bool
    z_compared: int = 0
    z_mismatch: int = 0
    x_compared: int = 0
    x_mismatch: int = 0
    insufficient: bool = False

    @property
    def z_rate(self) -> float:
        return self.z_mismatch / self.z_compared if self.z_compared else 0.0

    @property
    def x_rate(self) -> float:
        return self.x_mismatch / self.x_compared if self.x_compared else 0.0

    @property
    def compared(self) -> int:
        return self.z_compared + self.x_compared

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SessionTranscript:
    config: SessionConfig
    rng_algorithm: str
    verdict: ChannelVerdict
    sent_bits: str
    received_bits: str
    eve_bits: Optional[str]
    classical_log: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "rng_algorithm": self.rng_algorithm,
            "verdict": self.verdict.to_dict(),
            "sent_bits": self.sent_bits,
            "received_bits": self.received_bits,
            "eve_bits": self.eve_bits,
            "classical_log": [msg_to_dict(m) for m in self.classical_log],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> SessionTranscript:
        return cls(
            config=SessionConfig.from_dict(d["config"]),
            rng_algorithm=d["rng_algorithm"],
            verdict=ChannelVerdict(**d["verdict"]),
            sent_bits=d["sent_bits"],
            received_bits=d["received_bits"],
            eve_bits=d["eve_bits"],
            classical_log=[msg_from_dict(m) for m in d["classical_log"]],
        )

    @classmethod
    def from_json(cls, text: str) -> SessionTranscript:
        return cls.from_dict(json.loads(text))


# --- phase one ---------------------------------------------------------------------


def apply_noise(pair: PairInstance, noise_p: float, rng: np.random.Generator) -> PairInstance:
    """Independent X and Z flips, each with probability ``noise_p``, on Bob's half."""
    # draw both unconditionally so the stream layout does not depend on noise_p
    flip_x, flip_z = rng.random(2) < noise_p
    state = pair.state
    if flip_x:
        state = qcore.apply_single(state, "B", qcore.PAULI_X)
    if flip_z:
        state = qcore.apply_single(state, "B", qcore.PAULI_Z)
    return PairInstance(pair.index, state, pair.eve)


def distribute_pairs(
    n: int,
    adversary: Union[AdversaryKind, str, None],
    noise_p: float,
    rng: np.random.Generator,
    *,
    attack_rate: float = 1.0,
    start_index: int = 0,
) -> list[PairInstance]:
    kind = AdversaryKind.parse(adversary)
    pairs = []
    for k in range(start_index, start_index + n):
        attacked = rng.random() < attack_rate
        if kind is not AdversaryKind.None_ and attacked:
            pair = attack_distribute(kind, rng, k)
        else:
            pair = honest_distribute(k)
        pairs.append(apply_noise(pair, noise_p, rng))
    return pairs


def _pick_basis(bases: str, rng: np.random.Generator) -> MeasBasis:
    if len(bases) == 1:
        return MeasBasis(bases)
    return MeasBasis(bases[int(rng.integers(len(bases)))])


def verify_channel(
    pairs: Sequence[PairInstance],
    threshold: float,
    rng: np.random.Generator,
    *,
    bases: str = "ZX",
    coordinated: bool = False,
    log: Optional[list] = None,
) -> ChannelVerdict:
    """Random-basis correlation test on sacrificed pairs.

    Both parties measure first, then reveal bases; only rounds where the
    bases agree are compared. A basis with no compared rounds contributes no
    evidence. With at least one test pair but no compared round at all the
    verdict is a reject flagged ``insufficient``.
    """
    counts = {MeasBasis.Z: [0, 0], MeasBasis.X: [0, 0]}
    for pair in pairs:
        basis_a = _pick_basis(bases, rng)
        basis_b = basis_a if coordinated else _pick_basis(bases, rng)
        bit_a, rest = qcore.measure_single(pair.state, "A", basis_a, rng)
        bit_b, _ = qcore.measure_single(rest, "B", basis_b, rng)
        if log is not None:
            log.append(BasisReveal(pair.index, "alice", basis_a.value))
            log.append(BasisReveal(pair.index, "bob", basis_b.value))
        if basis_a is not basis_b:
            continue
        if log is not None:
            log.append(OutcomeReveal(pair.index, "alice", bit_a))
            log.append(OutcomeReveal(pair.index, "bob", bit_b))
        counts[basis_a][0] += 1
        counts[basis_a][1] += bit_a != bit_b

    (zc, zm), (xc, xm) = counts[MeasBasis.Z], counts[MeasBasis.X]
    insufficient = len(pairs) > 0 and zc + xc == 0
    z_ok = zc == 0 or zm / zc <= threshold
    x_ok = xc == 0 or xm / xc <= threshold
    verdict = ChannelVerdict(
        accept=z_ok and x_ok and not insufficient,
        z_compared=zc,
        z_mismatch=zm,
        x_compared=xc,
        x_mismatch=xm,
        insufficient=insufficient,
    )
    if log is not None:
        log.append(Verdict(verdict.accept))
    return verdict


@dataclass
class ChshResult:
    s: float
    half_width: float
    correlators: dict
    rounds: dict
    low_confidence: bool


def chsh_exact(state: StateVector, labels: Sequence[str] = ("A", "B")) -> float:
    return sum(
        sign * qcore.expectation_correlator(state, labels, CHSH_ANGLES[x], CHSH_ANGLES[y])
        for x, y, sign in CHSH_TERMS
    )


def chsh_test(pairs: Sequence[PairInstance], rng: np.random.Generator) -> ChshResult:
    """Sampled CHSH value; pairs are split evenly across the four settings at random."""
    settings = rng.permutation(np.arange(len(pairs)) % 4)
    sums = [0, 0, 0, 0]
    rounds = [0, 0, 0, 0]
    for pair, t in zip(pairs, settings):
        x, y, _ = CHSH_TERMS[t]
        bit_a, rest = qcore.measure_single(pair.state, "A", CHSH_ANGLES[x], rng)
        bit_b, _ = qcore.measure_single(rest, "B", CHSH_ANGLES[y], rng)
        sums[t] += 1 if bit_a == bit_b else -1
        rounds[t] += 1

    corr, var = {}, 0.0
    s = 0.0
    for t, (x, y, sign) in enumerate(CHSH_TERMS):
        e = sums[t] / rounds[t] if rounds[t] else 0.0
        corr[f"E({x},{y})"] = e
        if rounds[t]:
            var += (1.0 - e * e) / rounds[t]
        s += sign * e
    return ChshResult(
        s=s,
        half_width=4.0 * math.sqrt(var),
        correlators=corr,
        rounds={f"E({x},{y})": n for (x, y, _), n in zip(CHSH_TERMS, rounds)},
        low_confidence=min(rounds) < CHSH_MIN_ROUNDS,
    )


# --- phase two ---------------------------------------------------------------------


@dataclass
class TeleportResult:
    ij: str
    state: StateVector
    public: BellOutcome


def teleport_bit(
    pair: PairInstance,
    b: int,
    rng: np.random.Generator,
    *,
    log: Optional[list] = None,
    forced: Optional[qcore.BellKind] = None,
) -> TeleportResult:
    """Bob's side: encode ``b`` on C, Bell-measure (B, C), broadcast ij.

    ``forced`` projects onto a chosen outcome instead of sampling (for
    exhaustive checks).
    """
    joint = qcore.tensor(pair.state, qcore.encode_bit(b, "C"))
    if forced is None:
        kind, joint = qcore.bell_measure(joint, ("B", "C"), rng)
    else:
        prob, joint = qcore.bell_project(joint, ("B", "C"), forced)
        if joint is None:
            raise ValueError(f"outcome {forced.name} has zero probability")
        kind = forced
    msg = BellOutcome(pair.index, kind.bits)
    if log is not None:
        log.append(msg)
    return TeleportResult(kind.bits, joint, msg)


def correct(state: StateVector, ij: str, label: str = "A") -> StateVector:
    return qcore.apply_single(state, label, PauliCorrection.for_outcome(ij).inverse)


def _decode(state: StateVector, ij: str, rng: np.random.Generator, label: str = "A"):
    return qcore.measure_single(correct(state, ij, label), label, MeasBasis.X, rng)


def correct_and_decode(state: StateVector, ij: str, rng: np.random.Generator, label: str = "A") -> int:
    """Alice's side: undo U_ij on her qubit and read it in the X basis."""
    bit, _ = _decode(state, ij, rng, label)
    return bit


# --- whole session -----------------------------------------------------------------


def _eve_private_state(residual: Optional[StateVector], kind: AdversaryKind) -> Optional[StateVector]:
    labels = EVE_QUBITS[kind]
    if not labels or residual is None:
        return None
    held, _ = qcore.split(residual, labels)
    return held


@dataclass
class SessionRun:
    transcript: SessionTranscript
    eve_records: list  # per message bit: EveRecord or None


def execute_session(config: SessionConfig) -> SessionRun:
    """Run one session and also return Eve's private per-bit records."""
    streams = session_streams(config.seed)
    log: list = []
    total = config.test_pairs + config.n_message_bits
    pairs = distribute_pairs(
        total, config.adversary, config.noise_p, streams["distribution"], attack_rate=config.attack_rate
    )
    test, payload = pairs[: config.test_pairs], pairs[config.test_pairs :]
    verdict = verify_channel(
        test,
        config.mismatch_threshold,
        streams["verification"],
        bases=config.verify_bases,
        coordinated=config.coordinated_bases,
        log=log,
    )
    eve_active = config.adversary is not AdversaryKind.None_
    if not verdict.accept:
        transcript = SessionTranscript(
            config, RNG_ALGORITHM, verdict, "", "", "" if eve_active else None, log
        )
        return SessionRun(transcript, [])

    if config.message is not None:
        message = [int(c) for c in config.message]
    else:
        message = [int(x) for x in streams["message"].integers(0, 2, size=config.n_message_bits)]

    received, records, public = [], [], []
    for pair, b in zip(payload, message):
        result = teleport_bit(pair, b, streams["bob"], log=log)
        bit, residual = _decode(result.state, result.ij, streams["alice"])
        received.append(bit)
        public.append(result.ij)
        if pair.eve is not None:
            pair.eve.held = _eve_private_state(residual, pair.eve.kind)
        records.append(pair.eve)

    eve_bits = None
    if eve_active:
        eve_bits = replay_eve(records, log, streams["eve"])
    transcript = SessionTranscript(
        config,
        RNG_ALGORITHM,
        verdict,
        "".join(map(str, message)),
        "".join(map(str, received)),
        eve_bits,
        log,
    )
    return SessionRun(transcript, records)


def replay_eve(records: Sequence[Optional[EveRecord]], classical_log: Iterable, rng: np.random.Generator) -> str:
    """Eve's guesses from her private records and the public Bell outcomes only.

    Positions without a claim are rendered as '-'.
    """
    outcomes = [m.ij for m in classical_log if isinstance(m, BellOutcome)]
    if len(outcomes) != len(records):
        raise ValueError("one public Bell outcome is needed per message record")
    out = []
    for record, ij in zip(records, outcomes):
        guess = eve_decode(record, ij, rng)
        out.append("-" if guess is None else str(guess))
    return "".join(out)


def run_session(config: SessionConfig) -> SessionTranscript:
    return execute_session(config).transcript


def verification_only(config: SessionConfig) -> ChannelVerdict:
    """Phase one alone, using the same streams as a full session."""
    streams = session_streams(config.seed)
    pairs = distribute_pairs(
        config.test_pairs, config.adversary, config.noise_p, streams["distribution"], attack_rate=config.attack_rate
    )
    return verify_channel(
        pairs,
        config.mismatch_threshold,
        streams["verification"],
        bases=config.verify_bases,
        coordinated=config.coordinated_bases,
    )


__all__ = [
    "BasisReveal",
    "BellOutcome",
    "ChannelVerdict",
    "ChshResult",
    "OutcomeReveal",
    "SessionConfig",
    "SessionRun",
    "SessionTranscript",
    "TeleportResult",
    "Verdict",
    "binomial_half_width",
    "chsh_exact",
    "chsh_test",
    "correct_and_decode",
    "distribute_pairs",
    "execute_session",
    "replay_eve",
    "run_session",
    "teleport_bit",
    "verify_channel",
]
