"""Eavesdropping strategies applied at the channel tap, and Eve's inference.

Taps receive only quantum registers and slot positions. Roles (message vs
decoy) and decoy labels are never passed in, so Eve cannot condition her
actions on them; that blindness is what the decoy check exploits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from . import qcore
from .qcore import Basis
from .register import Register

PhaseKey = tuple  # ("s1", attempt) or ("round", attempt, round_index)


class AttackName(Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept_resend"
    ANCILLA_CNOT = "ancilla_cnot"
    KEY_CAPTURE_S1 = "key_capture_s1"


class InterceptPolicy(Enum):
    ALWAYS_Z = "always_z"
    ALWAYS_X = "always_x"
    RANDOM_ZX = "random_zx"


@dataclass(frozen=True)
class AttackKind:
    """Which attack runs at the tap, with an optional per-slot action probability.

    rounds_active gates the attack to specific round indices (None = every
    transmission, S1 included); it exists for engine-level experiments and is
    not part of the scenario schema.
    """

    name: AttackName = AttackName.NONE
    policy: InterceptPolicy = InterceptPolicy.ALWAYS_Z
    probability: float = 1.0
    rounds_active: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"attack probability must be in [0, 1], got {self.probability}")

    @classmethod
    def none(cls) -> "AttackKind":
        return cls(AttackName.NONE)

    @classmethod
    def intercept_resend(
        cls, policy: InterceptPolicy = InterceptPolicy.ALWAYS_Z, probability: float = 1.0
    ) -> "AttackKind":
        return cls(AttackName.INTERCEPT_RESEND, policy, probability)

    @classmethod
    def ancilla_cnot(cls, probability: float = 1.0) -> "AttackKind":
        return cls(AttackName.ANCILLA_CNOT, probability=probability)

    @classmethod
    def key_capture_s1(cls, probability: float = 1.0) -> "AttackKind":
        return cls(AttackName.KEY_CAPTURE_S1, probability=probability)

    def active_in(self, phase: PhaseKey) -> bool:
        if self.name is AttackName.NONE:
            return False
        if self.rounds_active is None:
            return True
        if phase[0] == "s1":
            return "s1" in self.rounds_active
        return phase[2] in self.rounds_active


@dataclass
class EveRecord:
    """One tapped slot: position and action only, never the slot's role or label."""

    phase: PhaseKey
    position: int
    action: str  # "intercept" | "ancilla"
    basis: Basis | None = None
    outcome: int | None = None
    register: Register | None = None
    ancilla: int | None = None  # retained qubit handle for the ancilla action


class EveState:
    """Everything Eve accumulates across one session, restarts included."""

    def __init__(self) -> None:
        self.records: list[EveRecord] = []
        # unmeasured ancilla records per register, oldest first
        self._retained: dict[int, list[EveRecord]] = {}

    def acted_records(self) -> list[EveRecord]:
        return list(self.records)


@dataclass
class EveInference:
    """Per-slot bit guesses and per-round-pair XOR guesses.

    bit_guesses is keyed by (phase, position); xor_guesses by
    (attempt, round_a, round_b, position).
    """

    bit_guesses: dict[tuple, int] = field(default_factory=dict)
    xor_guesses: dict[tuple, int] = field(default_factory=dict)


def _pick_basis(attack: AttackKind, rng) -> Basis:
    if attack.name is AttackName.KEY_CAPTURE_S1:
        return Basis.Z
    if attack.policy is InterceptPolicy.ALWAYS_Z:
        return Basis.Z
    if attack.policy is InterceptPolicy.ALWAYS_X:
        return Basis.X
    return Basis.Z if rng.integers(2) == 0 else Basis.X


def tap_forward(
    eve: EveState,
    attack: AttackKind,
    register: Register,
    handle: int,
    phase: PhaseKey,
    position: int,
    rng,
) -> None:
    """Apply the attack's action to one in-flight qubit, in place.

    Intercept-resend measures in the policy basis and forwards the collapsed
    eigenstate. The ancilla attack adjoins a fresh |0>, CNOTs the in-flight
    qubit onto it and keeps the (possibly entangled) ancilla. Key capture is a
    Z intercept whose S1 records later decode round traffic.
    """
    if not attack.active_in(phase):
        return
    if attack.probability < 1.0 and rng.random() >= attack.probability:
        return

    if attack.name in (AttackName.INTERCEPT_RESEND, AttackName.KEY_CAPTURE_S1):
        basis = _pick_basis(attack, rng)
        outcome = register.measure(handle, basis, rng)  # resend = collapsed eigenstate
        eve.records.append(EveRecord(phase, position, "intercept", basis=basis, outcome=outcome))
        return

    # ancilla CNOT; retire the oldest retained ancilla if the register is full
    if register.n_qubits >= qcore.MAX_QUBITS:
        retained = eve._retained.get(id(register), [])
        if not retained:
            raise RuntimeError("register at capacity with no retained ancilla to retire")
        oldest = retained.pop(0)
        # deferred-measurement equivalence: measuring it now changes no statistic
        oldest.outcome = register.measure_and_discard(oldest.ancilla, Basis.Z, rng)
        oldest.ancilla = None
    anc = register.adjoin_fresh(0)
    register.cnot(handle, anc)
    rec = EveRecord(phase, position, "ancilla", basis=Basis.Z, register=register, ancilla=anc)
    eve.records.append(rec)
    eve._retained.setdefault(id(register), []).append(rec)


def infer(eve: EveState, attack: AttackKind, rng, rounds=None) -> EveInference:
    """Turn Eve's records into guesses once the session is over.

    Any still-retained ancillas are measured in Z now. Intercept and ancilla
    records guess their recorded outcome; key-capture records decode round
    outcomes with the S1 branch record at the same position. XOR guesses pair
    ancilla outcomes across rounds at the same position.
    """
    for retained in eve._retained.values():
        for rec in retained:
            if rec.outcome is None:
                rec.outcome = rec.register.measure(rec.ancilla, Basis.Z, rng)
        retained.clear()

    inference = EveInference()
    s1_branch: dict[tuple[int, int], int] = {}
    if attack.name is AttackName.KEY_CAPTURE_S1:
        for rec in eve.records:
            if rec.phase[0] == "s1" and rec.outcome is not None:
                s1_branch[(rec.phase[1], rec.position)] = rec.outcome

    for rec in eve.records:
        if rec.phase[0] != "round" or rec.outcome is None:
            continue
        if rounds is not None and rec.phase[2] not in rounds:
            continue
        guess = rec.outcome
        if attack.name is AttackName.KEY_CAPTURE_S1:
            guess ^= s1_branch.get((rec.phase[1], rec.position), 0)
        inference.bit_guesses[(rec.phase, rec.position)] = guess

    if attack.name is AttackName.ANCILLA_CNOT:
        by_slot: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for rec in eve.records:
            if rec.action != "ancilla" or rec.phase[0] != "round" or rec.outcome is None:
                continue
            if rounds is not None and rec.phase[2] not in rounds:
                continue
            by_slot.setdefault((rec.phase[1], rec.position), []).append((rec.phase[2], rec.outcome))
        for (attempt, pos), entries in by_slot.items():
            entries.sort()
            for i in range(len(entries)):
                for j in range(i + 1, len(entries)):
                    (r1, o1), (r2, o2) = entries[i], entries[j]
                    inference.xor_guesses[(attempt, r1, r2, pos)] = o1 ^ o2
    return inference
