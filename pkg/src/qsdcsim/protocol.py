"""The four-stage session engine.

S1 distributes entangled key pairs with a decoy check on the way; each round
then encrypts message qubits by CNOT from the sender's key photon, ships them
interleaved with fresh decoys, decrypts by CNOT from the receiver's photon and
reads them in Z. A failed decoy check aborts the round and restarts from S1
with a fresh key; an accepted round leaves the key pairs intact for reuse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from . import qcore
from .adversary import AttackKind, EveInference, EveState, infer, tap_forward
from .channel import NoiseModel, transmit
from .qcore import Basis, DensityMatrix, PureState, basis_state
from .register import Register
from .states import (
    DecoyLabel,
    KeyPairKind,
    PairParam,
    make_pair,
    prepare_decoy,
    random_decoy_label,
)


class Verdict(Enum):
    ACCEPT = "accept"
    ABORT = "abort"


@dataclass(frozen=True)
class ProtocolConfig:
    n_pairs: int = 64
    a_squared: float = 0.5
    decoy_fraction: float = 0.1
    error_threshold: float = 0.05
    rounds: int = 1
    mode: str = "sampled"

    def __post_init__(self) -> None:
        if self.n_pairs < 1:
            raise ValueError(f"n_pairs must be >= 1, got {self.n_pairs}")
        if not 0.0 < self.a_squared <= 1.0:
            raise ValueError(f"a_squared must be in (0, 1], got {self.a_squared}")
        if not 0.0 <= self.decoy_fraction < 1.0:
            raise ValueError(f"decoy_fraction must be in [0, 1), got {self.decoy_fraction}")
        if not 0.0 <= self.error_threshold <= 1.0:
            raise ValueError(f"error_threshold must be in [0, 1], got {self.error_threshold}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.mode not in ("sampled", "exact"):
            raise ValueError(f"mode must be 'sampled' or 'exact', got {self.mode!r}")

    @property
    def decoys_per_transmission(self) -> int:
        if self.decoy_fraction == 0.0:
            return 0
        return max(1, math.ceil(self.decoy_fraction * self.n_pairs))

    @property
    def pair_param(self) -> PairParam:
        return PairParam.from_a_squared(self.a_squared)


@dataclass
class KeyPair:
    """One shared entangled pair plus its live joint register.

    The register grows while a traveling or Eve qubit is entangled with it;
    between accepted rounds its (a, b) restriction matches make_pair again.
    """

    index: int
    kind: KeyPairKind
    param: PairParam
    register: Register
    a: int  # handle of the photon sent to the peer in S1
    b: int  # handle of the photon kept at home
    alive: bool = True


def new_key_pair(index: int, kind: KeyPairKind, param: PairParam) -> KeyPair:
    reg = Register(make_pair(kind, param))
    a, b = reg.handles
    return KeyPair(index=index, kind=kind, param=param, register=reg, a=a, b=b)


@dataclass(frozen=True)
class DecoyRecord:
    position: int
    label: DecoyLabel
    owner: str  # "bob" for S1, "alice" for round transmissions


@dataclass(slots=True)
class TravelingSlot:
    """One in-flight qubit: a key photon (S1), an encrypted message qubit, or a decoy."""

    position: int
    role: str  # "key" | "message" | "decoy"
    register: Register
    handle: int
    key_index: int | None = None
    bit: int | None = None  # ground-truth message bit, engine-side only
    record: DecoyRecord | None = None
    lost: bool = False


@dataclass(slots=True)
class RoundResult:
    received_bits: list  # int per key index, None for erasures
    decoy_errors: int
    decoys_checked: int
    verdict: Verdict


@dataclass
class RoundLog:
    """Engine-side record of one executed round, with ground truth for scoring."""

    attempt: int
    round_index: int
    result: RoundResult
    message_bits: list
    slot_roles: dict  # position -> (role, key_index or None)
    mean_key_fidelity: float


@dataclass
class SessionReport:
    config: ProtocolConfig
    s1_checks: list
    round_logs: list
    abort_count: int
    completed: bool
    kinds_by_attempt: dict  # attempt -> kind per key index of the surviving key
    eve: EveState
    inference: EveInference

    @property
    def message_bit_error_rate(self):
        """Bit error rate over accepted rounds only (erasures excluded)."""
        wrong = total = 0
        for log in self.round_logs:
            if log.result.verdict is not Verdict.ACCEPT:
                continue
            for k, bit in enumerate(log.message_bits):
                got = log.result.received_bits[k]
                if got is None:
                    continue
                total += 1
                wrong += got != bit
        return wrong / total if total else None

    @property
    def key_fidelity_per_round(self) -> list:
        return [log.mean_key_fidelity for log in self.round_logs if log.result.verdict is Verdict.ACCEPT]


def check_errors(decoy_errors: int, decoys_checked: int, threshold: float, *, allow_empty: bool = False) -> Verdict:
    """Accept iff the observed decoy error rate is at or below the threshold.

    Zero decoys checked is a configuration error unless the caller explicitly
    runs the insecure zero-decoy mode. The boundary is inclusive: a rate equal
    to the threshold accepts.
    """
    if decoys_checked < 0 or decoy_errors < 0:
        raise ValueError("negative decoy tallies")
    if decoy_errors > decoys_checked:
        raise ValueError(f"{decoy_errors} errors exceed {decoys_checked} checked decoys")
    if decoys_checked == 0:
        if allow_empty:
            return Verdict.ACCEPT
        raise ValueError("no decoys were checked; set decoy_fraction > 0 or enable the insecure mode")
    rate = decoy_errors / decoys_checked
    return Verdict.ACCEPT if rate <= threshold else Verdict.ABORT


def _transmit_slots(slots, attack: AttackKind, eve: EveState, ch: NoiseModel, phase, rng) -> None:
    """Per-slot traversal in fixed order: sender -> adversary tap -> noise."""
    for slot in slots:
        tap_forward(eve, attack, slot.register, slot.handle, phase, slot.position, rng)
        if not transmit(slot.register, slot.handle, ch, rng):
            slot.lost = True
            if slot.role == "message":
                # the environment takes the qubit: trace it out by trajectory
                slot.register.measure_and_discard(slot.handle, Basis.Z, rng)


def _decoy_positions(total: int, count: int, rng) -> set:
    if count == 0:
        return set()
    return {int(x) for x in rng.choice(total, size=count, replace=False)}


def s1_distribute_key(
    cfg: ProtocolConfig,
    ch: NoiseModel,
    attack: AttackKind,
    rng,
    *,
    eve: EveState | None = None,
    attempt: int = 0,
):
    """Run S1: Bob sends the A photons, decoys interleaved, Alice checks them.

    Returns (surviving key pairs, check result); on Abort no key is returned.
    A lost key photon drops its pair and shrinks the key.
    """
    if eve is None:
        eve = EveState()
    param = cfg.pair_param
    pairs = [
        new_key_pair(i, KeyPairKind.PSI if rng.integers(2) == 0 else KeyPairKind.PHI, param)
        for i in range(cfg.n_pairs)
    ]

    n_decoys = cfg.decoys_per_transmission
    total = cfg.n_pairs + n_decoys
    decoy_at = _decoy_positions(total, n_decoys, rng)
    slots: list[TravelingSlot] = []
    pair_iter = iter(pairs)
    for pos in range(total):
        if pos in decoy_at:
            label = random_decoy_label(rng)
            photon, _prep = prepare_decoy(label, param, rng)  # from a pair, per the source-free recipe
            reg = Register(photon)
            rec = DecoyRecord(position=pos, label=label, owner="bob")
            slots.append(TravelingSlot(pos, "decoy", reg, reg.handles[0], record=rec))
        else:
            pair = next(pair_iter)
            slots.append(TravelingSlot(pos, "key", pair.register, pair.a, key_index=pair.index))

    _transmit_slots(slots, attack, eve, ch, ("s1", attempt), rng)

    errors = checked = 0
    for slot in slots:
        if slot.role == "key":
            if slot.lost:
                pairs[slot.key_index].alive = False
            continue
        checked += 1
        if slot.lost:
            errors += 1
            continue
        outcome = slot.register.measure(slot.handle, slot.record.label.basis, rng)
        errors += outcome != slot.record.label.bit

    verdict = check_errors(errors, checked, cfg.error_threshold, allow_empty=cfg.decoy_fraction == 0.0)
    result = RoundResult(received_bits=[], decoy_errors=errors, decoys_checked=checked, verdict=verdict)
    if verdict is Verdict.ABORT:
        return None, result
    return [p for p in pairs if p.alive], result


def alice_prepare_round(message, key, cfg: ProtocolConfig, rng):
    """Encrypt one round: each bit becomes |bit> CNOT-ed from its pair's A photon.

    Decoys are freshly prepared, inserted at uniformly random positions and
    excluded from encryption. Returns the slot sequence and the decoy records
    Alice will disclose after Bob announces receipt.
    """
    if len(message) != len(key):
        raise ValueError(f"message length {len(message)} != key length {len(key)}")
    n_decoys = cfg.decoys_per_transmission
    total = len(key) + n_decoys
    decoy_at = _decoy_positions(total, n_decoys, rng)

    slots: list[TravelingSlot] = []
    records: list[DecoyRecord] = []
    mi = 0
    for pos in range(total):
        if pos in decoy_at:
            label = random_decoy_label(rng)
            reg = Register(label.state())
            rec = DecoyRecord(position=pos, label=label, owner="alice")
            records.append(rec)
            slots.append(TravelingSlot(pos, "decoy", reg, reg.handles[0], record=rec))
        else:
            pair = key[mi]
            bit = int(message[mi])
            gh = pair.register.adjoin_fresh(bit)
            pair.register.cnot(pair.a, gh)  # encrypt: A controls the traveling qubit
            slots.append(TravelingSlot(pos, "message", pair.register, gh, key_index=mi, bit=bit))
            mi += 1
    return slots, records


def bob_process_round(slots, key, disclosed, cfg: ProtocolConfig, rng) -> RoundResult:
    """Measure disclosed decoys in their preparation basis, decrypt the rest.

    Message qubits get CNOT from the local B photon, then a Z readout; lost
    decoys count as errors, lost message qubits as erasures.
    """
    by_pos = {rec.position: rec for rec in disclosed}
    received: list = [None] * len(key)
    errors = checked = 0
    for slot in slots:
        if slot.role == "decoy":
            rec = by_pos[slot.position]
            checked += 1
            if slot.lost:
                errors += 1
                continue
            outcome = slot.register.measure(slot.handle, rec.label.basis, rng)
            errors += outcome != rec.label.bit
        else:
            if slot.lost:
                continue
            pair = key[slot.key_index]
            pair.register.cnot(pair.b, slot.handle)  # decrypt: B controls
            received[slot.key_index] = pair.register.measure_and_discard(slot.handle, Basis.Z, rng)
    verdict = check_errors(errors, checked, cfg.error_threshold, allow_empty=cfg.decoy_fraction == 0.0)
    return RoundResult(received, errors, checked, verdict)


def _mean_key_fidelity(key, targets: dict | None = None) -> float:
    if targets is None:
        targets = {}
    total = 0.0
    for pair in key:
        target = targets.get(pair.kind)
        if target is None:
            target = targets[pair.kind] = make_pair(pair.kind, pair.param)
        if pair.register.n_qubits == 2:
            # bare pair: pure-pure overlap, no density matrix needed
            total += qcore.fidelity(target, pair.register.state)
        else:
            total += qcore.fidelity(target, pair.register.reduced([pair.a, pair.b]))
    return total / len(key)


def run_session(
    cfg: ProtocolConfig,
    attack: AttackKind,
    ch: NoiseModel,
    rng,
    *,
    max_restarts: int = 3,
) -> SessionReport:
    """Execute S1 once, then the configured rounds reusing the same key.

    Any failed check abandons the attempt and restarts from S1 with a fresh
    key, up to max_restarts times; aborts are recorded as data, not errors.
    """
    eve = EveState()
    s1_checks: list[RoundResult] = []
    round_logs: list[RoundLog] = []
    kinds_by_attempt: dict = {}
    abort_count = 0
    completed = False

    for attempt in range(max_restarts + 1):
        key, s1_result = s1_distribute_key(cfg, ch, attack, rng, eve=eve, attempt=attempt)
        s1_checks.append(s1_result)
        if s1_result.verdict is Verdict.ABORT:
            abort_count += 1
            continue
        if not key:
            continue  # every pair lost in transit; try again without an abort verdict
        kinds_by_attempt[attempt] = [pair.kind for pair in key]
        fid_targets: dict = {}

        aborted = False
        for round_index in range(1, cfg.rounds + 1):
            message = [int(b) for b in rng.integers(0, 2, size=len(key))]
            slots, records = alice_prepare_round(message, key, cfg, rng)
            _transmit_slots(slots, attack, eve, ch, ("round", attempt, round_index), rng)
            result = bob_process_round(slots, key, records, cfg, rng)
            round_logs.append(
                RoundLog(
                    attempt=attempt,
                    round_index=round_index,
                    result=result,
                    message_bits=message,
                    slot_roles={s.position: (s.role, s.key_index) for s in slots},
                    mean_key_fidelity=_mean_key_fidelity(key, fid_targets),
                )
            )
            if result.verdict is Verdict.ABORT:
                abort_count += 1
                aborted = True
                break
        if not aborted:
            completed = True
            break

    inference = infer(eve, attack, rng)
    return SessionReport(
        config=cfg,
        s1_checks=s1_checks,
        round_logs=round_logs,
        abort_count=abort_count,
        completed=completed,
        kinds_by_attempt=kinds_by_attempt,
        eve=eve,
        inference=inference,
    )


def ensemble_eve_view(p: PairParam, message_bit: int, kind: KeyPairKind | None = None) -> DensityMatrix:
    """Exact reduced state of the traveling qubit as any eavesdropper sees it.

    With kind=None the key is the equal-weight mixture over {PSI, PHI} and the
    result is I/2; conditioned on a single known kind it is diag(|a|^2, |b|^2)
    or its flip, which is why the kind draw must stay uniform.
    """
    if message_bit not in (0, 1):
        raise ValueError(f"message bit must be 0 or 1, got {message_bit!r}")
    kinds = [kind] if kind is not None else [KeyPairKind.PSI, KeyPairKind.PHI]
    weight = 1.0 / len(kinds)
    members = []
    for k in kinds:
        joint = qcore.tensor(make_pair(k, p), basis_state([message_bit]))
        members.append((weight, qcore.apply_cnot(joint, 0, 2)))
    return qcore.partial_trace(qcore.mix(members), [2])
