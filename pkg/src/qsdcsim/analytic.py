"""Exact-enumeration oracle: per-decoy error, Eve accuracy, message error, XOR.

Every value here is computed by walking the full outcome tree with exact
branch probabilities built from kernel operations; nothing is sampled. The
enumeration mirrors the engine step for step, including the retire-oldest
ancilla rule, so the sampled statistics have a closed-form target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .adversary import AttackKind, AttackName, InterceptPolicy
from .channel import NoiseKind, NoiseModel
from .protocol import ensemble_eve_view
from .qcore import Basis, PureState, apply_1q, apply_cnot, basis_state, born_distribution, tensor
from .states import DecoyLabel, KeyPairKind, PairParam, make_pair


class AnalyticUnavailableError(RuntimeError):
    """The requested attack/channel combination has no exact enumeration."""


def ensure_supported(attack: AttackKind, model: NoiseModel) -> None:
    if attack.name not in (AttackName.NONE, AttackName.INTERCEPT_RESEND, AttackName.ANCILLA_CNOT):
        raise AnalyticUnavailableError(f"analytic mode unavailable for attack {attack.name.value!r}")
    if attack.rounds_active is not None:
        raise AnalyticUnavailableError("analytic mode unavailable for round-gated attacks")
    if model.kind not in (NoiseKind.IDEAL, NoiseKind.DEPOLARIZING, NoiseKind.BIT_FLIP):
        raise AnalyticUnavailableError(f"analytic mode unavailable for channel {model.kind.value!r}")


@dataclass
class _Branch:
    """One leaf-in-progress of the outcome tree.

    notes maps a tag to either a recorded outcome bit or ("anc", qubit_index)
    for a still-coherent ancilla; "g" holds the traveling qubit's index and
    "_order" the adjoin order of retained ancilla tags.
    """

    w: float
    state: PureState
    notes: dict = field(default_factory=dict)


def _flat(branches, fn):
    out = []
    for br in branches:
        out.extend(fn(br))
    return out


def _shift_after_drop(notes: dict, dropped: int) -> dict:
    shifted = {}
    for tag, val in notes.items():
        if tag in ("g", "_tap_q") and isinstance(val, int) and val > dropped:
            val = val - 1
        elif isinstance(val, tuple) and val[0] == "anc" and val[1] > dropped:
            val = ("anc", val[1] - 1)
        shifted[tag] = val
    return shifted


def _measure_out(br: _Branch, qubit: int, record_tag: str | None = None) -> list[_Branch]:
    """Branch on a Z measurement of `qubit`, dropping the measured qubit."""
    out = []
    for outcome in (0, 1):
        prob, post = qcore.project(br.state, qubit, Basis.Z, outcome, min_prob=0.0)
        if post is None:
            continue
        reduced = qcore.drop_qubit(post, qubit, outcome)
        notes = _shift_after_drop(br.notes, qubit)
        if record_tag is not None:
            notes[record_tag] = outcome
            notes["_order"] = [t for t in notes.get("_order", []) if t != record_tag]
        out.append(_Branch(br.w * prob, reduced, notes))
    return out


def _tap_one(br: _Branch, attack: AttackKind, qubit: int, tag: str) -> list[_Branch]:
    if attack.name is AttackName.NONE:
        return [br]
    out: list[_Branch] = []
    q = attack.probability
    if q < 1.0:
        out.append(_Branch(br.w * (1.0 - q), br.state, dict(br.notes)))
    if q == 0.0:
        return out

    if attack.name is AttackName.INTERCEPT_RESEND:
        if attack.policy is InterceptPolicy.ALWAYS_Z:
            bases = [(1.0, Basis.Z)]
        elif attack.policy is InterceptPolicy.ALWAYS_X:
            bases = [(1.0, Basis.X)]
        else:
            bases = [(0.5, Basis.Z), (0.5, Basis.X)]
        for bw, basis in bases:
            for outcome in (0, 1):
                prob, post = qcore.project(br.state, qubit, basis, outcome, min_prob=0.0)
                if post is None:
                    continue
                notes = dict(br.notes)
                notes[tag] = outcome
                out.append(_Branch(br.w * q * bw * prob, post, notes))
        return out

    # ancilla CNOT, with the same retire-oldest rule the engine uses
    seed = _Branch(br.w * q, br.state, dict(br.notes))
    seed.notes["_tap_q"] = qubit  # tracked through drops by _shift_after_drop
    pending = [seed]
    if br.state.n_qubits >= qcore.MAX_QUBITS:
        order = seed.notes.get("_order", [])
        retained = [t for t in order if isinstance(seed.notes.get(t), tuple)]
        if not retained:
            raise AnalyticUnavailableError("register at capacity in analytic enumeration")
        oldest = retained[0]
        pending = _measure_out(seed, seed.notes[oldest][1], record_tag=oldest)
    for p in pending:
        tapped = p.notes.pop("_tap_q")
        st = tensor(p.state, basis_state([0]))
        anc = st.n_qubits - 1
        st = apply_cnot(st, tapped, anc)
        notes = dict(p.notes)
        notes[tag] = ("anc", anc)
        notes["_order"] = list(notes.get("_order", [])) + [tag]
        out.append(_Branch(p.w, st, notes))
    return out


def _noise_one(br: _Branch, model: NoiseModel, qubit: int) -> list[_Branch]:
    if model.kind is NoiseKind.IDEAL or model.p == 0.0:
        return [br]
    p = model.p
    if model.kind is NoiseKind.BIT_FLIP:
        return [
            _Branch(br.w * (1.0 - p), br.state, dict(br.notes)),
            _Branch(br.w * p, apply_1q(br.state, "X", qubit), dict(br.notes)),
        ]
    if model.kind is NoiseKind.DEPOLARIZING:
        out = [_Branch(br.w * (1.0 - p), br.state, dict(br.notes)), _Branch(br.w * p / 4.0, br.state, dict(br.notes))]
        for g in ("X", "Y", "Z"):
            out.append(_Branch(br.w * p / 4.0, apply_1q(br.state, g, qubit), dict(br.notes)))
        return out
    raise AnalyticUnavailableError(f"analytic mode unavailable for channel {model.kind.value!r}")


def decoy_error_probability(attack: AttackKind, model: NoiseModel) -> float:
    """Exact probability that one decoy's check fails, uniform over the 4 labels."""
    ensure_supported(attack, model)
    err = 0.0
    for label in DecoyLabel:
        branches = [_Branch(0.25, label.state(), {})]
        branches = _flat(branches, lambda b: _tap_one(b, attack, 0, "t"))
        branches = _flat(branches, lambda b: _noise_one(b, model, 0))
        for br in branches:
            bases = [Basis.Z] * br.state.n_qubits
            bases[0] = label.basis
            dist = born_distribution(br.state, bases)
            p_wrong = sum(p for bits, p in dist.items() if bits[0] != label.bit)
            err += br.w * p_wrong
    return err


def message_and_eve_stats(attack: AttackKind, model: NoiseModel, param: PairParam):
    """(message error probability, Eve per-bit accuracy or None) for round one.

    The tree spans kind, the S1 traversal of the A photon, the message bit, the
    round traversal of the traveling qubit, and Bob's decrypt-and-read. Eve's
    accuracy is the kind-aware optimal decode of her recorded outcomes,
    conditioned on slots she acted on.
    """
    ensure_supported(attack, model)
    msg_err = 0.0
    match_w = {KeyPairKind.PSI: 0.0, KeyPairKind.PHI: 0.0}
    acted_w = {KeyPairKind.PSI: 0.0, KeyPairKind.PHI: 0.0}

    for kind in (KeyPairKind.PSI, KeyPairKind.PHI):
        base = [_Branch(0.5, make_pair(kind, param), {})]
        base = _flat(base, lambda b: _tap_one(b, attack, 0, "s1"))
        base = _flat(base, lambda b: _noise_one(b, model, 0))
        for gamma in (0, 1):
            branches = []
            for br in base:
                st = tensor(br.state, basis_state([gamma]))
                g = st.n_qubits - 1
                st = apply_cnot(st, 0, g)  # encrypt
                notes = dict(br.notes)
                notes["g"] = g
                branches.append(_Branch(br.w * 0.5, st, notes))
            branches = _flat(branches, lambda b: _tap_one(b, attack, b.notes["g"], "r"))
            branches = _flat(branches, lambda b: _noise_one(b, model, b.notes["g"]))
            for br in branches:
                g = br.notes["g"]
                st = apply_cnot(br.state, 1, g)  # decrypt
                dist = born_distribution(st, [Basis.Z] * st.n_qubits)
                msg_err += br.w * sum(p for bits, p in dist.items() if bits[g] != gamma)
                note = br.notes.get("r")
                if note is None:
                    continue
                acted_w[kind] += br.w
                if isinstance(note, tuple):
                    idx = note[1]
                    match_w[kind] += br.w * sum(p for bits, p in dist.items() if bits[idx] == gamma)
                elif note == gamma:
                    match_w[kind] += br.w

    total_acted = sum(acted_w.values())
    if total_acted <= 0.0:
        return msg_err, None
    acc = 0.0
    for kind, mass in acted_w.items():
        if mass > 0.0:
            m = match_w[kind] / mass
            acc += mass * max(m, 1.0 - m)
    return msg_err, acc / total_acted


def xor_accuracy(attack: AttackKind, model: NoiseModel, param: PairParam):
    """Exact probability that Eve's two-round ancilla XOR equals the bit XOR."""
    if attack.name is not AttackName.ANCILLA_CNOT:
        return None
    ensure_supported(attack, model)
    correct = total = 0.0

    for kind in (KeyPairKind.PSI, KeyPairKind.PHI):
        base = [_Branch(0.5, make_pair(kind, param), {})]
        base = _flat(base, lambda b: _tap_one(b, attack, 0, "s1"))
        base = _flat(base, lambda b: _noise_one(b, model, 0))
        for g1 in (0, 1):
            for g2 in (0, 1):
                branches = [_Branch(br.w * 0.25, br.state, dict(br.notes)) for br in base]
                for bit, tag in ((g1, "r1"), (g2, "r2")):
                    step = []
                    for br in branches:
                        st = tensor(br.state, basis_state([bit]))
                        g = st.n_qubits - 1
                        st = apply_cnot(st, 0, g)
                        notes = dict(br.notes)
                        notes["g"] = g
                        step.append(_Branch(br.w, st, notes))
                    step = _flat(step, lambda b: _tap_one(b, attack, b.notes["g"], tag))
                    step = _flat(step, lambda b: _noise_one(b, model, b.notes["g"]))
                    done = []
                    for br in step:
                        g = br.notes["g"]
                        br = _Branch(br.w, apply_cnot(br.state, 1, g), br.notes)  # Bob decrypts
                        for nxt in _measure_out(br, g):  # Bob reads gamma out
                            del nxt.notes["g"]
                            done.append(nxt)
                    branches = done
                parity = g1 ^ g2
                for br in branches:
                    n1, n2 = br.notes.get("r1"), br.notes.get("r2")
                    if n1 is None or n2 is None:
                        continue
                    total += br.w
                    anc_idx = [v[1] for v in (n1, n2) if isinstance(v, tuple)]
                    fixed = 0
                    for v in (n1, n2):
                        if not isinstance(v, tuple):
                            fixed ^= v
                    if not anc_idx:
                        correct += br.w * ((fixed) == parity)
                        continue
                    dist = born_distribution(br.state, [Basis.Z] * br.state.n_qubits)
                    for bits, p in dist.items():
                        e = fixed
                        for idx in anc_idx:
                            e ^= bits[idx]
                        if e == parity:
                            correct += br.w * p
    return correct / total if total > 0.0 else None


def eve_view_payload(param: PairParam) -> dict:
    out = {}
    half = np.eye(2) / 2.0
    for bit in (0, 1):
        dm = ensemble_eve_view(param, bit)
        out[f"bit{bit}"] = {
            "diag": [float(dm.mat[0, 0].real), float(dm.mat[1, 1].real)],
            "max_offdiag": float(abs(dm.mat[0, 1])),
            "max_dev_from_half_identity": float(np.max(np.abs(dm.mat - half))),
        }
    return out


def analytic_payload(attack: AttackKind, model: NoiseModel, param: PairParam, rounds: int) -> dict:
    """The full exact section of a report."""
    ensure_supported(attack, model)
    msg_err, eve_acc = message_and_eve_stats(attack, model, param)
    xor = xor_accuracy(attack, model, param) if rounds >= 2 else None
    return {
        "decoy_error_rate": decoy_error_probability(attack, model),
        "message_bit_error_rate": msg_err,
        "eve_bit_accuracy": eve_acc,
        "eve_xor_accuracy": xor,
        "eve_view": eve_view_payload(param),
    }
