"""Quantum channel models applied to each in-flight qubit.

Each traversal applies the model once, as a trajectory realization: the
depolarizing event replaces the qubit by the maximally mixed state, realized
as a uniform draw over {I, X, Y, Z}, which makes the observable decoy error
probability exactly p/2 in any preparation basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .register import Register

_DEPOLARIZING_PAULIS = ("I", "X", "Y", "Z")


class NoiseKind(Enum):
    IDEAL = "ideal"
    DEPOLARIZING = "depolarizing"
    BIT_FLIP = "bit_flip"
    LOSS = "loss"


@dataclass(frozen=True)
class NoiseModel:
    kind: NoiseKind = NoiseKind.IDEAL
    p: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise probability must be in [0, 1], got {self.p}")

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls(NoiseKind.IDEAL, 0.0)

    @classmethod
    def depolarizing(cls, p: float) -> "NoiseModel":
        return cls(NoiseKind.DEPOLARIZING, p)

    @classmethod
    def bit_flip(cls, p: float) -> "NoiseModel":
        return cls(NoiseKind.BIT_FLIP, p)

    @classmethod
    def loss(cls, p: float) -> "NoiseModel":
        return cls(NoiseKind.LOSS, p)


def transmit(register: Register, handle: int, model: NoiseModel, rng) -> bool:
    """Send one qubit through the channel; returns False when it is lost.

    Stored qubits are never touched; only the in-flight qubit sees the model.
    """
    register.position(handle)  # index validation even on the ideal path
    if model.kind is NoiseKind.IDEAL or model.p == 0.0:
        return True
    if model.kind is NoiseKind.BIT_FLIP:
        if rng.random() < model.p:
            register.apply("X", handle)
        return True
    if model.kind is NoiseKind.DEPOLARIZING:
        if rng.random() < model.p:
            pauli = _DEPOLARIZING_PAULIS[int(rng.integers(4))]
            if pauli != "I":
                register.apply(pauli, handle)
        return True
    # loss
    return not rng.random() < model.p
