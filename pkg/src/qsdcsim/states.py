"""Constructors for the named states of the protocol.

Covers the four Bell states, the pure entangled pair family used as the
quantum key (a|00> + b|11> and its bit-flipped partner), the four decoy
photon states, and the procedure that turns one half of an entangled pair
into a decoy photon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from . import qcore
from .qcore import Basis, PureState, apply_1q, basis_state

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class PairParam:
    """Coefficients (a, b) of the pair a|00> + b|11>, with |a|^2 + |b|^2 = 1."""

    a: complex
    b: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        total = abs(self.a) ** 2 + abs(self.b) ** 2
        if not abs(total - 1.0) <= 1e-9:
            raise ValueError(f"|a|^2 + |b|^2 = {total!r}, expected 1 within 1e-9")

    @property
    def degenerate(self) -> bool:
        """True when either coefficient vanishes and the pair is a product state."""
        return min(abs(self.a), abs(self.b)) < 1e-12

    @classmethod
    def from_a_squared(cls, a_squared: float) -> "PairParam":
        if not 0.0 < a_squared <= 1.0:
            raise ValueError(f"a_squared must be in (0, 1], got {a_squared}")
        return cls(math.sqrt(a_squared), math.sqrt(1.0 - a_squared))


class KeyPairKind(Enum):
    """PSI is a|00> + b|11>; PHI is its double bit flip b|00> + a|11>."""

    PSI = "psi"
    PHI = "phi"


class DecoyLabel(Enum):
    """The four decoy photon states |0>, |1>, |+x>, |-x>."""

    ZERO = "zero"
    ONE = "one"
    PLUS_X = "plus_x"
    MINUS_X = "minus_x"

    @property
    def basis(self) -> Basis:
        return Basis.Z if self in (DecoyLabel.ZERO, DecoyLabel.ONE) else Basis.X

    @property
    def bit(self) -> int:
        """Eigenvector index within the label's basis (0 for |0>/|+x>)."""
        return 0 if self in (DecoyLabel.ZERO, DecoyLabel.PLUS_X) else 1

    def state(self) -> PureState:
        photon = basis_state([self.bit])
        if self.basis is Basis.X:
            photon = apply_1q(photon, "H", 0)
        return photon


@dataclass(frozen=True)
class DecoyPreparation:
    """Audit record of the pair-measurement decoy procedure."""

    measured_bit: int
    applied_x: bool
    applied_h: bool


def make_pair(kind: KeyPairKind, p: PairParam) -> PureState:
    """Two-photon key pair: PSI -> a|00> + b|11>, PHI -> b|00> + a|11>.

    PHI is produced by flipping both photons of PSI (sigma_x on each), so the
    kind/parameter relation stays testable.
    """
    psi = PureState([p.a, 0.0, 0.0, p.b])
    if kind is KeyPairKind.PSI:
        return psi
    return apply_1q(apply_1q(psi, "X", 0), "X", 1)


_BELL_AMPS = {
    "phi+": (_INV_SQRT2, 0.0, 0.0, _INV_SQRT2),
    "phi-": (_INV_SQRT2, 0.0, 0.0, -_INV_SQRT2),
    "psi+": (0.0, _INV_SQRT2, _INV_SQRT2, 0.0),
    "psi-": (0.0, _INV_SQRT2, -_INV_SQRT2, 0.0),
}


def make_bell(which: str) -> PureState:
    """One of the four Bell states by name: phi+, phi-, psi+, psi-."""
    try:
        amps = _BELL_AMPS[which]
    except KeyError:
        raise ValueError(f"unknown Bell state {which!r}; expected one of {sorted(_BELL_AMPS)}") from None
    return PureState(amps)


def prepare_decoy(target: DecoyLabel, p: PairParam, rng) -> tuple[PureState, DecoyPreparation]:
    """Produce a decoy photon from an entangled pair instead of a photon gun.

    Builds the PSI pair, measures one photon in Z, then corrects the survivor:
    a bit flip when the collapsed bit differs from the target's Z-bit, followed
    by H when the target lives in the X basis. The output equals the direct
    construction of `target` up to global phase (fidelity 1).
    """
    pair = make_pair(KeyPairKind.PSI, p)
    measured, collapsed = qcore.measure(pair, 0, Basis.Z, rng)
    photon = qcore.drop_qubit(collapsed, 0, measured)
    applied_x = measured != target.bit
    if applied_x:
        photon = apply_1q(photon, "X", 0)
    applied_h = target.basis is Basis.X
    if applied_h:
        photon = apply_1q(photon, "H", 0)
    return photon, DecoyPreparation(measured_bit=measured, applied_x=applied_x, applied_h=applied_h)


def x_correlation_probs(p: PairParam) -> tuple[float, float]:
    """(P same, P differ) when both photons of the PSI pair are read in X.

    Equals |a+b|^2/2 and |a-b|^2/2; a maximal pair gives (1, 0), a product
    pair (1, 0)-parameter gives (1/2, 1/2).
    """
    same = abs(p.a + p.b) ** 2 / 2.0
    diff = abs(p.a - p.b) ** 2 / 2.0
    return same, diff


_DECOY_LABELS = tuple(DecoyLabel)


def random_decoy_label(rng) -> DecoyLabel:
    """Uniform draw over the four decoy states."""
    return _DECOY_LABELS[int(rng.integers(len(_DECOY_LABELS)))]
