"""Mutable register wrapper over the immutable kernel states.

Protocol code threads qubits through taps, noise and measurements while
several parties hold references into the same joint register. Handles are
stable integer ids that survive other qubits being measured out and dropped.
"""

from __future__ import annotations

from . import qcore
from .qcore import Basis, DensityMatrix, PureState


class Register:
    def __init__(self, state: PureState) -> None:
        self._state = state
        self._handles: list[int] = list(range(state.n_qubits))
        self._next = state.n_qubits

    @property
    def state(self) -> PureState:
        return self._state

    @property
    def n_qubits(self) -> int:
        return self._state.n_qubits

    @property
    def handles(self) -> tuple[int, ...]:
        return tuple(self._handles)

    def position(self, handle: int) -> int:
        try:
            return self._handles.index(handle)
        except ValueError:
            raise ValueError(f"handle {handle} is no longer in the register") from None

    def adjoin(self, state: PureState) -> list[int]:
        """Tensor extra qubits onto the end of the register; returns their handles."""
        self._state = qcore.tensor(self._state, state)
        new = list(range(self._next, self._next + state.n_qubits))
        self._handles.extend(new)
        self._next = new[-1] + 1
        return new

    def adjoin_fresh(self, bit: int) -> int:
        """Adjoin one |bit> qubit; the hot path for traveling and ancilla qubits."""
        self._state = qcore.append_qubit(self._state, bit)
        handle = self._next
        self._handles.append(handle)
        self._next = handle + 1
        return handle

    def adjoin_xored(self, control: int, bit: int) -> int:
        """Adjoin a fresh qubit already CNOT-ed from `control` (encrypt shortcut)."""
        self._state = qcore.append_xored(self._state, self._handles.index(control), bit)
        handle = self._next
        self._handles.append(handle)
        self._next = handle + 1
        return handle

    def decrypt_measure_discard(self, control: int, target: int, rng) -> int:
        """CNOT from `control`, Z-measure `target`, drop it (decrypt shortcut)."""
        tpos = self.position(target)
        outcome, self._state = qcore.cnot_measure_remove(
            self._state, self._handles.index(control), tpos, rng
        )
        self._handles.pop(tpos)
        return outcome

    def apply(self, gate: str, handle: int) -> None:
        self._state = qcore.apply_1q(self._state, gate, self.position(handle))

    def cnot(self, control: int, target: int) -> None:
        handles = self._handles
        self._state = qcore.apply_cnot(self._state, handles.index(control), handles.index(target))

    def measure(self, handle: int, basis: Basis, rng) -> int:
        outcome, self._state = qcore.measure(self._state, self.position(handle), basis, rng)
        return outcome

    def measure_and_discard(self, handle: int, basis: Basis, rng) -> int:
        """Measure, then drop the collapsed qubit to keep the register small."""
        pos = self.position(handle)
        outcome, self._state = qcore.measure_remove(self._state, pos, basis, rng)
        self._handles.pop(pos)
        return outcome

    def reduced(self, handles) -> DensityMatrix:
        """Reduced density matrix of the given handles, in register order."""
        positions = [self.position(h) for h in handles]
        if positions != sorted(positions):
            raise ValueError("handles must be given in register order")
        return qcore.partial_trace(qcore.mix([(1.0, self._state)]), positions)
