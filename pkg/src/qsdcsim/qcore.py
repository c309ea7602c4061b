"""Exact state-vector and density-matrix kernel for registers of up to five qubits.

States are immutable values; every operation returns a new state and re-checks
normalization, so numerical drift is detected instead of silently corrected.

Indexing is big-endian: qubit 0 is the leftmost ket symbol, and amplitude index
i encodes the bits as i = sum_j bit_j * 2^(n-1-j). For two qubits, |01> sits at
index 1. With this convention, reshaping the amplitude vector to shape [2]*n
makes numpy axis j correspond to qubit j.
"""

from __future__ import annotations

from enum import Enum
from functools import lru_cache

import numpy as np

MAX_QUBITS = 5
NORM_TOL = 1e-9
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12

_INV_SQRT2 = 1.0 / np.sqrt(2.0)

GATES: dict[str, np.ndarray] = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2,
}

# sanity: all gates unitary at import time
for _name, _g in GATES.items():
    assert np.allclose(_g.conj().T @ _g, np.eye(2), atol=1e-14), _name


class Basis(Enum):
    """Measurement basis: Z has eigenvectors |0>,|1>; X has (|0> +- |1>)/sqrt(2)."""

    Z = "Z"
    X = "X"


class PureState:
    """Normalized complex amplitude vector for an n-qubit register, 1 <= n <= 5."""

    __slots__ = ("amps", "_n")

    def __init__(self, amps) -> None:
        a = np.array(amps, dtype=np.complex128)
        n = int(a.size).bit_length() - 1
        if a.ndim != 1 or a.size != (1 << n) or not 1 <= n <= MAX_QUBITS:
            raise ValueError(
                f"amplitude vector must have length 2^n with 1 <= n <= {MAX_QUBITS}, got shape {a.shape}"
            )
        norm_sq = float(np.vdot(a, a).real)
        # NaN/inf amplitudes also fail this comparison
        if not abs(norm_sq - 1.0) <= NORM_TOL:
            raise ValueError(f"state norm drifted: sum |amp|^2 = {norm_sq!r}")
        a.setflags(write=False)
        self.amps = a
        self._n = n

    @classmethod
    def _wrap(cls, a: np.ndarray) -> "PureState":
        """Adopt a freshly built complex array without re-copying; norm still checked."""
        norm_sq = float(np.vdot(a, a).real)
        if not abs(norm_sq - 1.0) <= NORM_TOL:
            raise ValueError(f"state norm drifted: sum |amp|^2 = {norm_sq!r}")
        a.setflags(write=False)
        obj = object.__new__(cls)
        obj.amps = a
        obj._n = int(a.size).bit_length() - 1
        return obj

    @property
    def n_qubits(self) -> int:
        return self._n

    def __repr__(self) -> str:
        return f"PureState(n_qubits={self.n_qubits}, amps={np.round(self.amps, 6)})"


class DensityMatrix:
    """Hermitian, unit-trace 2^n x 2^n operator for a register of n <= 5 qubits."""

    __slots__ = ("mat",)

    def __init__(self, mat) -> None:
        m = np.array(mat, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        n = int(m.shape[0]).bit_length() - 1
        if m.shape[0] != (1 << n) or not 1 <= n <= MAX_QUBITS:
            raise ValueError(f"density matrix side must be 2^n with 1 <= n <= {MAX_QUBITS}")
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix has non-finite entries")
        if float(np.max(np.abs(m - m.conj().T))) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr}, expected 1")
        m.setflags(write=False)
        self.mat = m

    @property
    def n_qubits(self) -> int:
        return int(self.mat.shape[0]).bit_length() - 1

    def __repr__(self) -> str:
        return f"DensityMatrix(n_qubits={self.n_qubits})"


def _check_qubit(qubit: int, n: int) -> None:
    if not 0 <= qubit < n:
        raise ValueError(f"qubit index {qubit} out of range for {n}-qubit register")


def basis_state(bits) -> PureState:
    """Computational-basis product state |bits>, bits given leftmost first."""
    bits = list(bits)
    if not 1 <= len(bits) <= MAX_QUBITS:
        raise ValueError(f"need between 1 and {MAX_QUBITS} bits, got {len(bits)}")
    idx = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got {b!r}")
        idx = (idx << 1) | b
    amps = np.zeros(1 << len(bits), dtype=np.complex128)
    amps[idx] = 1.0
    return PureState._wrap(amps)


def tensor(left: PureState, right: PureState) -> PureState:
    """Tensor product; the left state occupies the high-order (leftmost) qubits."""
    if left.n_qubits + right.n_qubits > MAX_QUBITS:
        raise ValueError(
            f"combined register of {left.n_qubits + right.n_qubits} qubits exceeds the cap of {MAX_QUBITS}"
        )
    return PureState._wrap((left.amps[:, None] * right.amps[None, :]).reshape(-1))


def append_qubit(state: PureState, bit: int) -> PureState:
    """tensor(state, |bit>) specialized for a fresh computational-basis qubit."""
    if state.n_qubits + 1 > MAX_QUBITS:
        raise ValueError(f"register would exceed the cap of {MAX_QUBITS} qubits")
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    out = np.zeros(state.amps.size * 2, dtype=np.complex128)
    out[bit::2] = state.amps
    return PureState._wrap(out)


def apply_1q(state: PureState, gate: str, qubit: int) -> PureState:
    """Apply a named single-qubit unitary (X, Y, Z or H) to one qubit."""
    n = state.n_qubits
    _check_qubit(qubit, n)
    try:
        m = GATES[gate]
    except KeyError:
        raise ValueError(f"unknown gate {gate!r}; expected one of {sorted(GATES)}") from None
    a = state.amps.reshape(1 << qubit, 2, -1)
    out = np.empty_like(a)
    out[:, 0, :] = m[0, 0] * a[:, 0, :] + m[0, 1] * a[:, 1, :]
    out[:, 1, :] = m[1, 0] * a[:, 0, :] + m[1, 1] * a[:, 1, :]
    return PureState._wrap(out.reshape(-1))


@lru_cache(maxsize=None)
def _cnot_permutation(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n)
    cbit = (idx >> (n - 1 - control)) & 1
    perm = np.where(cbit == 1, idx ^ (1 << (n - 1 - target)), idx)
    perm.setflags(write=False)
    return perm


def apply_cnot(state: PureState, control: int, target: int) -> PureState:
    """Flip the target bit on components where the control bit is 1."""
    n = state.n_qubits
    if control == target:
        raise ValueError("control and target must differ")
    _check_qubit(control, n)
    _check_qubit(target, n)
    return PureState._wrap(state.amps[_cnot_permutation(n, control, target)])


@lru_cache(maxsize=None)
def _append_targets(n: int, control: int, bit: int) -> np.ndarray:
    idx = np.arange(1 << n)
    cbit = (idx >> (n - 1 - control)) & 1
    out = (idx << 1) | (cbit ^ bit)
    out.setflags(write=False)
    return out


def append_xored(state: PureState, control: int, bit: int) -> PureState:
    """Fused append_qubit + apply_cnot: adjoin a qubit in |bit XOR control-bit>.

    Identical to tensoring |bit> on the right and CNOT-ing from `control`,
    in a single scatter.
    """
    n = state.n_qubits
    _check_qubit(control, n)
    if n + 1 > MAX_QUBITS:
        raise ValueError(f"register would exceed the cap of {MAX_QUBITS} qubits")
    out = np.zeros(state.amps.size * 2, dtype=np.complex128)
    out[_append_targets(n, control, bit)] = state.amps
    return PureState._wrap(out)


@lru_cache(maxsize=None)
def _cnot_collapse_sources(n: int, control: int, target: int, outcome: int) -> np.ndarray:
    """Preimage indices, post-drop order, of CNOT(control->target) then target == outcome."""
    low = n - 1 - target  # original bits to the right of the target
    ks = np.arange(1 << (n - 1))
    j = ((ks >> low) << (low + 1)) | (outcome << low) | (ks & ((1 << low) - 1))
    cpos = n - 1 - control
    cbit = (j >> cpos) & 1  # control bit survives the CNOT unchanged
    src = j ^ (cbit << low)
    src.setflags(write=False)
    return src


def cnot_measure_remove(state: PureState, control: int, target: int, rng) -> tuple[int, PureState]:
    """Fused apply_cnot + Z measure of the target + drop of the collapsed qubit.

    The decrypt-and-read hot path; semantically identical to composing the
    three kernel operations.
    """
    n = state.n_qubits
    if control == target:
        raise ValueError("control and target must differ")
    _check_qubit(control, n)
    _check_qubit(target, n)
    g0 = state.amps[_cnot_collapse_sources(n, control, target, 0)]
    p0 = float(np.vdot(g0, g0).real)
    if rng.random() < p0:
        outcome, kept, p = 0, g0, p0
    else:
        outcome = 1
        kept = state.amps[_cnot_collapse_sources(n, control, target, 1)]
        p = 1.0 - p0
    if p < 1e-12:
        raise ValueError("zero-probability collapse: internal inconsistency")
    return outcome, PureState._wrap(kept / np.sqrt(p))


def project(
    state: PureState, qubit: int, basis: Basis, outcome: int, min_prob: float = 1e-12
) -> tuple[float, PureState | None]:
    """Outcome probability and the renormalized post-measurement state.

    Returns (prob, None) when the probability falls below min_prob. This is the
    deterministic half of measure() and the building block of exact enumeration.
    """
    n = state.n_qubits
    _check_qubit(qubit, n)
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
    work = apply_1q(state, "H", qubit) if basis is Basis.X else state
    a = work.amps.reshape(1 << qubit, 2, -1)
    sel = a[:, outcome, :]
    p = float(np.vdot(sel, sel).real)
    if p <= min_prob:  # zero-probability outcomes never yield a state
        return p, None
    collapsed = np.zeros_like(a)
    collapsed[:, outcome, :] = sel / np.sqrt(p)
    post = PureState._wrap(collapsed.reshape(-1))
    if basis is Basis.X:
        post = apply_1q(post, "H", qubit)
    return p, post


def measure(state: PureState, qubit: int, basis: Basis, rng) -> tuple[int, PureState]:
    """Sample one projective measurement per the Born rule.

    Returns (outcome, collapsed state); outcome 0 means the first eigenvector of
    the basis (|0> or |+x>). Deterministic given the rng stream.
    """
    n = state.n_qubits
    _check_qubit(qubit, n)
    work = apply_1q(state, "H", qubit) if basis is Basis.X else state
    a = work.amps.reshape(1 << qubit, 2, -1)
    s0 = a[:, 0, :]
    p0 = float(np.vdot(s0, s0).real)
    outcome = 0 if rng.random() < p0 else 1
    p = p0 if outcome == 0 else 1.0 - p0
    if p < 1e-12:
        raise ValueError("zero-probability collapse: internal inconsistency")
    collapsed = np.zeros_like(a)
    collapsed[:, outcome, :] = a[:, outcome, :] / np.sqrt(p)
    post = PureState._wrap(collapsed.reshape(-1))
    if basis is Basis.X:
        post = apply_1q(post, "H", qubit)
    return outcome, post


def measure_remove(state: PureState, qubit: int, basis: Basis, rng) -> tuple[int, PureState]:
    """measure() fused with drop_qubit(): sample, then return the state of the rest.

    Equivalent to measuring and discarding the collapsed qubit, in one pass.
    """
    n = state.n_qubits
    _check_qubit(qubit, n)
    work = apply_1q(state, "H", qubit) if basis is Basis.X else state
    a = work.amps.reshape(1 << qubit, 2, -1)
    s0 = a[:, 0, :]
    p0 = float(np.vdot(s0, s0).real)
    outcome = 0 if rng.random() < p0 else 1
    p = p0 if outcome == 0 else 1.0 - p0
    if p < 1e-12:
        raise ValueError("zero-probability collapse: internal inconsistency")
    return outcome, PureState._wrap((a[:, outcome, :] / np.sqrt(p)).reshape(-1))


def drop_qubit(state: PureState, qubit: int, outcome: int, basis: Basis = Basis.Z) -> PureState:
    """Remove a qubit that sits exactly in the given basis eigenstate.

    Valid right after measuring that qubit; raises if the qubit still carries
    any weight on the other eigenstate.
    """
    n = state.n_qubits
    _check_qubit(qubit, n)
    work = apply_1q(state, "H", qubit) if basis is Basis.X else state
    a = work.amps.reshape(1 << qubit, 2, -1)
    sel = a[:, outcome, :]
    p = float(np.vdot(sel, sel).real)
    if abs(p - 1.0) > NORM_TOL:
        raise ValueError(f"qubit {qubit} is not disentangled in the stated eigenstate (weight {p})")
    return PureState._wrap((sel / np.sqrt(p)).reshape(-1))


def _index_bits(i: int, n: int) -> tuple[int, ...]:
    return tuple((i >> (n - 1 - j)) & 1 for j in range(n))


def born_distribution(state: PureState, bases) -> dict[tuple[int, ...], float]:
    """Exact joint outcome distribution for measuring every qubit at once.

    `bases` assigns one Basis per qubit. No randomness; probabilities sum to 1
    within 1e-12. This is the oracle behind every sampled statistic.
    """
    n = state.n_qubits
    bases = list(bases)
    if len(bases) != n:
        raise ValueError(f"need {n} basis assignments, got {len(bases)}")
    work = state
    for q, b in enumerate(bases):
        if b is Basis.X:
            work = apply_1q(work, "H", q)
    probs = np.abs(work.amps) ** 2
    return {_index_bits(i, n): float(probs[i]) for i in range(probs.size)}


def mix(ensemble) -> DensityMatrix:
    """Weighted mixture sum_k w_k |psi_k><psi_k| of same-size pure states."""
    members = list(ensemble)
    if not members:
        raise ValueError("empty ensemble")
    n = members[0][1].n_qubits
    acc = np.zeros((1 << n, 1 << n), dtype=np.complex128)
    total = 0.0
    for w, psi in members:
        if w < -1e-12:
            raise ValueError(f"negative ensemble weight {w}")
        if psi.n_qubits != n:
            raise ValueError("mixed register sizes in ensemble")
        acc += w * np.outer(psi.amps, psi.amps.conj())
        total += w
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"ensemble weights sum to {total}, expected 1")
    return DensityMatrix(acc)


def partial_trace(dm: DensityMatrix, keep) -> DensityMatrix:
    """Trace out every qubit not in `keep`; kept qubits stay in ascending order."""
    n = dm.n_qubits
    kept = sorted(set(keep))
    if not kept:
        raise ValueError("keep set must be nonempty")
    for q in kept:
        _check_qubit(q, n)
    drop = [q for q in range(n) if q not in kept]
    mat = dm.mat
    cur = n
    for q in sorted(drop, reverse=True):  # highest first keeps lower axes stable
        t = mat.reshape([2] * (2 * cur))
        t = np.trace(t, axis1=q, axis2=q + cur)
        cur -= 1
        mat = t.reshape(1 << cur, 1 << cur)
    return DensityMatrix(mat)


def fidelity(a, b) -> float:
    """State overlap in [0, 1]: |<a|b>|^2 for pure inputs, Uhlmann (squared) for mixed.

    Symmetric, and 1 iff the states are identical up to global phase.
    """
    if isinstance(a, PureState) and isinstance(b, PureState):
        if a.n_qubits != b.n_qubits:
            raise ValueError("fidelity requires equal qubit counts")
        f = float(abs(np.vdot(a.amps, b.amps)) ** 2)
    elif isinstance(a, PureState):
        return fidelity(b, a)
    elif isinstance(b, PureState):
        if a.n_qubits != b.n_qubits:
            raise ValueError("fidelity requires equal qubit counts")
        v = b.amps
        f = float(np.real(np.vdot(v, a.mat @ v)))
    else:
        if a.n_qubits != b.n_qubits:
            raise ValueError("fidelity requires equal qubit counts")
        w, vecs = np.linalg.eigh(a.mat)
        w = np.clip(w, 0.0, None)
        sqrt_a = (vecs * np.sqrt(w)) @ vecs.conj().T
        inner = sqrt_a @ b.mat @ sqrt_a
        evals = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
        f = float(np.sum(np.sqrt(evals)) ** 2)
    return min(max(f, 0.0), 1.0)
