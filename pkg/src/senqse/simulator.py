"""Dense statevector engine for the tapered register plus one ancilla.

States are complex arrays of length 2**n with qubit q on bit q of the index
(little endian).  All values are frozen after construction and every
operation here is a pure function, so concurrent use needs no locking.

Shot sampling of a commuting fragment draws from the exact eigenvalue
distribution of the fragment treated as a single observable; this is
statistically identical to jointly measuring its Pauli terms after a
diagonalizing Clifford, and the sample mean is an unbiased estimator of the
fragment expectation value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from senqse.pauli import CliffordMap, PauliProduct, PauliSum

NORM_TOL = 1e-10


class SimulatorError(ValueError):
    """Dimension mismatch or contract violation in the statevector engine."""


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on n_qubits qubits."""

    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise SimulatorError(
                f"amplitude length {amps.shape} does not match {self.n_qubits} qubits"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise SimulatorError(f"state norm {norm} deviates from 1")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def computational(cls, index: int, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps, n_qubits)

    @classmethod
    def from_amplitudes(cls, amps, n_qubits: int, normalize: bool = False):
        amps = np.asarray(amps, dtype=complex)
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(amps, n_qubits)

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


_INDEX_CACHE: dict = {}


def _indices(n_qubits: int) -> np.ndarray:
    # read-only cached index arrays; rebuilt arange dominates small registers
    arr = _INDEX_CACHE.get(n_qubits)
    if arr is None:
        arr = np.arange(2**n_qubits, dtype=np.uint64)
        arr.flags.writeable = False
        _INDEX_CACHE[n_qubits] = arr
    return arr


def _parities(bits: int, idx: np.ndarray) -> np.ndarray:
    """(-1)**popcount(bits & i) for every index i."""
    return 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(bits)) & np.uint64(1)).astype(
        float
    )


def apply_product(amps: np.ndarray, n_qubits: int, x: int, z: int, phase: complex):
    """Apply phase * sigma(x,z) to raw amplitudes: P|i> = i^|x&z| (-1)^|z&i| |i^x>."""
    idx = _indices(n_qubits)
    factor = phase * (1j) ** ((x & z).bit_count() % 4)
    out = np.empty_like(amps)
    out[idx ^ np.uint64(x)] = factor * _parities(z, idx) * amps
    return out


def apply_pauli_sum(amps: np.ndarray, n_qubits: int, op: PauliSum) -> np.ndarray:
    if 2**n_qubits != len(amps):
        raise SimulatorError("amplitude length mismatch")
    idx = _indices(n_qubits)
    out = np.zeros_like(amps)
    for (x, z), c in op.items():
        factor = c * (1j) ** ((x & z).bit_count() % 4)
        out[idx ^ np.uint64(x)] += factor * _parities(z, idx) * amps
    return out


def expectation(state: StateVector, op: PauliSum) -> complex:
    """Exact <psi|op|psi>; real to 1e-12 when op is Hermitian."""
    if op.n_qubits != state.n_qubits:
        raise SimulatorError(
            f"operator on {op.n_qubits} qubits, state on {state.n_qubits}"
        )
    return complex(
        np.vdot(state.amplitudes, apply_pauli_sum(state.amplitudes, state.n_qubits, op))
    )


def matrix_element_exact(bra: StateVector, op: PauliSum, ket: StateVector) -> complex:
    if not (bra.n_qubits == ket.n_qubits == op.n_qubits):
        raise SimulatorError("qubit count mismatch in matrix element")
    return complex(
        np.vdot(bra.amplitudes, apply_pauli_sum(ket.amplitudes, ket.n_qubits, op))
    )


def prepare_swap_state(a: StateVector, b: StateVector) -> StateVector:
    """(|0>|a> + |1>|b>)/sqrt(2) with the ancilla on the top (highest) qubit."""
    if a.n_qubits != b.n_qubits:
        raise SimulatorError("swap-state inputs must share a qubit count")
    amps = np.concatenate([a.amplitudes, b.amplitudes]) / np.sqrt(2.0)
    return StateVector(amps, a.n_qubits + 1)


def apply_clifford(state: StateVector, cmap: CliffordMap) -> StateVector:
    """Apply a CNOT/permutation Clifford to a statevector (no phases arise)."""
    if cmap.n_qubits != state.n_qubits:
        raise SimulatorError("Clifford qubit count mismatch")
    idx = _indices(state.n_qubits)
    amps = state.amplitudes
    for g in cmap.gates:
        if g[0] == "cnot":
            _, c, t = g
            tgt = idx ^ (((idx >> np.uint64(c)) & np.uint64(1)) << np.uint64(t))
        else:
            perm = g[1]
            tgt = np.zeros_like(idx)
            for q, new_q in enumerate(perm):
                tgt |= ((idx >> np.uint64(q)) & np.uint64(1)) << np.uint64(new_q)
        out = np.empty_like(amps)
        out[tgt] = amps
        amps = out
    return StateVector(amps, state.n_qubits)


def dense_matrix(op: PauliSum) -> np.ndarray:
    """Dense matrix of a PauliSum, assembled column-block wise per term."""
    n = op.n_qubits
    dim = 2**n
    idx = _indices(n)
    out = np.zeros((dim, dim), dtype=complex)
    cols = idx.astype(np.int64)
    for (x, z), c in op.items():
        rows = (idx ^ np.uint64(x)).astype(np.int64)
        out[rows, cols] += c * (1j) ** ((x & z).bit_count() % 4) * _parities(z, idx)
    return out


# ---------------------------------------------------------------------------
# Shot sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShotResult:
    estimate: float
    shots: int
    fragment_id: int
    seed: tuple

    def __post_init__(self):
        if self.shots < 1:
            raise SimulatorError("shots must be >= 1")


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator with a stream derived from (seed, *key)."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)]))
    )


class FragmentSampler:
    """Exact finite-shot sampler for one internally commuting fragment.

    The fragment's eigendecomposition is computed once; each draw samples
    outcome counts from the induced eigenvalue distribution, so repeated
    sampling of the same (state, fragment) pair is cheap.
    """

    def __init__(self, state: StateVector, fragment: PauliSum, check: bool = True):
        if fragment.n_qubits != state.n_qubits:
            raise SimulatorError("fragment qubit count mismatch")
        if check:
            prods = [p for p, _ in fragment]
            for i in range(len(prods)):
                for j in range(i):
                    if not prods[i].commutes(prods[j]):
                        raise SimulatorError(
                            f"fragment terms {prods[j].label()} and "
                            f"{prods[i].label()} do not commute"
                        )
        if fragment.max_imag() > 1e-10:
            raise SimulatorError("fragment must be Hermitian (real coefficients)")
        mat = dense_matrix(fragment)
        vals, vecs = np.linalg.eigh(mat)
        weights = np.abs(vecs.conj().T @ state.amplitudes) ** 2
        keep = weights > 1e-15
        self.values = vals[keep]
        probs = weights[keep]
        self.probs = probs / probs.sum()
        self.mean = float(self.values @ self.probs)
        self.variance = float(self.probs @ self.values**2 - self.mean**2)

    def sample(self, shots: int, rng: np.random.Generator) -> float:
        """Sample mean of `shots` independent eigenvalue draws."""
        if shots < 1:
            raise SimulatorError("shots must be >= 1")
        counts = rng.multinomial(shots, self.probs)
        return float(counts @ self.values) / shots


def sample_fragment(
    state: StateVector,
    fragment: PauliSum,
    shots: int,
    seed: int,
    fragment_id: int = 0,
    stream: tuple = (),
) -> ShotResult:
    """Draw `shots` outcomes of a joint fragment measurement; seeded, unbiased."""
    sampler = FragmentSampler(state, fragment)
    rng = rng_for(seed, *stream, fragment_id)
    est = sampler.sample(shots, rng)
    return ShotResult(
        estimate=est, shots=shots, fragment_id=fragment_id, seed=(seed, *stream)
    )
