"""Measurement layer: swap-test operators, grouping, variances, allocation.

Off-diagonal matrix elements are estimated through a single-ancilla swap
construction.  For real-amplitude register states, a term's bra-ket element
is real when its Y count is even and imaginary when odd, so each term needs
only one ancilla dressing (x or y) and the whole swap operator stays
Hermitian with real coefficients.  The identity maps to x (x) 1, whose
coefficient is free to shift because the swap state gives it zero mean;
shifting it by minus the average of the two diagonal elements minimizes the
estimator variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from senqse.pauli import DROP_TOL, PauliProduct, PauliSum
from senqse.simulator import StateVector, apply_pauli_sum
from senqse.taper import EffectiveHamiltonian

MIXED_COEFF_TOL = 1e-10


class MeasureError(ValueError):
    """Violated measurement-layer contract."""


@dataclass(frozen=True)
class SwapTestOperator:
    """Hermitian (n_orb+1)-qubit operator whose swap-state mean is the element.

    The ancilla is the top qubit (index n_orb).  ``c_x`` tracks the
    coefficient of x (x) identity, the only term free to shift.
    """

    op: PauliSum
    c_x: float
    shifted: bool = False

    @property
    def ancilla(self) -> int:
        return self.op.n_qubits - 1


@dataclass(frozen=True)
class FragmentSet:
    """Commuting fragments that reconstruct the source operator exactly."""

    fragments: tuple
    source_terms: int

    def __len__(self):
        return len(self.fragments)

    def __iter__(self):
        return iter(self.fragments)

    def reconstruct(self) -> PauliSum:
        if not self.fragments:
            raise MeasureError("empty fragment set")
        total = PauliSum(self.fragments[0].n_qubits)
        for frag in self.fragments:
            total = total + frag
        return total


def build_swap_operator(x: EffectiveHamiltonian) -> SwapTestOperator:
    """Dress each term of the effective operator with its ancilla Pauli.

    Even-Y terms keep their real coefficient on x (x) P; odd-Y terms carry
    minus their imaginary coefficient on y (x) P, the sign that makes the
    swap-state expectation reproduce the bra-ket element.
    """
    n = x.op.n_qubits
    anc = 1 << n
    out = PauliSum(n + 1)
    c_x = 0.0
    for (xb, zb), c in x.op.items():
        scale = max(1.0, abs(c))
        if abs(c.imag) <= MIXED_COEFF_TOL * scale:
            out.add_term(xb | anc, zb, c.real)  # x (x) P
            if xb == 0 and zb == 0:
                c_x = c.real
        elif abs(c.real) <= MIXED_COEFF_TOL * scale:
            out.add_term(xb | anc, zb | anc, -c.imag)  # y (x) P
        else:
            raise MeasureError(
                f"coefficient {c} is neither real nor imaginary; "
                "operator does not have swap-test structure"
            )
    return SwapTestOperator(op=out.simplify(DROP_TOL), c_x=c_x, shifted=False)


def shift_constant(s: SwapTestOperator, h_mm: float, h_nn: float) -> SwapTestOperator:
    """Move c_x to its variance-minimizing value c_x - (h_mm + h_nn)/2.

    Valid only when the bra and ket share a seniority configuration (their
    tapered states are then orthogonal and x (x) 1 has zero mean), which the
    caller enforces.
    """
    n_anc = s.ancilla
    new_cx = s.c_x - 0.5 * (h_mm + h_nn)
    op = s.op.copy()
    op.add_term(1 << n_anc, 0, new_cx - s.c_x)
    return SwapTestOperator(op=op.simplify(DROP_TOL), c_x=new_cx, shifted=True)


def sorted_insertion(op: PauliSum) -> FragmentSet:
    """Greedy fully-commuting grouping in decreasing coefficient magnitude.

    Each term joins the first existing fragment it commutes with term-wise;
    otherwise it opens a new fragment.  Ties in magnitude break on the
    symplectic key so the grouping is deterministic everywhere.
    """
    n = op.n_qubits
    ordered = sorted(op.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
    fragments: list[list] = []
    members: list[list] = []
    for (xb, zb), c in ordered:
        p = PauliProduct(n, xb, zb)
        placed = False
        for frag, mem in zip(fragments, members):
            if all(p.commutes(q) for q in mem):
                frag.append(((xb, zb), c))
                mem.append(p)
                placed = True
                break
        if not placed:
            fragments.append([((xb, zb), c)])
            members.append([p])
    sums = tuple(PauliSum(n, dict(entries)) for entries in fragments)
    return FragmentSet(fragments=sums, source_terms=op.n_terms)


def fragment_variance(state: StateVector, fragment: PauliSum) -> float:
    """Exact <F^2> - <F>^2 by operator application; clamped at zero."""
    if fragment.max_imag() > MIXED_COEFF_TOL:
        raise MeasureError("fragment must be Hermitian (real coefficients)")
    f_psi = apply_pauli_sum(state.amplitudes, state.n_qubits, fragment)
    mean = np.vdot(state.amplitudes, f_psi)
    if abs(mean.imag) > 1e-9:
        raise MeasureError(f"non-real fragment mean {mean}")
    second = np.vdot(f_psi, f_psi).real
    var = second - mean.real**2
    if var < -1e-12:
        raise MeasureError(f"variance underflow {var}")
    return max(var, 0.0)


@dataclass(frozen=True)
class CostReport:
    """Optimal-allocation sampling cost for one subspace problem.

    ``metric`` is the shot-count-independent product of target mean-square
    energy error and total shots; ``element_proportions`` maps (mu, nu) with
    mu <= nu to its optimal share of the budget, and ``fragment_proportions``
    splits each element's share across its commuting fragments.
    """

    sigma: np.ndarray
    c0: np.ndarray
    metric: float
    element_proportions: dict
    fragment_proportions: dict = field(default_factory=dict)
    system: str = ""
    bond: float = float("nan")
    method: str = ""

    @property
    def basis_size(self) -> int:
        return len(self.c0)

    def to_text(self) -> str:
        lines = [
            f"system: {self.system}",
            f"bond: {self.bond!r}",
            f"method: {self.method}",
            f"basis_size: {self.basis_size}",
            f"metric: {self.metric!r}",
            "elements:",
        ]
        for (mu, nu), prop in sorted(self.element_proportions.items()):
            fr = self.fragment_proportions.get((mu, nu), ())
            fr_txt = ",".join(f"{p:.6f}" for p in fr)
            lines.append(
                f"  ({mu},{nu}) sigma={self.sigma[mu, nu]!r} share={prop:.8f}"
                + (f" fragments=[{fr_txt}]" if len(fr) else "")
            )
        return "\n".join(lines) + "\n"


def allocate_and_score(
    sigma: np.ndarray,
    c0: np.ndarray,
    fragment_sigmas: dict | None = None,
    system: str = "",
    bond: float = float("nan"),
    method: str = "",
) -> CostReport:
    """Optimal shot allocation and the squared-error x shots metric.

    Minimizing the first-order mean-square energy error at a fixed total
    budget puts shots proportional to c_mu^2 sigma_mumu on diagonal elements
    and 2|c_mu c_nu| sigma_munu off the diagonal; the achieved metric is the
    square of the weighted sigma sum.  Elements with zero sigma (classically
    evaluated) receive no allocation.
    """
    sigma = np.asarray(sigma, dtype=float)
    c0 = np.asarray(c0, dtype=float)
    n = len(c0)
    if sigma.shape != (n, n):
        raise MeasureError("sigma shape does not match the eigenvector")
    if np.max(np.abs(sigma - sigma.T), initial=0.0) > 1e-10:
        raise MeasureError("sigma must be symmetric")
    if np.any(sigma < -1e-12):
        raise MeasureError("sigma entries must be nonnegative")
    if abs(np.linalg.norm(c0) - 1.0) > 1e-8:
        raise MeasureError("eigenvector must be normalized")

    weights = {}
    for mu in range(n):
        for nu in range(mu, n):
            if sigma[mu, nu] <= 0.0:
                continue
            if mu == nu:
                weights[(mu, nu)] = c0[mu] ** 2 * sigma[mu, mu]
            else:
                weights[(mu, nu)] = 2.0 * abs(c0[mu] * c0[nu]) * sigma[mu, nu]
    total = sum(weights.values())
    metric = total**2
    props = {key: (w / total if total > 0 else 0.0) for key, w in weights.items()}

    frag_props = {}
    if fragment_sigmas:
        for key, sigs in fragment_sigmas.items():
            s = sum(sigs)
            if s > 0:
                frag_props[key] = tuple(v / s for v in sigs)
    return CostReport(
        sigma=sigma,
        c0=c0,
        metric=float(metric),
        element_proportions=props,
        fragment_proportions=frag_props,
        system=system,
        bond=bond,
        method=method,
    )


def predicted_mse(sigma: np.ndarray, c0: np.ndarray, shots: dict) -> float:
    """First-order mean-square energy error at an explicit shot table.

    ``shots`` maps (mu, nu) with mu <= nu to the shots spent on that
    element; elements absent from the table are treated as exact.
    """
    sigma = np.asarray(sigma, dtype=float)
    c0 = np.asarray(c0, dtype=float)
    mse = 0.0
    for (mu, nu), m in shots.items():
        if m <= 0:
            raise MeasureError(f"nonpositive shots for element {(mu, nu)}")
        if mu == nu:
            mse += c0[mu] ** 4 * sigma[mu, mu] ** 2 / m
        else:
            mse += 4.0 * c0[mu] ** 2 * c0[nu] ** 2 * sigma[mu, nu] ** 2 / m
    return mse
