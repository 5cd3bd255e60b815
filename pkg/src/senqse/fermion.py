"""Molecular integrals, second-quantized Hamiltonian, and its qubit image.

Integrals are ingested from FCIDUMP files (Molpro convention, chemist
notation (pq|rs)).  The qubit Hamiltonian lives on 2*n_orb qubits with the
interleaved spin convention: the up/down spin-orbitals of spatial orbital i
sit on qubits 2i and 2i+1.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from senqse.pauli import DROP_TOL, PauliProduct, PauliSum

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10


class FcidumpError(ValueError):
    """Malformed FCIDUMP input."""


class AmplitudeError(ValueError):
    """Degenerate denominator in a perturbative amplitude."""


@dataclass(frozen=True)
class FermionIntegrals:
    """One- and two-electron integrals for a closed-shell system (Hartree)."""

    n_orb: int
    n_elec: int
    e_core: float
    h: np.ndarray  # (n_orb, n_orb), symmetric
    g: np.ndarray  # (n_orb,)*4 chemist notation (pq|rs), 8-fold symmetric

    def __post_init__(self):
        if self.n_elec % 2 != 0:
            raise FcidumpError(f"odd electron count {self.n_elec}")
        if self.h.shape != (self.n_orb, self.n_orb):
            raise FcidumpError("one-electron integral shape mismatch")
        if self.g.shape != (self.n_orb,) * 4:
            raise FcidumpError("two-electron integral shape mismatch")
        if np.max(np.abs(self.h - self.h.T), initial=0.0) > SYMMETRY_TOL:
            raise FcidumpError("one-electron integrals not symmetric")
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if np.max(np.abs(self.g - self.g.transpose(perm)), initial=0.0) > SYMMETRY_TOL:
                raise FcidumpError("two-electron integrals lack 8-fold symmetry")

    @property
    def n_occ(self) -> int:
        return self.n_elec // 2

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_orb


@dataclass(frozen=True)
class OrbitalRotation:
    """Antisymmetric amplitude matrix t generating the rotation exp(t)."""

    t: np.ndarray

    def __post_init__(self):
        if self.t.ndim != 2 or self.t.shape[0] != self.t.shape[1]:
            raise ValueError("rotation amplitudes must be square")
        if not np.array_equal(self.t, -self.t.T):
            raise ValueError("rotation amplitudes must be exactly antisymmetric")

    def matrix(self) -> np.ndarray:
        """Orthogonal matrix exp(t); orthogonality enforced to 1e-12."""
        u = scipy.linalg.expm(self.t)
        err = np.max(np.abs(u.T @ u - np.eye(len(u))))
        if err > 1e-12:
            raise ValueError(f"exp(t) deviates from orthogonality by {err:.2e}")
        return u


# ---------------------------------------------------------------------------
# FCIDUMP parsing
# ---------------------------------------------------------------------------


def parse_fcidump(text: str) -> FermionIntegrals:
    """Parse FCIDUMP content (Molpro convention).

    Header: ``&FCI NORB=..,NELEC=..,MS2=..,`` possibly spanning several
    lines, closed by ``&END`` or ``/``.  Records are ``value i j k l`` with
    1-based indices; two trailing zeros route to h, four zeros to e_core.
    Records with three trailing zeros (orbital energies) are ignored.
    """
    lines = text.splitlines()
    header_end = None
    header_parts = []
    for ln, line in enumerate(lines):
        header_parts.append(line)
        if "&END" in line.upper() or re.search(r"(^|\s)/\s*$", line):
            header_end = ln
            break
    if header_end is None:
        raise FcidumpError("no &END (or /) terminating the FCIDUMP header")
    header = " ".join(header_parts)
    if "&FCI" not in header.upper():
        raise FcidumpError("missing &FCI in header")

    def header_int(name):
        m = re.search(rf"{name}\s*=\s*(-?\d+)", header, re.IGNORECASE)
        if m is None:
            raise FcidumpError(f"missing {name} in FCIDUMP header")
        return int(m.group(1))

    n_orb = header_int("NORB")
    n_elec = header_int("NELEC")
    ms2 = header_int("MS2")
    if n_orb < 1:
        raise FcidumpError(f"bad NORB {n_orb}")
    if n_elec % 2 != 0 or ms2 != 0:
        raise FcidumpError(
            f"only closed-shell singlet inputs supported (NELEC={n_elec}, MS2={ms2})"
        )

    h = np.zeros((n_orb, n_orb))
    g = np.zeros((n_orb,) * 4)
    e_core = 0.0
    for ln in range(header_end + 1, len(lines)):
        line = lines[ln].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FcidumpError(f"line {ln + 1}: expected 'value i j k l', got {line!r}")
        try:
            val = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError as exc:
            raise FcidumpError(f"line {ln + 1}: {exc}") from None
        for idx in (i, j, k, l):
            if idx < 0 or idx > n_orb:
                raise FcidumpError(f"line {ln + 1}: orbital index {idx} out of range")
        if i == j == k == l == 0:
            e_core = val
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                if j == 0 and k == 0 and l == 0 and i != 0:
                    continue  # orbital-energy record, unused
                raise FcidumpError(f"line {ln + 1}: bad one-electron indices")
            h[i - 1, j - 1] = val
            h[j - 1, i - 1] = val
        elif 0 in (i, j, k, l):
            raise FcidumpError(f"line {ln + 1}: bad two-electron indices")
        else:
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b in ((p, q), (q, p)):
                for c, d in ((r, s), (s, r)):
                    g[a, b, c, d] = val
                    g[c, d, a, b] = val
    return FermionIntegrals(n_orb=n_orb, n_elec=n_elec, e_core=e_core, h=h, g=g)


def load_fcidump(path) -> FermionIntegrals:
    with open(path) as fh:
        return parse_fcidump(fh.read())


def write_fcidump(ints: FermionIntegrals, path, tol: float = 1e-14) -> None:
    """Write integrals back out in the same convention (unique records only)."""
    n = ints.n_orb
    with open(path, "w") as fh:
        fh.write(f"&FCI NORB={n},NELEC={ints.n_elec},MS2=0,\n")
        fh.write("  ORBSYM=" + "1," * n + "\n")
        fh.write("  ISYM=1,\n")
        fh.write("&END\n")
        for p in range(n):
            for q in range(p + 1):
                for r in range(p + 1):
                    s_max = q if r == p else r
                    for s in range(s_max + 1):
                        v = ints.g[p, q, r, s]
                        if abs(v) > tol:
                            fh.write(f"{v:23.16e} {p+1:3d} {q+1:3d} {r+1:3d} {s+1:3d}\n")
        for p in range(n):
            for q in range(p + 1):
                if abs(ints.h[p, q]) > tol:
                    fh.write(f"{ints.h[p, q]:23.16e} {p+1:3d} {q+1:3d}   0   0\n")
        fh.write(f"{ints.e_core:23.16e}   0   0   0   0\n")


# ---------------------------------------------------------------------------
# Jordan-Wigner machinery
# ---------------------------------------------------------------------------


def jw_ladder(mode: int, dagger: bool, n_modes: int) -> PauliSum:
    """Jordan-Wigner image of a single ladder operator on `mode`.

    a_p   = Z_0..Z_{p-1} (X_p + iY_p)/2
    a_p^+ = Z_0..Z_{p-1} (X_p - iY_p)/2
    """
    zstring = (1 << mode) - 1
    out = PauliSum(n_modes)
    out.add_term(1 << mode, zstring, 0.5)
    p = PauliProduct(n_modes, 1 << mode, zstring | (1 << mode))
    sign = -1j if dagger else 1j
    out.add_term(p.x_bits, p.z_bits, 0.5 * sign * p.phase)
    return out


def jw_operator(ops, n_modes: int, coeff: complex = 1.0) -> PauliSum:
    """JW image of coeff * prod of ladder ops, leftmost first.

    `ops` is a sequence of (mode, dagger) pairs in operator order, e.g.
    [(p, True), (q, False)] for a_p^+ a_q.
    """
    out = PauliSum(n_modes, {(0, 0): coeff})
    for mode, dagger in ops:
        out = out * jw_ladder(mode, dagger, n_modes)
    return out


def spin_orbital(p: int, spin: int) -> int:
    """Qubit index of spatial orbital p with spin 0 (up) or 1 (down)."""
    return 2 * p + spin


def jordan_wigner(ints: FermionIntegrals, tol: float = DROP_TOL) -> PauliSum:
    """Qubit image of the electronic Hamiltonian on 2*n_orb qubits.

    H = e_core + sum_pq h_pq a+_ps a_qs
        + 1/2 sum_pqrs (pq|rs) a+_ps a+_rt a_st a_qs
    """
    n = ints.n_orb
    nq = 2 * n
    total = PauliSum(nq, {(0, 0): complex(ints.e_core)})

    for p, q in zip(*np.nonzero(np.abs(ints.h) > 0)):
        hv = ints.h[p, q]
        for s in (0, 1):
            term = jw_operator(
                [(spin_orbital(p, s), True), (spin_orbital(q, s), False)], nq, hv
            )
            total = total + term

    for p, q, r, s in zip(*np.nonzero(np.abs(ints.g) > 0)):
        gv = 0.5 * ints.g[p, q, r, s]
        for sig in (0, 1):
            for tau in (0, 1):
                if sig == tau and (p == r or q == s):
                    continue  # a+a+ or aa on the same spin-orbital vanishes
                term = jw_operator(
                    [
                        (spin_orbital(p, sig), True),
                        (spin_orbital(r, tau), True),
                        (spin_orbital(s, tau), False),
                        (spin_orbital(q, sig), False),
                    ],
                    nq,
                    gv,
                )
                total = total + term

    out = total.simplify(tol).chop_imag(tol)
    resid = out.max_imag()
    if resid > 1e-9:
        raise ValueError(f"qubit Hamiltonian has imaginary residue {resid:.2e}")
    return out


def number_operator(n_orb: int) -> PauliSum:
    """Total electron number N = sum_q (1 - Z_q)/2 on 2*n_orb qubits."""
    nq = 2 * n_orb
    out = PauliSum(nq, {(0, 0): nq / 2})
    for q in range(nq):
        out.add_term(0, 1 << q, -0.5)
    return out


def sz_operator(n_orb: int) -> PauliSum:
    """S_z = (N_up - N_down)/2 on 2*n_orb qubits."""
    out = PauliSum(2 * n_orb)
    for p in range(n_orb):
        out.add_term(0, 1 << (2 * p), -0.25)
        out.add_term(0, 1 << (2 * p + 1), 0.25)
    return out


def spin_squared_operator(n_orb: int) -> PauliSum:
    """S^2 = S-S+ + Sz(Sz + 1) on 2*n_orb qubits."""
    nq = 2 * n_orb
    splus = PauliSum(nq)
    for p in range(n_orb):
        splus = splus + jw_operator(
            [(spin_orbital(p, 0), True), (spin_orbital(p, 1), False)], nq
        )
    sminus = PauliSum(nq)
    for p in range(n_orb):
        sminus = sminus + jw_operator(
            [(spin_orbital(p, 1), True), (spin_orbital(p, 0), False)], nq
        )
    sz = sz_operator(n_orb)
    one = PauliSum(nq, {(0, 0): 1.0})
    return (sminus * splus + sz * (sz + one)).simplify().chop_imag()


def total_seniority_operator(n_orb: int) -> PauliSum:
    """Number of unpaired electrons: sum_i (1 - Z_2i Z_2i+1)/2."""
    out = PauliSum(2 * n_orb, {(0, 0): n_orb / 2})
    for i in range(n_orb):
        out.add_term(0, (1 << (2 * i)) | (1 << (2 * i + 1)), -0.5)
    return out


# ---------------------------------------------------------------------------
# Reference quantities and orbital rotations
# ---------------------------------------------------------------------------


def hf_energy(ints: FermionIntegrals) -> float:
    """Closed-shell determinant energy from the stored integrals."""
    occ = range(ints.n_occ)
    e = ints.e_core + 2.0 * sum(ints.h[i, i] for i in occ)
    for i in occ:
        for j in occ:
            e += 2.0 * ints.g[i, i, j, j] - ints.g[i, j, j, i]
    return float(e)


def orbital_energies(ints: FermionIntegrals) -> np.ndarray:
    """Canonical-basis orbital energies eps_p = h_pp + sum_occ (2J - K)."""
    occ = np.arange(ints.n_occ)
    j = np.einsum("ppii->pi", ints.g)
    k = np.einsum("piip->pi", ints.g)
    return np.diag(ints.h) + (2.0 * j[:, occ] - k[:, occ]).sum(axis=1)


def mp2_pair_amplitude(ints: FermionIntegrals, i: int, a: int) -> float:
    """MP2 amplitude of the paired double excitation i,i-bar -> a,a-bar.

    t_ia = (ai|ai) / (2 (eps_i - eps_a)); a degenerate denominator falls
    back to 0 with a logged warning so callers can proceed.
    """
    if not 0 <= i < ints.n_occ:
        raise ValueError(f"orbital {i} is not occupied")
    if not ints.n_occ <= a < ints.n_orb:
        raise ValueError(f"orbital {a} is not virtual")
    eps = orbital_energies(ints)
    denom = eps[i] - eps[a]
    if abs(denom) < 1e-8:
        log.warning(
            "degenerate orbital pair (%d, %d): |eps_a - eps_i| = %.3e, amplitude -> 0",
            i,
            a,
            abs(denom),
        )
        return 0.0
    return float(ints.g[a, i, a, i] / (2.0 * denom))


def rotate_orbitals(ints: FermionIntegrals, rot: OrbitalRotation) -> FermionIntegrals:
    """Transform integrals by the orthogonal matrix U = exp(t).

    h' = U^T h U and g' carries U on every index; the many-body spectrum is
    unchanged.
    """
    if rot.t.shape != (ints.n_orb, ints.n_orb):
        raise ValueError("rotation dimension does not match integrals")
    u = rot.matrix()
    h = u.T @ ints.h @ u
    g = np.einsum("ap,abcd->pbcd", u, ints.g, optimize=True)
    g = np.einsum("bq,pbcd->pqcd", u, g, optimize=True)
    g = np.einsum("cr,pqcd->pqrd", u, g, optimize=True)
    g = np.einsum("ds,pqrd->pqrs", u, g, optimize=True)
    # Rounding can break the exact symmetries the constructor checks; restore.
    h = 0.5 * (h + h.T)
    g = 0.25 * (g + g.transpose(1, 0, 2, 3) + g.transpose(0, 1, 3, 2) + g.transpose(1, 0, 3, 2))
    g = 0.5 * (g + g.transpose(2, 3, 0, 1))
    return FermionIntegrals(
        n_orb=ints.n_orb, n_elec=ints.n_elec, e_core=ints.e_core, h=h, g=g
    )


def occ_virt_rotation(ints: FermionIntegrals, amplitudes: np.ndarray) -> OrbitalRotation:
    """Pack occupied-virtual amplitudes (n_occ x n_virt) into a full t matrix."""
    n_occ, n_virt = ints.n_occ, ints.n_orb - ints.n_occ
    amplitudes = np.asarray(amplitudes, dtype=float).reshape(n_occ, n_virt)
    t = np.zeros((ints.n_orb, ints.n_orb))
    t[:n_occ, n_occ:] = amplitudes
    t[n_occ:, :n_occ] = -amplitudes.T
    return OrbitalRotation(t)
