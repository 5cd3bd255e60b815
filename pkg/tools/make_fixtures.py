#!/usr/bin/env python3
"""Generate the FCIDUMP test fixtures used by the test suite.

Self-contained STO-3G integral engine (McMurchie-Davidson recursions with a
Boys function from scipy), a restricted Hartree-Fock solver, and a
determinant-basis FCI used to pin reference energies.  The FCI here works
directly with fermionic determinants and Slater sign rules; it shares no
code with the package's Pauli-based solver, so its energies serve as
independent references.

Run from the repository root:  python3 tools/make_fixtures.py
"""

import itertools
import json
import math
import os
import sys

import numpy as np
import scipy.linalg
from scipy.special import hyp1f1

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from senqse.fermion import FermionIntegrals, write_fcidump  # noqa: E402

ANGSTROM_TO_BOHR = 1.8897259886

STO3G = {
    "H": [
        ("S", [3.42525091, 0.62391373, 0.16885540],
         [0.15432897, 0.53532814, 0.44463454]),
    ],
    "O": [
        ("S", [130.7093200, 23.80886100, 6.443608300],
         [0.15432897, 0.53532814, 0.44463454]),
        ("SP", [5.033151300, 1.169596100, 0.380389000],
         [-0.09996723, 0.39951283, 0.70011547],
         [0.15591627, 0.60768372, 0.39195739]),
    ],
}
CHARGE = {"H": 1, "O": 8}


# -- Gaussian integrals ------------------------------------------------------


def boys(n, x):
    return hyp1f1(n + 0.5, n + 1.5, -x) / (2.0 * n + 1.0)


def hermite_e(i, j, t, qx, a, b):
    """Hermite expansion coefficient for a 1D Gaussian product."""
    p = a + b
    q = a * b / p
    if t < 0 or t > i + j:
        return 0.0
    if i == j == t == 0:
        return math.exp(-q * qx * qx)
    if j == 0:
        return (
            hermite_e(i - 1, j, t - 1, qx, a, b) / (2 * p)
            - q * qx / a * hermite_e(i - 1, j, t, qx, a, b)
            + (t + 1) * hermite_e(i - 1, j, t + 1, qx, a, b)
        )
    return (
        hermite_e(i, j - 1, t - 1, qx, a, b) / (2 * p)
        + q * qx / b * hermite_e(i, j - 1, t, qx, a, b)
        + (t + 1) * hermite_e(i, j - 1, t + 1, qx, a, b)
    )


def overlap_prim(a, la, ra, b, lb, rb):
    p = a + b
    s = (math.pi / p) ** 1.5
    for d in range(3):
        s *= hermite_e(la[d], lb[d], 0, ra[d] - rb[d], a, b)
    return s


def kinetic_prim(a, la, ra, b, lb, rb):
    l, m, n = lb

    def s_shift(dl, dm, dn):
        lb2 = (l + dl, m + dm, n + dn)
        if min(lb2) < 0:
            return 0.0
        return overlap_prim(a, la, ra, b, lb2, rb)

    term0 = b * (2 * (l + m + n) + 3) * s_shift(0, 0, 0)
    term1 = -2 * b * b * (s_shift(2, 0, 0) + s_shift(0, 2, 0) + s_shift(0, 0, 2))
    term2 = -0.5 * (
        l * (l - 1) * s_shift(-2, 0, 0)
        + m * (m - 1) * s_shift(0, -2, 0)
        + n * (n - 1) * s_shift(0, 0, -2)
    )
    return term0 + term1 + term2


def hermite_coulomb(t, u, v, n, p, pc):
    if t == u == v == 0:
        return (-2.0 * p) ** n * boys(n, p * (pc @ pc))
    if t > 0:
        val = pc[0] * hermite_coulomb(t - 1, u, v, n + 1, p, pc)
        if t > 1:
            val += (t - 1) * hermite_coulomb(t - 2, u, v, n + 1, p, pc)
        return val
    if u > 0:
        val = pc[1] * hermite_coulomb(t, u - 1, v, n + 1, p, pc)
        if u > 1:
            val += (u - 1) * hermite_coulomb(t, u - 2, v, n + 1, p, pc)
        return val
    val = pc[2] * hermite_coulomb(t, u, v - 1, n + 1, p, pc)
    if v > 1:
        val += (v - 1) * hermite_coulomb(t, u, v - 2, n + 1, p, pc)
    return val


def nuclear_prim(a, la, ra, b, lb, rb, rc):
    p = a + b
    rp = (a * np.asarray(ra) + b * np.asarray(rb)) / p
    pc = rp - np.asarray(rc)
    val = 0.0
    for t in range(la[0] + lb[0] + 1):
        et = hermite_e(la[0], lb[0], t, ra[0] - rb[0], a, b)
        for u in range(la[1] + lb[1] + 1):
            eu = hermite_e(la[1], lb[1], u, ra[1] - rb[1], a, b)
            for v in range(la[2] + lb[2] + 1):
                ev = hermite_e(la[2], lb[2], v, ra[2] - rb[2], a, b)
                val += et * eu * ev * hermite_coulomb(t, u, v, 0, p, pc)
    return 2.0 * math.pi / p * val


def eri_prim(a, la, ra, b, lb, rb, c, lc, rc, d, ld, rd):
    p = a + b
    q = c + d
    alpha = p * q / (p + q)
    rp = (a * np.asarray(ra) + b * np.asarray(rb)) / p
    rq = (c * np.asarray(rc) + d * np.asarray(rd)) / q
    pq = rp - rq
    val = 0.0
    for t in range(la[0] + lb[0] + 1):
        et = hermite_e(la[0], lb[0], t, ra[0] - rb[0], a, b)
        for u in range(la[1] + lb[1] + 1):
            eu = hermite_e(la[1], lb[1], u, ra[1] - rb[1], a, b)
            for v in range(la[2] + lb[2] + 1):
                ev = hermite_e(la[2], lb[2], v, ra[2] - rb[2], a, b)
                e1 = et * eu * ev
                if e1 == 0.0:
                    continue
                for tt in range(lc[0] + ld[0] + 1):
                    ft = hermite_e(lc[0], ld[0], tt, rc[0] - rd[0], c, d)
                    for uu in range(lc[1] + ld[1] + 1):
                        fu = hermite_e(lc[1], ld[1], uu, rc[1] - rd[1], c, d)
                        for vv in range(lc[2] + ld[2] + 1):
                            fv = hermite_e(lc[2], ld[2], vv, rc[2] - rd[2], c, d)
                            e2 = ft * fu * fv
                            if e2 == 0.0:
                                continue
                            val += (
                                e1
                                * e2
                                * (-1) ** (tt + uu + vv)
                                * hermite_coulomb(t + tt, u + uu, v + vv, 0, alpha, pq)
                            )
    return val * 2.0 * math.pi**2.5 / (p * q * math.sqrt(p + q))


def prim_norm(alpha, l):
    lx, ly, lz = l
    fact2 = lambda k: 1 if k <= 0 else k * fact2(k - 2)  # noqa: E731
    num = (2 * alpha / math.pi) ** 0.75 * (4 * alpha) ** ((lx + ly + lz) / 2.0)
    den = math.sqrt(fact2(2 * lx - 1) * fact2(2 * ly - 1) * fact2(2 * lz - 1))
    return num / den


class BasisFunction:
    def __init__(self, center, l, exps, coeffs):
        self.center = np.asarray(center, dtype=float)
        self.l = l
        self.exps = list(exps)
        self.coeffs = [c * prim_norm(a, l) for a, c in zip(exps, coeffs)]
        s = 0.0
        for ai, ci in zip(self.exps, self.coeffs):
            for aj, cj in zip(self.exps, self.coeffs):
                s += ci * cj * overlap_prim(ai, l, self.center, aj, l, self.center)
        self.coeffs = [c / math.sqrt(s) for c in self.coeffs]


def build_basis(atoms):
    funcs = []
    for sym, xyz in atoms:
        for shell in STO3G[sym]:
            if shell[0] == "S":
                _, exps, coeffs = shell
                funcs.append(BasisFunction(xyz, (0, 0, 0), exps, coeffs))
            else:
                _, exps, s_coeffs, p_coeffs = shell
                funcs.append(BasisFunction(xyz, (0, 0, 0), exps, s_coeffs))
                for l in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                    funcs.append(BasisFunction(xyz, l, exps, p_coeffs))
    return funcs


def contracted(integral, *funcs):
    axes = [list(zip(f.exps, f.coeffs)) for f in funcs]
    total = 0.0
    for combo in itertools.product(*axes):
        coeff = 1.0
        args = []
        for (alpha, c), f in zip(combo, funcs):
            coeff *= c
            args.extend([alpha, f.l, f.center])
        total += coeff * integral(*args)
    return total


def ao_integrals(atoms):
    funcs = build_basis(atoms)
    n = len(funcs)
    s = np.zeros((n, n))
    t = np.zeros((n, n))
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s[i, j] = s[j, i] = contracted(overlap_prim, funcs[i], funcs[j])
            t[i, j] = t[j, i] = contracted(kinetic_prim, funcs[i], funcs[j])
            vij = 0.0
            for sym, xyz in atoms:
                vij -= CHARGE[sym] * contracted(
                    lambda a, la, ra, b, lb, rb: nuclear_prim(a, la, ra, b, lb, rb, xyz),
                    funcs[i],
                    funcs[j],
                )
            v[i, j] = v[j, i] = vij
    eri = np.zeros((n, n, n, n))
    pair_indices = [(i, j) for i in range(n) for j in range(i + 1)]
    for pi, (i, j) in enumerate(pair_indices):
        for (k, l) in pair_indices[: pi + 1]:
            val = contracted(eri_prim, funcs[i], funcs[j], funcs[k], funcs[l])
            for a, b in ((i, j), (j, i)):
                for c, d in ((k, l), (l, k)):
                    eri[a, b, c, d] = val
                    eri[c, d, a, b] = val
    e_nuc = 0.0
    for ai in range(len(atoms)):
        for aj in range(ai):
            r = np.linalg.norm(np.asarray(atoms[ai][1]) - np.asarray(atoms[aj][1]))
            e_nuc += CHARGE[atoms[ai][0]] * CHARGE[atoms[aj][0]] / r
    return s, t + v, eri, e_nuc


def rhf(s, hcore, eri, e_nuc, n_elec, max_iter=200, tol=1e-12):
    n_occ = n_elec // 2
    x = scipy.linalg.fractional_matrix_power(s, -0.5).real
    f = hcore.copy()
    e_old = 0.0
    dm = None
    diis_f, diis_e = [], []
    for it in range(max_iter):
        fp = x.T @ f @ x
        eps, cp = np.linalg.eigh(fp)
        c = x @ cp
        c_occ = c[:, :n_occ]
        dm = 2.0 * c_occ @ c_occ.T
        j = np.einsum("pqrs,rs->pq", eri, dm)
        k = np.einsum("prqs,rs->pq", eri, dm)
        f = hcore + j - 0.5 * k
        # DIIS on the orthonormal-basis error F D S - S D F
        err = f @ dm @ s - s @ dm @ f
        diis_f.append(f.copy())
        diis_e.append(err.copy())
        if len(diis_f) > 8:
            diis_f.pop(0)
            diis_e.pop(0)
        if len(diis_f) > 1:
            m = len(diis_f)
            b = -np.ones((m + 1, m + 1))
            b[m, m] = 0.0
            for a in range(m):
                for bb in range(m):
                    b[a, bb] = np.sum(diis_e[a] * diis_e[bb])
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                w = np.linalg.solve(b, rhs)[:m]
                f = sum(wi * fi for wi, fi in zip(w, diis_f))
            except np.linalg.LinAlgError:
                pass
        e_elec = 0.5 * np.sum(dm * (hcore + (hcore + j - 0.5 * k)))
        if abs(e_elec - e_old) < tol and it > 2:
            break
        e_old = e_elec
    fp = x.T @ f @ x
    eps, cp = np.linalg.eigh(fp)
    c = x @ cp
    c_occ = c[:, :n_occ]
    dm = 2.0 * c_occ @ c_occ.T
    j = np.einsum("pqrs,rs->pq", eri, dm)
    k = np.einsum("prqs,rs->pq", eri, dm)
    e_elec = 0.5 * np.sum(dm * (2 * hcore + j - 0.5 * k))
    return e_elec + e_nuc, c, eps


def mo_integrals(hcore, eri, c):
    h_mo = c.T @ hcore @ c
    g = np.einsum("ap,abcd->pbcd", c, eri, optimize=True)
    g = np.einsum("bq,pbcd->pqcd", c, g, optimize=True)
    g = np.einsum("cr,pqcd->pqrd", c, g, optimize=True)
    g = np.einsum("ds,pqrd->pqrs", c, g, optimize=True)
    return h_mo, g


# -- independent determinant FCI ---------------------------------------------


def determinant_fci(ints: FermionIntegrals):
    """Lowest Sz=0 eigenvalue from explicit determinant algebra."""
    n, n_occ = ints.n_orb, ints.n_occ
    spin_orbs = 2 * n  # mode 2p = orbital p up, 2p+1 = orbital p down

    ups = list(itertools.combinations(range(n), n_occ))
    basis = []
    for up in ups:
        for dn in ups:
            bits = 0
            for p in up:
                bits |= 1 << (2 * p)
            for p in dn:
                bits |= 1 << (2 * p + 1)
            basis.append(bits)
    basis.sort()
    index = {b: i for i, b in enumerate(basis)}
    dim = len(basis)

    def apply_ops(bits, ops):
        """ops: sequence of (mode, dagger) applied right to left."""
        sign = 1
        for mode, dagger in reversed(ops):
            occupied = (bits >> mode) & 1
            if dagger == occupied:
                return None, 0
            if (bits & ((1 << mode) - 1)).bit_count() % 2:
                sign = -sign
            bits ^= 1 << mode
        return bits, sign

    mat = np.zeros((dim, dim))
    for col, bits in enumerate(basis):
        mat[col, col] += ints.e_core
        for p in range(n):
            for q in range(n):
                if ints.h[p, q] == 0.0:
                    continue
                for s in (0, 1):
                    out, sign = apply_ops(bits, [(2 * p + s, True), (2 * q + s, False)])
                    if out is not None and out in index:
                        mat[index[out], col] += sign * ints.h[p, q]
        nz = np.argwhere(np.abs(ints.g) > 0)
        for p, q, r, s in nz:
            gv = 0.5 * ints.g[p, q, r, s]
            for sig in (0, 1):
                for tau in (0, 1):
                    out, sign = apply_ops(
                        bits,
                        [
                            (2 * p + sig, True),
                            (2 * r + tau, True),
                            (2 * s + tau, False),
                            (2 * q + sig, False),
                        ],
                    )
                    if out is not None and out in index:
                        mat[index[out], col] += sign * gv
    return float(np.linalg.eigh(mat)[0][0])


# -- geometries ---------------------------------------------------------------


def h2_atoms(r_angstrom):
    r = r_angstrom * ANGSTROM_TO_BOHR
    return [("H", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, r))]


def h2o_atoms(r_angstrom, angle_deg=107.6):
    r = r_angstrom * ANGSTROM_TO_BOHR
    half = math.radians(angle_deg) / 2.0
    return [
        ("O", (0.0, 0.0, 0.0)),
        ("H", (r * math.sin(half), 0.0, r * math.cos(half))),
        ("H", (-r * math.sin(half), 0.0, r * math.cos(half))),
    ]


def make_system(name, atoms, n_elec, out_dir, reference, run_fci=True):
    s, hcore, eri, e_nuc = ao_integrals(atoms)
    e_hf, c, eps = rhf(s, hcore, eri, e_nuc, n_elec)
    h_mo, g_mo = mo_integrals(hcore, eri, c)
    ints = FermionIntegrals(
        n_orb=len(h_mo), n_elec=n_elec, e_core=float(e_nuc), h=h_mo, g=g_mo
    )
    path = os.path.join(out_dir, f"{name}.fcidump")
    write_fcidump(ints, path)
    entry = {"e_hf": e_hf, "e_nuc": e_nuc, "orbital_energies": [float(x) for x in eps]}
    if run_fci:
        entry["e_fci"] = determinant_fci(ints)
    reference[name] = entry
    print(f"{name}: E_HF = {e_hf:.8f}" + (f", E_FCI = {entry['e_fci']:.8f}" if run_fci else ""))


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")
    os.makedirs(out_dir, exist_ok=True)
    reference = {}
    for r in (0.7414, 1.0, 1.5):
        make_system(f"h2_{r:.4f}", h2_atoms(r), 2, out_dir, reference)
    for r in (1.0, 2.1, 3.0):
        make_system(f"h2o_{r:.4f}", h2o_atoms(r), 10, out_dir, reference)
    with open(os.path.join(out_dir, "reference.json"), "w") as fh:
        json.dump(reference, fh, indent=2, sort_keys=True)
    # sanity: textbook equilibrium values for the minimal-basis H2 molecule
    assert abs(reference["h2_0.7414"]["e_hf"] - (-1.11675)) < 2e-4, reference["h2_0.7414"]
    assert abs(reference["h2_0.7414"]["e_fci"] - (-1.13728)) < 2e-4, reference["h2_0.7414"]
    print("wrote", out_dir)


if __name__ == "__main__":
    main()
