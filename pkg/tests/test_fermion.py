import json
import logging
from pathlib import Path

import numpy as np
import pytest

import oracles
from senqse.fermion import (
    FcidumpError,
    FermionIntegrals,
    OrbitalRotation,
    hf_energy,
    jordan_wigner,
    jw_operator,
    load_fcidump,
    mp2_pair_amplitude,
    number_operator,
    occ_virt_rotation,
    orbital_energies,
    parse_fcidump,
    rotate_orbitals,
    spin_squared_operator,
    sz_operator,
    write_fcidump,
)
from senqse.pauli import PauliProduct, PauliSum

FIXTURES = Path(__file__).parent / "fixtures"
REFERENCE = json.loads((FIXTURES / "reference.json").read_text())

MINIMAL_H2 = """\
&FCI NORB=2,NELEC=2,MS2=0,
&END
 0.6746 1 1 1 1
 0.6636 2 2 2 2
 0.6975 2 2 1 1
 0.1813 2 1 2 1
-1.2525 1 1 0 0
-0.4759 2 2 0 0
 0.7137 0 0 0 0
"""


@pytest.fixture(scope="module")
def h2():
    return load_fcidump(FIXTURES / "h2_0.7414.fcidump")


@pytest.fixture(scope="module")
def h2o():
    return load_fcidump(FIXTURES / "h2o_1.0000.fcidump")


def diagonal_expectation(hq, occ_bits):
    """<det|H|det> for a computational determinant, no simulator involved."""
    val = 0.0
    for (x, z), c in hq.items():
        if x == 0:
            val += (c * (-1) ** ((z & occ_bits).bit_count())).real
    return val


class TestParse:
    def test_minimal_file(self):
        ints = parse_fcidump(MINIMAL_H2)
        assert ints.n_orb == 2 and ints.n_elec == 2
        assert ints.h[0, 0] == pytest.approx(-1.2525)
        assert ints.g[1, 1, 0, 0] == pytest.approx(0.6975)
        assert ints.g[0, 0, 1, 1] == pytest.approx(0.6975)
        assert ints.g[0, 1, 0, 1] == pytest.approx(0.1813)

    def test_core_energy_record(self):
        ints = parse_fcidump(MINIMAL_H2)
        assert ints.e_core == pytest.approx(0.7137)

    def test_hf_energy_from_fixture(self, h2):
        assert hf_energy(h2) == pytest.approx(REFERENCE["h2_0.7414"]["e_hf"], abs=1e-8)
        assert hf_energy(h2) == pytest.approx(-1.1167, abs=2e-4)

    def test_odd_nelec_rejected(self):
        with pytest.raises(FcidumpError):
            parse_fcidump("&FCI NORB=2,NELEC=3,MS2=1,\n&END\n0.0 0 0 0 0\n")

    def test_index_out_of_range(self):
        bad = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n1.0 3 1 0 0\n"
        with pytest.raises(FcidumpError, match="line 3"):
            parse_fcidump(bad)

    def test_missing_header(self):
        with pytest.raises(FcidumpError):
            parse_fcidump("1.0 1 1 0 0\n")

    def test_write_roundtrip(self, tmp_path, h2):
        path = tmp_path / "h2.fcidump"
        write_fcidump(h2, path)
        back = load_fcidump(path)
        assert np.allclose(back.h, h2.h, atol=1e-14)
        assert np.allclose(back.g, h2.g, atol=1e-14)
        assert back.e_core == pytest.approx(h2.e_core, abs=1e-14)


class TestJordanWigner:
    def test_number_operator_single_mode(self):
        op = jw_operator([(0, True), (0, False)], 1)
        expect = PauliSum(1, {(0, 0): 0.5, (0, 1): -0.5})
        diff = op - expect
        assert all(abs(c) < 1e-15 for _, c in diff.items())

    def test_h2_term_count(self, h2):
        hq = jordan_wigner(h2)
        assert hq.n_qubits == 4
        assert hq.n_terms == 15

    def test_h2_against_dense_oracle(self, h2):
        hq = jordan_wigner(h2)
        got = oracles.sum_matrix(hq)
        ref = oracles.dense_hamiltonian(h2)
        assert np.max(np.abs(got - ref)) < 1e-10

    def test_symmetries_exact(self, h2):
        hq = jordan_wigner(h2)
        assert hq.commutes_with(number_operator(h2.n_orb))
        assert hq.commutes_with(sz_operator(h2.n_orb))

    def test_hermitian(self, h2o):
        hq = jordan_wigner(h2o)
        assert hq.max_imag() < 1e-12

    def test_h2o_symmetries(self, h2o):
        hq = jordan_wigner(h2o)
        assert hq.commutes_with(number_operator(h2o.n_orb))
        assert hq.commutes_with(sz_operator(h2o.n_orb))

    def test_hf_diagonal_matches_hf_energy(self, h2o):
        hq = jordan_wigner(h2o)
        occ_bits = sum(1 << q for q in range(h2o.n_elec))
        assert diagonal_expectation(hq, occ_bits) == pytest.approx(
            hf_energy(h2o), abs=1e-9
        )

    def test_spin_squared_annihilates_hf(self, h2):
        s2 = spin_squared_operator(h2.n_orb)
        occ_bits = 0b0011
        assert diagonal_expectation(s2, occ_bits) == pytest.approx(0.0, abs=1e-12)


class TestRotateOrbitals:
    def test_zero_rotation_is_identity(self, h2):
        rot = OrbitalRotation(np.zeros((2, 2)))
        out = rotate_orbitals(h2, rot)
        assert np.allclose(out.h, h2.h, atol=1e-14)
        assert np.allclose(out.g, h2.g, atol=1e-14)

    def test_spectrum_invariance(self, h2):
        rng = np.random.default_rng(41)
        a = rng.normal(scale=0.3)
        t = np.array([[0.0, a], [-a, 0.0]])
        out = rotate_orbitals(h2, OrbitalRotation(t))
        e0 = np.linalg.eigvalsh(oracles.sum_matrix(jordan_wigner(h2)))
        e1 = np.linalg.eigvalsh(oracles.sum_matrix(jordan_wigner(out)))
        assert np.max(np.abs(e0 - e1)) < 1e-9

    def test_matches_dense_conjugation(self, h2):
        t = np.array([[0.0, 0.17], [-0.17, 0.0]])
        rotated = rotate_orbitals(h2, OrbitalRotation(t))
        got = oracles.sum_matrix(jordan_wigner(rotated))
        u = oracles.dense_orbital_rotation_unitary(t, 2)
        ref = u.conj().T @ oracles.sum_matrix(jordan_wigner(h2)) @ u
        assert np.max(np.abs(got - ref)) < 1e-9

    def test_orthogonality_guard(self):
        t = np.array([[0.0, 0.3], [-0.3, 0.0]])
        u = OrbitalRotation(t).matrix()
        assert np.max(np.abs(u.T @ u - np.eye(2))) < 1e-12

    def test_antisymmetry_enforced(self):
        with pytest.raises(ValueError):
            OrbitalRotation(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_occ_virt_packing(self, h2o):
        rot = occ_virt_rotation(h2o, np.full((5, 2), 0.01))
        assert np.array_equal(rot.t, -rot.t.T)
        assert rot.t[0, 5] == pytest.approx(0.01)


class TestOrbitalEnergies:
    def test_h2_ordering(self, h2):
        eps = orbital_energies(h2)
        assert eps[0] < 0 < eps[1]

    def test_closed_shell_identity(self, h2o):
        eps = orbital_energies(h2o)
        occ = range(h2o.n_occ)
        double_count = sum(
            2 * h2o.g[i, i, j, j] - h2o.g[i, j, j, i] for i in occ for j in occ
        )
        e_elec = 2 * eps[: h2o.n_occ].sum() - double_count
        assert e_elec + h2o.e_core == pytest.approx(hf_energy(h2o), abs=1e-10)

    def test_h2o_occ_virt_split(self, h2o):
        eps = orbital_energies(h2o)
        assert max(eps[:5]) < min(eps[5:])

    def test_matches_fixture_energies(self, h2o):
        eps = orbital_energies(h2o)
        ref = np.asarray(REFERENCE["h2o_1.0000"]["orbital_energies"])
        assert np.max(np.abs(eps - ref)) < 1e-7


class TestMp2Amplitude:
    def test_zero_exchange_integral(self):
        h = np.diag([-1.0, 1.0])
        g = np.zeros((2, 2, 2, 2))
        ints = FermionIntegrals(n_orb=2, n_elec=2, e_core=0.0, h=h, g=g)
        assert mp2_pair_amplitude(ints, 0, 1) == 0.0

    def test_h2_sign_negative(self, h2):
        assert mp2_pair_amplitude(h2, 0, 1) < 0.0

    def test_brackets_exact_rotation_angle(self, h2):
        # exact two-state mixing angle from the determinant CI block
        h00 = h2.e_core + 2 * h2.h[0, 0] + h2.g[0, 0, 0, 0]
        h11 = h2.e_core + 2 * h2.h[1, 1] + h2.g[1, 1, 1, 1]
        h01 = h2.g[1, 0, 1, 0]
        phi = 0.5 * np.arctan2(2 * h01, h00 - h11)
        if phi > 0:
            phi -= np.pi / 2
        t = mp2_pair_amplitude(h2, 0, 1)
        ratio = abs(t) / abs(np.tan(phi))
        assert 0.5 <= ratio <= 2.0

    def test_degenerate_denominator_falls_back(self, caplog):
        # the exchange entry lowers eps_1 by 0.2; h compensates to force degeneracy
        h = np.diag([1.0, 1.2])
        g = np.zeros((2, 2, 2, 2))
        g[1, 0, 1, 0] = g[0, 1, 0, 1] = g[1, 0, 0, 1] = g[0, 1, 1, 0] = 0.2
        ints = FermionIntegrals(n_orb=2, n_elec=2, e_core=0.0, h=h, g=g)
        with caplog.at_level(logging.WARNING):
            assert mp2_pair_amplitude(ints, 0, 1) == 0.0
        assert "degenerate" in caplog.text

    def test_invalid_indices(self, h2):
        with pytest.raises(ValueError):
            mp2_pair_amplitude(h2, 1, 0)
