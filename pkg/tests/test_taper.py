import numpy as np
import pytest

import oracles
from senqse.pauli import PauliProduct, PauliSum
from senqse.simulator import StateVector, apply_clifford
from senqse.taper import (
    SeniorityConfig,
    TaperError,
    build_clifford,
    effective_hamiltonian,
    seniority_symmetries,
    taper_check,
    untaper_state,
)


def random_sector_state(rng, config, uc):
    """Random seniority eigenstate with the given config, via the inverse Clifford."""
    n = config.n_orb
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    inner = StateVector.from_amplitudes(amps, n, normalize=True)
    return untaper_state(config, inner, uc), inner


def random_sum(rng, n_qubits, terms, real=True):
    s = PauliSum(n_qubits)
    for label, c in oracles.random_pauli_sum_pairs(rng, n_qubits, terms, real=real):
        s.add_product(PauliProduct.from_label(label, n_qubits), c)
    return s


class TestSymmetries:
    def test_listing(self):
        syms = seniority_symmetries(2)
        assert [s.label() for s in syms] == ["Z0 Z1", "Z2 Z3"]
        assert seniority_symmetries(1)[0].label() == "Z0 Z1"

    def test_involution(self):
        for s in seniority_symmetries(3):
            sq = s * s
            assert sq.is_identity() and sq.phase == 1


class TestBuildClifford:
    @pytest.mark.parametrize("n_orb", [1, 2, 3, 4, 5])
    def test_defining_property(self, n_orb):
        uc = build_clifford(n_orb)
        for i, s in enumerate(seniority_symmetries(n_orb)):
            out = uc.conjugate(s)
            assert out.label() == f"Z{i}" and out.phase == 1

    def test_single_orbital_dense(self):
        uc = build_clifford(1)
        u = oracles.clifford_matrix(uc)
        zz = oracles.pauli_matrix("Z0 Z1", 2)
        assert np.allclose(u @ zz @ u.conj().T, oracles.pauli_matrix("Z0", 2))

    def test_odd_z_lands_on_state_register(self):
        n_orb = 3
        uc = build_clifford(n_orb)
        low_mask = (1 << n_orb) - 1
        for i in range(n_orb):
            out = uc.conjugate(
                PauliProduct.single("Z", 2 * i + 1, 2 * n_orb)
            )
            assert out.x_bits == 0 and (out.z_bits & low_mask) == 0

    def test_hf_state_maps_to_zero_config(self):
        n_orb, n_elec = 3, 4
        occ_bits = sum(1 << q for q in range(n_elec))
        uc = build_clifford(n_orb)
        rotated = apply_clifford(
            StateVector.computational(occ_bits, 2 * n_orb), uc
        )
        idx = int(np.argmax(np.abs(rotated.amplitudes)))
        assert idx & ((1 << n_orb) - 1) == 0  # seniority register all zero
        assert idx >> n_orb == 0b011  # doubly occupied orbitals 0 and 1


class TestEffectiveHamiltonian:
    def test_identity_term_diagonal(self):
        n_orb = 2
        uc = build_clifford(n_orb)
        hq = PauliSum(4, {(0, 0): 0.7})
        cfg = SeniorityConfig((0, 0))
        eff = effective_hamiltonian(hq, cfg, cfg, uc)
        assert eff.op.n_terms == 1
        assert eff.op.identity_coefficient() == pytest.approx(0.7)

    def test_diagonal_term_between_configs_vanishes(self):
        n_orb = 2
        uc = build_clifford(n_orb)
        hq = PauliSum.from_label("Z0 Z2", 0.5, 4) + PauliSum(4, {(0, 0): 1.2})
        bra = SeniorityConfig((1, 1))
        ket = SeniorityConfig((0, 0))
        eff = effective_hamiltonian(hq, bra, ket, uc)
        assert eff.op.n_terms == 0

    def test_term_count_monotone(self):
        rng = np.random.default_rng(61)
        n_orb = 3
        uc = build_clifford(n_orb)
        hq = random_sum(rng, 2 * n_orb, 25)
        for _ in range(10):
            bra = SeniorityConfig(tuple(rng.integers(0, 2, size=n_orb)))
            ket = SeniorityConfig(tuple(rng.integers(0, 2, size=n_orb)))
            eff = effective_hamiltonian(hq, bra, ket, uc)
            assert eff.op.n_terms <= hq.n_terms

    def test_diagonal_hermitian(self):
        rng = np.random.default_rng(67)
        n_orb = 3
        uc = build_clifford(n_orb)
        hq = random_sum(rng, 2 * n_orb, 30)
        cfg = SeniorityConfig((1, 0, 1))
        eff = effective_hamiltonian(hq, cfg, cfg, uc)
        assert eff.op.max_imag() < 1e-12

    def test_offdiagonal_adjoint_pair(self):
        rng = np.random.default_rng(71)
        n_orb = 3
        uc = build_clifford(n_orb)
        hq = random_sum(rng, 2 * n_orb, 30)
        bra = SeniorityConfig((1, 1, 0))
        ket = SeniorityConfig((0, 1, 1))
        fwd = effective_hamiltonian(hq, bra, ket, uc).op
        rev = effective_hamiltonian(hq, ket, bra, uc).op
        # X_mu_nu must equal the adjoint of X_nu_mu (products are Hermitian)
        diff_terms = dict(fwd.items())
        for key, c in rev.items():
            diff_terms[key] = diff_terms.get(key, 0.0) - np.conj(c)
        assert max(abs(c) for c in diff_terms.values()) < 1e-12

    @pytest.mark.parametrize("n_orb", [2, 3, 4])
    def test_matrix_element_preservation(self, n_orb):
        rng = np.random.default_rng(100 + n_orb)
        uc = build_clifford(n_orb)
        for _ in range(12):
            hq = random_sum(rng, 2 * n_orb, 20)
            bra_cfg = SeniorityConfig(tuple(rng.integers(0, 2, size=n_orb)))
            ket_cfg = SeniorityConfig(tuple(rng.integers(0, 2, size=n_orb)))
            full_a, inner_a = random_sector_state(rng, bra_cfg, uc)
            full_b, inner_b = random_sector_state(rng, ket_cfg, uc)
            # sanity: the full states really are seniority eigenstates
            for i, s in enumerate(seniority_symmetries(n_orb)):
                sm = oracles.product_matrix(s)
                val = np.vdot(full_a.amplitudes, sm @ full_a.amplitudes).real
                assert val == pytest.approx(1 - 2 * bra_cfg.v[i], abs=1e-10)
            ref = np.vdot(
                full_a.amplitudes, oracles.sum_matrix(hq) @ full_b.amplitudes
            )
            eff = effective_hamiltonian(hq, bra_cfg, ket_cfg, uc)
            got = np.vdot(
                inner_a.amplitudes, oracles.sum_matrix(eff.op) @ inner_b.amplitudes
            )
            assert got == pytest.approx(ref, abs=1e-10)


class TestTaperCheck:
    def test_hf_determinant(self):
        n_orb, n_elec = 3, 4
        occ_bits = sum(1 << q for q in range(n_elec))
        uc = build_clifford(n_orb)
        cfg, inner = taper_check(StateVector.computational(occ_bits, 2 * n_orb), uc)
        assert cfg.v == (0, 0, 0)
        assert np.argmax(np.abs(inner.amplitudes)) == 0b011

    def test_roundtrip(self):
        rng = np.random.default_rng(73)
        n_orb = 3
        uc = build_clifford(n_orb)
        cfg = SeniorityConfig((0, 1, 1))
        full, inner = random_sector_state(rng, cfg, uc)
        cfg2, inner2 = taper_check(full, uc)
        assert cfg2 == cfg
        assert np.allclose(inner2.amplitudes, inner.amplitudes, atol=1e-12)

    def test_mixed_configs_rejected(self):
        rng = np.random.default_rng(79)
        n_orb = 2
        uc = build_clifford(n_orb)
        full_a, _ = random_sector_state(rng, SeniorityConfig((0, 0)), uc)
        full_b, _ = random_sector_state(rng, SeniorityConfig((1, 1)), uc)
        mixed = StateVector.from_amplitudes(
            full_a.amplitudes + full_b.amplitudes, 2 * n_orb, normalize=True
        )
        with pytest.raises(TaperError, match="not a seniority eigenstate"):
            taper_check(mixed, uc)
