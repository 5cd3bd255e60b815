import numpy as np
import pytest

import oracles
from senqse.pauli import PauliProduct, PauliSum
from senqse.simulator import (
    FragmentSampler,
    SimulatorError,
    StateVector,
    dense_matrix,
    expectation,
    matrix_element_exact,
    prepare_swap_state,
    rng_for,
    sample_fragment,
)


def random_state(rng, n, real=False):
    amps = rng.normal(size=2**n)
    if not real:
        amps = amps + 1j * rng.normal(size=2**n)
    return StateVector.from_amplitudes(amps, n, normalize=True)


def random_sum(rng, n, terms, real=True):
    s = PauliSum(n)
    for label, c in oracles.random_pauli_sum_pairs(rng, n, terms, real=real):
        s.add_product(PauliProduct.from_label(label, n), c)
    return s


class TestExpectation:
    def test_zero_state_z(self):
        st = StateVector.computational(0, 1)
        assert expectation(st, PauliSum.from_label("Z0", 1.0, 1)) == pytest.approx(1.0)

    def test_plus_state_x(self):
        st = StateVector.from_amplitudes([1, 1], 1, normalize=True)
        assert expectation(st, PauliSum.from_label("X0", 1.0, 1)) == pytest.approx(1.0)

    def test_random_against_dense(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            st = random_state(rng, 3)
            op = random_sum(rng, 3, 5, real=False)
            ref = np.vdot(st.amplitudes, oracles.sum_matrix(op) @ st.amplitudes)
            assert expectation(st, op) == pytest.approx(ref, abs=1e-12)

    def test_hermitian_gives_real(self):
        rng = np.random.default_rng(19)
        st = random_state(rng, 3)
        op = random_sum(rng, 3, 6, real=True)
        assert abs(expectation(st, op).imag) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(SimulatorError):
            expectation(StateVector.computational(0, 2), PauliSum(3))


class TestMatrixElement:
    def test_identity_diagonal(self):
        st = StateVector.computational(3, 2)
        one = PauliSum(2, {(0, 0): 1.0})
        assert matrix_element_exact(st, one, st) == pytest.approx(1.0)

    def test_orthogonal_diagonal_op(self):
        a = StateVector.computational(0, 2)
        b = StateVector.computational(1, 2)
        op = PauliSum.from_label("Z0 Z1", 0.7, 2)
        assert matrix_element_exact(a, op, b) == pytest.approx(0.0)

    def test_swap_state_reproduces_element(self):
        # <a|op|b> = <Phi|(x + i y)/1 (x) op|Phi> with the ancilla on top
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = 3
            a, b = random_state(rng, n), random_state(rng, n)
            op = random_sum(rng, n, 4, real=False)
            phi = prepare_swap_state(a, b)
            ext = PauliSum(n + 1)
            for (x, z), c in op.items():
                ext.add_term(x | (1 << n), z, c)  # x (x) P
                p = PauliProduct(n + 1, x | (1 << n), z | (1 << n))
                ext.add_term(p.x_bits, p.z_bits, 1j * c * p.phase)  # i y (x) P
            got = expectation(phi, ext)
            ref = matrix_element_exact(a, op, b)
            assert got == pytest.approx(ref, abs=1e-12)


class TestSwapState:
    def test_equal_inputs_product_state(self):
        rng = np.random.default_rng(29)
        a = random_state(rng, 2)
        phi = prepare_swap_state(a, a)
        plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
        ref = np.kron(plus, a.amplitudes)  # ancilla is the top qubit
        assert np.allclose(phi.amplitudes, ref)

    def test_orthogonal_inputs(self):
        a = StateVector.computational(0, 2)
        b = StateVector.computational(2, 2)
        phi = prepare_swap_state(a, b)
        x_anc = PauliSum.from_label("X2", 1.0, 3)
        assert expectation(phi, x_anc) == pytest.approx(0.0, abs=1e-14)

    def test_ancilla_x_gives_real_overlap(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            a, b = random_state(rng, 2), random_state(rng, 2)
            phi = prepare_swap_state(a, b)
            x_anc = PauliSum.from_label("X2", 1.0, 3)
            assert expectation(phi, x_anc).real == pytest.approx(
                a.overlap(b).real, abs=1e-12
            )

    def test_normalized_regardless_of_overlap(self):
        rng = np.random.default_rng(37)
        a, b = random_state(rng, 2), random_state(rng, 2)
        phi = prepare_swap_state(a, b)
        assert np.linalg.norm(phi.amplitudes) == pytest.approx(1.0)


class TestSampling:
    def test_identity_fragment_exact(self):
        st = StateVector.computational(0, 2)
        frag = PauliSum(2, {(0, 0): 0.375})
        res = sample_fragment(st, frag, shots=7, seed=1)
        assert res.estimate == pytest.approx(0.375)

    def test_eigenstate_deterministic(self):
        st = StateVector.computational(0, 1)
        frag = PauliSum.from_label("Z0", 1.0, 1)
        res = sample_fragment(st, frag, shots=50, seed=3)
        assert res.estimate == pytest.approx(1.0)
        sampler = FragmentSampler(st, frag)
        assert sampler.variance == pytest.approx(0.0, abs=1e-14)

    def test_binomial_bound(self):
        st = StateVector.from_amplitudes([1, 1], 1, normalize=True)
        res = sample_fragment(st, PauliSum.from_label("Z0", 1.0, 1), 10**4, seed=5)
        assert abs(res.estimate) < 4.0 / np.sqrt(10**4)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(41)
        st = random_state(rng, 3, real=True)
        frag = PauliSum.from_label("Z0 Z2", 0.4, 3) + PauliSum.from_label(
            "Z1", -0.3, 3
        )
        r1 = sample_fragment(st, frag, 100, seed=11, stream=(2, 5))
        r2 = sample_fragment(st, frag, 100, seed=11, stream=(2, 5))
        r3 = sample_fragment(st, frag, 100, seed=11, stream=(2, 6))
        assert r1.estimate == r2.estimate
        assert r1.estimate != r3.estimate

    def test_noncommuting_fragment_rejected(self):
        st = StateVector.computational(0, 1)
        frag = PauliSum.from_label("Z0", 1.0, 1) + PauliSum.from_label("X0", 1.0, 1)
        with pytest.raises(SimulatorError, match="commute"):
            sample_fragment(st, frag, 10, seed=1)

    def test_unbiasedness_many_seeds(self):
        rng = np.random.default_rng(43)
        st = random_state(rng, 2, real=True)
        frag = PauliSum.from_label("Z0 Z1", 0.8, 2) + PauliSum.from_label(
            "X0 X1", 0.5, 2
        )
        sampler = FragmentSampler(st, frag)
        shots = 64
        estimates = [
            sampler.sample(shots, rng_for(7, k)) for k in range(250)
        ]
        mean = np.mean(estimates)
        sem = np.std(estimates, ddof=1) / np.sqrt(len(estimates))
        assert abs(mean - sampler.mean) < 4 * sem

    def test_single_shot_variance_matches(self):
        rng = np.random.default_rng(47)
        st = random_state(rng, 2, real=True)
        frag = PauliSum.from_label("Z0", 0.6, 2) + PauliSum.from_label("Z0 Z1", 0.3, 2)
        sampler = FragmentSampler(st, frag)
        outcomes = [sampler.sample(1, rng_for(13, k)) for k in range(4000)]
        emp_var = np.var(outcomes, ddof=1)
        # standard error of a variance estimator ~ var * sqrt(2/(n-1))
        se = sampler.variance * np.sqrt(2.0 / (len(outcomes) - 1)) + 1e-12
        assert abs(emp_var - sampler.variance) < 3 * se + 0.05 * sampler.variance

    def test_dense_matrix_matches_oracle(self):
        rng = np.random.default_rng(53)
        op = random_sum(rng, 3, 6, real=False)
        assert np.allclose(dense_matrix(op), oracles.sum_matrix(op), atol=1e-12)
