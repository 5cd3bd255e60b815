import json
from pathlib import Path

import numpy as np
import pytest

from senqse.csfbasis import (
    BasisState,
    CsfKind,
    CsfSpec,
    default_selection_params,
    select_basis_pt,
    select_basis_vo,
)
from senqse.fermion import (
    hf_energy,
    jordan_wigner,
    jw_operator,
    load_fcidump,
    number_operator,
)
from senqse.measure import predicted_mse
from senqse.pauli import PauliSum
from senqse.solver import (
    SolverError,
    SubspaceEngine,
    build_subspace,
    fci_oracle,
    ground_state,
    make_matrix_sampler,
    relax_orbitals,
    vo_optimize,
)

FIXTURES = Path(__file__).parent / "fixtures"
REFERENCE = json.loads((FIXTURES / "reference.json").read_text())


@pytest.fixture(scope="module")
def h2():
    return load_fcidump(FIXTURES / "h2_0.7414.fcidump")


@pytest.fixture(scope="module")
def h2_hq(h2):
    return jordan_wigner(h2)


@pytest.fixture(scope="module")
def h2o():
    return load_fcidump(FIXTURES / "h2o_1.0000.fcidump")


@pytest.fixture(scope="module")
def h2o_hq(h2o):
    return jordan_wigner(h2o)


class TestGroundState:
    def test_diagonal(self):
        e, c0 = ground_state(np.diag([1.0, 2.0]))
        assert e == 1.0
        assert np.allclose(c0, [1.0, 0.0])

    def test_two_by_two(self):
        e, c0 = ground_state(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert e == pytest.approx(-1.0)
        assert np.allclose(c0, [1.0, -1.0] / np.sqrt(2.0))

    def test_random_matches_residual(self):
        rng = np.random.default_rng(139)
        m = rng.normal(size=(8, 8))
        m = 0.5 * (m + m.T)
        e, c0 = ground_state(m)
        assert e == pytest.approx(np.linalg.eigvalsh(m)[0], abs=1e-10)
        assert np.linalg.norm(m @ c0 - e * c0) < 1e-8

    def test_rejects_nonhermitian(self):
        with pytest.raises(SolverError):
            ground_state(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestFciOracle:
    def test_h2_reference(self, h2_hq, h2):
        res = fci_oracle(h2_hq, h2.n_elec, 0.0)
        assert res.energy == pytest.approx(REFERENCE["h2_0.7414"]["e_fci"], abs=1e-8)
        assert res.energy == pytest.approx(-1.1373, abs=2e-4)

    def test_h2o_against_independent_determinant_fci(self, h2o_hq, h2o):
        res = fci_oracle(h2o_hq, h2o.n_elec, 0.0)
        assert res.energy == pytest.approx(REFERENCE["h2o_1.0000"]["e_fci"], abs=1e-7)

    def test_one_electron_sector_matches_one_body_block(self):
        rng = np.random.default_rng(149)
        n_orb = 3
        h = rng.normal(size=(n_orb, n_orb))
        h = 0.5 * (h + h.T)
        hq = PauliSum(2 * n_orb)
        for p in range(n_orb):
            for q in range(n_orb):
                for s in (0, 1):
                    hq = hq + jw_operator(
                        [(2 * p + s, True), (2 * q + s, False)], 2 * n_orb, h[p, q]
                    )
        hq = hq.simplify().chop_imag()
        res = fci_oracle(hq, 1, 0.5)
        assert res.energy == pytest.approx(np.linalg.eigvalsh(h)[0], abs=1e-10)

    def test_sector_particle_number(self, h2_hq, h2):
        res = fci_oracle(h2_hq, 2, 0.0)
        full = np.zeros(2**4, dtype=complex)
        full[res.determinants.astype(int)] = res.vector
        from senqse.simulator import StateVector, expectation

        st = StateVector(full, 4)
        assert expectation(st, number_operator(2)).real == pytest.approx(2.0, abs=1e-10)

    def test_empty_sector_rejected(self, h2_hq):
        with pytest.raises(SolverError):
            fci_oracle(h2_hq, 2, 3.0)
        with pytest.raises(SolverError):
            fci_oracle(h2_hq, 12, 0.0)


class TestBuildSubspace:
    def test_single_hf_state(self, h2_hq, h2):
        basis = [BasisState(CsfSpec(CsfKind.HF), (), "hf")]
        problem = build_subspace(basis, h2_hq, h2.n_elec)
        assert problem.hmat.shape == (1, 1)
        assert problem.e_min == pytest.approx(hf_energy(h2), abs=1e-10)

    def test_variational_bound_and_nesting(self, h2_hq, h2):
        fci = fci_oracle(h2_hq, 2, 0.0).energy
        small = [BasisState(CsfSpec(CsfKind.HF), (), "hf")]
        big = small + [BasisState(CsfSpec(CsfKind.HF).moved(0, 1), (), "d")]
        e_small = build_subspace(small, h2_hq, 2).e_min
        e_big = build_subspace(big, h2_hq, 2).e_min
        assert fci <= e_big + 1e-10 <= e_small + 1e-10

    def test_h2_vo_reaches_fci(self, h2, h2_hq):
        basis = select_basis_vo(h2, h2_hq, default_selection_params(h2))
        opt_basis, problem, history = vo_optimize(basis, h2_hq, h2.n_elec)
        fci = fci_oracle(h2_hq, 2, 0.0).energy
        assert problem.e_min == pytest.approx(fci, abs=1e-8)
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))

    def test_no_taper_matches_tapered(self, h2, h2_hq):
        basis = select_basis_pt(h2, h2_hq, default_selection_params(h2))
        tapered = build_subspace(basis, h2_hq, 2, taper=True)
        ablated = build_subspace(basis, h2_hq, 2, taper=False)
        assert np.allclose(tapered.hmat, ablated.hmat, atol=1e-10)
        assert tapered.e_min == pytest.approx(ablated.e_min, abs=1e-10)

    def test_no_taper_h2o(self, h2o, h2o_hq):
        basis = select_basis_pt(h2o, h2o_hq, default_selection_params(h2o))[:6]
        tapered = build_subspace(basis, h2o_hq, 10, taper=True)
        ablated = build_subspace(basis, h2o_hq, 10, taper=False)
        assert np.allclose(tapered.hmat, ablated.hmat, atol=1e-9)

    def test_duplicate_basis_rejected(self, h2_hq):
        b = BasisState(CsfSpec(CsfKind.HF), (), "hf")
        with pytest.raises(SolverError, match="duplicate"):
            build_subspace([b, b], h2_hq, 2)

    def test_classical_elements_noise_free(self, h2, h2_hq):
        # rotation-free PT basis: sampled mode must reproduce exact values
        basis = select_basis_pt(h2, h2_hq, default_selection_params(h2))
        assert all(not b.rotations for b in basis)
        exact = build_subspace(basis, h2_hq, 2, mode="exact")
        sampled = build_subspace(basis, h2_hq, 2, mode="sampled", shots=10, seed=7)
        assert np.array_equal(exact.hmat, sampled.hmat)

    def test_sampled_mode_converges(self, h2, h2_hq):
        basis = select_basis_vo(h2, h2_hq, default_selection_params(h2, eps1=0.5))
        basis, exact_problem, _ = vo_optimize(basis, h2_hq, 2)
        sampled = build_subspace(
            basis, h2_hq, 2, mode="sampled", shots=200_000, seed=3
        )
        assert sampled.shots is not None
        assert sampled.e_min == pytest.approx(exact_problem.e_min, abs=5e-3)
        assert sampled.sigma is not None and sampled.sigma.max() > 0

    def test_sampled_requires_args(self, h2_hq):
        basis = [BasisState(CsfSpec(CsfKind.HF), (), "hf")]
        with pytest.raises(SolverError):
            build_subspace(basis, h2_hq, 2, mode="sampled")

    def test_sampler_deterministic(self, h2, h2_hq):
        basis = select_basis_vo(h2, h2_hq, default_selection_params(h2, eps1=0.5))
        basis = tuple(b.with_thetas([0.1] * len(b.rotations)) for b in basis)
        engine = SubspaceEngine(basis, h2_hq, 2)
        sampler = make_matrix_sampler(engine, 1000)
        h1 = sampler.draw(11)
        h2_ = sampler.draw(11)
        h3 = sampler.draw(12)
        assert np.array_equal(h1, h2_)
        assert not np.array_equal(h1, h3)

    def test_sampled_mse_matches_prediction(self, h2, h2_hq):
        basis = select_basis_vo(h2, h2_hq, default_selection_params(h2, eps1=0.5))
        basis, _, _ = vo_optimize(basis, h2_hq, 2)
        engine = SubspaceEngine(basis, h2_hq, 2)
        sampler = make_matrix_sampler(engine, 2000)
        exact = engine.exact_matrix()
        e0, c0 = ground_state(exact)
        sigma, _ = engine.sigma_matrix(sampler.plan)
        shots = {k: sum(v) for k, v in sampler.shots.items()}
        pred = predicted_mse(sigma, c0, shots)
        errs = [ground_state(sampler.draw(seed))[0] - e0 for seed in range(300)]
        emp = float(np.mean(np.square(errs)))
        se = pred * np.sqrt(2.0 / len(errs))
        assert abs(emp - pred) < 4 * se + 0.15 * pred


class TestVoOptimize:
    def test_escapes_symmetric_start(self, h2, h2_hq):
        basis = select_basis_vo(h2, h2_hq, default_selection_params(h2, eps1=0.5))
        assert all(th == 0.0 for b in basis for _, _, th in b.rotations)
        opt_basis, problem, history = vo_optimize(basis, h2_hq, 2)
        assert any(th != 0.0 for b in opt_basis for _, _, th in b.rotations)
        # the flat symmetric start is strictly improved upon
        assert problem.e_min < hf_energy(h2) - 1e-4

    def test_rotation_free_basis_passthrough(self, h2_hq, h2):
        basis = [BasisState(CsfSpec(CsfKind.HF), (), "hf")]
        opt_basis, problem, history = vo_optimize(basis, h2_hq, 2)
        assert opt_basis == tuple(basis)
        assert problem.e_min == pytest.approx(hf_energy(h2), abs=1e-10)


class TestRelaxOrbitals:
    def test_h2_already_exact(self, h2, h2_hq):
        basis = select_basis_vo(h2, h2_hq, default_selection_params(h2))
        basis, problem, _ = vo_optimize(basis, h2_hq, 2)
        rot, e_relaxed, _ = relax_orbitals(basis, h2, maxiter=3)
        assert e_relaxed == pytest.approx(problem.e_min, abs=1e-7)
        assert e_relaxed <= problem.e_min + 1e-10

    def test_relaxation_never_raises_energy(self, h2, h2_hq):
        basis = [BasisState(CsfSpec(CsfKind.HF), (), "hf")]
        e_fixed = build_subspace(basis, h2_hq, 2).e_min
        rot, e_relaxed, history = relax_orbitals(basis, h2, maxiter=5)
        assert e_relaxed <= e_fixed + 1e-12
