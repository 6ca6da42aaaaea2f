import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from chiral_otto.spectral import DriveParameters, Spectrum, build_hamiltonian, eigensystem
from chiral_otto.thermo import (
    BathSpec,
    Regime,
    UndefinedEfficiencyError,
    check_density_matrix,
    classify_regime,
    efficiency,
    fidelity,
    gibbs_populations,
    gibbs_state,
    heat_cold,
    heat_hot,
    work_from_spectra,
    work_net,
)

energies = st.lists(st.floats(-5, 5), min_size=3, max_size=3).map(sorted).map(np.array)
betas = st.floats(0.0, 20.0)


def mp_gibbs(values, beta):
    with mpmath.workdps(40):
        w = [mpmath.exp(-mpmath.mpf(beta) * mpmath.mpf(e)) for e in values]
        z = mpmath.fsum(w)
        return [float(x / z) for x in w]


def random_state(rng, rank=3):
    a = rng.normal(size=(3, rank)) + 1j * rng.normal(size=(3, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


class TestBath:
    def test_validation(self):
        with pytest.raises(ValueError):
            BathSpec(beta=-1)
        with pytest.raises(ValueError):
            BathSpec(beta=1, kappa=-0.1)
        with pytest.raises(ValueError):
            BathSpec(beta=1, nbar=-1)
        assert BathSpec(0.0).per_gap_bose


class TestGibbsPopulations:
    def test_infinite_temperature(self):
        np.testing.assert_allclose(gibbs_populations(np.array([-1.0, 0.3, 2.0]), 0.0), [1 / 3] * 3, atol=1e-15)

    def test_cold_degenerate_ground(self):
        np.testing.assert_allclose(gibbs_populations(np.array([-1.0, -1.0, 2.0]), 1000.0), [0.5, 0.5, 0.0], atol=1e-12)

    def test_unit_beta_against_mpmath(self):
        # 40-digit oracle: e / (2e + e^-2) = 0.48785555116..., e^-2 / (2e + e^-2) = 0.02428889767...
        p = gibbs_populations(np.array([-1.0, -1.0, 2.0]), 1.0)
        np.testing.assert_allclose(p, [0.4878555511603684, 0.4878555511603684, 0.02428889767926321], atol=1e-6)
        np.testing.assert_allclose(p, mp_gibbs([-1, -1, 2], 1.0), atol=1e-14)

    def test_accepts_spectrum(self):
        spec = eigensystem(build_hamiltonian(DriveParameters()))
        np.testing.assert_allclose(gibbs_populations(spec, 1.0), gibbs_populations(spec.values, 1.0))

    def test_rejects_negative_beta(self):
        with pytest.raises(ValueError):
            gibbs_populations(np.zeros(3), -0.1)

    @given(energies, betas)
    def test_normalized_and_monotone(self, e, beta):
        p = gibbs_populations(e, beta)
        assert abs(p.sum() - 1) <= 1e-12
        assert np.all((p >= 0) & (p <= 1))
        assert np.all(np.diff(p) <= 1e-15)
        np.testing.assert_allclose(p, mp_gibbs(e, beta), atol=1e-12)

    @given(energies, betas, st.floats(-100, 100))
    def test_shift_invariant(self, e, beta, c):
        np.testing.assert_allclose(gibbs_populations(e + c, beta), gibbs_populations(e, beta), atol=1e-12)


class TestGibbsState:
    def test_infinite_temperature_is_identity(self):
        spec = eigensystem(build_hamiltonian(DriveParameters(0, 0, 0, delta=0.1)))
        np.testing.assert_allclose(gibbs_state(spec, 0.0), np.eye(3) / 3, atol=1e-15)

    def test_diagonal_boltzmann_ratios(self):
        delta, beta = 0.1, 2.0
        spec = eigensystem(build_hamiltonian(DriveParameters(0, 0, 0, delta=delta)))
        rho = gibbs_state(spec, beta)
        assert np.allclose(rho, np.diag(np.diag(rho)), atol=1e-15)
        d = np.diag(rho).real
        # diagonal order (2 delta, delta, 0)
        assert d[1] / d[2] == pytest.approx(math.exp(-beta * delta))
        assert d[0] / d[1] == pytest.approx(math.exp(-beta * delta))

    def test_spectral_mapping(self):
        spec = eigensystem(build_hamiltonian(DriveParameters(phi=math.pi / 2, delta=0.1)))
        rho = gibbs_state(spec, 1.0)
        np.testing.assert_allclose(
            np.sort(np.linalg.eigvalsh(rho)), np.sort(gibbs_populations(spec, 1.0)), atol=1e-14
        )

    @settings(max_examples=50)
    @given(st.floats(0, 2 * math.pi), st.floats(-1, 1), betas, st.sampled_from(["left", "right"]))
    def test_commutes_with_hamiltonian(self, phi, delta, beta, chir):
        h = build_hamiltonian(DriveParameters(chirality=chir, phi=phi, delta=delta))
        rho = gibbs_state(eigensystem(h), beta)
        check_density_matrix(rho)
        assert np.abs(h @ rho - rho @ h).max() <= 1e-9


class TestFidelity:
    def test_self(self):
        rho = random_state(np.random.default_rng(0))
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)

    def test_orthogonal_pure(self):
        a = np.diag([1.0, 0, 0]).astype(complex)
        b = np.diag([0, 1.0, 0]).astype(complex)
        assert fidelity(a, b) == pytest.approx(0.0, abs=1e-10)

    def test_commuting_matches_bhattacharyya(self):
        p, q = np.array([0.5, 0.3, 0.2]), np.array([0.2, 0.3, 0.5])
        oracle = float(np.sum(np.sqrt(p * q)))  # 2 sqrt(0.1) + 0.3 = 0.93245553...
        assert oracle == pytest.approx(0.9324555320336759, abs=1e-15)
        assert fidelity(np.diag(p), np.diag(q)) == pytest.approx(oracle, abs=1e-4)
        assert fidelity(np.diag(p), np.diag(q)) == pytest.approx(oracle, abs=1e-12)

    def test_pure_states_overlap(self):
        # for pure states the root fidelity is |<a|b>|
        rng = np.random.default_rng(5)
        a = rng.normal(size=3) + 1j * rng.normal(size=3)
        b = rng.normal(size=3) + 1j * rng.normal(size=3)
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        f = fidelity(np.outer(a, a.conj()), np.outer(b, b.conj()))
        assert f == pytest.approx(abs(np.vdot(a, b)), abs=1e-7)

    @settings(max_examples=100)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
    def test_bounds_and_symmetry(self, seed, ra, rb):
        rng = np.random.default_rng(seed)
        a, b = random_state(rng, ra), random_state(rng, rb)
        fab, fba = fidelity(a, b), fidelity(b, a)
        assert 0.0 <= fab <= 1.0
        assert abs(fab - fba) <= 1e-9
        assert fidelity(a, a) >= 1 - 1e-10


class TestHeatsAndWork:
    def test_equal_temperatures_zero(self):
        spec = eigensystem(build_hamiltonian(DriveParameters(phi=1.0, delta=0.3)))
        p = gibbs_populations(spec, 0.7)
        assert heat_hot(spec, p, p) == 0.0
        assert heat_cold(spec, p, p) == 0.0

    def test_hand_evaluated_hot_heat(self):
        e = np.array([-1.0, -1.0, 2.0])
        hot, cold = np.full(3, 1 / 3), np.array([0.5, 0.5, 0.0])
        brute = sum(e[n] * (hot[n] - cold[n]) for n in range(3))
        assert brute == pytest.approx(1.0, abs=1e-15)
        assert heat_hot(e, hot, cold) == pytest.approx(brute, abs=1e-15)

    def test_identical_spectra_give_zero_work(self):
        e = np.array([-1.3, 0.2, 1.1])
        hot, cold = gibbs_populations(e, 0.01), gibbs_populations(e, 1.0)
        qh, qc = heat_hot(e, hot, cold), heat_cold(e, cold, hot)
        assert qc == -qh
        assert work_net(qh, qc) == 0.0

    def test_work_arithmetic(self):
        assert work_net(1.0, -0.6) == pytest.approx(0.4)

    @given(energies, st.floats(-10, 10), betas, betas)
    def test_hot_heat_shift_invariant(self, e, c, b1, b2):
        hot, cold = gibbs_populations(e, min(b1, b2)), gibbs_populations(e, max(b1, b2))
        assert heat_hot(e + c, hot, cold) == pytest.approx(heat_hot(e, hot, cold), abs=1e-9)

    @settings(max_examples=200)
    @given(energies, energies, betas, betas)
    def test_first_law_two_routes(self, ea, eb, b1, b2):
        hot, cold = gibbs_populations(ea, b1), gibbs_populations(eb, b2)
        qh, qc = heat_hot(ea, hot, cold), heat_cold(eb, cold, hot)
        assert abs(work_net(qh, qc) - work_from_spectra(ea, eb, hot, cold)) <= 1e-12

    @given(energies, betas)
    def test_zero_at_equal_betas(self, e, beta):
        p = gibbs_populations(e, beta)
        assert heat_hot(e, p, p) == heat_cold(e, p, p) == work_net(0.0, 0.0) == 0.0

    @given(energies, st.floats(0, 5), st.floats(0, 5))
    def test_hot_heat_positive(self, e, b1, b2):
        assume(np.diff(e).min() > 1e-3 and abs(b1 - b2) > 1e-3)
        bh, bc = min(b1, b2), max(b1, b2)
        assert heat_hot(e, gibbs_populations(e, bh), gibbs_populations(e, bc)) > 0


class TestEfficiencyAndRegime:
    def test_efficiency_values(self):
        assert efficiency(-0.2, 1.0) == pytest.approx(20.0)
        assert efficiency(0.0, 1.0) == 0.0

    def test_efficiency_undefined(self):
        with pytest.raises(UndefinedEfficiencyError):
            efficiency(-0.1, 0.0)
        with pytest.raises(UndefinedEfficiencyError):
            efficiency(-0.1, -1.0)

    @pytest.mark.parametrize(
        "w, qh, qc, expected",
        [
            (-0.1, 0.5, -0.4, Regime.ENGINE),
            (0.1, 0.5, -0.6, Regime.THERMAL_ACCELERATOR),
            (0.1, -0.5, 0.4, Regime.REFRIGERATOR),
            (0.1, -0.05, -0.05, Regime.HEATER),
            (0.0, 0.0, 0.0, Regime.DEGENERATE),
            (-0.1, 0.5, 1e-13, Regime.DEGENERATE),
            (-0.3, -0.1, -0.2, Regime.UNCLASSIFIED),
        ],
    )
    def test_sign_table(self, w, qh, qc, expected):
        assert classify_regime(w, qh, qc) is expected

    @given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
    def test_labels_exclusive(self, w, qh, qc):
        assume(min(abs(w), abs(qh), abs(qc)) > 1e-12)
        table = {
            Regime.ENGINE: (w <= 0, qh >= 0, qc <= 0),
            Regime.REFRIGERATOR: (w >= 0, qh <= 0, qc >= 0),
            Regime.HEATER: (w >= 0, qh <= 0, qc <= 0),
            Regime.THERMAL_ACCELERATOR: (w >= 0, qh >= 0, qc <= 0),
        }
        matching = [r for r, conds in table.items() if all(conds)]
        assert len(matching) <= 1
        label = classify_regime(w, qh, qc)
        assert label is (matching[0] if matching else Regime.UNCLASSIFIED)

    @given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10), st.floats(-1e-14, 1e-14))
    def test_stable_under_tiny_perturbation(self, w, qh, qc, eps):
        assume(min(abs(w), abs(qh), abs(qc)) > 1e-10)
        assert classify_regime(w, qh, qc) is classify_regime(w + eps, qh + eps, qc + eps)

    def test_physical_cycle_records_are_machines(self):
        # with W = Qh + Qc only two of the six sign patterns lack a label
        spec_a = Spectrum(np.array([-1.0, 0.0, 1.0]), np.eye(3))
        hot, cold = gibbs_populations(spec_a, 0.01), gibbs_populations(spec_a, 1.0)
        qh, qc = heat_hot(spec_a, hot, cold), heat_cold(np.array([-2.0, 0.0, 2.0]), cold, hot)
        assert classify_regime(qh + qc, qh, qc) is Regime.ENGINE


class TestDensityMatrixCheck:
    def test_rejects(self):
        with pytest.raises(ValueError, match="trace"):
            check_density_matrix(np.eye(3))
        with pytest.raises(ValueError, match="Hermitian"):
            check_density_matrix(np.array([[0.5, 1j, 0], [1j, 0.5, 0], [0, 0, 0]]))
        with pytest.raises(ValueError, match="negative"):
            check_density_matrix(np.diag([1.5, -0.5, 0.0]))
