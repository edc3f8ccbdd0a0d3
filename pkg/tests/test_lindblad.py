import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from app.errors import DomainError, IntegrationError
from app.lindblad import master_equation
from app.lindblad import average_populations, evolve_master_equation, pl_signal
from app.model import EX, EY, GROUND, LaserConfig, RelaxationConfig, basis_state, build_collapse_ops, make_full_hamiltonian
from app.model.hamiltonians import TWO_PI


def _zero_h(dim):
    zero = np.zeros((dim, dim), dtype=complex)
    return lambda t: zero


def test_free_evolution_is_static():
    rho0 = basis_state(EX)
    result = evolve_master_equation(_zero_h(3), [], rho0, np.linspace(0, 10, 11))
    for state in result.states:
        assert_allclose(state, rho0, atol=1e-14)


def test_optical_decay_rate():
    ops = build_collapse_ops(RelaxationConfig(gamma_opt=1 / 12, gamma_orb=0.0))
    t = np.linspace(0, 50, 101)
    result = evolve_master_equation(_zero_h(3), ops, basis_state(EX), t)
    assert_allclose(result.populations(EX), np.exp(-t / 12), atol=1e-7)
    assert_allclose(result.populations(GROUND), 1 - np.exp(-t / 12), atol=1e-7)


def test_static_doublet_matches_matrix_exponential():
    v_e1, v_e2 = 3.13, 0.72
    h = TWO_PI * np.array([[v_e1, v_e2], [v_e2, -v_e1]], dtype=complex)
    rho0 = basis_state(0, dim=2)
    t = np.linspace(0, 2, 41)
    result = evolve_master_equation(lambda _: h, [], rho0, t, tol=1e-11, atol=1e-13)
    for k, tk in enumerate(t):
        u = expm(-1j * h * tk)
        assert_allclose(result.states[k], u @ rho0 @ u.conj().T, atol=1e-8)


def test_dephasing_decays_coherence_at_gamma():
    gamma = 0.1
    ops = build_collapse_ops(RelaxationConfig(gamma_opt=0.0, gamma_orb=gamma))
    psi = np.array([0, 1, 1], dtype=complex) / math.sqrt(2)
    t = np.linspace(0, 20, 21)
    result = evolve_master_equation(_zero_h(3), ops, np.outer(psi, psi.conj()), t)
    assert_allclose(np.abs(result.states[:, EX, EY]), 0.5 * np.exp(-gamma * t), atol=1e-8)


def test_driven_trajectory_stays_physical(driven, cw_laser, relax):
    result = evolve_master_equation(
        make_full_hamiltonian(driven, cw_laser),
        build_collapse_ops(relax),
        basis_state(GROUND),
        np.linspace(0, 10, 201),
    )
    diag = result.diagnostics()
    assert diag.trace_defect < 1e-8
    assert diag.hermiticity_defect < 1e-10
    assert diag.min_eigenvalue > -1e-8
    assert result.step_stats.accepted > 0
    assert result.step_stats.min_step > 0


@pytest.mark.parametrize("seed", range(4))
def test_random_long_trajectories_stay_physical(device, relax, seed):
    rng = np.random.default_rng(seed)
    cfg = device.with_drive(rng.uniform(0.0, 7.0), -0.7).model_copy(update={"phase_m": rng.uniform(0, 2 * math.pi)})
    laser = LaserConfig(
        detuning_x=rng.uniform(-1.0, 1.0),
        omega_lx=rng.uniform(0.0, 0.2),
        omega_ly=rng.uniform(0.0, 0.2),
    )
    result = evolve_master_equation(
        make_full_hamiltonian(cfg, laser),
        build_collapse_ops(relax),
        basis_state(GROUND),
        np.linspace(0, 200, 401),
    )
    diag = result.diagnostics()
    assert diag.trace_defect < 1e-8
    assert diag.hermiticity_defect < 1e-10
    assert diag.min_eigenvalue > -1e-8


def test_purity_conserved_without_collapse(driven, cw_laser):
    result = evolve_master_equation(make_full_hamiltonian(driven, cw_laser), [], basis_state(GROUND), np.linspace(0, 5, 51))
    purity = np.einsum("kij,kji->k", result.states, result.states).real
    assert_allclose(purity, 1.0, atol=1e-8)


def test_tighter_tolerance_reduces_error(driven, cw_laser, relax):
    h = make_full_hamiltonian(driven, cw_laser)
    ops = build_collapse_ops(relax)
    t = np.linspace(0, 5, 11)
    ref = evolve_master_equation(h, ops, basis_state(GROUND), t, tol=1e-11, atol=1e-13).states
    loose = evolve_master_equation(h, ops, basis_state(GROUND), t, tol=1e-5, atol=1e-7).states
    tight = evolve_master_equation(h, ops, basis_state(GROUND), t, tol=1e-8, atol=1e-10).states
    assert np.abs(tight - ref).max() < np.abs(loose - ref).max()


def test_single_point_grid():
    result = evolve_master_equation(_zero_h(2), [], basis_state(0, 2), [3.0])
    assert result.states.shape == (1, 2, 2)


@pytest.mark.parametrize(
    "rho0",
    [
        np.eye(3, dtype=complex),  # trace 3
        np.array([[1, 0.5j], [0.5j, 0]], dtype=complex),  # not Hermitian
        np.array([[1.5, 0], [0, -0.5]], dtype=complex),  # negative eigenvalue
        np.eye(4, dtype=complex) / 4,
    ],
)
def test_invalid_initial_state(rho0):
    with pytest.raises(DomainError):
        evolve_master_equation(_zero_h(rho0.shape[0]), [], rho0, [0.0, 1.0])


def test_grid_must_increase():
    with pytest.raises(DomainError):
        evolve_master_equation(_zero_h(3), [], basis_state(GROUND), [0.0, 2.0, 1.0])


class _FailingStepper:
    def __init__(self, *args, **kwargs):
        self.status = "running"
        self.t = self.t_old = 0.0
        self.nfev = 0

    def step(self):
        self.status = "failed"
        self.t = 1.5
        return "Required step size is less than spacing between numbers."


def test_stepper_failure_reports_time(monkeypatch):
    monkeypatch.setattr(master_equation, "RK45", _FailingStepper)
    with pytest.raises(IntegrationError) as err:
        evolve_master_equation(_zero_h(3), [], basis_state(GROUND), [0.0, 5.0])
    assert err.value.t == 1.5
    assert "t=1.5" in str(err.value)


class TestAveragePopulations:
    def _decay(self, t_stop=50.0):
        ops = build_collapse_ops(RelaxationConfig(gamma_opt=1 / 12, gamma_orb=0.0))
        return evolve_master_equation(_zero_h(3), ops, basis_state(EX), np.linspace(0, t_stop, 2001))

    def test_constant_populations(self):
        rho0 = np.diag([0.5, 0.3, 0.2]).astype(complex)
        result = evolve_master_equation(_zero_h(3), [], rho0, np.linspace(0, 4, 9))
        assert average_populations(result, (0.0, 4.0)) == pytest.approx((0.3, 0.2))

    def test_exponential_decay_average(self):
        rho11, rho22 = average_populations(self._decay(), (0.0, 50.0))
        assert rho11 == pytest.approx(12 / 50 * (1 - math.exp(-50 / 12)), rel=1e-5)
        assert rho22 == pytest.approx(0.0, abs=1e-12)

    def test_two_level_indices(self):
        rho0 = np.diag([0.6, 0.4]).astype(complex)
        result = evolve_master_equation(_zero_h(2), [], rho0, [0.0, 1.0, 2.0])
        assert average_populations(result, (0.0, 2.0)) == pytest.approx((0.6, 0.4))

    @pytest.mark.parametrize("window", [(0.0, 60.0), (-1.0, 10.0), (10.0, 10.0), (10.0, 10.01)])
    def test_bad_windows(self, window):
        with pytest.raises(DomainError):
            average_populations(self._decay(), window)


class TestPlSignal:
    def test_examples(self):
        assert pl_signal(1.0, 0.0, 2.5, 0.3) == 2.5
        assert pl_signal(0.0, 1.0, 2.0, 0.7) == pytest.approx(1.4)
        assert pl_signal(0.5, 0.5, 2.0, 0.6) == pytest.approx(1.6)

    def test_arrays(self):
        assert_allclose(pl_signal(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 1.0, 0.5), [1.0, 0.5])

    @pytest.mark.parametrize("alpha,beta", [(0.0, 0.5), (-1.0, 0.5), (1.0, -0.1), (1.0, 1.1)])
    def test_domain(self, alpha, beta):
        with pytest.raises(DomainError):
            pl_signal(0.1, 0.1, alpha, beta)
