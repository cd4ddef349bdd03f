import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from closed_forms import squeezing_full_quadratic_msl
from gaussbayes.bayes import EstimationProblem, GaussianPrior, GridPrior, UniformPrior, prior_loss
from gaussbayes.fock import (
    ConvergenceError,
    FockOperator,
    TruncationError,
    annihilation,
    averaged_states_fock,
    gaussian_to_fock,
    global_msl,
    lyapunov_residual,
    number_operator,
    oracle_at,
    pm_msl_operator_pvm,
    point_prior_msl,
    poly_to_fock,
    quadrature_matrices,
    read_fock_matrix,
    solve_lyapunov,
    solve_oracle,
    verify_theorem1,
    weighted_inner,
    weighted_norm_sq,
    write_fock_matrix,
)
from gaussbayes.gaussian import GaussianState, ParametricGaussianModel, make_coherent, make_thermal, make_vacuum
from gaussbayes.phase_space import ONE, P, Q
from gaussbayes.solver import resolve_basis, solve_projected_spm


def displacement(probe, prior):
    return EstimationProblem(ParametricGaussianModel.displacement(probe), prior)


def squeezing(probe, prior):
    return EstimationProblem(ParametricGaussianModel.squeezing(probe), prior)


# -- state construction ------------------------------------------------------------

def test_vacuum_block():
    rho = gaussian_to_fock(make_vacuum(), 20).matrix
    expected = np.zeros((20, 20))
    expected[0, 0] = 1.0
    assert np.allclose(rho, expected, atol=1e-14)


def test_thermal_diagonal():
    nbar = 0.1
    rho = gaussian_to_fock(make_thermal(nbar), 40).matrix
    n = np.arange(40)
    assert np.allclose(rho, np.diag((nbar / (1 + nbar)) ** n / (1 + nbar)), atol=1e-14)


def test_coherent_photon_number():
    alpha = 0.5 * (1 + 1j)
    rho = gaussian_to_fock(make_coherent(alpha), 30).matrix
    assert np.trace(rho @ number_operator(30)).real == pytest.approx(abs(alpha) ** 2, abs=1e-8)
    # coherent amplitudes are Poissonian with phase alpha^n
    n = np.arange(30)
    amp = np.exp(-abs(alpha) ** 2 / 2) * alpha**n / np.sqrt([float(math.factorial(k)) for k in n])
    assert np.allclose(rho, np.outer(amp, amp.conj()), atol=1e-13)


def _generator_state(alpha, r, phi, nbar, big=220, d=30):
    # independent construction from matrix exponentials on a large space
    a = annihilation(big)
    ad = a.conj().T
    xi = r * np.exp(2j * phi)
    squeeze = expm(0.5 * (np.conj(xi) * a @ a - xi * ad @ ad))
    disp = expm(alpha * ad - np.conj(alpha) * a)
    n = np.arange(big)
    thermal = np.diag(nbar**n / (1 + nbar) ** (n + 1)) if nbar > 0 else np.diag(n == 0).astype(float)
    u = disp @ squeeze
    return (u @ thermal @ u.conj().T)[:d, :d]


def _state_from_params(alpha, r, phi, nbar):
    # moments of D(alpha) S(r e^{2i phi}) rho_th S^dagger D^dagger
    c, s = math.cos(phi), math.sin(phi)
    rot = np.array([[c, -s], [s, c]])
    cov = (nbar + 0.5) * rot @ np.diag([math.exp(-2 * r), math.exp(2 * r)]) @ rot.T
    mean = math.sqrt(2) * np.array([alpha.real, alpha.imag])
    return GaussianState(mean, cov)


@pytest.mark.parametrize(
    "alpha, r, phi, nbar",
    [(0.0, 0.3, 0.0, 0.0), (0.4 - 0.2j, 0.0, 0.0, 0.1), (0.3 + 0.3j, 0.4, 0.7, 0.0), (-0.2 + 0.1j, 0.25, -0.4, 0.15)],
)
def test_matches_generator_exponentials(alpha, r, phi, nbar):
    ref = _generator_state(alpha, r, phi, nbar)
    got = gaussian_to_fock(_state_from_params(alpha, r, phi, nbar), 30, trace_tol=1.0).matrix
    assert np.max(np.abs(got - ref)) < 1e-10


def test_strong_squeezing_is_stable():
    # a forward b^dagger chain loses all digits here; the block must stay a state
    state = _state_from_params(0.0, 1.5, 0.3, 0.1)
    rho = gaussian_to_fock(state, 400).matrix
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-8)
    assert np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() > -1e-12
    q, _ = quadrature_matrices(400)
    assert np.trace(rho @ q @ q).real == pytest.approx(state.cov[0, 0], rel=1e-8)


def test_truncation_error_reports_deficit():
    with pytest.raises(TruncationError) as err:
        gaussian_to_fock(make_coherent(3.0), 5)
    assert err.value.deficit > 0.5
    with pytest.raises(ValueError):
        gaussian_to_fock(make_vacuum(), 1)


@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8), st.floats(0.0, 0.5), st.floats(0, math.pi), st.floats(0, 0.3))
def test_quadrature_moments_reproduced(re, im, r, phi, nbar):
    state = _state_from_params(complex(re, im), r, phi, nbar)
    d = 80
    rho = gaussian_to_fock(state, d).matrix
    q, p = quadrature_matrices(d + 2)
    q, p = q[:d, :d], p[:d, :d]
    assert np.trace(rho @ q).real == pytest.approx(state.mean[0], abs=1e-9)
    assert np.trace(rho @ p).real == pytest.approx(state.mean[1], abs=1e-9)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-8)


# -- averaged states ----------------------------------------------------------------

def test_point_prior_states():
    probe = make_coherent(0.3)
    problem = displacement(probe, GridPrior((0.4,), (1.0,)))
    rho0, rhobar = averaged_states_fock(problem, 30)
    shifted = GaussianState(probe.mean + np.array([0.4, 0.0]), probe.cov)
    ref = gaussian_to_fock(shifted, 30).matrix
    assert np.allclose(rho0.matrix, ref, atol=1e-13)
    assert np.allclose(rhobar.matrix, 0.4 * ref, atol=1e-13)
    assert point_prior_msl(problem) == pytest.approx(0.0, abs=1e-15)


def test_displacement_averaged_mean_and_trace():
    probe = make_coherent(0.2 + 0.1j)
    problem = displacement(probe, GaussianPrior(0.3, 0.2))
    rho0, rhobar = averaged_states_fock(problem, 60)
    q, _ = quadrature_matrices(61)
    assert np.trace(rho0.matrix @ q[:60, :60]).real == pytest.approx(probe.mean[0] + 0.3, abs=1e-8)
    assert rhobar.trace().real == pytest.approx(0.3, abs=1e-8)
    assert rho0.is_hermitian() and np.linalg.eigvalsh(rho0.matrix).min() > -1e-10


# -- Lyapunov solve -------------------------------------------------------------------

def test_lyapunov_toy():
    rho0 = FockOperator(np.diag([0.7, 0.3]))
    rhobar = FockOperator(np.array([[0.1, 0.2], [0.2, 0.05]]))
    s = solve_lyapunov(rho0, rhobar).matrix
    expected = np.array([[0.2 / 1.4, 0.4 / 1.0], [0.4 / 1.0, 0.1 / 0.6]])
    assert np.allclose(s, expected, atol=1e-15)


def test_lyapunov_proportional_states():
    rho0 = gaussian_to_fock(make_thermal(0.2), 30)
    s = solve_lyapunov(rho0, FockOperator(0.7 * rho0.matrix))
    # thermal eigenvalues decay geometrically; compare on the retained support
    k = s.info["support_rank"]
    assert 10 < k < 30
    assert np.allclose(s.matrix[:k, :k], 0.7 * np.eye(k), atol=1e-10)
    assert np.allclose(s.matrix[k:, k:], 0.0)


def test_lyapunov_support_convention():
    rho0 = FockOperator(np.diag([1.0, 0.0, 0.0]))
    rhobar = FockOperator(np.full((3, 3), 0.1))
    s = solve_lyapunov(rho0, rhobar)
    assert s.info["zeroed_pairs"] == 4
    assert s.matrix[2, 2] == 0
    assert lyapunov_residual(s, rho0, rhobar) > 0  # off-support rhobar is not representable


@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_lyapunov_residual_random(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho0 = x @ x.conj().T + 0.1 * np.eye(n)
    rho0 /= np.trace(rho0).real
    h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rhobar = 0.5 * (h + h.conj().T)
    s = solve_lyapunov(FockOperator(rho0), FockOperator(rhobar))
    assert s.is_hermitian()
    assert lyapunov_residual(s, FockOperator(rho0), FockOperator(rhobar)) < 1e-10 * (1 + np.abs(rhobar).max())


# -- norms and Weyl quantisation ----------------------------------------------------------

def test_weighted_norm_examples():
    rho0 = gaussian_to_fock(make_thermal(0.3), 40)
    assert weighted_norm_sq(FockOperator(np.zeros((40, 40))), rho0) == 0
    assert weighted_norm_sq(FockOperator(np.eye(40)), rho0) == pytest.approx(1.0, abs=1e-8)
    q = poly_to_fock(Q, 40)
    assert weighted_inner(q, q, rho0) == pytest.approx(weighted_norm_sq(q, rho0))


def test_weyl_low_order_symbols():
    d = 25
    q, p = quadrature_matrices(d + 4)
    qq, pp = q[:d, :d], p[:d, :d]
    assert np.allclose(poly_to_fock(Q, d).matrix, qq)
    a = annihilation(d)
    assert np.allclose(poly_to_fock(Q, d).matrix, (a + a.conj().T) / math.sqrt(2))
    sym = 0.5 * (q @ p + p @ q)
    assert np.allclose(poly_to_fock(Q * P, d).matrix, sym[:d, :d], atol=1e-12)
    vac = gaussian_to_fock(make_vacuum(), d)
    assert np.trace(vac.matrix @ poly_to_fock(Q**2, d).matrix).real == pytest.approx(0.5)
    assert poly_to_fock(Q**2 * P + 3 * Q * P**2, d).is_hermitian()


def test_weyl_symbol_expectation_matches_phase_space_average():
    from gaussbayes.gaussian import gaussian_moment
    state = GaussianState(np.array([0.3, -0.2]), np.array([[0.7, 0.1], [0.1, 0.5]]))
    poly = Q**2 * P**2 - 2 * Q**3 + Q * P + ONE
    rho = gaussian_to_fock(state, 80).matrix
    op = poly_to_fock(poly, 80).matrix
    assert np.trace(rho @ op).real == pytest.approx(gaussian_moment(state, poly).real, abs=1e-9)


def test_binary_dump_round_trip(tmp_path):
    op = gaussian_to_fock(make_coherent(0.2 + 0.3j), 12)
    path = tmp_path / "rho.bin"
    write_fock_matrix(path, op)
    raw = path.read_bytes()
    assert len(raw) == 16 + 16 * 144
    assert np.array_equal(read_fock_matrix(path).matrix, op.matrix)
    path.write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(ValueError):
        read_fock_matrix(path)


# -- oracle ------------------------------------------------------------------------

def test_displacement_oracle_equals_linear_closed_form():
    problem = displacement(make_vacuum(), GaussianPrior(0.0, 1.0))
    sol = solve_oracle(problem, 60)
    assert sol.msl == pytest.approx(1 / 3, abs=1e-6)
    assert sol.lyapunov_residual < 1e-8
    spm = solve_projected_spm(problem, resolve_basis("linear-q"))
    diff = poly_to_fock(spm.symbol, sol.dim) - sol.spm
    assert weighted_norm_sq(diff, sol.rho0) < 1e-6


def test_point_prior_global_msl_vanishes():
    problem = displacement(make_vacuum(), GridPrior((0.5,), (1.0,)))
    assert oracle_at(problem, 20).msl == pytest.approx(0.0, abs=1e-12)


def test_squeezing_oracle_below_quadratic_constraint():
    problem = squeezing(make_vacuum(), GaussianPrior(0.0, 0.1))
    g = global_msl(problem)
    assert g < squeezing_full_quadratic_msl(0.1, 0.5, 0.5) - 1e-4


def test_pvm_of_spm_recovers_global_and_identity_gives_prior():
    problem = squeezing(make_thermal(0.1), GaussianPrior(0.0, 0.1))
    sol = solve_oracle(problem)
    states = (sol.rho0, sol.rhobar)
    assert pm_msl_operator_pvm(problem, sol.spm, states=states) == pytest.approx(sol.msl, abs=1e-8)
    eye = FockOperator(np.eye(sol.dim))
    assert pm_msl_operator_pvm(problem, eye, states=states) == pytest.approx(prior_loss(problem), abs=1e-8)
    spm_v = solve_projected_spm(problem, resolve_basis("quadratic-qp"))
    pm = pm_msl_operator_pvm(problem, poly_to_fock(spm_v.symbol, sol.dim), states=states)
    assert spm_v.msl + 1e-6 >= pm >= sol.msl - 1e-6


def test_pvm_rejects_non_hermitian():
    problem = displacement(make_vacuum(), GaussianPrior(0.0, 0.1))
    with pytest.raises(ValueError):
        pm_msl_operator_pvm(problem, FockOperator(np.triu(np.ones((20, 20)))), 20)


def test_ladder_is_monotone_and_reports_best():
    problem = squeezing(make_vacuum(), GaussianPrior(0.0, 0.3))
    with pytest.raises(ConvergenceError) as err:
        solve_oracle(problem, 30, conv_tol=1e-12, max_dim=120)
    values = [v for _, v in err.value.history]
    assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))
    assert err.value.best.dim == 120


# -- polynomial-ratio check -----------------------------------------------------------------

def test_gaussian_prior_ratio_is_linear():
    report = verify_theorem1(displacement(make_vacuum(), GaussianPrior(0.2, 0.3)))
    assert report.residual(1) < 1e-6
    assert report.minimal_degree() == 1


def test_uniform_prior_ratio_is_not_linear():
    report = verify_theorem1(displacement(make_vacuum(), UniformPrior.from_variance(0.0, 0.3)))
    assert report.residual(1) > report.residual(3)


def test_point_prior_ratio_is_constant():
    report = verify_theorem1(displacement(make_vacuum(), GridPrior((0.4,), (1.0,))))
    assert report.residual(0) < 1e-12


def test_theorem_check_rejects_empty_grid():
    problem = displacement(make_vacuum(), GaussianPrior(0.0, 0.1))
    with pytest.raises(ValueError):
        verify_theorem1(problem, grid=(np.array([40.0]), np.array([40.0])))
