import numpy as np
import pytest

from gibbsdice.datasets import load_builtin
from gibbsdice.errors import DegenerateCellError, InvalidParameterError
from gibbsdice.estimation import XxyObservation, fit_beta_global
from gibbsdice.model import CuboidSpec, Normalization, cuboid_energies, gibbs_probabilities, xxy_pxx
from gibbsdice.validation import (
    BootstrapConfig,
    bootstrap_constant_beta,
    chi_square_full,
    chi_square_xxy,
    iteration_stream,
    simulate_tosses,
)
from oracles import pearson_two_cell

BUDDEN = load_builtin("budden").observations
HEILBRONNER = load_builtin("heilbronner").observations


@pytest.mark.parametrize("obs,beta,expected", [(BUDDEN, 4.46, 6.2), (HEILBRONNER, 3.53, 6.6)])
def test_chi2_per_m_reference(kernels, obs, beta, expected):
    g = chi_square_xxy(obs, beta)
    assert g.m == len(obs)
    assert abs(g.chi2_per_m - expected) <= 0.3
    assert g.verdict == "rejected"
    assert g.chi2_per_m == g.chi2 / g.m


def test_chi2_additivity(kernels):
    for obs, beta in ((BUDDEN, 4.46), (HEILBRONNER, 3.53), (BUDDEN, 1.0)):
        parts = [pearson_two_cell(o.N, o.nxx, xxy_pxx(o.sx, o.sy, beta)) for o in obs]
        assert chi_square_xxy(obs, beta).chi2 == pytest.approx(sum(parts), rel=1e-10)


def test_chi2_perfect_fit_is_zero(kernels):
    # choose N so that N p_xx is an integer up to rounding noise
    beta = 2.0
    obs = []
    for sx, sy in ((15, 7.1), (15, 12.0), (15, 22.5)):
        p = xxy_pxx(sx, sy, beta)
        N = 10**12
        obs.append(XxyObservation(sx, sy, N, round(N * p)))
    g = chi_square_xxy(obs, beta)
    assert g.chi2 < 1e-6
    assert g.verdict == "consistent"


def test_chi2_degenerate_cell_names_cuboid():
    obs = [XxyObservation(15, 7.1, 100, 50), XxyObservation(15, 2000.0, 100, 0)]
    with pytest.raises(DegenerateCellError, match="cuboid 2"):
        chi_square_xxy(obs, 50.0)


E_CONTROL = cuboid_energies(CuboidSpec(13, 20, 23), Normalization.HALF_DIAGONAL)


def test_chi_square_full_control():
    rec = load_builtin("control-I")
    g = chi_square_full(rec.counts, gibbs_probabilities(rec.energies(), 4.90))
    assert g.m == 6
    assert g.chi2_per_m <= 1.5


def test_chi_square_full_exact_and_perturbed():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    N = 1000
    n = (N * p).astype(int)
    assert chi_square_full(n, p).chi2 == pytest.approx(0.0, abs=1e-20)
    for d in (1, 5, 17):
        m = n.copy()
        m[1] += d
        m[3] -= d
        expected = d * d / (N * p[1]) + d * d / (N * p[3])
        assert chi_square_full(m, p).chi2 == pytest.approx(expected, rel=1e-12)


def test_chi_square_full_errors():
    with pytest.raises(DegenerateCellError, match="state 2"):
        chi_square_full((5, 0, 5), (0.5, 0.0, 0.5))
    with pytest.raises(InvalidParameterError):
        chi_square_full((5, 5), (0.2, 0.3, 0.5))


# ---------------------------------------------------------------- simulation


def test_simulate_certain():
    assert simulate_tosses(1.0, 100, iteration_stream(0, 0)) == 100
    assert simulate_tosses(0.0, 100, iteration_stream(0, 0)) == 0


@pytest.mark.parametrize("seed", range(10))
def test_simulate_half(seed):
    n = simulate_tosses(0.5, 10**6, iteration_stream(seed, 0))
    assert abs(n / 10**6 - 0.5) <= 0.002


def test_simulate_mean():
    rng = iteration_stream(123, 0)
    draws = [simulate_tosses(0.3, 100, rng) for _ in range(10**4)]
    assert abs(np.mean(draws) - 30.0) <= 0.5


def test_simulate_multinomial():
    p = gibbs_probabilities(E_CONTROL, 4.9)
    n = simulate_tosses(p, 5000, iteration_stream(1, 2))
    assert n.sum() == 5000 and n.shape == (6,)
    again = simulate_tosses(p, 5000, iteration_stream(1, 2))
    assert np.array_equal(n, again)


def test_simulate_rejects_bad_input():
    with pytest.raises(InvalidParameterError):
        simulate_tosses(1.5, 10, iteration_stream(0, 0))
    with pytest.raises(InvalidParameterError):
        simulate_tosses(0.5, -1, iteration_stream(0, 0))
    with pytest.raises(InvalidParameterError):
        simulate_tosses([0.5, 0.6], 10, iteration_stream(0, 0))


def test_iteration_streams_are_independent_of_order():
    a = iteration_stream(9, 5).random(4)
    iteration_stream(9, 4).random(100)
    b = iteration_stream(9, 5).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, iteration_stream(9, 6).random(4))


# ---------------------------------------------------------------- bootstrap


def test_bootstrap_config_validation():
    with pytest.raises(InvalidParameterError):
        BootstrapConfig(beta0=4.0, epsilon=-0.1)
    with pytest.raises(InvalidParameterError):
        BootstrapConfig(beta0=4.0, epsilon=0.05, iterations=0)
    with pytest.raises(InvalidParameterError):
        BootstrapConfig(beta0=-1.0, epsilon=0.05)
    with pytest.raises(InvalidParameterError):
        BootstrapConfig(beta0=4.0, epsilon=0.05, master_seed=-3)
    with pytest.raises(InvalidParameterError):
        BootstrapConfig(beta0=4.0, epsilon=0.05, refit_lengths="true")


def test_bootstrap_empty_rejected():
    with pytest.raises(InvalidParameterError):
        bootstrap_constant_beta([], BootstrapConfig(beta0=4.0, epsilon=0.05))


def test_bootstrap_deterministic_across_workers(kernels):
    base = dict(beta0=4.46, epsilon=0.05, iterations=200, master_seed=2024)
    r1 = bootstrap_constant_beta(BUDDEN, BootstrapConfig(**base, workers=1))
    r4 = bootstrap_constant_beta(BUDDEN, BootstrapConfig(**base, workers=4))
    assert np.array_equal(r1.chi2_simulated, r4.chi2_simulated)
    assert np.array_equal(r1.beta_simulated, r4.beta_simulated)
    assert r1.p_value == r4.p_value


def test_bootstrap_backends_agree():
    from gibbsdice import _backend

    if _backend.compiled() is None:
        pytest.skip("compiled kernels not built")
    cfg = BootstrapConfig(beta0=3.53, epsilon=0.04, iterations=100, master_seed=5)
    saved = _backend.kernels
    try:
        _backend.kernels = _backend.compiled()
        rc = bootstrap_constant_beta(HEILBRONNER, cfg)
        _backend.kernels = _backend.pure
        rp = bootstrap_constant_beta(HEILBRONNER, cfg)
    finally:
        _backend.kernels = saved
    assert np.allclose(rc.chi2_simulated, rp.chi2_simulated, rtol=1e-6)
    assert abs(rc.p_value - rp.p_value) <= 0.02


def test_bootstrap_result_shape():
    cfg = BootstrapConfig(beta0=4.46, epsilon=0.05, iterations=50, master_seed=1)
    r = bootstrap_constant_beta(BUDDEN, cfg)
    assert r.chi2_simulated.shape == (50,)
    assert r.config is cfg
    assert r.chi2_observed == pytest.approx(chi_square_xxy(BUDDEN, 4.46).chi2)
    assert r.p_value == np.count_nonzero(r.chi2_simulated >= r.chi2_observed) / 50


@pytest.mark.parametrize("seed", range(5))
def test_bootstrap_single_iteration(seed):
    r = bootstrap_constant_beta(BUDDEN, BootstrapConfig(beta0=4.46, epsilon=0.05, iterations=1, master_seed=seed))
    assert r.p_value in (0.0, 1.0)


def test_bootstrap_refit_lengths_flag():
    base = dict(beta0=4.46, epsilon=0.05, iterations=100, master_seed=3)
    nominal = bootstrap_constant_beta(BUDDEN, BootstrapConfig(**base))
    perturbed = bootstrap_constant_beta(BUDDEN, BootstrapConfig(**base, refit_lengths="perturbed"))
    assert not np.array_equal(nominal.beta_simulated, perturbed.beta_simulated)
    # zero width makes the two readings coincide
    z = dict(base, epsilon=0.0)
    a = bootstrap_constant_beta(BUDDEN, BootstrapConfig(**z))
    b = bootstrap_constant_beta(BUDDEN, BootstrapConfig(**z, refit_lengths="perturbed"))
    assert np.array_equal(a.chi2_simulated, b.chi2_simulated)


def _synthetic_family(beta0, seed):
    rng = iteration_stream(seed, 10**6)
    return [
        XxyObservation(o.sx, o.sy, o.N, simulate_tosses(xxy_pxx(o.sx, o.sy, beta0), o.N, rng))
        for o in BUDDEN
    ]


def test_null_mean_is_m_minus_one():
    cfg = BootstrapConfig(beta0=4.46, epsilon=0.0, iterations=999, master_seed=77)
    r = bootstrap_constant_beta(BUDDEN, cfg)
    m = len(BUDDEN)
    assert abs(r.chi2_simulated.mean() - (m - 1)) <= 0.15 * (m - 1)


def test_null_p_values_roughly_uniform():
    ps = []
    for seed in range(40):
        obs = _synthetic_family(4.46, seed)
        beta0 = fit_beta_global(obs).beta_hat
        cfg = BootstrapConfig(beta0=beta0, epsilon=0.0, iterations=199, master_seed=seed)
        ps.append(bootstrap_constant_beta(obs, cfg).p_value)
    ps = np.array(ps)
    assert 0.35 <= ps.mean() <= 0.65
    # not piled up at either end
    assert np.count_nonzero(ps < 0.1) <= 10 and np.count_nonzero(ps > 0.9) <= 10
