import numpy as np
import pytest
from scipy import integrate

from models.constants import MuFamily
from services.schedules import (
    ConstantDilation, PiecewiseDilation, SmoothDilation, beta_piecewise, beta_smooth,
    dilation_from_dict, mu_admissibility,
)
from utils.errors import ConfigError, DomainError, HorizonError

POWER_LOG = {"c": 100.0, "p": 0.3}


def _power_log_integral(t):
    return integrate.quad(lambda s: 100.0 * np.log(s + 2.0) ** 0.3, 0.0, t, epsabs=0.0, epsrel=1e-13)[0]


# ============================================================================
# PIECEWISE
# ============================================================================

def test_unit_learning_rates_give_the_identity_clock():
    t = np.linspace(0.0, 10.0, 41)
    np.testing.assert_allclose(beta_piecewise(t, [1.0] * 10), t)


def test_piecewise_continuity_corrected_value():
    assert beta_piecewise(1.25, [1.0, 0.5, 0.25]) == pytest.approx(1.5)


def test_piecewise_hits_n_at_switch_times():
    dilation = PiecewiseDilation.harmonic(10)
    np.testing.assert_allclose(dilation.beta(dilation.switch_times), np.arange(11), atol=1e-12)


def test_piecewise_with_constant_rate_matches_constant_dilation():
    eps = 0.1
    piecewise, constant = PiecewiseDilation([eps] * 20), ConstantDilation(eps)
    times = piecewise.switch_times
    np.testing.assert_allclose(piecewise.beta(times), constant.beta(times), atol=1e-9)


def test_piecewise_beyond_horizon_is_a_range_error():
    with pytest.raises(HorizonError):
        beta_piecewise(3.5, [1.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        beta_piecewise(-0.1, [1.0])


def test_piecewise_rejects_increasing_or_nonpositive_rates():
    with pytest.raises(DomainError):
        PiecewiseDilation([0.5, 1.0])
    with pytest.raises(DomainError):
        PiecewiseDilation([1.0, 0.0])


def test_learning_rates():
    assert ConstantDilation(0.1).learning_rate(3.0) == pytest.approx(0.1)
    harmonic = PiecewiseDilation.harmonic(5, c=2.0)
    assert harmonic.learning_rate(0.0) == pytest.approx(2.0)
    assert harmonic.learning_rate(2.5) == pytest.approx(1.0)
    smooth = SmoothDilation(MuFamily.POWER_LOG, POWER_LOG, horizon=10.0, step=0.01)
    assert smooth.learning_rate(5.0) == pytest.approx(1.0 / (100.0 * np.log(7.0) ** 0.3))


# ============================================================================
# SMOOTH
# ============================================================================

def test_unit_speed_gives_identity():
    t = np.linspace(0.0, 7.0, 15)
    np.testing.assert_allclose(beta_smooth(t, MuFamily.AFFINE, {"a": 0.0, "b": 1.0}), t, atol=1e-12)


def test_trapezoid_is_exact_for_affine_speed():
    assert beta_smooth(2.0, MuFamily.AFFINE, {"a": 1.0, "b": 1.0}, step=0.1) == pytest.approx(4.0, rel=1e-12)
    assert beta_smooth(1.234, MuFamily.AFFINE, {"a": 1.0, "b": 1.0}, step=0.1) == pytest.approx(
        1.234 ** 2 / 2 + 1.234, rel=1e-12)


def test_power_log_matches_adaptive_quadrature():
    assert beta_smooth(10.0, MuFamily.POWER_LOG, POWER_LOG, step=1e-2) == pytest.approx(
        _power_log_integral(10.0), rel=1e-6)


def test_halving_the_step_shrinks_the_error_fourfold():
    oracle = _power_log_integral(10.0)
    coarse = abs(beta_smooth(10.0, MuFamily.POWER_LOG, POWER_LOG, step=0.1) - oracle)
    fine = abs(beta_smooth(10.0, MuFamily.POWER_LOG, POWER_LOG, step=0.05) - oracle)
    assert coarse / fine >= 3.5


def test_nonpositive_speed_is_a_domain_error():
    with pytest.raises(DomainError):
        SmoothDilation(MuFamily.AFFINE, {"a": -1.0, "b": 1.0}, horizon=5.0, step=0.1)


def test_smooth_dilation_is_bounded_by_its_cache():
    dilation = SmoothDilation(MuFamily.POWER_LOG, POWER_LOG, horizon=10.0, step=0.1)
    assert dilation.covers(10.0) and not dilation.covers(10.5)
    with pytest.raises(HorizonError):
        dilation.beta(10.5)


def test_every_dilation_is_strictly_increasing(rng):
    times = np.sort(rng.uniform(0.0, 5.0, 200))
    dilations = [
        ConstantDilation(0.01),
        PiecewiseDilation.harmonic(200, c=1.0),
        SmoothDilation(MuFamily.POWER_LOG, POWER_LOG, horizon=5.0, step=0.05),
        SmoothDilation(MuFamily.AFFINE, {"a": 2.0, "b": 0.5}, horizon=5.0, step=0.05),
    ]
    for dilation in dilations:
        values = dilation.beta(times)
        assert dilation.beta(0.0) == 0.0
        assert np.all(np.diff(values) > 0)


# ============================================================================
# ADMISSIBILITY
# ============================================================================

def test_power_log_is_admissible():
    report = mu_admissibility(MuFamily.POWER_LOG, {"c": 1.0, "p": 0.3}, np.geomspace(1.0, 1e4, 200))
    assert report.admissible()
    tail = mu_admissibility(MuFamily.POWER_LOG, {"c": 1.0, "p": 0.3}, [1e4])
    assert tail.max_tail_ratio == pytest.approx(0.3 / np.log(1e4), rel=1e-3)


def test_linear_speed_fails_the_ratio_condition():
    report = mu_admissibility(MuFamily.AFFINE, {"a": 1.0, "b": 0.0}, np.geomspace(1.0, 1e4, 50))
    assert report.max_tail_ratio == pytest.approx(1.0)
    assert not report.admissible()


def test_constant_speed_does_not_diverge():
    report = mu_admissibility(MuFamily.AFFINE, {"a": 0.0, "b": 3.0}, np.geomspace(1.0, 1e4, 50))
    assert report.max_tail_ratio == 0.0
    assert not report.diverges
    assert not report.admissible()


def test_probe_grid_must_be_positive_and_increasing():
    with pytest.raises(DomainError):
        mu_admissibility(MuFamily.AFFINE, {"a": 1.0, "b": 1.0}, [2.0, 1.0])


# ============================================================================
# CONFIG BLOCKS
# ============================================================================

def test_dilation_blocks():
    assert isinstance(dilation_from_dict({"kind": "constant", "epsilon": 0.1}, 1.0, 0.1), ConstantDilation)
    harmonic = dilation_from_dict({"kind": "piecewise", "count": 4, "harmonic_c": 0.5}, 1.0, 0.1)
    np.testing.assert_allclose(harmonic.etas, [0.5, 0.25, 0.5 / 3, 0.125])
    smooth = dilation_from_dict({"kind": "smooth", "family": "power_log", "params": POWER_LOG}, 20.0, 0.1)
    assert smooth.horizon == 20.0 and smooth.step == 0.1
    assert dilation_from_dict(smooth.to_dict(), 20.0, 0.5).step == 0.1


@pytest.mark.parametrize("block", [
    {"epsilon": 0.1},
    {"kind": "constant", "eps": 0.1},
    {"kind": "piecewise"},
    {"kind": "smooth", "family": "exp", "params": {}},
    {"kind": "smooth", "family": "power_log", "params": {"c": -1.0, "p": 0.3}},
    {"kind": "smooth", "family": "power_log", "params": {"c": 1.0}},
])
def test_bad_dilation_blocks_are_config_errors(block):
    with pytest.raises(ConfigError):
        dilation_from_dict(block, 10.0, 0.1)
