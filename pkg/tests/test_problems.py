import numpy as np
import pytest
from numpy.polynomial import legendre as npleg

from models.problem import (
    GRFNoiseSpec, PolyRegressionSpec, QuadraticToySpec, problem_spec_from_dict, problem_spec_to_dict,
)
from services.problems import (
    PolyRegressionProblem, build_problem, grf_eval, legendre_basis, mean_gradient, minimizer,
    simpson_rule, strong_convexity_probe, subsampled_grad, truth_function,
)
from utils.errors import ConfigError, DomainError


def _noiseless(truth="one", alpha=0.0, size=9):
    return PolyRegressionProblem(PolyRegressionSpec(basis_size=size, alpha=alpha, truth=truth,
                                                    noise=GRFNoiseSpec(modes=0)))


# ============================================================================
# BASIS AND NOISE
# ============================================================================

def test_legendre_endpoint_and_origin_values():
    np.testing.assert_allclose(legendre_basis(1.0, 9), np.ones(9))
    np.testing.assert_allclose(legendre_basis(-1.0, 9), (-1.0) ** np.arange(9))
    at_zero = legendre_basis(0.0, 5)
    np.testing.assert_allclose(at_zero, [1.0, 0.0, -0.5, 0.0, 0.375], atol=1e-15)


def test_legendre_matches_numpy_and_is_orthogonal():
    x = np.linspace(-1.0, 1.0, 17)
    basis = legendre_basis(x, 9)
    for k in range(9):
        np.testing.assert_allclose(basis[:, k], npleg.legval(x, np.eye(9)[k]), atol=1e-13)

    nodes, weights = npleg.leggauss(20)
    gram = np.einsum("n,ni,nj->ij", weights, legendre_basis(nodes, 9), legendre_basis(nodes, 9))
    np.testing.assert_allclose(gram, np.diag(2.0 / (2 * np.arange(9) + 1)), atol=1e-13)


def test_legendre_rejects_points_outside_the_interval():
    with pytest.raises(DomainError):
        legendre_basis(1.5, 3)
    with pytest.raises(DomainError):
        legendre_basis(0.0, 0)


def test_grf_first_mode():
    amps = (1.0,) + (0.0,) * 199
    noise = GRFNoiseSpec(amplitudes=amps)
    assert grf_eval(noise, 0.75) == pytest.approx(10.0 / (1000.0 + np.pi ** 1.5), rel=1e-12)
    assert grf_eval(noise, 0.75) == pytest.approx(9.9446e-3, rel=1e-4)
    assert grf_eval(noise, 0.5) == pytest.approx(0.0, abs=1e-15)


def test_grf_noise_is_seeded():
    np.testing.assert_array_equal(GRFNoiseSpec(seed=3).realize(), GRFNoiseSpec(seed=3).realize())
    assert not np.array_equal(GRFNoiseSpec(seed=3).realize(), GRFNoiseSpec(seed=4).realize())
    np.testing.assert_array_equal(grf_eval(GRFNoiseSpec(modes=0), np.linspace(-1, 1, 5)), np.zeros(5))


def test_noise_amplitudes_must_match_modes():
    with pytest.raises(DomainError):
        GRFNoiseSpec(modes=3, amplitudes=(1.0, 2.0))


def test_truth_catalogue():
    x = np.array([-1.0, 0.0, 0.5])
    np.testing.assert_allclose(truth_function("sin_pi")(x), np.sin(np.pi * x))
    np.testing.assert_allclose(truth_function("legendre_2")(x), 0.5 * (3 * x ** 2 - 1))
    with pytest.raises(DomainError):
        truth_function("cosine")


def test_simpson_weights_are_an_expectation():
    nodes, weights = simpson_rule(8)
    assert weights.sum() == pytest.approx(1.0)
    assert weights @ nodes ** 2 == pytest.approx(1.0 / 3.0)
    with pytest.raises(DomainError):
        simpson_rule(7)


# ============================================================================
# GRADIENTS
# ============================================================================

def test_toy_gradient_and_mean_field(toy):
    assert subsampled_grad(toy, np.array([0.5]), 0.5) == pytest.approx([0.25])
    theta = np.array([[0.0], [1.0], [1.0 / 3.0]])
    np.testing.assert_allclose(mean_gradient(toy, theta)[:, 0], theta[:, 0] - 1.0 / 3.0, atol=1e-14)
    assert minimizer(toy) == pytest.approx([1.0 / 3.0], abs=1e-14)
    assert toy.lipschitz_constant() == 1.0
    assert toy.gradient_bound() == pytest.approx(1.0)


def test_toy_full_value(toy):
    theta = 0.7
    expected = 0.5 * (theta ** 2 - 2 * theta / 3 + 1 / 5)
    assert toy.full_value(np.array([theta])) == pytest.approx(expected, rel=1e-9)


def test_noiseless_constant_truth_gradient_at_zero():
    problem = _noiseless()
    y = 0.3
    np.testing.assert_allclose(subsampled_grad(problem, np.zeros(9), y), -legendre_basis(y, 9), atol=1e-14)


@pytest.mark.parametrize("name", ["toy", "poly"])
def test_gradient_matches_finite_differences(name, request):
    problem = request.getfixturevalue(name)
    K, step = problem.dimension, 1e-6
    draws = np.random.default_rng(2718)
    for _ in range(100):
        theta = draws.standard_normal(K)
        y = draws.uniform(problem.lo, problem.hi)
        fd = np.array([
            (problem.value(theta + step * e, y) - problem.value(theta - step * e, y)) / (2 * step)
            for e in np.eye(K)
        ])
        np.testing.assert_allclose(subsampled_grad(problem, theta, y), fd, rtol=1e-6, atol=1e-7)


@pytest.mark.parametrize("name", ["toy", "poly"])
def test_mean_gradient_is_the_quadrature_average(name, request):
    problem = request.getfixturevalue(name)
    nodes, weights = problem.quadrature
    draws = np.random.default_rng(31)
    for _ in range(10):
        theta = 0.5 * draws.standard_normal(problem.dimension)
        averaged = weights @ subsampled_grad(problem, theta, nodes)
        np.testing.assert_allclose(mean_gradient(problem, theta), averaged, rtol=0, atol=1e-12)


def test_affine_form_reproduces_the_gradient(poly, rng):
    theta = rng.standard_normal((4, 9))
    y = rng.uniform(-1.0, 1.0, 4)
    A, b = poly.affine_gradient(y)
    np.testing.assert_allclose(np.einsum("nij,nj->ni", A, theta) - b, poly.gradient(theta, y), atol=1e-12)


def test_mean_gradient_vanishes_at_minimizer(poly):
    theta_star = minimizer(poly)
    assert np.linalg.norm(mean_gradient(poly, theta_star)) < 1e-10


def test_minimizer_recovers_basis_truths():
    np.testing.assert_allclose(minimizer(_noiseless("one")), np.eye(9)[0], atol=1e-9)
    np.testing.assert_allclose(minimizer(_noiseless("legendre_1")), np.eye(9)[1], atol=1e-9)


def test_heavy_regularisation_shrinks_the_minimizer():
    heavy = PolyRegressionProblem(PolyRegressionSpec(alpha=1e6, noise=GRFNoiseSpec(seed=3)))
    assert np.linalg.norm(minimizer(heavy)) < 1e-5


def test_fitted_accepts_an_ensemble(poly, rng):
    theta = rng.standard_normal((3, 9))
    x = np.linspace(-1.0, 1.0, 5)
    fitted = poly.fitted(theta, x)
    assert fitted.shape == (5, 3)
    np.testing.assert_allclose(fitted[:, 1], poly.fitted(theta[1], x))


def test_wrong_parameter_dimension(poly):
    with pytest.raises(DomainError):
        poly.gradient(np.zeros(3), 0.0)
    with pytest.raises(DomainError):
        poly.gradient(np.zeros(9), 2.0)


def test_data_frame_columns(poly):
    frame = poly.data_frame(points=11)
    assert list(frame.columns) == ["x", "truth", "data_g"]
    assert len(frame) == 11


# ============================================================================
# STRONG CONVEXITY
# ============================================================================

def test_strong_convexity_probe(toy, poly):
    assert strong_convexity_probe(toy, 10_000, np.random.default_rng(0)) >= 1.0 - 1e-9
    assert strong_convexity_probe(poly, 10_000, np.random.default_rng(0)) >= poly.alpha - 1e-9
    with pytest.raises(DomainError):
        strong_convexity_probe(toy, 0, np.random.default_rng(0))


# ============================================================================
# CONFIG BLOCKS
# ============================================================================

def test_problem_blocks():
    assert isinstance(problem_spec_from_dict({"kind": "toy"}), QuadraticToySpec)
    spec = problem_spec_from_dict({"kind": "poly_regression", "alpha": 1e-3, "noise": {"seed": 5, "modes": 10}})
    assert spec.alpha == 1e-3 and spec.noise.modes == 10
    assert problem_spec_from_dict(problem_spec_to_dict(spec)) == spec
    assert build_problem(QuadraticToySpec()).dimension == 1
    assert isinstance(build_problem(spec), PolyRegressionProblem)


@pytest.mark.parametrize("block", [
    {"alpha": 1.0},
    {"kind": "toy", "alpha": 1.0},
    {"kind": "poly_regression", "lambda": 1.0},
    {"kind": "poly_regression", "noise": {"variance": 1.0}},
    {"kind": "poly_regression", "alpha": -1.0},
    {"kind": "poly_regression", "quadrature_intervals": 11},
])
def test_bad_problem_blocks(block):
    with pytest.raises(ConfigError):
        problem_spec_from_dict(block)
