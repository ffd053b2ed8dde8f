"""
Subsampled targets f(theta, y), their gradients and the quadrature-based mean field.

Both built-in problems have gradients affine in theta,
    grad f(theta, y) = A(y) theta - b(y),
so the mean gradient, the minimiser and the implicit midpoint step all reduce to
linear algebra on quadrature averages of A and b.
"""
import logging
import re
from abc import ABC, abstractmethod
from typing import Callable, Tuple, Union

import numpy as np
import pandas as pd

from config.settings import EVAL_POINTS, QUADRATURE_INTERVALS
from models.constants import INDEX_HI, INDEX_LO, ProblemKind
from models.problem import GRFNoiseSpec, PolyRegressionSpec, ProblemSpec, QuadraticToySpec
from utils.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


# ============================================================================
# BASIS, NOISE AND TRUTH CATALOGUE
# ============================================================================

def _check_points(x, lo: float = INDEX_LO, hi: float = INDEX_HI) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < lo) or np.any(x > hi):
        raise DomainError(f"Points must lie in [{lo}, {hi}]")
    return x


def legendre_basis(x: ArrayLike, size: int) -> np.ndarray:
    """P_0(x)..P_{size-1}(x) by Bonnet's recurrence, normalised so P_k(1) = 1.

    Returns shape x.shape + (size,).
    """
    if size < 1:
        raise DomainError(f"Basis size must be >= 1, got {size}")
    x = _check_points(x)
    out = np.empty(x.shape + (size,))
    out[..., 0] = 1.0
    if size > 1:
        out[..., 1] = x
    for k in range(1, size - 1):
        # (k + 1) P_{k+1} = (2k + 1) x P_k - k P_{k-1}
        out[..., k + 1] = ((2 * k + 1) * x * out[..., k] - k * out[..., k - 1]) / (k + 1)
    return out


def grf_eval(noise: GRFNoiseSpec, x: ArrayLike, amplitudes: np.ndarray = None) -> np.ndarray:
    """sum_j c_j sin(2 pi j (x - 0.5)) Xi_j.

    Pass pre-realised amplitudes to skip redrawing them on hot paths.
    """
    x = _check_points(x)
    if noise.modes == 0:
        return np.zeros_like(x)
    xi = noise.realize() if amplitudes is None else amplitudes
    weights = noise.coefficients() * xi
    j = np.arange(1, noise.modes + 1)
    phase = 2.0 * np.pi * (x[..., None] - 0.5) * j
    return np.sin(phase) @ weights


_LEGENDRE_TRUTH = re.compile(r"legendre_(\d+)$")


def truth_function(name: str) -> Callable[[np.ndarray], np.ndarray]:
    """Named truth functions: sin_pi, one, zero, legendre_<k>."""
    if name == "sin_pi":
        return lambda x: np.sin(np.pi * np.asarray(x, dtype=float))
    if name == "one":
        return lambda x: np.ones_like(np.asarray(x, dtype=float))
    if name == "zero":
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    match = _LEGENDRE_TRUTH.match(name)
    if match:
        k = int(match.group(1))
        return lambda x: legendre_basis(x, k + 1)[..., k]
    raise DomainError(f"Unknown truth function '{name}'. Expected sin_pi, one, zero or legendre_<k>")


def simpson_rule(intervals: int, lo: float = INDEX_LO, hi: float = INDEX_HI) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson on [lo, hi], weights normalised to the uniform law."""
    if intervals < 2 or intervals % 2:
        raise DomainError(f"Simpson's rule needs an even interval count, got {intervals}")
    nodes = np.linspace(lo, hi, intervals + 1)
    weights = np.ones(intervals + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    # (h / 3) * w integrates; dividing by (hi - lo) turns it into an expectation
    weights *= 1.0 / (3.0 * intervals)
    return nodes, weights


# ============================================================================
# PROBLEMS
# ============================================================================

class Problem(ABC):
    """Strongly convex subsampled target on the index space S = [lo, hi] with uniform pi."""

    kind: ProblemKind
    lo: float = INDEX_LO
    hi: float = INDEX_HI

    def __init__(self, dimension: int, kappa: float, intervals: int):
        self.dimension = dimension
        self.kappa = kappa
        self._nodes, self._weights = simpson_rule(intervals, self.lo, self.hi)
        A, b = self.affine_gradient(self._nodes)
        self._mean_A = np.einsum("n,nij->ij", self._weights, A)
        self._mean_b = self._weights @ b
        self._node_A = A
        self._node_b = b

    # -- subsampled target --------------------------------------------------

    @abstractmethod
    def value(self, theta: np.ndarray, y: ArrayLike) -> np.ndarray:
        """f(theta, y), broadcasting theta (..., K) against y (...)."""

    @abstractmethod
    def gradient(self, theta: np.ndarray, y: ArrayLike) -> np.ndarray:
        """grad_theta f(theta, y), shape broadcast(theta, y) + (K,)."""

    @abstractmethod
    def affine_gradient(self, y: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        """(A(y), b(y)) with grad f(theta, y) = A(y) theta - b(y); shapes y.shape + (K, K) and y.shape + (K,)."""

    # -- mean field -----------------------------------------------------------

    @property
    def quadrature(self) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes and pi-weights (summing to 1) of the registered rule over S."""
        return self._nodes, self._weights

    @property
    def mean_affine(self) -> Tuple[np.ndarray, np.ndarray]:
        """Quadrature averages of A and b."""
        return self._mean_A, self._mean_b

    def mean_gradient(self, theta: np.ndarray) -> np.ndarray:
        theta = self.check_theta(theta)
        return theta @ self._mean_A.T - self._mean_b

    def full_value(self, theta: np.ndarray) -> np.ndarray:
        """Phi(theta) = int f(theta, y) pi(dy) by quadrature."""
        theta = self.check_theta(theta)
        vals = self.value(theta[..., None, :], self._nodes)
        return vals @ self._weights

    def minimizer(self) -> np.ndarray:
        try:
            return np.linalg.solve(self._mean_A, self._mean_b)
        except np.linalg.LinAlgError as e:
            logger.error(f"Normal equations of {self.kind.key} are singular")
            raise ArithmeticError(f"Singular normal equations: {e}")

    def lipschitz_constant(self) -> float:
        """max_y of the largest eigenvalue of A(y) over the quadrature nodes."""
        return float(np.max(np.linalg.eigvalsh(self._node_A)))

    def gradient_bound(self) -> float:
        """K_f = max over quadrature nodes of ||grad f(0, y)||."""
        return float(np.max(np.linalg.norm(self._node_b, axis=-1)))

    def contains(self, y: ArrayLike) -> bool:
        y = np.asarray(y)
        return bool(np.all((y >= self.lo) & (y <= self.hi)))

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.ndim == 0 or theta.shape[-1] != self.dimension:
            raise DomainError(f"Expected parameter vectors of dimension {self.dimension}, got shape {theta.shape}")
        return theta


class QuadraticToyProblem(Problem):
    """f(theta, y) = (theta - y^2)^2 / 2; kappa = 1, theta* = E[y^2] = 1/3."""

    kind = ProblemKind.QUADRATIC_TOY

    def __init__(self, spec: QuadraticToySpec = None, intervals: int = QUADRATURE_INTERVALS):
        self.spec = spec or QuadraticToySpec()
        super().__init__(dimension=1, kappa=1.0, intervals=intervals)

    def value(self, theta, y):
        theta = self.check_theta(theta)
        y = _check_points(y, self.lo, self.hi)
        return 0.5 * (theta[..., 0] - y ** 2) ** 2

    def gradient(self, theta, y):
        theta = self.check_theta(theta)
        y = _check_points(y, self.lo, self.hi)
        return theta - (y ** 2)[..., None]

    def affine_gradient(self, y):
        y = _check_points(y, self.lo, self.hi)
        return np.ones(y.shape + (1, 1)), (y ** 2)[..., None]

    def __repr__(self):
        return "QuadraticToyProblem()"


class PolyRegressionProblem(Problem):
    """f(theta, y) = (data_g(y) - <theta, l(y)>)^2 / 2 + alpha |theta|^2 / 2 with Legendre features l."""

    kind = ProblemKind.POLY_REGRESSION

    def __init__(self, spec: PolyRegressionSpec = None):
        self.spec = spec or PolyRegressionSpec()
        if self.spec.alpha == 0:
            logger.warning("alpha = 0: the regression target is no longer uniformly strongly convex")
        self.alpha = float(self.spec.alpha)
        self.size = int(self.spec.basis_size)
        self.truth = truth_function(self.spec.truth)
        self._amplitudes = self.spec.noise.realize()
        self._amplitudes.setflags(write=False)
        super().__init__(dimension=self.size, kappa=self.alpha, intervals=self.spec.quadrature_intervals)
        logger.debug(
            f"Poly regression K={self.size} alpha={self.alpha} truth={self.spec.truth} modes={self.spec.noise.modes}"
        )

    def data_g(self, x: ArrayLike) -> np.ndarray:
        """Observed data: truth plus the realised noise."""
        x = _check_points(x, self.lo, self.hi)
        return self.truth(x) + grf_eval(self.spec.noise, x, self._amplitudes)

    def features(self, x: ArrayLike) -> np.ndarray:
        return legendre_basis(x, self.size)

    def fitted(self, theta: np.ndarray, x: ArrayLike) -> np.ndarray:
        """<theta, l(x)>."""
        theta = self.check_theta(theta)
        return self.features(x) @ theta.T if theta.ndim > 1 else self.features(x) @ theta

    def value(self, theta, y):
        theta = self.check_theta(theta)
        ell = self.features(y)
        resid = self.data_g(y) - np.sum(theta * ell, axis=-1)
        return 0.5 * resid ** 2 + 0.5 * self.alpha * np.sum(theta ** 2, axis=-1)

    def gradient(self, theta, y):
        theta = self.check_theta(theta)
        ell = self.features(y)
        resid = self.data_g(y) - np.sum(theta * ell, axis=-1)
        return -resid[..., None] * ell + self.alpha * theta

    def affine_gradient(self, y):
        ell = self.features(y)
        A = ell[..., :, None] * ell[..., None, :] + self.alpha * np.eye(self.size)
        b = self.data_g(y)[..., None] * ell
        return A, b

    def data_frame(self, points: int = EVAL_POINTS) -> pd.DataFrame:
        """x, truth and observed data on an equispaced grid of S."""
        x = np.linspace(self.lo, self.hi, points)
        return pd.DataFrame({"x": x, "truth": self.truth(x), "data_g": self.data_g(x)})

    def __repr__(self):
        return f"PolyRegressionProblem(K={self.size}, alpha={self.alpha}, truth={self.spec.truth})"


# ============================================================================
# OPERATIONS
# ============================================================================

def build_problem(spec: ProblemSpec) -> Problem:
    if isinstance(spec, PolyRegressionSpec):
        return PolyRegressionProblem(spec)
    return QuadraticToyProblem(spec)


def subsampled_grad(problem: Problem, theta: np.ndarray, y: ArrayLike) -> np.ndarray:
    return problem.gradient(theta, y)


def mean_gradient(problem: Problem, theta: np.ndarray) -> np.ndarray:
    return problem.mean_gradient(theta)


def minimizer(problem: Problem) -> np.ndarray:
    return problem.minimizer()


def strong_convexity_probe(problem: Problem, n_pairs: int, rng: np.random.Generator, scale: float = 1.0) -> float:
    """min over random (x1, x2, y) of <x1 - x2, grad f(x1, y) - grad f(x2, y)> / |x1 - x2|^2."""
    if n_pairs < 1:
        raise DomainError(f"Need at least one pair, got {n_pairs}")
    K = problem.dimension
    x1 = scale * rng.standard_normal((n_pairs, K))
    x2 = scale * rng.standard_normal((n_pairs, K))
    diff = x1 - x2
    coincident = np.linalg.norm(diff, axis=1) == 0
    while np.any(coincident):
        x2[coincident] = scale * rng.standard_normal((int(coincident.sum()), K))
        diff = x1 - x2
        coincident = np.linalg.norm(diff, axis=1) == 0
    y = problem.lo + (problem.hi - problem.lo) * rng.random(n_pairs)

    delta = problem.gradient(x1, y) - problem.gradient(x2, y)
    ratios = np.sum(diff * delta, axis=1) / np.sum(diff * diff, axis=1)
    return float(np.min(ratios))
