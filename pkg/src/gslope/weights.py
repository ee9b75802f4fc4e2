"""Weight schedules for Graph-Slope and Graph-Lasso.

All weights are returned on the ``1/(2n)`` scale of the estimator, i.e. the
``lambda`` that multiplies the sorted-l1 norm next to ``||y - beta||^2/(2n)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, laplacian_pinv_solve, rho
from .ordered_l1 import OrderedWeights, slope_dual_norm, slope_dual_norm_bound

SCHEMES = ("corollary", "practical_gs", "practical_gl", "monte_carlo", "alpha_scaled")


@dataclass(frozen=True)
class NoiseModel:
    """Isotropic Gaussian noise ``N(0, sigma^2 I_n)``."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def sample(self, n, rng, size=None):
        shape = (n,) if size is None else (n, size)
        return self.sigma * rng.standard_normal(shape)


@dataclass(frozen=True)
class WeightScheme:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ValueError(f"unknown weight scheme {self.kind!r}; expected one of {SCHEMES}")


def _monotone(values):
    # guards against last-ulp wiggles of log/sqrt breaking monotonicity
    return np.minimum.accumulate(values)


def _check_sigma(sigma):
    if not sigma > 0:
        raise ValueError("sigma must be positive")


def weights_corollary(g: Graph, sigma: float, rho_value: float | None = None) -> OrderedWeights:
    """``lambda_j = 8 sigma rho(G) sqrt(log(2p/j)) / n``."""
    _check_sigma(sigma)
    r = rho(g) if rho_value is None else rho_value
    j = np.arange(1, g.p + 1)
    return OrderedWeights(_monotone(8.0 * sigma * r * np.sqrt(np.log(2.0 * g.p / j)) / g.n))


def _gs_profile(g, sigma, scale):
    if g.p < 2:
        raise ValueError("the Slope profile needs p >= 2 (otherwise every weight is 0)")
    j = np.arange(1, g.p + 1)
    return OrderedWeights(_monotone(scale * sigma * np.sqrt(2.0 * np.log(g.p / j) / g.n)))


def _gl_level(g, sigma, scale):
    return scale * sigma * math.sqrt(2.0 * math.log(g.p) / g.n)


def weights_practical_gs(g: Graph, sigma: float, rho_value: float | None = None) -> OrderedWeights:
    """``lambda_j = rho sigma sqrt(2 log(p/j) / n)``; the last weight is 0."""
    _check_sigma(sigma)
    return _gs_profile(g, sigma, rho(g) if rho_value is None else rho_value)


def weights_practical_gl(g: Graph, sigma: float, rho_value: float | None = None) -> float:
    """Constant Graph-Lasso level ``rho sigma sqrt(2 log(p) / n)``."""
    _check_sigma(sigma)
    return _gl_level(g, sigma, rho(g) if rho_value is None else rho_value)


def weights_alpha(g: Graph, sigma: float, alpha: float) -> tuple[OrderedWeights, float]:
    """Practical Slope profile and Lasso level with ``rho`` replaced by ``alpha``."""
    _check_sigma(sigma)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return _gs_profile(g, sigma, alpha), _gl_level(g, sigma, alpha)


def alpha_grid(num: int = 100, low: float = 1e-5, high: float = 10 ** 1.5) -> np.ndarray:
    return np.geomspace(low, high, num)


def _edge_noise_projections(g, sigma, size, rng, cfg=None):
    """Columns ``D^T L^+ eps`` for ``size`` noise draws, shape ``(p, size)``."""
    eps = sigma * rng.standard_normal((g.n, size))
    return g.incidence_t @ laplacian_pinv_solve(g, eps, cfg)


def weights_monte_carlo(g: Graph, sigma: float, n_samples: int = 1000, rng=None,
                        level: float | None = None, batch: int = 500) -> OrderedWeights:
    """Empirical-quantile weights.

    For each draw ``eps ~ N(0, sigma^2 I)`` the edge vector
    ``gv = D^T L^+ eps`` is sorted by amplitude; ``n * lambda_j`` is set to the
    ``level``-quantile (default ``1 - 1/(3p)``) of ``2 |gv|_(j)`` across draws.
    The quantile is the order statistic of rank ``ceil(level * N)``. A running
    max from the right removes sampling jitter in the monotonicity.
    """
    _check_sigma(sigma)
    if n_samples < 100:
        raise ValueError("monte-carlo weights need at least 100 samples")
    p = g.p
    level = 1.0 - 1.0 / (3.0 * p) if level is None else float(level)
    if not 0.0 < level < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    if n_samples < 3 * p:
        warnings.warn(f"{n_samples} samples is coarse for the {level:.4f} quantile "
                      f"(recommend at least {3 * p})", RuntimeWarning, stacklevel=2)
    rng = np.random.default_rng(rng)
    sorted_amps = np.empty((n_samples, p))
    for start in range(0, n_samples, batch):
        stop = min(start + batch, n_samples)
        proj = _edge_noise_projections(g, sigma, stop - start, rng)
        sorted_amps[start:stop] = -np.sort(-np.abs(proj.T), axis=1)
    rank = min(max(math.ceil(level * n_samples), 1), n_samples)
    quant = np.partition(2.0 * sorted_amps, rank - 1, axis=0)[rank - 1]
    quant = np.maximum.accumulate(quant[::-1])[::-1]
    return OrderedWeights(quant / g.n)


def event_frequency(g: Graph, weights: OrderedWeights, sigma: float, trials: int = 500,
                    rng=None, use_bound: bool = False, batch: int = 500) -> float:
    """Fraction of noise draws with ``(1/n) ||D^+ eps||^*_lambda <= 1/2``.

    ``use_bound`` swaps the exact dual norm for ``max_j |g|_(j) / lambda_j``,
    which makes the event harder to satisfy.
    """
    _check_sigma(sigma)
    if len(weights) != g.p:
        raise ValueError(f"{len(weights)} weights for {g.p} edges")
    rng = np.random.default_rng(rng)
    norm = slope_dual_norm_bound if use_bound else slope_dual_norm
    hits = 0
    for start in range(0, trials, batch):
        size = min(batch, trials - start)
        proj = _edge_noise_projections(g, sigma, size, rng)
        hits += sum(norm(weights, proj[:, i]) / g.n <= 0.5 for i in range(size))
    return hits / trials


def compute_weights(g: Graph, scheme: WeightScheme | str, sigma: float, *,
                    rho_value: float | None = None, rng=None) -> OrderedWeights:
    """Dispatch on a scheme name; Lasso schemes come back as constant weights."""
    if isinstance(scheme, str):
        scheme = WeightScheme(scheme)
    params = scheme.params
    if scheme.kind == "corollary":
        return weights_corollary(g, sigma, rho_value)
    if scheme.kind == "practical_gs":
        return weights_practical_gs(g, sigma, rho_value)
    if scheme.kind == "practical_gl":
        return OrderedWeights.constant(weights_practical_gl(g, sigma, rho_value), g.p)
    if scheme.kind == "monte_carlo":
        return weights_monte_carlo(g, sigma, params.get("n_samples", 1000), rng,
                                   params.get("level"))
    if "alpha" not in params:
        raise ValueError("alpha_scaled weights need an 'alpha' parameter")
    slope, lasso = weights_alpha(g, sigma, params["alpha"])
    if params.get("estimator", "slope") == "lasso":
        return OrderedWeights.constant(lasso, g.p)
    return slope
