"""Sorted-l1 (Slope) norm: evaluation, dual norm, prox and dual-ball projection."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


class WeightsError(ValueError):
    """Weights violating the ordered-l1 norm conditions."""


class OrderedWeights:
    """Non-increasing, nonnegative weights ``lambda_1 >= ... >= lambda_p >= 0``.

    ``lambda_1 > 0`` is required so that the weighted sorted-l1 sum is a norm.
    """

    __slots__ = ("_lambdas",)

    def __init__(self, lambdas):
        lam = np.array(lambdas, dtype=float).ravel()
        if lam.size == 0:
            raise WeightsError("weights must be non-empty")
        if not np.all(np.isfinite(lam)):
            raise WeightsError("weights must be finite")
        if lam[-1] < 0:
            raise WeightsError("weights must be nonnegative")
        if np.any(np.diff(lam) > 0):
            j = int(np.flatnonzero(np.diff(lam) > 0)[0])
            raise WeightsError(
                f"weights must be non-increasing (lambda[{j}]={lam[j]!r} < "
                f"lambda[{j + 1}]={lam[j + 1]!r})")
        if not lam[0] > 0:
            raise WeightsError("largest weight must be positive")
        lam.setflags(write=False)
        self._lambdas = lam

    @classmethod
    def constant(cls, value, p) -> "OrderedWeights":
        return cls(np.full(p, float(value)))

    @property
    def lambdas(self) -> np.ndarray:
        return self._lambdas

    def __len__(self):
        return len(self._lambdas)

    def __array__(self, dtype=None, copy=None):
        return self._lambdas if dtype is None else self._lambdas.astype(dtype)

    def __mul__(self, factor) -> "OrderedWeights":
        return OrderedWeights(self._lambdas * float(factor))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, OrderedWeights):
            return NotImplemented
        return np.array_equal(self._lambdas, other._lambdas)

    def __repr__(self):
        return f"OrderedWeights(p={len(self)}, max={self._lambdas[0]:.4g}, min={self._lambdas[-1]:.4g})"

    @property
    def is_constant(self) -> bool:
        return bool(self._lambdas[0] == self._lambdas[-1])


@dataclass(frozen=True)
class SortPermutation:
    """Descending-amplitude ordering of a vector, with its signs.

    ``order[j]`` is the index of the ``j``-th largest amplitude; ties keep
    ascending index order.
    """

    order: np.ndarray
    signs: np.ndarray

    @classmethod
    def of(cls, x) -> "SortPermutation":
        x = np.asarray(x, dtype=float)
        order = np.argsort(-np.abs(x), kind="stable")
        return cls(order=order, signs=np.sign(x))

    def sorted_abs(self, x) -> np.ndarray:
        return np.abs(np.asarray(x, dtype=float))[self.order]

    def restore(self, z_sorted) -> np.ndarray:
        """Inverse of :meth:`sorted_abs`, putting back order and signs."""
        out = np.empty_like(z_sorted)
        out[self.order] = z_sorted
        return out * self.signs


def _check(w: OrderedWeights, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != len(w):
        raise ValueError(f"vector of shape {x.shape} does not match {len(w)} weights")
    return x


def slope_norm(w: OrderedWeights, theta) -> float:
    theta = _check(w, theta)
    amp = np.sort(np.abs(theta))[::-1]
    return float(np.dot(w.lambdas, amp))


def slope_dual_norm(w: OrderedWeights, v) -> float:
    """Exact dual norm, ``max_k sum_{j<=k} |v|_(j) / sum_{j<=k} lambda_j``."""
    v = _check(w, v)
    amp = np.sort(np.abs(v))[::-1]
    return float(np.max(np.cumsum(amp) / np.cumsum(w.lambdas)))


def slope_dual_norm_bound(w: OrderedWeights, v) -> float:
    """Upper bound ``max_j |v|_(j) / lambda_j`` on the dual norm.

    Infinite when some ``lambda_j = 0`` faces a nonzero amplitude.
    """
    v = _check(w, v)
    amp = np.sort(np.abs(v))[::-1]
    lam = w.lambdas
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = np.where(amp > 0, amp / lam, 0.0)
    return float(np.max(ratio))


@numba.njit(cache=True)
def _pava_nonincreasing_nonneg(y):
    n = y.shape[0]
    sums = np.empty(n)
    counts = np.empty(n)
    ends = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        sums[m] = y[i]
        counts[m] = 1.0
        ends[m] = i
        m += 1
        while m > 1 and sums[m - 2] * counts[m - 1] < sums[m - 1] * counts[m - 2]:
            sums[m - 2] += sums[m - 1]
            counts[m - 2] += counts[m - 1]
            ends[m - 2] = ends[m - 1]
            m -= 1
    out = np.empty(n)
    start = 0
    for b in range(m):
        level = sums[b] / counts[b]
        if level < 0.0:
            level = 0.0
        for i in range(start, ends[b] + 1):
            out[i] = level
        start = ends[b] + 1
    return out


def isotonic_nonneg(y) -> np.ndarray:
    """Projection of ``y`` onto ``{theta_1 >= ... >= theta_p >= 0}``.

    Pool-adjacent-violators for the non-increasing fit, then negative pools
    are clamped to zero (which yields the projection onto the nonnegative
    monotone cone). Linear time.
    """
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("isotonic_nonneg expects a 1-D array")
    if y.size == 0:
        return y.copy()
    return _pava_nonincreasing_nonneg(y)


def prox_slope(w: OrderedWeights, u, t: float = 1.0) -> np.ndarray:
    """Proximal operator ``argmin_z 0.5||u - z||^2 + t * ||z||_lambda``."""
    if not t > 0:
        raise ValueError("step t must be positive")
    u = _check(w, u)
    perm = SortPermutation.of(u)
    z = isotonic_nonneg(perm.sorted_abs(u) - t * w.lambdas)
    return perm.restore(z)


def project_dual_ball(w: OrderedWeights, theta, r: float = 1.0) -> np.ndarray:
    """Euclidean projection onto ``{v : ||v||_lambda^* <= r}``.

    Moreau decomposition: the projection is ``theta - prox_{r ||.||}(theta)``.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    theta = _check(w, theta)
    return theta - prox_slope(w, theta, r)


def capital_lambda(w: OrderedWeights, s: int) -> float:
    """Root of the sum of the ``s`` largest squared weights."""
    s = int(s)
    if not 1 <= s <= len(w):
        raise ValueError(f"s must lie in [1, {len(w)}]")
    return float(np.sqrt(np.sum(w.lambdas[:s] ** 2)))
