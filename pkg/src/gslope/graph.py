"""Graphs, incidence/Laplacian operators and Laplacian pseudo-inverse solves.

Vertices are 0-based integers ``0..n-1``. Every edge is stored with the
canonical orientation ``(u, v)`` with ``u < v``; row ``e`` of the incidence
matrix ``D^T`` holds ``+1`` at ``u`` and ``-1`` at ``v``, so that
``(D^T x)_e = x_u - x_v``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph


class GraphError(ValueError):
    """Invalid graph construction."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach its tolerance."""


@dataclass(frozen=True)
class ComponentLabeling:
    labels: np.ndarray
    count: int
    sizes: np.ndarray

    @property
    def connected(self) -> bool:
        return self.count == 1


@dataclass(frozen=True)
class LaplacianSolveConfig:
    """Stopping rule for conjugate-gradient Laplacian solves.

    ``max_iterations=None`` means ``10 * n``.
    """

    tolerance: float = 1e-10
    max_iterations: int | None = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


class Graph:
    """Immutable undirected simple graph with canonically oriented edges.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : array_like of shape (p, 2)
        Edge endpoints. Orientation is normalized to ``(min, max)`` and
        duplicates are dropped, keeping the first occurrence.
    """

    def __init__(self, n, edges):
        n = int(n)
        if n < 1:
            raise GraphError("a graph needs at least one vertex")
        arr = np.asarray(edges, dtype=np.int64)
        if arr.size == 0:
            raise GraphError("empty edge list")
        arr = arr.reshape(-1, 2)
        if arr.min() < 0 or arr.max() >= n:
            bad = arr[((arr < 0) | (arr >= n)).any(axis=1)][0]
            raise GraphError(f"edge {tuple(bad)} has an endpoint outside [0, {n})")
        if (arr[:, 0] == arr[:, 1]).any():
            bad = arr[arr[:, 0] == arr[:, 1]][0]
            raise GraphError(f"self-loop at vertex {bad[0]}")
        canon = np.sort(arr, axis=1)
        _, first = np.unique(canon, axis=0, return_index=True)
        canon = canon[np.sort(first)]
        canon.setflags(write=False)
        self._n = n
        self._edges = canon

    @property
    def n(self) -> int:
        return self._n

    @property
    def p(self) -> int:
        return len(self._edges)

    @property
    def edges(self) -> np.ndarray:
        """Read-only ``(p, 2)`` array of ``(u, v)`` pairs with ``u < v``."""
        return self._edges

    def __repr__(self):
        return f"Graph(n={self.n}, p={self.p})"

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self._edges.tobytes()))

    @cached_property
    def incidence_t(self) -> sp.csr_matrix:
        """Sparse ``p x n`` matrix ``D^T``."""
        p = self.p
        rows = np.repeat(np.arange(p), 2)
        cols = self._edges.ravel()
        vals = np.tile([1.0, -1.0], p)
        return sp.csr_matrix((vals, (rows, cols)), shape=(p, self.n))

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """Sparse ``n x p`` matrix ``D``."""
        return self.incidence_t.T.tocsr()

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        return (self.incidence @ self.incidence_t).tocsr()

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self._edges.ravel(), minlength=self.n)

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, ...]:
        """Per-vertex sorted neighbor arrays."""
        adj = sp.csr_matrix(
            (np.ones(2 * self.p), (self._edges.ravel(), self._edges[:, ::-1].ravel())),
            shape=(self.n, self.n),
        )
        return tuple(adj.indices[adj.indptr[i]:adj.indptr[i + 1]] for i in range(self.n))

    @cached_property
    def components(self) -> ComponentLabeling:
        return connected_components(self)

    @cached_property
    def lambda_max_bound(self) -> float:
        return _spectral_norm_sq(self)


def build_graph(n, edge_list) -> Graph:
    return Graph(n, edge_list)


def _check_length(x, size, what):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != size:
        raise ValueError(f"{what} has length {x.shape[0]}, expected {size}")
    return x


def incidence_t_apply(g: Graph, x) -> np.ndarray:
    """Edge differences ``D^T x``."""
    return g.incidence_t @ _check_length(x, g.n, "vertex signal")


def incidence_apply(g: Graph, theta) -> np.ndarray:
    """Adjoint map ``D theta`` from edges to vertices."""
    return g.incidence @ _check_length(theta, g.p, "edge vector")


def laplacian_apply(g: Graph, x) -> np.ndarray:
    return g.laplacian @ _check_length(x, g.n, "vertex signal")


def connected_components(g: Graph) -> ComponentLabeling:
    count, labels = csgraph.connected_components(g.laplacian, directed=False)
    return ComponentLabeling(labels=labels, count=int(count),
                             sizes=np.bincount(labels, minlength=count))


def _component_mean(labels, sizes, x):
    if len(sizes) == 1:
        return np.broadcast_to(x.mean(axis=0), x.shape).copy()
    if x.ndim == 1:
        return (np.bincount(labels, weights=x, minlength=len(sizes)) / sizes)[labels]
    indicator = sp.csr_matrix((np.ones(len(labels)), (labels, np.arange(len(labels)))),
                              shape=(len(sizes), len(labels)))
    return ((indicator @ x) / sizes[:, None])[labels]


def project_kernel(g: Graph, x) -> np.ndarray:
    """Orthogonal projection onto ``ker(D^T)``: per-component averaging.

    Accepts a vector of length ``n`` or an ``(n, m)`` block of columns.
    """
    x = _check_length(x, g.n, "vertex signal")
    comp = g.components
    return _component_mean(comp.labels, comp.sizes, x)


def laplacian_pinv_solve(g: Graph, b, cfg: LaplacianSolveConfig | None = None) -> np.ndarray:
    """Compute ``L^+ b`` by conjugate gradient on the range of ``L``.

    The kernel part of ``b`` is discarded first, so the system
    ``L x = (I - P) b`` is consistent; the iterates are re-projected every
    step to keep them orthogonal to ``ker(L)``. ``b`` may be a matrix, in
    which case each column is solved independently.

    Raises
    ------
    ConvergenceError
        If some column has not reached a relative residual of
        ``cfg.tolerance`` after ``cfg.max_iterations`` steps.
    """
    cfg = cfg or LaplacianSolveConfig()
    b = _check_length(b, g.n, "right-hand side")
    vector = b.ndim == 1
    B = b[:, None] if vector else b
    comp = g.components
    labels, sizes = comp.labels, comp.sizes

    def deflate(z):
        return z - _component_mean(labels, sizes, z)

    L = g.laplacian
    rhs = deflate(B)
    bnorm = np.linalg.norm(rhs, axis=0)
    target = cfg.tolerance * bnorm
    X = np.zeros_like(rhs)
    R = rhs.copy()
    P = R.copy()
    rs = np.einsum("ij,ij->j", R, R)
    active = np.sqrt(rs) > target
    max_iter = cfg.max_iterations or 10 * g.n
    it = 0
    while active.any():
        if it >= max_iter:
            worst = float(np.max(np.sqrt(rs[active]) / bnorm[active]))
            raise ConvergenceError(
                f"Laplacian CG stalled after {it} iterations "
                f"(relative residual {worst:.3e} > {cfg.tolerance:.1e})")
        Pa = P[:, active]
        LP = deflate(L @ Pa)
        curv = np.einsum("ij,ij->j", Pa, LP)
        alpha = rs[active] / curv
        X[:, active] += alpha * Pa
        R[:, active] -= alpha * LP
        rs_new = np.einsum("ij,ij->j", R[:, active], R[:, active])
        P[:, active] = R[:, active] + (rs_new / rs[active]) * Pa
        rs[active] = rs_new
        active = np.sqrt(rs) > target
        it += 1
    X = deflate(X)
    return X[:, 0] if vector else X


def rho(g: Graph, cfg: LaplacianSolveConfig | None = None, *,
        sample: int | None = None, rng=None) -> float:
    """Largest column norm of ``(D^T)^+``, i.e. ``max_e ||L^+ (e_u - e_v)||``.

    With ``sample`` set, only that many randomly chosen edges are solved and
    the result is a lower bound on the exact value.
    """
    edges = g.edges
    if sample is not None and sample < g.p:
        rng = np.random.default_rng(rng)
        edges = edges[np.sort(rng.choice(g.p, size=sample, replace=False))]
    best = 0.0
    # blocks bound the memory of the batched solve on large graphs
    block = max(1, min(len(edges), 2_000_000 // max(g.n, 1)))
    for start in range(0, len(edges), block):
        chunk = edges[start:start + block]
        rhs = np.zeros((g.n, len(chunk)))
        cols = np.arange(len(chunk))
        rhs[chunk[:, 0], cols] = 1.0
        rhs[chunk[:, 1], cols] = -1.0
        sol = laplacian_pinv_solve(g, rhs, cfg)
        best = max(best, float(np.linalg.norm(sol, axis=0).max()))
    return best


def spectral_norm_sq(g: Graph) -> float:
    """Largest Laplacian eigenvalue ``||D||^2``, rounded up slightly.

    Uses a dense eigensolver on small graphs and Lanczos otherwise. The
    result never exceeds the Gershgorin bound ``2 * max_degree``, which is
    also the fallback if Lanczos fails. Cached per graph.
    """
    return g.lambda_max_bound


def _spectral_norm_sq(g):
    bound = 2.0 * float(g.degrees.max())
    try:
        if g.n <= 500:
            top = float(np.linalg.eigvalsh(g.laplacian.toarray())[-1])
        else:
            from scipy.sparse.linalg import eigsh
            top = float(eigsh(g.laplacian, k=1, which="LA", tol=1e-8,
                              return_eigenvectors=False)[0])
    except Exception:
        return bound
    return min(top * (1.0 + 1e-8), bound)


def gen_path(n: int) -> Graph:
    if n < 2:
        raise GraphError("a path needs at least two vertices")
    idx = np.arange(n - 1)
    return Graph(n, np.column_stack([idx, idx + 1]))


def gen_complete(n: int) -> Graph:
    u, v = np.triu_indices(n, k=1)
    return Graph(n, np.column_stack([u, v]))


def gen_caveman(l: int, k: int, q: float, rng=None, max_attempts: int = 100) -> Graph:
    """Relaxed caveman graph: ``l`` cliques of size ``k`` with rewiring.

    Each intra-clique edge is, with probability ``q``, rewired by moving one
    of its endpoints (chosen uniformly) to a uniform vertex of another
    clique. Duplicate edges are dropped. Realizations are drawn until one is
    connected.
    """
    if l < 1 or k < 2:
        raise GraphError("need l >= 1 cliques of size k >= 2")
    if not 0.0 <= q <= 1.0:
        raise GraphError("rewiring probability must lie in [0, 1]")
    rng = np.random.default_rng(rng)
    n = l * k
    iu, iv = np.triu_indices(k, k=1)
    base = np.concatenate([np.column_stack([iu, iv]) + c * k for c in range(l)])
    for _ in range(max_attempts):
        edges = base.copy()
        rewired = np.flatnonzero(rng.random(len(edges)) < q) if l > 1 else ()
        for e in rewired:
            keep = edges[e, rng.integers(2)]
            clique = keep // k
            # uniform vertex outside the clique of the kept endpoint
            target = rng.integers(n - k)
            if target >= clique * k:
                target += k
            edges[e] = (keep, target)
        g = Graph(n, edges)
        if g.components.connected:
            return g
    raise GraphError(f"no connected caveman realization in {max_attempts} attempts")
