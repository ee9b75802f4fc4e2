"""Synthetic signals, detection metrics, the replication protocol and theory diagnostics."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import Graph, project_kernel, rho, spectral_norm_sq
from .ordered_l1 import OrderedWeights, capital_lambda
from .solver import DenoiseProblem, SolverConfig, solve
from .weights import WeightScheme, alpha_grid, compute_weights, weights_alpha

SIGNAL_KINDS = ("edge_subset_projector", "path_piecewise", "infection")


# -- signals -----------------------------------------------------------------

@dataclass(frozen=True)
class SignalSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}; expected one of {SIGNAL_KINDS}")

    def generate(self, g: Graph, rng=None) -> np.ndarray:
        rng = np.random.default_rng(self.seed if rng is None else rng)
        if self.kind == "edge_subset_projector":
            return gen_edge_subset_signal(g, self.params["n0"], self.params.get("c", 8.0), rng)
        if self.kind == "path_piecewise":
            return gen_path_piecewise(g.n, self.params["s"], rng)
        return gen_infection_signal(g, self.params.get("n_sources", 30),
                                    self.params.get("infect_prob", 0.75),
                                    self.params.get("iterations", 8), rng)


def gen_edge_subset_signal(g: Graph, n0: int, c: float = 8.0, rng=None) -> np.ndarray:
    """``c * P_J z`` with ``z ~ N(0, I_n)`` and ``P_J`` the averaging over the
    connected components of the subgraph ``(V, J)``.

    ``J`` is a uniform random subset of ``n0`` edges. Every edge of ``J``
    then carries a zero difference, so at most ``p - n0`` differences are
    nonzero.
    """
    if not 0 <= n0 <= g.p:
        raise ValueError(f"n0 must lie in [0, {g.p}]")
    rng = np.random.default_rng(rng)
    chosen = np.sort(rng.choice(g.p, size=n0, replace=False))
    z = rng.standard_normal(g.n)
    if n0 == 0:
        return c * z
    sub = _subgraph_components(g.n, g.edges[chosen])
    sums = np.bincount(sub, weights=z)
    counts = np.bincount(sub)
    return c * (sums / counts)[sub]


def _subgraph_components(n, edges):
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    adj = csr_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    return connected_components(adj, directed=False)[1]


def gen_path_piecewise(n: int, s: int, rng=None) -> np.ndarray:
    """Piecewise-constant signal on a path with ``s`` jumps of N(0, 1) size."""
    if not 0 <= s <= n - 1:
        raise ValueError(f"s must lie in [0, {n - 1}]")
    rng = np.random.default_rng(rng)
    jumps = np.zeros(n - 1)
    breaks = rng.choice(n - 1, size=s, replace=False)
    amp = rng.standard_normal(s)
    # a zero draw would silently drop a jump
    amp[amp == 0.0] = 1.0
    jumps[breaks] = amp
    return np.concatenate([[0.0], np.cumsum(jumps)])


def gen_infection_signal(g: Graph, n_sources: int = 30, infect_prob: float = 0.75,
                         iterations: int = 8, rng=None) -> np.ndarray:
    """Binary signal from an independent-cascade spread out of random sources."""
    if not 0 <= n_sources <= g.n:
        raise ValueError(f"n_sources must lie in [0, {g.n}]")
    if not 0.0 <= infect_prob <= 1.0:
        raise ValueError("infect_prob must lie in [0, 1]")
    rng = np.random.default_rng(rng)
    infected = np.zeros(g.n, dtype=bool)
    infected[rng.choice(g.n, size=n_sources, replace=False)] = True
    src = np.concatenate([g.edges[:, 0], g.edges[:, 1]])
    dst = np.concatenate([g.edges[:, 1], g.edges[:, 0]])
    for _ in range(iterations):
        # one independent coin per (infected vertex, neighbor) pair
        success = infected[src] & (rng.random(len(src)) < infect_prob)
        infected[dst[success]] = True
    return infected.astype(float)


def add_noise(beta_star, sigma: float, rng=None) -> np.ndarray:
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = np.random.default_rng(rng)
    beta_star = np.asarray(beta_star, dtype=float)
    return beta_star + sigma * rng.standard_normal(beta_star.shape)


# -- metrics -----------------------------------------------------------------

def default_support_tol(diff) -> float:
    return 1e-8 * max(1.0, float(np.max(np.abs(diff), initial=0.0)))


def support(g: Graph, beta, tol: float | None = None) -> np.ndarray:
    """Boolean mask of edges with ``|(D^T beta)_e| > tol``."""
    diff = g.incidence_t @ np.asarray(beta, dtype=float)
    tol = default_support_tol(diff) if tol is None else tol
    return np.abs(diff) > tol


def mse(beta_hat, beta_star) -> float:
    d = np.asarray(beta_hat, dtype=float) - np.asarray(beta_star, dtype=float)
    return float(d @ d) / d.size


def _supports(beta_hat, beta_star, g, tol):
    est_diff = g.incidence_t @ np.asarray(beta_hat, dtype=float)
    tol = default_support_tol(est_diff) if tol is None else tol
    return np.abs(est_diff) > tol, support(g, beta_star, tol)


def fdr(beta_hat, beta_star, g: Graph, tol: float | None = None) -> float:
    """Share of detected edges that carry no true jump (0 if nothing is detected).

    ``tol=None`` uses ``1e-8 * max(1, ||D^T beta_hat||_inf)`` for both supports.
    """
    est, true = _supports(beta_hat, beta_star, g, tol)
    found = est.sum()
    return float((est & ~true).sum() / found) if found else 0.0


def tdr(beta_hat, beta_star, g: Graph, tol: float | None = None) -> float:
    """Share of true jumps that are detected (0 if the truth has none)."""
    est, true = _supports(beta_hat, beta_star, g, tol)
    total = true.sum()
    return float((est & true).sum() / total) if total else 0.0


def certified_support_tol(gap: float) -> float:
    """Threshold separating true zeros from solver noise at duality gap ``gap``.

    The rescaled primal is 1-strongly convex, so ``||beta - beta_opt|| <=
    sqrt(2 gap)`` and every edge difference is off by at most ``2 sqrt(gap)``.
    """
    return 2.0 * math.sqrt(max(gap, 0.0))


# -- protocol ----------------------------------------------------------------

ESTIMATOR_OF = {"practical_gl": "graph_lasso", "corollary": "graph_slope",
                "practical_gs": "graph_slope", "monte_carlo": "graph_slope",
                "alpha_scaled": "graph_slope"}


@dataclass(frozen=True)
class ReportRow:
    scheme: str
    sweep: int
    replicates: int
    mean_mse: float
    mean_fdr: float
    mean_tdr: float
    nonconverged: int


@dataclass
class ExperimentReport:
    sweep_name: str
    rows: list
    config: dict
    seed: int

    def row(self, scheme, sweep) -> ReportRow:
        for r in self.rows:
            if r.scheme == scheme and r.sweep == sweep:
                return r
        raise KeyError((scheme, sweep))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scheme", self.sweep_name, "replicates", "mean_mse",
                         "mean_fdr", "mean_tdr", "nonconverged"])
        for r in self.rows:
            writer.writerow([r.scheme, r.sweep, r.replicates, repr(r.mean_mse),
                             repr(r.mean_fdr), repr(r.mean_tdr), r.nonconverged])
        return buf.getvalue()

    def config_json(self) -> str:
        return json.dumps({"seed": self.seed, "sweep": self.sweep_name, **self.config},
                          indent=2, sort_keys=True, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell_rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


def _run_cell(args):
    g, sigma, signal_kind, c, sweep_value, replicates, seed, cell, weights, cfg, support_tol = args
    totals = {name: np.zeros(3) for name in weights}
    failures = dict.fromkeys(weights, 0)
    for rep in range(replicates):
        rng = _cell_rng(seed, cell, rep)
        if signal_kind == "path_piecewise":
            beta_star = gen_path_piecewise(g.n, sweep_value, rng)
        else:
            beta_star = gen_edge_subset_signal(g, sweep_value, c, rng)
        y = add_noise(beta_star, sigma, rng)
        for name, w in weights.items():
            res = solve(DenoiseProblem(g, y, w), cfg)
            failures[name] += not res.converged
            diff = g.incidence_t @ res.beta_hat
            tol = max(default_support_tol(diff), certified_support_tol(res.gap)) \
                if support_tol is None else support_tol
            totals[name] += (mse(res.beta_hat, beta_star),
                             fdr(res.beta_hat, beta_star, g, tol),
                             tdr(res.beta_hat, beta_star, g, tol))
    return [ReportRow(name, int(sweep_value), replicates,
                      *(float(v) for v in totals[name] / replicates), failures[name])
            for name in weights]


def run_protocol(g: Graph, sigma: float, schemes=("practical_gl", "practical_gs"),
                 sweep=None, replicates: int = 100, seed: int = 0, *,
                 signal: str = "edge_subset_projector", c: float = 8.0,
                 solver_cfg: SolverConfig | None = None, support_tol: float | None = None,
                 mc_samples: int = 1000, workers: int = 1) -> ExperimentReport:
    """Monte-Carlo comparison of weight schemes over a sparsity sweep.

    For each sweep value and replicate one ground truth and one noisy
    observation are drawn and shared by every scheme (paired comparison).
    ``signal="edge_subset_projector"`` sweeps the number ``n0`` of forced-flat
    edges; ``signal="path_piecewise"`` sweeps the jump count ``s`` on a path.
    Replicate ``r`` of cell ``i`` draws from ``SeedSequence([seed, i, r])``,
    so the report depends on ``seed`` only.

    The default solver settings are a gap of ``1e-4`` with adaptive restart.
    When ``support_tol`` is None, supports are thresholded at
    ``max(1e-8 * max(1, ||D^T beta_hat||_inf), 2 sqrt(gap))``.
    """
    if signal not in ("edge_subset_projector", "path_piecewise"):
        raise ValueError(f"protocol signal must be edge_subset_projector or path_piecewise, got {signal!r}")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    cfg = solver_cfg or SolverConfig(gap_tolerance=1e-4, record_history=False,
                                     adaptive_restart=True)
    sweep_name = "s" if signal == "path_piecewise" else "n0"
    if sweep is None:
        sweep = range(g.n) if signal == "path_piecewise" else range(g.p + 1)
    sweep = [int(v) for v in sweep]

    rho_value = rho(g)
    weights = {}
    for i, name in enumerate(schemes):
        scheme = name if isinstance(name, WeightScheme) else WeightScheme(name, {"n_samples": mc_samples})
        key = scheme.kind if scheme.kind not in weights else f"{scheme.kind}_{i}"
        weights[key] = compute_weights(g, scheme, sigma, rho_value=rho_value,
                                       rng=_cell_rng(seed, 2**31, i))
    tasks = [(g, sigma, signal, c, v, replicates, seed, cell, weights, cfg, support_tol)
             for cell, v in enumerate(sweep)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    rows = [row for cell_rows in results for row in cell_rows]
    config = {"n": g.n, "p": g.p, "sigma": sigma, "schemes": list(weights),
              "replicates": replicates, "signal": signal, "c": c, "rho": rho_value,
              "gap_tolerance": cfg.gap_tolerance, "max_iterations": cfg.max_iterations,
              "support_tol": support_tol, "sweep_values": sweep, "mc_samples": mc_samples}
    return ExperimentReport(sweep_name=sweep_name, rows=rows, config=config, seed=seed)


# -- oracle tuning -----------------------------------------------------------

@dataclass(frozen=True)
class TuneResult:
    alphas: np.ndarray
    mse_gl: np.ndarray
    mse_gs: np.ndarray
    best_alpha_gl: float
    best_alpha_gs: float

    @property
    def best_mse_gl(self) -> float:
        return float(self.mse_gl.min())

    @property
    def best_mse_gs(self) -> float:
        return float(self.mse_gs.min())

    def to_csv(self) -> str:
        lines = ["alpha,mse_gl,mse_gs"]
        lines += [f"{a!r},{gl!r},{gs!r}" for a, gl, gs in
                  zip(self.alphas.tolist(), self.mse_gl.tolist(), self.mse_gs.tolist())]
        return "\n".join(lines) + "\n"


def oracle_tune(g: Graph, y, beta_star, sigma: float, grid=None,
                cfg: SolverConfig | None = None) -> TuneResult:
    """MSE of both estimators along ``alpha``-scaled weights; picks the best ``alpha``.

    The grid is sorted ascending and ties go to the smaller ``alpha``.
    """
    alphas = np.sort(np.asarray(alpha_grid() if grid is None else grid, dtype=float))
    cfg = cfg or SolverConfig(record_history=False, adaptive_restart=True)
    mse_gl, mse_gs = np.empty(len(alphas)), np.empty(len(alphas))
    for i, a in enumerate(alphas):
        w_gs, lam_gl = weights_alpha(g, sigma, a)
        mse_gl[i] = mse(solve(DenoiseProblem(g, y, OrderedWeights.constant(lam_gl, g.p)), cfg).beta_hat, beta_star)
        mse_gs[i] = mse(solve(DenoiseProblem(g, y, w_gs), cfg).beta_hat, beta_star)
    return TuneResult(alphas, mse_gl, mse_gs, float(alphas[np.argmin(mse_gl)]),
                      float(alphas[np.argmin(mse_gs)]))


# -- theory diagnostics ------------------------------------------------------

@dataclass(frozen=True)
class KappaEstimate:
    """Sampled upper bound on the compatibility factor at sparsity ``s``."""

    value: float
    feasible: int
    evaluated: int
    method: str = "multistart-random-descent (upper bound)"

    @property
    def found(self) -> bool:
        return self.feasible > 0


def _cone_ok(diff, lam, big_lambda, s):
    amp = np.sort(np.abs(diff))[::-1]
    return 3.0 * big_lambda * np.linalg.norm(diff) > float(lam[s:] @ amp[s:])


def estimate_kappa(g: Graph, weights: OrderedWeights, s: int, budget: int = 200,
                   rng=None, local_steps: int = 30) -> KappaEstimate:
    """Upper bound on ``inf ||v|| / ||D^T v||`` over the compatibility cone.

    Starts alternate between Gaussian vectors, piecewise-constant vectors
    with few jumps and (first) the top Laplacian eigenvector; each start is
    refined by a random-perturbation descent that stays inside the cone. The
    running minimum over starts is returned, so a larger budget never gives a
    larger value for the same seed.
    """
    if len(weights) != g.p:
        raise ValueError(f"{len(weights)} weights for {g.p} edges")
    big_lambda = capital_lambda(weights, s)
    lam = weights.lambdas
    rng = np.random.default_rng(rng)
    Dt = g.incidence_t

    def ratio(v):
        diff = Dt @ v
        nd = np.linalg.norm(diff)
        if nd == 0 or not _cone_ok(diff, lam, big_lambda, s):
            return math.inf
        return np.linalg.norm(v) / nd

    top = None
    if g.n <= 2000:
        top = np.linalg.eigh(g.laplacian.toarray())[1][:, -1]
    best, feasible = math.inf, 0
    for i in range(budget):
        sub = np.random.default_rng(rng.integers(2**63))
        if i == 0 and top is not None:
            v = top.copy()
        elif i % 2:
            v = gen_edge_subset_signal(g, int(sub.integers(g.p + 1)), 1.0, sub)
        else:
            v = sub.standard_normal(g.n)
        v -= project_kernel(g, v)
        cur = ratio(v)
        if math.isfinite(cur):
            feasible += 1
        step = 0.5 * (np.linalg.norm(v) or 1.0) / math.sqrt(g.n)
        for _ in range(local_steps):
            trial = v + step * sub.standard_normal(g.n)
            trial -= project_kernel(g, trial)
            val = ratio(trial)
            if val < cur:
                v, cur = trial, val
                if feasible == 0:
                    feasible = 1
            else:
                step *= 0.7
        best = min(best, cur)
    return KappaEstimate(value=float(best), feasible=feasible, evaluated=budget)


def oracle_rhs(sigma, n, p, rho_value, kappa, s, delta) -> float:
    """``(sigma^2/n) (48 rho^2 s / kappa^2 log(2ep/s) + 2 + 16 log(1/delta))``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not 1 <= s <= p:
        raise ValueError(f"s must lie in [1, {p}]")
    complexity = 48.0 * rho_value ** 2 * s / kappa ** 2 * math.log(2.0 * math.e * p / s)
    return sigma ** 2 / n * (complexity + 2.0 + 16.0 * math.log(1.0 / delta))


@dataclass
class TheoryDiagnostics:
    rho: float
    spectral_norm_sq: float
    lambda_capital: dict
    kappa_estimate: dict
    kappa_method: str
    oracle_rhs: dict

    def to_json(self) -> str:
        data = asdict(self)
        data["oracle_rhs"] = {f"{s},{d}": v for (s, d), v in self.oracle_rhs.items()}
        data["kappa_estimate"] = {str(k): v for k, v in self.kappa_estimate.items()}
        data["lambda_capital"] = {str(k): v for k, v in self.lambda_capital.items()}
        return json.dumps(data, indent=2, sort_keys=True)


def theory_diagnostics(g: Graph, weights: OrderedWeights, sigma: float, s_values,
                       deltas=(0.05,), budget: int = 200, rng=None) -> TheoryDiagnostics:
    rng = np.random.default_rng(rng)
    r = rho(g)
    caps, kappas, rhs = {}, {}, {}
    method = KappaEstimate(0.0, 0, 0).method
    for s in s_values:
        caps[s] = capital_lambda(weights, s)
        est = estimate_kappa(g, weights, s, budget, rng)
        kappas[s] = est.value
        for d in deltas:
            rhs[(s, d)] = oracle_rhs(sigma, g.n, g.p, r, est.value, s, d)
    return TheoryDiagnostics(rho=r, spectral_norm_sq=spectral_norm_sq(g), lambda_capital=caps,
                             kappa_estimate=kappas, kappa_method=method, oracle_rhs=rhs)
