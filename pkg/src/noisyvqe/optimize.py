"""Derivative-free and gradient optimizers over a scalar loss, each returning
a full per-iteration trace.

Record conventions: NFT records its accepted point per iteration with the
sinusoid-model value (refreshed by a real evaluation every ``reset_interval``
iterations); SPSA records both perturbed evaluations per iteration plus one
final evaluation at the accepted point; the remaining optimizers record actual
loss values at actual points.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf
from scipy.stats import qmc

Loss = Callable[[np.ndarray], float]

TERMINATION = ("MAX_ITER", "CONVERGED", "BUDGET")


@dataclass
class TraceRecord:
    iteration: int
    params: np.ndarray
    energy: float
    cumulative_evals: int
    stage: int = 0


@dataclass
class OptimizationTrace:
    records: list
    best_params: np.ndarray
    best_energy: float
    terminated_by: str
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_records(cls, records: list, terminated_by: str, metadata: dict | None = None):
        if not records:
            raise ValueError("optimizer produced no records")
        if terminated_by not in TERMINATION:
            raise ValueError(f"bad termination reason {terminated_by!r}")
        energies = [r.energy for r in records]
        best = int(np.argmin(energies))
        return cls(records, records[best].params.copy(), energies[best], terminated_by, metadata or {})

    @property
    def final_params(self) -> np.ndarray:
        return self.records[-1].params

    @property
    def final_energy(self) -> float:
        return self.records[-1].energy

    @property
    def total_evals(self) -> int:
        return self.records[-1].cumulative_evals


def _checked(loss: Loss) -> Loss:
    def wrapped(theta: np.ndarray) -> float:
        v = float(loss(theta))
        if not np.isfinite(v):
            raise ValueError(f"loss returned non-finite value {v} at {theta}")
        return v

    return wrapped


# ---------------------------------------------------------------------------
# NFT: sequential per-coordinate sinusoid reconstruction

@dataclass
class NftConfig:
    sweeps: int = 8
    reset_interval: int = 32
    ordering: str = "ORDERED"          # or "RANDOM_NO_REPLACEMENT"
    fit_points: int = 3                # 5 enables the least-squares fallback
    seed: int = 0
    eval_budget: int | None = None

    def __post_init__(self):
        if self.sweeps < 1 or self.reset_interval < 1:
            raise ValueError("sweeps and reset_interval must be >= 1")
        if self.ordering not in ("ORDERED", "RANDOM_NO_REPLACEMENT"):
            raise ValueError(f"bad ordering {self.ordering!r}")
        if self.fit_points not in (3, 5):
            raise ValueError("fit_points must be 3 or 5")


def _nft_coordinate_order(n_params: int, sweeps: int, cfg: NftConfig):
    if cfg.ordering == "ORDERED":
        for _ in range(sweeps):
            yield from range(n_params)
        return
    rng = np.random.default_rng(cfg.seed)
    for _ in range(sweeps):
        pool = list(rng.permutation(n_params))
        yield from pool


def _sinusoid_min_3pt(z1: float, z2: float, z3: float, x0: float):
    """Reconstruct c + a*cos(x - b) from L(x0), L(x0+pi/2), L(x0-pi/2)."""
    c = (z2 + z3) / 2.0
    a_sin = (z3 - z2) / 2.0       # a*sin(x0 - b)
    a_cos = z1 - c                # a*cos(x0 - b)
    amp = float(np.hypot(a_sin, a_cos))
    b = x0 - float(np.arctan2(a_sin, a_cos))
    return b + np.pi, c - amp


def _sinusoid_min_5pt(xs, zs):
    """Least-squares fit of c + alpha*cos(x) + beta*sin(x) over five samples."""
    xs = np.asarray(xs)
    design = np.column_stack([np.ones_like(xs), np.cos(xs), np.sin(xs)])
    coef, *_ = np.linalg.lstsq(design, np.asarray(zs), rcond=None)
    c, alpha, beta = coef
    amp = float(np.hypot(alpha, beta))
    b = float(np.arctan2(-beta, -alpha))  # c + amp*cos(x - b) with cos b = -alpha/amp
    return b + np.pi, float(c - amp)


def _nearest_representative(x: float, center: float) -> float:
    """Shift x by a multiple of 2*pi into (center - pi, center + pi]."""
    return x - 2 * np.pi * np.round((x - center) / (2 * np.pi))


def nft_minimize(loss: Loss, theta0: Sequence[float], cfg: NftConfig) -> OptimizationTrace:
    """Sequential single-coordinate minimization for 2*pi-periodic losses.

    Each iteration spends two evaluations (at the current coordinate +- pi/2),
    reusing the cached value at the current point; every ``reset_interval``-th
    iteration refreshes the cache with a third evaluation.
    """
    loss = _checked(loss)
    theta = np.array(theta0, dtype=float)
    n = theta.size
    current = loss(theta)
    evals = 1
    records: list = []
    iteration = 0
    terminated = "MAX_ITER"
    extra = cfg.fit_points - 3
    for j in _nft_coordinate_order(n, cfg.sweeps, cfg):
        refresh = (iteration + 1) % cfg.reset_interval == 0
        need = 2 + extra + (1 if refresh else 0)
        if cfg.eval_budget is not None and evals + need > cfg.eval_budget:
            terminated = "BUDGET"
            break
        iteration += 1
        x0 = theta[j]

        def at(x: float) -> float:
            probe = theta.copy()
            probe[j] = x
            return loss(probe)

        z2 = at(x0 + np.pi / 2)
        z3 = at(x0 - np.pi / 2)
        evals += 2
        if cfg.fit_points == 3:
            x_star, model_min = _sinusoid_min_3pt(current, z2, z3, x0)
        else:
            z4 = at(x0 + np.pi)
            z5 = at(x0 - np.pi)
            evals += 2
            x_star, model_min = _sinusoid_min_5pt(
                [x0, x0 + np.pi / 2, x0 - np.pi / 2, x0 + np.pi, x0 - np.pi],
                [current, z2, z3, z4, z5],
            )
        theta[j] = _nearest_representative(x_star, x0)
        current = model_min
        if refresh:
            current = loss(theta)
            evals += 1
        records.append(TraceRecord(iteration, theta.copy(), current, evals))
    return OptimizationTrace.from_records(records, terminated)


# ---------------------------------------------------------------------------
# SPSA and the coarse-then-fine variant

@dataclass
class SpsaConfig:
    a: float = 0.2
    c: float = 0.1
    A: float = 0.0
    alpha: float = 0.602
    gamma: float = 0.101
    max_iterations: int = 200
    seed: int = 0
    eval_budget: int | None = None

    def __post_init__(self):
        if self.a <= 0 or self.c <= 0:
            raise ValueError("gains a and c must be positive")


def _spsa_loop(loss, theta, cfg: SpsaConfig, records, evals, stage, rng,
               stop_check=None):
    """Shared SPSA iteration loop; returns (theta, evals, stop_reason)."""
    energies = []
    for k in range(cfg.max_iterations):
        if cfg.eval_budget is not None and evals[0] + 2 > cfg.eval_budget:
            return theta, "BUDGET"
        a_k = cfg.a / (cfg.A + k + 1) ** cfg.alpha
        c_k = cfg.c / (k + 1) ** cfg.gamma
        delta = rng.integers(0, 2, size=theta.size) * 2 - 1
        up = theta + c_k * delta
        dn = theta - c_k * delta
        l_up = loss(up)
        l_dn = loss(dn)
        evals[0] += 2
        records.append(TraceRecord(k + 1, up.copy(), l_up, evals[0], stage))
        records.append(TraceRecord(k + 1, dn.copy(), l_dn, evals[0], stage))
        grad = (l_up - l_dn) / (2 * c_k) * (1.0 / delta)
        theta = theta - a_k * grad
        energies.append((l_up + l_dn) / 2.0)
        if stop_check is not None and stop_check(energies):
            return theta, "CONVERGED"
    return theta, "MAX_ITER"


def spsa_minimize(loss: Loss, theta0: Sequence[float], cfg: SpsaConfig) -> OptimizationTrace:
    """Simultaneous perturbation gradient descent with Rademacher directions."""
    loss = _checked(loss)
    theta = np.array(theta0, dtype=float)
    rng = np.random.default_rng(cfg.seed)
    records: list = []
    evals = [0]
    theta, reason = _spsa_loop(loss, theta, cfg, records, evals, 0, rng)
    final = loss(theta)
    evals[0] += 1
    records.append(TraceRecord(records[-1].iteration + 1 if records else 1, theta.copy(), final, evals[0], 0))
    return OptimizationTrace.from_records(records, reason)


@dataclass
class SpsaReoptConfig:
    coarse: SpsaConfig = field(default_factory=lambda: SpsaConfig(a=2.0, c=0.6))
    fine: SpsaConfig = field(default_factory=lambda: SpsaConfig(a=0.15, c=0.1))
    convergence_window: int = 10
    convergence_tol: float = 1e-3
    seed: int = 0


def spsa_reopt_minimize(loss: Loss, theta0: Sequence[float], cfg: SpsaReoptConfig) -> OptimizationTrace:
    """Coarse large-gain SPSA until its energy moving average settles, then a
    fine guideline-gain stage restarted from the coarse stage's best point."""
    loss = _checked(loss)
    theta = np.array(theta0, dtype=float)
    rng = np.random.default_rng(cfg.seed)
    records: list = []
    evals = [0]
    w = cfg.convergence_window

    def settled(energies: list) -> bool:
        if len(energies) < 2 * w:
            return False
        prev = float(np.mean(energies[-2 * w:-w]))
        last = float(np.mean(energies[-w:]))
        return abs(last - prev) < cfg.convergence_tol

    theta, reason = _spsa_loop(loss, theta, cfg.coarse, records, evals, 0, rng, settled)
    # restart the fine stage from the best point seen so far
    stage1_best = min(records, key=lambda r: r.energy)
    theta = stage1_best.params.copy()
    theta, reason2 = _spsa_loop(loss, theta, cfg.fine, records, evals, 1, rng)
    final = loss(theta)
    evals[0] += 1
    records.append(TraceRecord(records[-1].iteration + 1, theta.copy(), final, evals[0], 1))
    meta = {"stage1_terminated_by": reason, "stage1_records": sum(1 for r in records if r.stage == 0)}
    return OptimizationTrace.from_records(records, reason2, meta)


# ---------------------------------------------------------------------------
# Nelder-Mead with optional one-shot restart

@dataclass
class NelderMeadConfig:
    initial_simplex_size: float = 1.0
    restart: bool = False
    restart_scale: float = 2.0
    ftol: float = 1e-9
    max_iterations: int = 500
    acceptance_threshold: float = -1.0

    def __post_init__(self):
        if self.initial_simplex_size <= 0:
            raise ValueError("initial simplex size must be positive")


def _nm_stage(loss, x0, size, cfg, records, evals, stage, start_iter):
    n = x0.size
    simplex = [x0.copy()] + [x0 + size * np.eye(n)[j] for j in range(n)]
    values = [loss(p) for p in simplex]
    evals[0] += n + 1
    iteration = start_iter
    for _ in range(cfg.max_iterations):
        order = np.argsort(values)
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        iteration += 1
        records.append(TraceRecord(iteration, simplex[0].copy(), values[0], evals[0], stage))
        if values[-1] - values[0] < cfg.ftol:
            return simplex[0], values[0], iteration, "CONVERGED"
        centroid = np.mean(simplex[:-1], axis=0)
        xr = centroid + (centroid - simplex[-1])
        fr = loss(xr)
        evals[0] += 1
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - simplex[-1])
            fe = loss(xe)
            evals[0] += 1
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (simplex[-1] - centroid)
            fc = loss(xc)
            evals[0] += 1
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                for j in range(1, n + 1):
                    simplex[j] = simplex[0] + 0.5 * (simplex[j] - simplex[0])
                    values[j] = loss(simplex[j])
                evals[0] += n
    return simplex[0], values[0], iteration, "MAX_ITER"


def nelder_mead_minimize(loss: Loss, theta0: Sequence[float], cfg: NelderMeadConfig) -> OptimizationTrace:
    """Standard simplex search, reflection/expansion/contraction/shrink with
    coefficients (1, 2, 0.5, 0.5); optionally restarts once around the found
    point with a larger simplex when the converged value is unsatisfying."""
    loss = _checked(loss)
    x0 = np.array(theta0, dtype=float)
    records: list = []
    evals = [0]
    best_x, best_f, it, reason = _nm_stage(
        loss, x0, cfg.initial_simplex_size, cfg, records, evals, 0, 0
    )
    restarted = False
    if cfg.restart and reason == "CONVERGED" and best_f > cfg.acceptance_threshold:
        restarted = True
        best_x, best_f, it, reason = _nm_stage(
            loss, best_x, cfg.initial_simplex_size * cfg.restart_scale, cfg, records, evals, 1, it
        )
    return OptimizationTrace.from_records(records, reason, {"restarted": restarted})


# ---------------------------------------------------------------------------
# Adam on parameter-shift or central-difference gradients

@dataclass
class AdamConfig:
    alpha: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    gradient_mode: str = "PARAMETER_SHIFT"   # or "CENTRAL_DIFF"
    central_diff_h: float = 1e-3
    max_iterations: int = 200
    eval_budget: int | None = None

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("betas must lie in (0, 1)")
        if self.gradient_mode not in ("PARAMETER_SHIFT", "CENTRAL_DIFF"):
            raise ValueError(f"bad gradient mode {self.gradient_mode!r}")


def gradient_estimate(loss: Loss, theta: np.ndarray, mode: str, h: float = 1e-3) -> np.ndarray:
    """Parameter-shift (exact for rotation angles) or central-difference gradient."""
    shift = np.pi / 2 if mode == "PARAMETER_SHIFT" else h
    denom = 2.0 if mode == "PARAMETER_SHIFT" else 2.0 * h
    g = np.empty_like(theta)
    for j in range(theta.size):
        probe = theta.copy()
        probe[j] = theta[j] + shift
        up = loss(probe)
        probe[j] = theta[j] - shift
        dn = loss(probe)
        g[j] = (up - dn) / denom
    return g


def adam_minimize(loss: Loss, theta0: Sequence[float], cfg: AdamConfig) -> OptimizationTrace:
    """Adam with bias correction; one fresh loss record per iteration."""
    loss = _checked(loss)
    theta = np.array(theta0, dtype=float)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    records: list = []
    evals = 0
    terminated = "MAX_ITER"
    per_iter = 2 * theta.size + 1
    for k in range(1, cfg.max_iterations + 1):
        if cfg.eval_budget is not None and evals + per_iter > cfg.eval_budget:
            terminated = "BUDGET"
            break
        g = gradient_estimate(loss, theta, cfg.gradient_mode, cfg.central_diff_h)
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient")
        evals += 2 * theta.size
        m = cfg.beta1 * m + (1 - cfg.beta1) * g
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
        m_hat = m / (1 - cfg.beta1**k)
        v_hat = v / (1 - cfg.beta2**k)
        theta = theta - cfg.alpha * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        value = loss(theta)
        evals += 1
        records.append(TraceRecord(k, theta.copy(), value, evals))
    return OptimizationTrace.from_records(records, terminated)


# ---------------------------------------------------------------------------
# Bayesian optimization: GP regression + expected improvement

@dataclass
class BayesianConfig:
    n_initial: int = 8
    n_iterations: int = 40
    kernel_lengthscale: float = 1.0
    noise_variance: float = 1e-6
    acq_candidates: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.n_initial < 2:
            raise ValueError("need at least two initial points")


def _sq_exp_kernel(xa: np.ndarray, xb: np.ndarray, lengthscale: float) -> np.ndarray:
    d2 = np.sum((xa[:, None, :] - xb[None, :, :]) ** 2, axis=-1)
    return np.exp(-0.5 * d2 / lengthscale**2)


class GaussianProcess:
    """Zero-mean GP with a squared-exponential kernel and fixed hyperparameters."""

    def __init__(self, lengthscale: float, noise_variance: float):
        self.lengthscale = lengthscale
        self.noise_variance = noise_variance
        self._x = None
        self._chol = None
        self._alpha = None
        self._y_mean = 0.0

    def fit(self, x: np.ndarray, y: np.ndarray) -> None:
        self._x = np.atleast_2d(x)
        self._y_mean = float(np.mean(y))
        k = _sq_exp_kernel(self._x, self._x, self.lengthscale)
        k[np.diag_indices_from(k)] += max(self.noise_variance, 0.0)
        try:
            self._chol = np.linalg.cholesky(k)
        except np.linalg.LinAlgError as exc:
            raise ValueError("kernel matrix is singular even after regularization") from exc
        centered = np.asarray(y, dtype=float) - self._y_mean
        self._alpha = np.linalg.solve(
            self._chol.T, np.linalg.solve(self._chol, centered)
        )

    def predict(self, x: np.ndarray):
        x = np.atleast_2d(x)
        ks = _sq_exp_kernel(x, self._x, self.lengthscale)
        mu = ks @ self._alpha + self._y_mean
        v = np.linalg.solve(self._chol, ks.T)
        var = 1.0 - np.sum(v * v, axis=0)
        return mu, np.clip(var, 0.0, None)


def expected_improvement(mu: np.ndarray, sigma: np.ndarray, best: float) -> np.ndarray:
    """EI for minimization; zero where the predictive deviation vanishes."""
    improve = best - mu
    out = np.maximum(improve, 0.0)
    pos = sigma > 1e-12
    z = improve[pos] / sigma[pos]
    cdf = 0.5 * (1.0 + erf(z / np.sqrt(2.0)))
    pdf = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    out[pos] = improve[pos] * cdf + sigma[pos] * pdf
    return out


def bayesian_minimize(loss: Loss, bounds: Sequence, cfg: BayesianConfig) -> OptimizationTrace:
    """GP-based search: quasi-random initial design, then EI-greedy sampling
    over uniform random candidates; every evaluation lands in the trace."""
    loss = _checked(loss)
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2 or not np.all(np.isfinite(bounds)):
        raise ValueError("bounds must be a finite (d, 2) array")
    d = bounds.shape[0]
    lo, hi = bounds[:, 0], bounds[:, 1]
    rng = np.random.default_rng(cfg.seed)
    sampler = qmc.Halton(d, seed=rng)
    xs = list(lo + sampler.random(cfg.n_initial) * (hi - lo))
    ys = [loss(x) for x in xs]
    records = [
        TraceRecord(i + 1, np.array(x), y, i + 1) for i, (x, y) in enumerate(zip(xs, ys))
    ]
    gp = GaussianProcess(cfg.kernel_lengthscale, cfg.noise_variance)
    for it in range(cfg.n_iterations):
        gp.fit(np.array(xs), np.array(ys))
        candidates = rng.uniform(lo, hi, size=(cfg.acq_candidates, d))
        mu, var = gp.predict(candidates)
        ei = expected_improvement(mu, np.sqrt(var), min(ys))
        x_next = candidates[int(np.argmax(ei))]
        y_next = loss(x_next)
        xs.append(x_next)
        ys.append(y_next)
        records.append(
            TraceRecord(cfg.n_initial + it + 1, x_next.copy(), y_next, len(xs))
        )
    return OptimizationTrace.from_records(records, "MAX_ITER")
