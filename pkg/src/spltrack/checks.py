"""Numerical self-checks run by ``spltrack verify``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Sample, TrainingBuffer
from .learner import CorrelationFilterLearner, RidgeLearner
from .pacing import RegularizerKind, oracle_minimize_weights, weights_vector


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value < self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44s} max={self.value:.3e}  tol={self.tolerance:.0e}"


def random_instance(rng, t):
    losses = rng.uniform(0.0, 2.0, t)
    rhos = rng.uniform(0.05, 1.0, t)
    cs = rng.uniform(0.0, 1.0, t)
    lam = rng.uniform(0.1, 2.0)
    xi = rng.uniform(0.0, 1.5)
    return losses, rhos, cs, lam, xi


def oracle_deviation(n_instances: int = 1000, seed: int = 0, max_t: int = 20) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in RegularizerKind:
        for _ in range(n_instances):
            losses, rhos, cs, lam, xi = random_instance(rng, int(rng.integers(1, max_t + 1)))
            closed = weights_vector(losses, rhos, cs, lam, xi, kind)
            oracle = oracle_minimize_weights(losses, rhos, cs, lam, xi, kind)
            worst = max(worst, float(np.max(np.abs(closed - oracle))))
    return worst


def stationarity_residual(n_instances: int = 100, seed: int = 1, max_t: int = 20) -> float:
    """Largest |l + lam*v/rho - lam + xi*c| over interior weights."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        losses, rhos, cs, lam, xi = random_instance(rng, int(rng.integers(1, max_t + 1)))
        v = weights_vector(losses, rhos, cs, lam, xi, RegularizerKind.DETECTION_GUIDED)
        inside = v > 0
        if inside.any():
            r = losses + lam * v / rhos - lam + xi * cs
            worst = max(worst, float(np.max(np.abs(r[inside]))))
    return worst


def ridge_instance(rng, n=6, d=3, alpha=0.3):
    buf = TrainingBuffer(n, 0.0)
    for k in range(n):
        buf.append(Sample(k, rng.standard_normal(d), float(rng.standard_normal()), v=float(rng.uniform(0.1, 1.0))))
    return RidgeLearner(d, alpha), buf


def ridge_objective(state: RidgeLearner, buf) -> float:
    return sum(s.v * state.loss(s) for s in buf) + state.alpha * state.penalty()


def ridge_gradient_error(seed: int = 2, trials: int = 20, h: float = 1e-6) -> float:
    """Relative error of the analytic gradient vs central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        st, buf = ridge_instance(rng)
        st = RidgeLearner(st.dim, st.alpha, rng.standard_normal(st.dim))
        g = st.gradient(buf)
        fd = np.empty(st.dim)
        for i in range(st.dim):
            e = np.zeros(st.dim)
            e[i] = h
            fp = ridge_objective(RidgeLearner(st.dim, st.alpha, st.weights + e), buf)
            fm = ridge_objective(RidgeLearner(st.dim, st.alpha, st.weights - e), buf)
            fd[i] = (fp - fm) / (2 * h)
        worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12)))
    return worst


def ridge_refit_gradient(seed: int = 3, trials: int = 20) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        st, buf = ridge_instance(rng)
        worst = max(worst, float(np.linalg.norm(st.refit(buf).gradient(buf))))
    return worst


def filter_instance(rng, n=5, m=16, alpha=0.05):
    learner = CorrelationFilterLearner((m, m), alpha)
    buf = TrainingBuffer(n, 0.0)
    for k in range(n):
        buf.append(Sample(k, rng.standard_normal((m, m)), learner.label(), v=float(rng.uniform(0.1, 1.0))))
    return learner, buf


def filter_normal_residual(seed: int = 4, trials: int = 20) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        learner, buf = filter_instance(rng)
        worst = max(worst, learner.refit(buf).normal_equation_residual(buf))
    return worst


def run_all(instances: int = 1000, seed: int = 0):
    return [
        CheckResult("closed form vs oracle (all kinds)", oracle_deviation(instances, seed), 1e-6),
        CheckResult("stationarity residual (interior branch)", stationarity_residual(100, seed + 1), 1e-10),
        CheckResult("ridge gradient vs central differences", ridge_gradient_error(seed + 2), 1e-5),
        CheckResult("ridge gradient norm at refit", ridge_refit_gradient(seed + 3), 1e-8),
        CheckResult("filter normal-equation residual", filter_normal_residual(seed + 4), 1e-10),
    ]
