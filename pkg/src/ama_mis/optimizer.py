"""Gradient-based minimization of ``<H_C>`` with convergence and iteration accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ansatz import Circuit, Program, compile_circuit
from .graphs import Graph


class ConfigError(ValueError):
    """Invalid configuration value; the message names the offending key."""


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "adam"
    learning_rate: float = 0.05
    inner_tol: float = 1e-3
    patience: int = 3
    max_iters: int = 500
    fd_step: float = 1e-4
    init_range: tuple[float, float] = (-math.pi, math.pi)
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    exact_mixer_phase: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "init_range", tuple(float(x) for x in self.init_range))
        if self.method not in ("adam", "gd"):
            raise ConfigError(f"optimizer.method: expected 'adam' or 'gd', got {self.method!r}")
        if not self.learning_rate > 0:
            raise ConfigError("optimizer.learning_rate: must be > 0")
        if not self.inner_tol > 0:
            raise ConfigError("optimizer.inner_tol: must be > 0")
        if self.patience < 1:
            raise ConfigError("optimizer.patience: must be >= 1")
        if self.max_iters < 1:
            raise ConfigError("optimizer.max_iters: must be >= 1")
        if not self.fd_step > 0:
            raise ConfigError("optimizer.fd_step: must be > 0")
        lo, hi = self.init_range
        if len(self.init_range) != 2 or not lo < hi:
            raise ConfigError("optimizer.init_range: expected (lo, hi) with lo < hi")


@dataclass
class RunResult:
    final_expectation: float
    best_params: np.ndarray
    iterations: int
    trajectory: list[float] = field(default_factory=list)
    init_params: Optional[np.ndarray] = None


def random_init(param_count: int, cfg: OptimizerConfig, seed) -> np.ndarray:
    """I.i.d. uniform draws on ``cfg.init_range``."""
    if param_count < 0:
        raise ConfigError("param_count must be >= 0")
    lo, hi = cfg.init_range
    return np.random.default_rng(seed).uniform(lo, hi, size=param_count)


def minimize_program(prog: Program, init, cfg: OptimizerConfig,
                     trainable: Optional[np.ndarray] = None) -> RunResult:
    """Core loop shared by every algorithm; ``trainable`` restricts the updated indices."""
    theta = np.array(init, dtype=np.float64)
    if theta.shape != (prog.param_count,):
        raise ConfigError(f"initial parameters have length {theta.size}, circuit needs {prog.param_count}")
    idx = np.arange(prog.param_count, dtype=np.int64) if trainable is None else np.asarray(trainable, dtype=np.int64)
    exact = cfg.exact_mixer_phase

    f_prev = prog.energy(theta, exact_phase=exact)
    trajectory = [f_prev]
    best_f, best_theta = f_prev, theta.copy()
    m = np.zeros(idx.size)
    v = np.zeros(idx.size)
    streak = 0
    iterations = 0
    for t in range(1, cfg.max_iters + 1):
        grad = prog.gradient(theta, idx, cfg.fd_step, exact_phase=exact)
        if cfg.method == "adam":
            m = cfg.adam_beta1 * m + (1 - cfg.adam_beta1) * grad
            v = cfg.adam_beta2 * v + (1 - cfg.adam_beta2) * grad * grad
            m_hat = m / (1 - cfg.adam_beta1 ** t)
            v_hat = v / (1 - cfg.adam_beta2 ** t)
            theta[idx] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        else:
            theta[idx] -= cfg.learning_rate * grad
        f = prog.energy(theta, exact_phase=exact)
        iterations = t
        trajectory.append(f)
        if f < best_f:
            best_f, best_theta = f, theta.copy()
        streak = streak + 1 if abs(f - f_prev) < cfg.inner_tol else 0
        f_prev = f
        if streak >= cfg.patience:
            break
    return RunResult(best_f, best_theta, iterations, trajectory, np.array(init, dtype=np.float64))


def minimize(c: Circuit, g: Graph, init, cfg: OptimizerConfig = OptimizerConfig(), seed=None) -> RunResult:
    """Minimize ``<H_C>`` over the circuit parameters, returning the best point seen.

    One iteration is one gradient evaluation plus one parameter update. The
    loop stops once the expectation moves by less than ``inner_tol`` for
    ``patience`` consecutive iterations, or after ``max_iters``. ``seed`` is
    accepted for interface symmetry; the loop itself is deterministic.
    """
    return minimize_program(compile_circuit(c, g), init, cfg)
