"""Mean-field probabilistic model over binary variables.

Each variable carries two logits; the row-wise softmax gives its category
probabilities and variables are sampled independently.  Gradients of the
expected cost are estimated with the score-function identity
``grad E[Cost] = E[grad log P(x) * Cost(x)]`` over a Monte-Carlo batch, and
parameters are updated with ADAM.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class MeanFieldModel:
    """Logit matrix of shape (num_vars, 2); column j scores bit value j."""

    alpha: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.alpha.ndim != 2 or self.alpha.shape[1] != 2:
            raise ValueError(f"alpha must have shape (num_vars, 2), "
                             f"got {self.alpha.shape}")

    @property
    def num_vars(self) -> int:
        return self.alpha.shape[0]

    @classmethod
    def uniform(cls, num_vars: int) -> "MeanFieldModel":
        return cls(np.zeros((num_vars, 2)))

    @classmethod
    def jittered(cls, num_vars: int, std: float,
                 rng: np.random.Generator) -> "MeanFieldModel":
        """Zero init plus Gaussian symmetry-breaking noise."""
        return cls(rng.normal(0.0, std, size=(num_vars, 2)))


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, shape: tuple[int, int], learning_rate: float = 0.01,
              beta1: float = 0.9, beta2: float = 0.999,
              epsilon: float = 1e-8) -> "AdamState":
        return cls(m=np.zeros(shape), v=np.zeros(shape), t=0,
                   learning_rate=learning_rate, beta1=beta1, beta2=beta2,
                   epsilon=epsilon)


@dataclass
class SampleBatch:
    """Batch of assignments (rows of ``bits``) with optional per-sample costs."""

    bits: np.ndarray
    costs: np.ndarray | None = None

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 2:
            raise ValueError("bits must be a (batch, num_vars) matrix")
        if self.costs is not None:
            self.costs = np.asarray(self.costs, dtype=float)
            if self.costs.shape != (self.bits.shape[0],):
                raise ValueError("costs must have one value per sample")

    def __len__(self) -> int:
        return self.bits.shape[0]


def probs(model: MeanFieldModel) -> np.ndarray:
    """Row-wise softmax of the logits, overflow-safe via max subtraction."""
    a = model.alpha
    shifted = a - a.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def sample_batch(model: MeanFieldModel, n_b: int,
                 rng: np.random.Generator) -> SampleBatch:
    """Draw n_b assignments, each variable independent from its row."""
    if n_b < 1:
        raise ValueError(f"n_b must be >= 1, got {n_b}")
    p1 = probs(model)[:, 1]
    u = rng.random((n_b, model.num_vars))
    return SampleBatch(bits=(u < p1).astype(np.uint8))


def log_prob_grad(model: MeanFieldModel, x) -> np.ndarray:
    """Gradient of log P(x) in the logits: indicator(j == x_i) - p_ij."""
    x = np.asarray(x)
    if x.shape != (model.num_vars,):
        raise ValueError(f"assignment has shape {x.shape}, "
                         f"expected ({model.num_vars},)")
    onehot = np.zeros((model.num_vars, 2))
    onehot[np.arange(model.num_vars), x.astype(int)] = 1.0
    return onehot - probs(model)


def objective_and_grad(model: MeanFieldModel, batch: SampleBatch,
                       subtract_baseline: bool = False) -> tuple[float, np.ndarray]:
    """Batch objective (mean cost) and the score-function gradient estimate.

    The gradient is the batch mean of ``log_prob_grad(x) * cost(x)``.  With
    ``subtract_baseline`` the batch mean cost is subtracted from each cost
    first, a variance reduction that leaves the expectation unchanged.
    """
    if batch.costs is None:
        raise ValueError("batch costs must be evaluated first")
    if len(batch) == 0:
        raise ValueError("batch is empty")
    c = batch.costs
    objective = float(c.mean())
    weights = c - objective if subtract_baseline else c
    p1 = probs(model)[:, 1]
    # Column 0 of log_prob_grad is the negative of column 1, so one
    # accumulation suffices.
    g1 = ((batch.bits - p1) * weights[:, None]).mean(axis=0)
    return objective, np.column_stack([-g1, g1])


def adam_step(model: MeanFieldModel, state: AdamState,
              grad: np.ndarray) -> tuple[MeanFieldModel, AdamState]:
    """One ADAM descent update; returns the new model and state."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != model.alpha.shape:
        raise ValueError(f"grad shape {grad.shape} does not match "
                         f"alpha shape {model.alpha.shape}")
    if not np.isfinite(grad).all():
        raise ValueError("gradient contains non-finite entries")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    alpha = model.alpha - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(m=m, v=v, t=t, learning_rate=state.learning_rate,
                          beta1=state.beta1, beta2=state.beta2,
                          epsilon=state.epsilon)
    return MeanFieldModel(alpha), new_state


def mode_assignment(model: MeanFieldModel) -> np.ndarray:
    """Per-variable argmax bits; ties break to bit 0."""
    p = probs(model)
    return (p[:, 1] > p[:, 0]).astype(np.uint8)
