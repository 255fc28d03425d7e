"""Optimizer regimes for training directly on quantized parameters.

Four regimes are implemented for SGD-with-momentum, three for Adam:

* master weights (``mw``): a high-precision copy accumulates updates and is
  re-quantized each step for the gradient evaluation;
* naive removal (``naive``): the update is applied to the quantized weights
  and the result re-quantized, errors discarded;
* error compensation (``eco``): like naive, but the quantization error of the
  fresh iterate is injected into the momentum buffer with strength
  ``alpha = (1/eta) * (1 - 1/beta)``, creating an error-feedback loop with no
  extra state;
* exact injection (``exact``, SGDM only): stores the previous step's residual
  as well, which provably reproduces the master-weight trajectory exactly.

All update functions are pure: arrays in, arrays out. ``train_step`` composes
the per-group pipeline: global-norm gradient clipping, optimizer step with
decoupled weight decay folded into the pre-quantization iterate, then
quantization and (regime-dependent) momentum injection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .numerics import RngKey, as_tensor
from .quantize import QuantSpec, QuantOutcome, quantize


@dataclass(frozen=True)
class Hyper:
    """Optimizer hyperparameters. ``beta1`` doubles as SGDM's beta."""

    eta: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0
    clip_norm: Optional[float] = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        # beta1 = 0 makes the injection strength singular; beta1 = 1 never
        # discounts old errors. Both are rejected.
        if not 0.0 < self.beta1 < 1.0:
            raise ValueError("beta1 must be strictly inside (0, 1)")
        if not 0.0 < self.beta2 < 1.0:
            raise ValueError("beta2 must be strictly inside (0, 1)")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ValueError("clip_norm must be > 0 when set")


@dataclass
class MasterWeights:
    master: np.ndarray


@dataclass
class Naive:
    pass


@dataclass
class Eco:
    pass


@dataclass
class ExactInjection:
    prev_error: np.ndarray


Mode = Union[MasterWeights, Naive, Eco, ExactInjection]


@dataclass
class SgdmState:
    m: np.ndarray
    mode: Mode


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int
    mode: Mode

    def __post_init__(self):
        if np.any(self.v < 0):
            raise ValueError("second-moment buffer must be elementwise >= 0")
        if isinstance(self.mode, ExactInjection):
            raise ValueError("exact injection is only defined for SGDM")


def injection_strength(eta: float, beta: float) -> float:
    """Momentum injection coefficient (1/eta) * (1 - 1/beta); negative for beta < 1."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be strictly inside (0, 1)")
    return (1.0 / eta) * (1.0 - 1.0 / beta)


def sgdm_update(theta, m, g, h: Hyper):
    """One SGDM step: returns the fresh iterate and momentum (pre-quantization).

    Decoupled weight decay, when enabled, is folded into the iterate before
    any quantization happens.
    """
    theta = as_tensor(theta, "theta")
    m = as_tensor(m, "m")
    g = as_tensor(g, "g")
    if theta.shape != g.shape or theta.shape != m.shape:
        raise ValueError("theta, m, g must share a shape")
    m_tilde = h.beta1 * m + (1.0 - h.beta1) * g
    theta_tilde = theta - h.eta * m_tilde
    if h.weight_decay > 0:
        theta_tilde = theta_tilde - h.eta * h.weight_decay * theta
    return theta_tilde, m_tilde


def eco_quantize_sgdm(theta_tilde, m_tilde, h: Hyper, spec: QuantSpec, key: RngKey):
    """Quantize the iterate and inject its error into momentum (SGDM form)."""
    out = quantize(theta_tilde, spec, key)
    alpha = injection_strength(h.eta, h.beta1)
    m_hat = m_tilde + alpha * out.error
    return out.quantized, m_hat


def adam_update(theta, st: AdamState, g, h: Hyper):
    """One Adam step with bias corrections at the incremented step counter.

    Returns (theta_tilde, m_tilde, v_next, t_next); the state itself is not
    mutated. Decoupled weight decay is folded into the iterate.
    """
    theta = as_tensor(theta, "theta")
    g = as_tensor(g, "g")
    if theta.shape != g.shape:
        raise ValueError("theta and g must share a shape")
    t_next = st.t + 1
    m_tilde = h.beta1 * st.m + (1.0 - h.beta1) * g
    v_next = h.beta2 * st.v + (1.0 - h.beta2) * g * g
    m_hat_bc = m_tilde / (1.0 - h.beta1 ** t_next)
    v_hat_bc = v_next / (1.0 - h.beta2 ** t_next)
    theta_tilde = theta - h.eta * m_hat_bc / (np.sqrt(v_hat_bc) + h.epsilon)
    if h.weight_decay > 0:
        theta_tilde = theta_tilde - h.eta * h.weight_decay * theta
    return theta_tilde, m_tilde, v_next, t_next


def eco_quantize_adam(theta_tilde, m_tilde, v_next, t_next: int, h: Hyper,
                      spec: QuantSpec, key: RngKey):
    """Quantize the iterate and inject the error through Adam's adaptive step.

    The scalar rate of the SGDM rule is replaced by the element-wise effective
    step size, so the injection coefficient is
    ``((1 - beta1^t)/eta) * (1 - 1/beta1) * (sqrt(v_t / (1 - beta2^t)) + eps)``.
    """
    if t_next < 1:
        raise ValueError("t_next must be >= 1 (state counter after the update)")
    if not 0.0 < h.beta1 < 1.0:
        raise ValueError("beta1 must be strictly inside (0, 1)")
    out = quantize(theta_tilde, spec, key)
    bc1 = 1.0 - h.beta1 ** t_next
    bc2 = 1.0 - h.beta2 ** t_next
    coeff = (bc1 / h.eta) * (1.0 - 1.0 / h.beta1) * (np.sqrt(v_next / bc2) + h.epsilon)
    m_hat = m_tilde + coeff * out.error
    return out.quantized, m_hat


def exact_injection_init(theta0, m0, h: Hyper, spec: QuantSpec, key: RngKey):
    """Initialize the exact-injection state from high-precision (theta0, m0).

    Returns (theta_hat0, m0 - e0/(eta*beta), e0) with e0 the initial residual.
    """
    if not 0.0 < h.beta1 < 1.0:
        raise ValueError("beta1 must be strictly inside (0, 1)")
    out = quantize(theta0, spec, key)
    m_im = as_tensor(m0, "m0") - out.error / (h.eta * h.beta1)
    return out.quantized, m_im, out.error


def exact_injection_sgdm_step(theta_hat, m_im, prev_error, g, h: Hyper,
                              spec: QuantSpec, key: RngKey):
    """One exact-injection SGDM step.

    The momentum receives ``prev_error/eta - new_error/(eta*beta)``; with the
    initialization above, the produced quantized iterates coincide with those
    of master-weight SGDM fed the same gradients and rounding draws.
    """
    if not 0.0 < h.beta1 < 1.0:
        raise ValueError("beta1 must be strictly inside (0, 1)")
    if h.weight_decay != 0.0:
        raise ValueError("exact injection does not support weight decay")
    m_bar = h.beta1 * as_tensor(m_im, "m_im") + (1.0 - h.beta1) * as_tensor(g, "g")
    theta_tilde = as_tensor(theta_hat, "theta_hat") - h.eta * m_bar
    out = quantize(theta_tilde, spec, key)
    m_next = m_bar + as_tensor(prev_error, "prev_error") / h.eta - out.error / (h.eta * h.beta1)
    return out.quantized, m_next, out.error


@dataclass
class ParamGroup:
    """One independently quantized parameter group."""

    name: str
    theta: np.ndarray  # the quantized view used for gradient evaluation
    state: Union[SgdmState, AdamState]
    spec: QuantSpec
    group_id: int


@dataclass
class StepInfo:
    loss: float
    grad_norm_sq: float  # raw gradients, before clipping
    m_norm_sq: float  # post-update momentum across groups
    errors: dict = field(default_factory=dict)  # fresh quantization error per group
    grads: list = field(default_factory=list)  # gradients as used (after clipping)
    clip_scale: float = 1.0


GradFn = Callable[[list], tuple]


def _clip_scale(grads: list, clip_norm: Optional[float]) -> float:
    if clip_norm is None:
        return 1.0
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if total <= clip_norm or total == 0.0:
        return 1.0
    return clip_norm / total


def _step_sgdm_group(group: ParamGroup, g, h: Hyper, key: RngKey):
    st = group.state
    mode = st.mode
    if isinstance(mode, MasterWeights):
        theta_tilde, m_tilde = sgdm_update(mode.master, st.m, g, h)
        out = quantize(theta_tilde, group.spec, key)
        new_state = SgdmState(m=m_tilde, mode=MasterWeights(master=theta_tilde))
        return out.quantized, new_state, out.error
    if isinstance(mode, Naive):
        theta_tilde, m_tilde = sgdm_update(group.theta, st.m, g, h)
        out = quantize(theta_tilde, group.spec, key)
        return out.quantized, SgdmState(m=m_tilde, mode=Naive()), out.error
    if isinstance(mode, Eco):
        theta_tilde, m_tilde = sgdm_update(group.theta, st.m, g, h)
        theta_hat, m_hat = eco_quantize_sgdm(theta_tilde, m_tilde, h, group.spec, key)
        return theta_hat, SgdmState(m=m_hat, mode=Eco()), theta_tilde - theta_hat
    if isinstance(mode, ExactInjection):
        theta_hat, m_next, err = exact_injection_sgdm_step(
            group.theta, st.m, mode.prev_error, g, h, group.spec, key
        )
        return theta_hat, SgdmState(m=m_next, mode=ExactInjection(prev_error=err)), err
    raise ValueError(f"unsupported mode {mode!r}")


def _step_adam_group(group: ParamGroup, g, h: Hyper, key: RngKey):
    st = group.state
    mode = st.mode
    if isinstance(mode, MasterWeights):
        theta_tilde, m_tilde, v_next, t_next = adam_update(mode.master, st, g, h)
        out = quantize(theta_tilde, group.spec, key)
        new_state = AdamState(m=m_tilde, v=v_next, t=t_next, mode=MasterWeights(master=theta_tilde))
        return out.quantized, new_state, out.error
    if isinstance(mode, Naive):
        theta_tilde, m_tilde, v_next, t_next = adam_update(group.theta, st, g, h)
        out = quantize(theta_tilde, group.spec, key)
        return out.quantized, AdamState(m=m_tilde, v=v_next, t=t_next, mode=Naive()), out.error
    if isinstance(mode, Eco):
        theta_tilde, m_tilde, v_next, t_next = adam_update(group.theta, st, g, h)
        theta_hat, m_hat = eco_quantize_adam(theta_tilde, m_tilde, v_next, t_next, h, group.spec, key)
        return theta_hat, AdamState(m=m_hat, v=v_next, t=t_next, mode=Eco()), theta_tilde - theta_hat
    raise ValueError(f"unsupported mode {mode!r} for adam")


def train_step(groups: list, grad_fn: GradFn, h: Hyper, step: int, seed: int):
    """Advance every parameter group by one optimization step.

    ``grad_fn`` receives the current quantized views (one array per group, in
    group order) and returns ``(loss, grads)``. Quantization keys are
    ``(seed, step + 1, group_id, element)`` so that regimes sharing a seed
    consume identical rounding draws.
    """
    thetas = [gr.theta for gr in groups]
    loss, grads = grad_fn(thetas)
    grads = [as_tensor(g, f"grad[{gr.name}]") for g, gr in zip(grads, groups)]
    grad_sq = sum(float(np.sum(g * g)) for g in grads)
    scale = _clip_scale(grads, h.clip_norm)
    if scale != 1.0:
        grads = [scale * g for g in grads]

    new_groups = []
    errors = {}
    m_sq = 0.0
    for gr, g in zip(groups, grads):
        key = RngKey(seed=seed, step=step + 1, tensor_id=gr.group_id, index=0)
        if isinstance(gr.state, AdamState):
            theta, state, err = _step_adam_group(gr, g, h, key)
        else:
            theta, state, err = _step_sgdm_group(gr, g, h, key)
        new_groups.append(ParamGroup(gr.name, theta, state, gr.spec, gr.group_id))
        errors[gr.name] = err
        m_sq += float(np.sum(state.m * state.m))

    info = StepInfo(loss=float(loss), grad_norm_sq=grad_sq, m_norm_sq=m_sq,
                    errors=errors, grads=grads, clip_scale=scale)
    return new_groups, info
