"""Executable bounds, virtual-sequence checks, and stationary-moment analysis.

Contents:

* virtual-sequence construction ``theta = theta_hat - (eta*beta/(1-beta)) * m_hat``
  and a residual check that it evolves as plain gradient descent;
* the constants of the convergence analysis (injection strength, momentum
  bounds, quantization noise floors) as a single ``bounds`` call;
* the scalar-quadratic second-moment machinery: per-regime linear-form
  coefficients, one-step moment recursions, stationary solutions (closed form
  cross-checked against fixed-point iteration), and the stationary squared
  gradient each regime settles at;
* a Monte Carlo driver for the same scalar recursions, backed by the compiled
  kernel with a pure-Python fallback;
* static-memory accounting in bytes per parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import as_tensor
from .simulate1d import simulate_second_moment

REGIMES = ("mw", "naive", "eco")

FORMAT_BYTES = {"fp32": 4.0, "bf16": 2.0, "fp8": 1.0, "int4": 0.5, "none": 0.0}


class SimulationDiverged(RuntimeError):
    """Raised when a Monte Carlo trajectory leaves the finite range."""


@dataclass(frozen=True)
class TheoryParams:
    """Constants of the convergence analysis.

    L: smoothness constant; G: gradient-norm bound; sigma2: quantization-error
    variance (stochastic rounding); delta: deterministic error-norm bound
    (round-to-nearest); beta: momentum; eta: learning rate; f_gap: initial
    optimality gap f(theta_0) - f*.
    """

    L: float
    G: float
    sigma2: float
    delta: float
    beta: float
    eta: float
    f_gap: float = 0.0

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be > 0")
        if not self.G > 0:
            raise ValueError("G must be > 0")
        if self.sigma2 < 0 or self.delta < 0 or self.f_gap < 0:
            raise ValueError("sigma2, delta, f_gap must be >= 0")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must be strictly inside (0, 1)")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")


@dataclass(frozen=True)
class TheoryBounds:
    alpha: float  # momentum injection strength
    m2_stoch: float  # bound on E||m_hat||^2 under zero-mean errors
    m_det: float  # pathwise bound on ||m_hat|| under bounded errors
    noise_floor_stoch: float  # residual term in the stochastic convergence bound
    noise_floor_det: float  # residual term in the deterministic convergence bound
    c_virtual: float  # eta*beta/(1-beta), the virtual-point offset coefficient


@dataclass(frozen=True)
class RegimeMoments:
    """Second moments (u, v, w) = (E[x^2], E[x m], E[m^2])."""

    u: float
    v: float
    w: float


@dataclass(frozen=True)
class RegimeCoeffs:
    """Constants of the linear recursion x' = a x + b m + B1 xi, m' = c x + d m + B2 xi."""

    a: float
    b: float
    c: float
    d: float
    B1: float
    B2: float


def virtual_point(theta_hat, m_hat, eta: float, beta: float) -> np.ndarray:
    """The auxiliary iterate theta_hat - (eta*beta/(1-beta)) * m_hat."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be strictly inside (0, 1)")
    c = eta * beta / (1.0 - beta)
    return as_tensor(theta_hat, "theta_hat") - c * as_tensor(m_hat, "m_hat")


def virtual_dynamics_residuals(theta_hats, m_hats, grads, eta: float, beta: float):
    """Per-step residuals theta_{t+1} - theta_t + eta * grad_t of the virtual points.

    ``theta_hats`` and ``m_hats`` hold T+1 states; ``grads`` holds the T
    gradients evaluated at the quantized iterates. Returns (linf, l2) arrays
    of length T.
    """
    th = np.asarray([np.ravel(t) for t in theta_hats], dtype=np.float64)
    mh = np.asarray([np.ravel(m) for m in m_hats], dtype=np.float64)
    gr = np.asarray([np.ravel(g) for g in grads], dtype=np.float64)
    if th.shape != mh.shape or gr.shape[0] != th.shape[0] - 1:
        raise ValueError("need T+1 states and T gradients of matching shape")
    virt = th - (eta * beta / (1.0 - beta)) * mh
    res = virt[1:] - virt[:-1] + eta * gr
    return np.max(np.abs(res), axis=1), np.linalg.norm(res, axis=1)


def check_virtual_dynamics(theta_hats, m_hats, grads, eta: float, beta: float) -> float:
    """Max over steps of the sup-norm virtual-dynamics residual."""
    linf, _ = virtual_dynamics_residuals(theta_hats, m_hats, grads, eta, beta)
    return float(np.max(linf)) if linf.size else 0.0


def bounds(p: TheoryParams) -> TheoryBounds:
    """All derived constants of the convergence analysis.

    alpha = (1/eta)(1 - 1/beta)
    M^2 = 2 G^2 + 2 alpha^2 sigma^2 / (1 - beta^2)
    M_det = G + |alpha| delta / (1 - beta)
    stochastic floor = 4 eta^2 beta^2 L^2 G^2 / (1-beta)^2 + 4 L^2 sigma^2 / (1-beta^2)
    deterministic floor = 2 L^2 C^2 M_det^2 with C = eta*beta/(1-beta)
    """
    alpha = (1.0 / p.eta) * (1.0 - 1.0 / p.beta)
    c = p.eta * p.beta / (1.0 - p.beta)
    m2 = 2.0 * p.G ** 2 + 2.0 * alpha ** 2 * p.sigma2 / (1.0 - p.beta ** 2)
    m_det = p.G + abs(alpha) * p.delta / (1.0 - p.beta)
    floor_stoch = (
        4.0 * p.eta ** 2 * p.beta ** 2 * p.L ** 2 * p.G ** 2 / (1.0 - p.beta) ** 2
        + 4.0 * p.L ** 2 * p.sigma2 / (1.0 - p.beta ** 2)
    )
    floor_det = 2.0 * p.L ** 2 * c ** 2 * m_det ** 2
    return TheoryBounds(alpha, m2, m_det, floor_stoch, floor_det, c)


def stability_check(L: float, eta: float, beta: float) -> bool:
    """True iff 0 < eta < 2(1+beta) / ((1-beta) L), the open stability interval."""
    if not L > 0:
        raise ValueError("L must be > 0")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be strictly inside (0, 1)")
    return 0.0 < eta < 2.0 * (1.0 + beta) / ((1.0 - beta) * L)


def regime_coeffs(regime: str, L: float, eta: float, beta: float) -> RegimeCoeffs:
    """Linear-form constants of one regime on the scalar quadratic.

    Shared part: c = (1-beta) L, a = 1 - eta c, b = -eta beta, d = beta.
    Noise couplings: mw (-eta c, c); naive (1, 0); eco (1, (1-beta)/(eta beta)).
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if not stability_check(L, eta, beta):
        raise ValueError(f"unstable parameters: eta={eta} outside the stability interval")
    c = (1.0 - beta) * L
    a = 1.0 - eta * c
    b = -eta * beta
    d = beta
    if regime == "mw":
        b1, b2 = -eta * c, c
    elif regime == "naive":
        b1, b2 = 1.0, 0.0
    else:
        b1, b2 = 1.0, (1.0 - beta) / (eta * beta)
    return RegimeCoeffs(a, b, c, d, b1, b2)


def moment_step(mom: RegimeMoments, co: RegimeCoeffs, sigma2: float) -> RegimeMoments:
    """One step of the second-moment recursion driven by noise variance sigma2."""
    a, b, c, d = co.a, co.b, co.c, co.d
    u = a * a * mom.u + 2.0 * a * b * mom.v + b * b * mom.w + co.B1 * co.B1 * sigma2
    v = a * c * mom.u + (a * d + b * c) * mom.v + b * d * mom.w + co.B1 * co.B2 * sigma2
    w = c * c * mom.u + 2.0 * c * d * mom.v + d * d * mom.w + co.B2 * co.B2 * sigma2
    return RegimeMoments(u, v, w)


def _closed_form_u(regime: str, L: float, eta: float, beta: float, sigma2: float) -> float:
    if regime == "mw":
        return L * eta * sigma2 * (1.0 + beta) / (2.0 * (1.0 + beta) - L * eta * (1.0 - beta))
    if regime == "naive":
        num = (1.0 - beta ** 2) + 2.0 * beta * L * eta
        den = L * eta * (2.0 * (1.0 - beta ** 2) - L * eta * (1.0 - beta) ** 2)
        return sigma2 * num / den
    return 2.0 * sigma2 / (2.0 * (1.0 - beta ** 2) - L * eta * (1.0 - beta) ** 2)


def _complete_vw(u: float, co: RegimeCoeffs, sigma2: float) -> tuple:
    # stationarity of the v and w recursions is linear in (v, w) once u is known
    a, b, c, d = co.a, co.b, co.c, co.d
    mat = np.array([
        [1.0 - (a * d + b * c), -b * d],
        [-2.0 * c * d, 1.0 - d * d],
    ])
    rhs = np.array([
        a * c * u + co.B1 * co.B2 * sigma2,
        c * c * u + co.B2 * co.B2 * sigma2,
    ])
    v, w = np.linalg.solve(mat, rhs)
    return float(v), float(w)


def stationary_moments_closed(regime: str, L: float, eta: float, beta: float,
                              sigma2: float) -> RegimeMoments:
    """Stationary (u, v, w) from the closed-form u plus exact back-substitution."""
    co = regime_coeffs(regime, L, eta, beta)
    u = _closed_form_u(regime, L, eta, beta, sigma2)
    if not u >= 0:
        raise ValueError("closed-form denominator is not positive; parameters unstable")
    v, w = _complete_vw(u, co, sigma2)
    return RegimeMoments(u, v, w)


def stationary_moments_iterated(regime: str, L: float, eta: float, beta: float,
                                sigma2: float, tol: float = 1e-12,
                                max_iter: int = 50_000_000) -> RegimeMoments:
    """Stationary moments by fixed-point iteration of the one-step recursion.

    The stopping rule accounts for the mixing speed: with per-iteration
    contraction rho, a successive difference of eps implies a remaining error
    of about eps * rho / (1 - rho), so the iteration runs until the implied
    tail is below ``tol`` (or the floating-point noise floor).
    """
    co = regime_coeffs(regime, L, eta, beta)
    eigs = np.linalg.eigvals(np.array([[co.a, co.b], [co.c, co.d]]))
    contraction = float(np.max(np.abs(eigs))) ** 2
    contraction = min(contraction, 1.0 - 1e-12)
    diff_tol = tol * (1.0 - contraction) / max(contraction, 0.5)
    a, b, c, d, b1, b2 = co.a, co.b, co.c, co.d, co.B1, co.B2
    nu = b1 * b1 * sigma2
    nv = b1 * b2 * sigma2
    nw = b2 * b2 * sigma2
    u = v = w = 0.0
    for i in range(max_iter):
        u1 = a * a * u + 2.0 * a * b * v + b * b * w + nu
        v1 = a * c * u + (a * d + b * c) * v + b * d * w + nv
        w1 = c * c * u + 2.0 * c * d * v + d * d * w + nw
        scale = max(1.0, abs(u1), abs(v1), abs(w1))
        floor = 2e-16 * scale
        if (abs(u1 - u) <= max(diff_tol, floor) and abs(v1 - v) <= max(diff_tol, floor)
                and abs(w1 - w) <= max(diff_tol, floor)):
            return RegimeMoments(u1, v1, w1)
        u, v, w = u1, v1, w1
    raise RuntimeError("moment iteration did not converge")


def stationary_moments(regime: str, L: float, eta: float, beta: float,
                       sigma2: float) -> RegimeMoments:
    """Stationary moments, computed two independent ways and cross-checked.

    The closed-form evaluation and the fixed-point iteration of the one-step
    recursion must agree to 1e-10 in every component; disagreement raises,
    guarding against transcription errors in either route.
    """
    closed = stationary_moments_closed(regime, L, eta, beta, sigma2)
    iterated = stationary_moments_iterated(regime, L, eta, beta, sigma2)
    scale = max(1.0, abs(closed.u), abs(closed.v), abs(closed.w))
    for name in ("u", "v", "w"):
        dc = abs(getattr(closed, name) - getattr(iterated, name))
        if dc > 1e-9 * scale:
            raise RuntimeError(
                f"stationary {name} disagrees between closed form and iteration "
                f"({getattr(closed, name)} vs {getattr(iterated, name)})"
            )
    return closed


def stationary_grad_sq(regime: str, L: float, eta: float, beta: float,
                       sigma2: float) -> float:
    """Stationary E[(L * xhat)^2] of the quantized coordinate the model sees.

    The master-weight regime stores a high-precision x and shows the model
    x + xi, so its metric is L^2 (u + sigma2); the other regimes' state is the
    quantized value itself, giving L^2 u.
    """
    u = stationary_moments(regime, L, eta, beta, sigma2).u
    if regime == "mw":
        return L ** 2 * (u + sigma2)
    return L ** 2 * u


def monte_carlo_1d(regime: str, L: float, eta: float, beta: float, delta: float,
                   steps: int, burn_in: int | None = None, seed: int = 0,
                   x0: float = 0.0, m0: float = 0.0,
                   force_python: bool = False) -> float:
    """Empirical stationary E[xhat^2] from simulating the exact regime recursion.

    Quantization is the additive-dither model: xhat = x + xi with xi uniform
    on [-delta/2, delta/2], so sigma2 = delta^2 / 12. Burn-in defaults to 20%
    of the run. Divergent trajectories raise instead of being averaged.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if not stability_check(L, eta, beta):
        raise ValueError("unstable parameters for the Monte Carlo run")
    if burn_in is None:
        burn_in = steps // 5
    res = simulate_second_moment(regime, L, eta, beta, delta, steps, burn_in, seed,
                                 x0=x0, m0=m0, force_python=force_python)
    if res.diverged or not np.isfinite(res.mean_sq):
        raise SimulationDiverged(
            f"{regime} trajectory diverged (eta={eta}, beta={beta}, delta={delta})"
        )
    return res.mean_sq


def memory_bytes_per_param(weights_format: str, master: str | None = "none",
                           m_format: str = "none", v_format: str | None = "none") -> float:
    """Static bytes per parameter across all persistent buffers.

    Formats: fp32=4, bf16=2, fp8=1, int4=0.5, none=0. ``master`` and
    ``v_format`` accept None as an alias for "none".
    """
    total = 0.0
    for label, fmt in (("weights", weights_format), ("master", master),
                       ("m", m_format), ("v", v_format)):
        fmt = "none" if fmt is None else fmt
        if fmt not in FORMAT_BYTES:
            raise ValueError(f"unknown {label} format {fmt!r}; expected one of {sorted(FORMAT_BYTES)}")
        total += FORMAT_BYTES[fmt]
    return total
