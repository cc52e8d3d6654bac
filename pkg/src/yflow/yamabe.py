"""Variational quantities of the conformal class.

The evolving metric is ``g = u^{4/(n-2)} g0`` with conformal factor
``u > 0``.  Its scalar curvature, the volume-normalized average curvature,
the conformal Rayleigh quotient, and a projected-gradient estimate of the
quotient's infimum all live here, together with the derived Sobolev
constants.

The average curvature is computed from the Dirichlet-form expression
``rho = int kappa |grad u|^2 + S0 u^2 d(mu)``; because the discrete
integration by parts is exact, this agrees with ``int S dVol_g`` to
rounding whenever the volume is one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .discretization import (
    check_field,
    conformal_laplacian,
    critical_exponent,
    dirichlet_form,
    flow_exponent,
    kappa,
    laplacian,
    lp_norm,
)
from .geometry import DiscretizedManifold

__all__ = [
    "PositivityError",
    "VolumeError",
    "YamabeSignError",
    "FlowState",
    "RhoResult",
    "scalar_curvature_flow",
    "average_scalar",
    "yamabe_quotient",
    "YamabeOptions",
    "YamabeEstimate",
    "estimate_yamabe_constant",
    "SobolevConstants",
    "sobolev_constants",
]


class PositivityError(ValueError):
    """Conformal factor lost positivity."""

    def __init__(self, node: int, value: float):
        self.node = node
        self.value = value
        super().__init__(f"u must be positive: u[{node}] = {value:.6g}")


class VolumeError(ValueError):
    """Evolving volume drifted out of tolerance."""


class YamabeSignError(ValueError):
    """Positive Yamabe constant assumption violated."""


def _require_positive(u: np.ndarray) -> None:
    if np.any(u <= 0.0):
        bad = int(np.argmax(u <= 0.0))
        raise PositivityError(bad, float(u[bad]))


def scalar_curvature_flow(manifold: DiscretizedManifold, u: np.ndarray) -> np.ndarray:
    """Scalar curvature of ``u^{4/(n-2)} g0``: ``u^{-(n+2)/(n-2)} L0(u)``."""
    u = check_field(manifold, u)
    _require_positive(u)
    return conformal_laplacian(manifold, u) * u ** (-flow_exponent(manifold.n))


class RhoResult(NamedTuple):
    """Average curvature in both discrete forms plus their discrepancy."""

    value: float            # Dirichlet-form expression
    integral_form: float    # int S dVol_g
    discrepancy: float

    def __float__(self) -> float:
        return self.value


def average_scalar(
    manifold: DiscretizedManifold, u: np.ndarray, vol_tol: float = 1e-8
) -> RhoResult:
    """Volume-normalized average scalar curvature of the evolving metric."""
    u = check_field(manifold, u)
    _require_positive(u)
    mu = manifold.mu_weights
    vol = float(np.sum(mu * u ** critical_exponent(manifold.n)))
    if abs(vol - 1.0) > vol_tol:
        raise VolumeError(
            f"evolving volume {vol:.12g} is outside tolerance {vol_tol:g} of 1; "
            "renormalize the state first"
        )
    value = kappa(manifold.n) * dirichlet_form(manifold, u) + float(
        np.sum(mu * manifold.S0 * u * u)
    )
    # int S dVol_g = int L0(u) u d(mu); equal to `value` by exact discrete
    # integration by parts, kept as a cross-check
    integral = float(np.sum(mu * conformal_laplacian(manifold, u) * u))
    return RhoResult(value, integral, abs(value - integral))


@dataclass
class FlowState:
    """One snapshot of the conformal flow.

    ``S`` caches the scalar curvature of the current metric and ``rho`` its
    average; both are recomputed whenever ``u`` changes, so they are fresh
    by construction.  ``gvol_weights`` are the per-node weights of the
    evolving volume measure.
    """

    t: float
    u: np.ndarray
    S: np.ndarray
    rho: float
    gvol_weights: np.ndarray

    @classmethod
    def initial(
        cls,
        manifold: DiscretizedManifold,
        u: Optional[np.ndarray] = None,
        t: float = 0.0,
    ) -> "FlowState":
        if u is None:
            u = np.ones(manifold.node_count)
        u = check_field(manifold, u)
        _require_positive(u)
        p = critical_exponent(manifold.n)
        vol = float(np.sum(manifold.mu_weights * u**p))
        u = u * vol ** (-(manifold.n - 2.0) / (2.0 * manifold.n))
        return cls.from_u(manifold, u, t)

    @classmethod
    def from_u(cls, manifold: DiscretizedManifold, u: np.ndarray, t: float) -> "FlowState":
        S = scalar_curvature_flow(manifold, u)
        rho = average_scalar(manifold, u).value
        gvol = manifold.mu_weights * u ** critical_exponent(manifold.n)
        return cls(t=t, u=u, S=S, rho=rho, gvol_weights=gvol)

    @property
    def volume(self) -> float:
        return float(np.sum(self.gvol_weights))


def yamabe_quotient(manifold: DiscretizedManifold, v: np.ndarray) -> float:
    """Conformal Rayleigh quotient of a test field (scale invariant)."""
    v = check_field(manifold, v)
    denom = lp_norm(v, critical_exponent(manifold.n), manifold.mu_weights)
    if denom == 0.0:
        raise ValueError("yamabe quotient undefined for the zero field")
    energy = kappa(manifold.n) * dirichlet_form(manifold, v) + float(
        np.sum(manifold.mu_weights * manifold.S0 * v * v)
    )
    return energy / denom**2


@dataclass(frozen=True)
class YamabeOptions:
    max_iter: int = 300
    grad_tol: float = 1e-10
    step_init: float = 1.0
    backtrack: float = 0.5
    armijo_slope: float = 1e-4
    max_backtracks: int = 40
    multistart: int = 0     # extra seeded perturbation starts on top of v = 1
    seed: int = 0


@dataclass
class YamabeEstimate:
    """Upper bound on the Yamabe constant from gradient descent.

    The minimization runs over rotationally symmetric competitors only, so
    the true constant may be smaller; ``value`` is an upper bound by the
    line-search contract Q(v_k+1) <= Q(v_k).
    """

    value: float
    minimizer: np.ndarray
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def _descend(manifold, v0, opts) -> YamabeEstimate:
    n = manifold.n
    p = critical_exponent(n)
    kap = kappa(n)
    mu = manifold.mu_weights
    s0 = manifold.S0

    def normalize(v):
        return v / lp_norm(v, p, mu)

    def quotient(v):
        return kap * dirichlet_form(manifold, v) + float(np.sum(mu * s0 * v * v))

    v = normalize(v0)
    q = quotient(v)
    history = [q]
    step = opts.step_init
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        # mu-weighted gradient of Q at a p-normalized point
        grad = 2.0 * (
            conformal_laplacian(manifold, v) - q * np.abs(v) ** (p - 2.0) * v
        )
        gnorm2 = float(np.sum(mu * grad * grad))
        if gnorm2 <= opts.grad_tol**2:
            converged = True
            break
        alpha = step
        accepted = False
        for _ in range(opts.max_backtracks):
            trial = v - alpha * grad
            tn = lp_norm(trial, p, mu)
            if tn > 0.0:
                trial = trial / tn
                q_trial = quotient(trial)
                if q_trial <= q - opts.armijo_slope * alpha * gnorm2:
                    v, q = trial, q_trial
                    history.append(q)
                    step = alpha * 1.5
                    accepted = True
                    break
            alpha *= opts.backtrack
        if not accepted:
            # line search exhausted: flat to machine precision
            converged = True
            break
    return YamabeEstimate(
        value=min(history), minimizer=v, iterations=it, converged=converged,
        history=history,
    )


def estimate_yamabe_constant(
    manifold: DiscretizedManifold, opts: YamabeOptions = YamabeOptions()
) -> YamabeEstimate:
    """Projected gradient descent on the Rayleigh quotient.

    Starts from the constant field (deterministic); optional multistart
    adds seeded smooth perturbations and keeps the best run.  The recorded
    quotient sequence is non-increasing.
    """
    best = _descend(manifold, np.ones(manifold.node_count), opts)
    if opts.multistart > 0:
        rng = np.random.default_rng(opts.seed)
        xi = manifold.nodes / manifold.x_max
        for _ in range(opts.multistart):
            coeff = rng.uniform(-0.3, 0.3, size=3)
            v0 = 1.0 + coeff[0] * xi + coeff[1] * xi**2 + coeff[2] * np.sin(
                math.pi * xi
            )
            v0 = np.maximum(v0, 0.05)
            cand = _descend(manifold, v0, opts)
            if cand.value < best.value:
                best = cand
    return best


@dataclass
class SobolevConstants:
    """Background and flow-adapted Sobolev constants.

    ``A0 = kappa(n)/Y`` and ``B0 = sup|S0|/Y`` give the background
    inequality; along the flow they degrade via the conformal-factor
    extremes to ``A_T = A0 (sup u / inf u)^2`` and
    ``B_T = B0 (sup u)^2 / (inf u)^{2n/(n-2)}``.  ``B0``/``B_T`` are None
    when S0 is unbounded, in which case the inequality is unavailable.
    """

    A0: float
    B0: Optional[float]
    A_T: Optional[float]
    B_T: Optional[float]
    s0_sup: Optional[float]

    @property
    def available(self) -> bool:
        return self.B_T is not None


def sobolev_constants(
    manifold: DiscretizedManifold, y_est: float, sup_u: float, inf_u: float
) -> SobolevConstants:
    if not y_est > 0.0:
        raise YamabeSignError(
            f"positive Yamabe constant assumption violated (estimate {y_est:.6g})"
        )
    if not (inf_u > 0.0 and sup_u >= inf_u):
        raise ValueError("need sup_u >= inf_u > 0")
    A0 = kappa(manifold.n) / y_est
    if manifold.s0_unbounded():
        return SobolevConstants(A0=A0, B0=None, A_T=None, B_T=None, s0_sup=None)
    s0_sup = float(np.max(np.abs(manifold.S0)))
    B0 = s0_sup / y_est
    ratio = sup_u / inf_u
    A_T = A0 * ratio**2
    B_T = B0 * sup_u**2 / inf_u ** critical_exponent(manifold.n)
    return SobolevConstants(A0=A0, B0=B0, A_T=A_T, B_T=B_T, s0_sup=s0_sup)
