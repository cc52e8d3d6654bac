"""Discrete operators and norms on a radial manifold.

Fields are plain numpy arrays aligned with the manifold's nodes.  The
Laplacian is the conservative flux stencil ``(1/w) D(w Df)`` with weight
``w = phi^{n-1}`` sampled at the face midpoints and zero flux through both
ends.  This makes constants exactly harmonic and yields an exact discrete
integration-by-parts identity against :func:`dirichlet_form`, which the
variational quantities downstream rely on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DiscretizedManifold

__all__ = [
    "FieldAlignmentError",
    "kappa",
    "flow_exponent",
    "critical_exponent",
    "check_field",
    "laplacian",
    "conformal_laplacian",
    "dirichlet_form",
    "gradient",
    "integrate",
    "lp_norm",
    "h1_norm",
    "TridiagonalOperator",
]


class FieldAlignmentError(ValueError):
    """Field does not match the manifold's grid (length or finiteness)."""


def kappa(n: int) -> float:
    """Conformal Laplacian gradient coefficient 4(n-1)/(n-2)."""
    return 4.0 * (n - 1) / (n - 2)


def flow_exponent(n: int) -> float:
    """(n+2)/(n-2), the conformal-factor power in the flow equation."""
    return (n + 2.0) / (n - 2.0)


def critical_exponent(n: int) -> float:
    """2n/(n-2), the critical Sobolev exponent."""
    return 2.0 * n / (n - 2.0)


def check_field(manifold: DiscretizedManifold, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (manifold.node_count,):
        raise FieldAlignmentError(
            f"field of shape {f.shape} does not match {manifold.node_count} nodes"
        )
    if not np.all(np.isfinite(f)):
        bad = int(np.argmax(~np.isfinite(f)))
        raise FieldAlignmentError(f"non-finite field entry at node {bad}")
    return f


def _fluxes(manifold: DiscretizedManifold, f: np.ndarray) -> np.ndarray:
    return manifold.face_weights * np.diff(f) / manifold.face_h


def laplacian(manifold: DiscretizedManifold, f: np.ndarray) -> np.ndarray:
    """Weighted Laplace-Beltrami operator, zero-flux closure at the tips."""
    f = check_field(manifold, f)
    flux = _fluxes(manifold, f)
    out = np.zeros_like(f)
    out[:-1] += flux
    out[1:] -= flux
    return out / manifold.mu_weights


def conformal_laplacian(manifold: DiscretizedManifold, f: np.ndarray) -> np.ndarray:
    """S0 f - (4(n-1)/(n-2)) Laplacian(f)."""
    return manifold.S0 * f - kappa(manifold.n) * laplacian(manifold, f)


def dirichlet_form(manifold: DiscretizedManifold, f: np.ndarray, g=None) -> float:
    """Face-based energy pairing; the exact adjoint of :func:`laplacian`.

    ``sum_i mu_i (Lap f)_i g_i == -dirichlet_form(f, g)`` holds to rounding.
    """
    f = check_field(manifold, f)
    g = f if g is None else check_field(manifold, g)
    df = np.diff(f) / manifold.face_h
    dg = df if g is f else np.diff(g) / manifold.face_h
    return float(np.sum(manifold.face_weights * df * dg * manifold.face_h))


def gradient(manifold: DiscretizedManifold, f: np.ndarray) -> np.ndarray:
    """Nodal radial derivative: centered in the interior, one-sided at tips."""
    f = check_field(manifold, f)
    x = manifold.nodes
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (x[2:] - x[:-2])
    out[0] = (f[1] - f[0]) / (x[1] - x[0])
    out[-1] = (f[-1] - f[-2]) / (x[-1] - x[-2])
    return out


def integrate(f: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sum(np.asarray(weights) * np.asarray(f)))


def lp_norm(f: np.ndarray, p: float, weights: np.ndarray) -> float:
    """L^p norm under the given node weights; p = inf is the node max."""
    if p != math.inf and p < 1.0:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    f = np.asarray(f, dtype=float)
    if p == math.inf:
        return float(np.max(np.abs(f)))
    return float(np.sum(np.asarray(weights) * np.abs(f) ** p)) ** (1.0 / p)


def h1_norm(manifold: DiscretizedManifold, f: np.ndarray) -> float:
    """First Sobolev norm sqrt(||f||_2^2 + ||f'||_2^2) in the background measure."""
    f = check_field(manifold, f)
    g = gradient(manifold, f)
    mu = manifold.mu_weights
    return math.sqrt(float(np.sum(mu * f * f)) + float(np.sum(mu * g * g)))


@dataclass
class TridiagonalOperator:
    """Tridiagonal matrix in (sub, diag, sup) form.

    ``sub[i]`` couples row i to node i-1 (sub[0] is unused), ``sup[i]`` to
    node i+1 (sup[-1] unused).  The Laplacian stencil has vanishing row
    sums, so constants are annihilated exactly.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    @classmethod
    def laplacian(cls, manifold: DiscretizedManifold) -> "TridiagonalOperator":
        cw = manifold.face_weights / manifold.face_h
        m = manifold.mu_weights
        npts = manifold.node_count
        sub = np.zeros(npts)
        diag = np.zeros(npts)
        sup = np.zeros(npts)
        sup[:-1] = cw / m[:-1]
        diag[:-1] -= cw / m[:-1]
        sub[1:] = cw / m[1:]
        diag[1:] -= cw / m[1:]
        return cls(sub=sub, diag=diag, sup=sup)

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        out = self.diag * f
        out[1:] += self.sub[1:] * f[:-1]
        out[:-1] += self.sup[:-1] * f[1:]
        return out

    def row_sums(self) -> np.ndarray:
        return self.sub + self.diag + self.sup

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        from scipy.linalg import solve_banded

        npts = self.diag.size
        ab = np.zeros((3, npts))
        ab[0, 1:] = self.sup[:-1]
        ab[1] = self.diag
        ab[2, :-1] = self.sub[1:]
        return solve_banded((1, 1), ab, rhs)
