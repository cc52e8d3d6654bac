"""A-posteriori monitors for the flow's quantitative bounds.

Each monitor is a pure function of a finished trajectory (plus its ledger
of initial-data constants): re-running monitors on a restored trajectory
gives identical verdicts, and no monitor can alter the flow.

Slack discipline: inequalities with explicit constants are asserted with
multiplicative slack ``1 + 10 h^2 + 10 dt`` (h the widest grid face, dt
the largest accepted step) plus a tiny absolute floor for zero right-hand
sides.  Where the underlying constant is non-constructive, the monitor
instead asserts refinement stability: the quantity's ratio between a run
and its grid-doubled twin must land in [0.9, 1.1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .discretization import critical_exponent, h1_norm, kappa, laplacian, lp_norm
from .geometry import DiscretizedManifold

__all__ = [
    "BoundLedger",
    "MonitorRow",
    "MonitorResult",
    "check_s_minus_decay",
    "check_scal_lower",
    "check_u_upper",
    "check_u_lower",
    "check_s_upper",
    "check_parabolic_sobolev",
    "check_energy_decay",
    "moser_chain",
    "ChainLevel",
    "ChainReport",
    "cutoff_times",
    "make_cutoff",
    "refinement_ratio",
    "run_monitors",
    "MONITOR_NAMES",
]

P_DEFAULT = (2.0, 4.0, 8.0, math.inf)
REFINE_BAND = (0.9, 1.1)


@dataclass
class BoundLedger:
    """Constants of the initial data plus running extrema of a flow run."""

    rho0: float = math.nan
    s0_minus_lp: Dict[float, float] = field(default_factory=dict)
    s0_inf: float = math.nan
    s0_sup: float = math.nan
    s0_lq: float = math.nan
    s0_plus_ln2: float = math.nan
    s0_bounded: bool = True
    s0_minus_bounded: bool = True
    sup_u: float = -math.inf
    inf_u: float = math.inf
    y_est: Optional[float] = None
    A0: Optional[float] = None
    B0: Optional[float] = None
    A_T: Optional[float] = None
    B_T: Optional[float] = None
    violations: List[tuple] = field(default_factory=list)

    @classmethod
    def from_manifold(cls, manifold: DiscretizedManifold, ps=P_DEFAULT) -> "BoundLedger":
        s0 = manifold.S0
        mu = manifold.mu_weights
        n = manifold.n
        sm = np.maximum(-s0, 0.0)
        led = cls()
        led.s0_minus_lp = {p: lp_norm(sm, p, mu) for p in ps}
        led.s0_inf = float(s0.min())
        led.s0_sup = float(np.abs(s0).max())
        led.s0_lq = lp_norm(s0, n * n / (2.0 * (n - 2.0)), mu)
        led.s0_plus_ln2 = lp_norm(np.maximum(s0, 0.0), n / 2.0, mu)
        led.s0_bounded = not manifold.s0_unbounded()
        led.s0_minus_bounded = not manifold.s0_minus_unbounded()
        return led

    def observe(self, state) -> None:
        self.sup_u = max(self.sup_u, float(state.u.max()))
        self.inf_u = min(self.inf_u, float(state.u.min()))

    def finalize(self, manifold: DiscretizedManifold) -> None:
        if not math.isfinite(self.sup_u):
            self.sup_u = math.nan
            self.inf_u = math.nan

    def attach_sobolev(self, manifold: DiscretizedManifold, y_est: float) -> None:
        from .yamabe import sobolev_constants

        sc = sobolev_constants(manifold, y_est, self.sup_u, self.inf_u)
        self.y_est = y_est
        self.A0, self.B0, self.A_T, self.B_T = sc.A0, sc.B0, sc.A_T, sc.B_T

    def describe(self) -> str:
        def fmt(v):
            if v is None:
                return "unavailable"
            return f"{v:.12g}"

        lines = [
            "bound ledger",
            f"  rho0          = {fmt(self.rho0)}",
            f"  inf S0        = {fmt(self.s0_inf)}",
            f"  ||S0||_Lq     = {fmt(self.s0_lq)}  (q = n^2/(2(n-2)))",
            f"  ||(S0)+||_n/2 = {fmt(self.s0_plus_ln2)}",
        ]
        for p in sorted(self.s0_minus_lp, key=lambda v: (v == math.inf, v)):
            tag = "inf" if p == math.inf else f"{p:g}"
            lines.append(f"  ||(S0)-||_L{tag} = {fmt(self.s0_minus_lp[p])}")
        lines += [
            f"  sup u / inf u = {fmt(self.sup_u)} / {fmt(self.inf_u)}",
            f"  Y estimate    = {fmt(self.y_est)}",
            f"  A0, B0        = {fmt(self.A0)}, {fmt(self.B0)}",
            f"  A(T), B(T)    = {fmt(self.A_T)}, {fmt(self.B_T)}",
            f"  violations    = {len(self.violations)}",
        ]
        return "\n".join(lines)


@dataclass
class MonitorRow:
    t: float
    lhs: float
    rhs: float
    margin: float           # slack remaining; negative means violated
    verdict: bool


@dataclass
class MonitorResult:
    monitor_id: str
    applicable: bool = True
    passed: bool = True
    rows: List[MonitorRow] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def add(self, t: float, lhs: float, rhs: float, verdict: bool) -> None:
        self.rows.append(MonitorRow(t, lhs, rhs, rhs - lhs, verdict))
        if not verdict:
            self.passed = False

    def record_violations(self, ledger: BoundLedger) -> None:
        for row in self.rows:
            if not row.verdict:
                ledger.violations.append(
                    (self.monitor_id, row.t, row.lhs, row.rhs, row.margin)
                )


def slack_epsilon(traj) -> float:
    dts = [r.dt for r in traj.records if r.dt > 0.0]
    dt_max = max(dts) if dts else 0.0
    return 10.0 * traj.manifold.h_max**2 + 10.0 * dt_max


def _upper_ok(lhs: float, rhs: float, eps: float, atol: float = 0.0) -> bool:
    return lhs <= rhs * (1.0 + eps) + atol


# ---------------------------------------------------------------------------
# explicit-constant monitors


def check_s_minus_decay(traj, p: float) -> MonitorResult:
    """Decay of the negative curvature part in L^p of the evolving metric.

    Asserts ``||S_-||_{L^p(g)}(t) <= exp(t n rho0 / (2p)) ||(S0)_-||_{L^p}``
    at every snapshot (p = inf uses the exponent's p -> inf limit, i.e. a
    constant bound).  An initially nonnegative S0 therefore forces S >= 0
    along the whole run, up to slack.
    """
    if p != math.inf and not 2.0 <= p:
        raise ValueError("p must lie in [2, inf]")
    led = traj.ledger
    res = MonitorResult(monitor_id=f"s_minus_decay_p{'inf' if p == math.inf else int(p)}")
    if p == math.inf and not led.s0_minus_bounded:
        res.applicable = False
        res.notes.append("(S0)_- unbounded at a cone tip; sup-norm bound unavailable")
        return res
    eps = slack_epsilon(traj)
    atol = 1e-10 * (1.0 + abs(led.rho0))
    base = led.s0_minus_lp.get(p)
    if base is None:
        mu = traj.manifold.mu_weights
        base = lp_norm(np.maximum(-traj.manifold.S0, 0.0), p, mu)
    n = traj.manifold.n
    for snap in traj.snapshots:
        sm = np.maximum(-snap.S, 0.0)
        lhs = lp_norm(sm, p, snap.gvol_weights)
        growth = 1.0 if p == math.inf else math.exp(snap.t * n * led.rho0 / (2.0 * p))
        rhs = growth * base
        res.add(snap.t, lhs, rhs * (1.0 + eps) + atol, _upper_ok(lhs, rhs, eps, atol))
    res.record_violations(led)
    return res


def check_scal_lower(traj) -> MonitorResult:
    """Uniform lower bound on scalar curvature.

    ``S >= min(0, inf S0)`` always; when ``inf S0 > 0`` the sharper
    rational-in-time floor
    ``rho0 s_min / (exp(rho0 t)(rho0 - s_min) + s_min)`` is asserted too.
    """
    led = traj.ledger
    res = MonitorResult(monitor_id="scal_lower")
    eps = slack_epsilon(traj)
    s_min0 = led.s0_inf
    floor = min(0.0, s_min0)
    scale = 1.0 + abs(led.rho0)
    for snap in traj.snapshots:
        lhs = float(snap.S.min())
        tol = eps * scale
        res.add(snap.t, lhs, floor - tol, lhs >= floor - tol)
        if s_min0 > 0.0:
            denom = math.exp(led.rho0 * snap.t) * (led.rho0 - s_min0) + s_min0
            bound = led.rho0 * s_min0 / denom
            res.add(snap.t, lhs, bound - tol, lhs >= bound - tol)
    if s_min0 > 0.0:
        res.notes.append("inf S0 > 0: rational positive-branch floor asserted as well")
    res.record_violations(led)
    return res


def check_u_upper(traj) -> MonitorResult:
    """Exponential ceiling on the conformal factor.

    ``max u(t) <= exp(C t)`` with the explicit rate
    ``C = (n-2)/4 (||(S0)_-||_inf + rho0)``; needs bounded (S0)_-.
    """
    led = traj.ledger
    res = MonitorResult(monitor_id="u_upper")
    if not led.s0_minus_bounded:
        res.applicable = False
        res.notes.append("(S0)_- unbounded; exponential bound not applicable")
        return res
    n = traj.manifold.n
    C = 0.25 * (n - 2) * (led.s0_minus_lp[math.inf] + led.rho0)
    res.notes.append(f"rate C = {C:.12g}")
    eps = slack_epsilon(traj)
    for rec in traj.records:
        rhs = math.exp(C * rec.t)
        res.add(rec.t, rec.max_u, rhs * (1.0 + eps), _upper_ok(rec.max_u, rhs, eps))
    res.record_violations(led)
    return res


def check_u_lower(traj, refined=None) -> MonitorResult:
    """Positivity and supersolution structure of the conformal factor.

    (i) running ``inf u`` stays positive; (ii) with
    ``P = (n-2)/(4(n-1)) (S0 + (sup u)^{4/(n-2)} ||(S0)_-||_inf)`` each
    snapshot satisfies ``-Lap(u) + P u >= 0`` up to slack (the elliptic
    supersolution property behind the uniform lower bound); (iii) given a
    grid-doubled twin run, ``inf u`` must be refinement-stable.
    """
    led = traj.ledger
    man = traj.manifold
    n = man.n
    res = MonitorResult(monitor_id="u_lower")
    eps = slack_epsilon(traj)

    inf_u = min(r.min_u for r in traj.records)
    res.add(traj.records[-1].t, inf_u, 0.0, inf_u > 0.0)
    res.notes.append(f"running inf u = {inf_u:.12g}")

    if led.s0_minus_bounded:
        pfield = (n - 2) / (4.0 * (n - 1)) * (
            man.S0 + led.sup_u ** (4.0 / (n - 2)) * led.s0_minus_lp[math.inf]
        )
        for snap in traj.snapshots:
            resid = -laplacian(man, snap.u) + pfield * snap.u
            scale = 1.0 + float(np.abs(pfield * snap.u).max())
            lhs = float(resid.min())
            tol = eps * scale
            res.add(snap.t, lhs, -tol, lhs >= -tol)
    else:
        res.notes.append("supersolution check skipped: (S0)_- unbounded")

    if refined is not None:
        inf_f = min(r.min_u for r in refined.records)
        ratio = inf_u / inf_f if inf_f > 0 else math.inf
        ok = REFINE_BAND[0] <= ratio <= REFINE_BAND[1]
        res.add(traj.records[-1].t, ratio, REFINE_BAND[1], ok)
        res.notes.append(f"inf u refinement ratio = {ratio:.6g}")
    res.record_violations(led)
    return res


def check_s_upper(traj, refined=None) -> MonitorResult:
    """Curvature ceilings: monotone L^{n/2} norm plus structural bounds.

    (i) ``||S_+||_{L^{n/2}(g)}(t) <= ||(S0)_+||_{L^{n/2}}`` with slack;
    (ii) the late-time sup of max|S| and (iii) the time integral of the
    high L^q curvature norm are asserted finite, and refinement-stable
    when a grid-doubled twin is supplied (their constants are
    non-constructive, so no explicit level is asserted).
    """
    led = traj.ledger
    n = traj.manifold.n
    res = MonitorResult(monitor_id="s_upper")
    eps = slack_epsilon(traj)
    atol = 1e-10 * (1.0 + abs(led.rho0))
    for snap in traj.snapshots:
        lhs = lp_norm(np.maximum(snap.S, 0.0), n / 2.0, snap.gvol_weights)
        rhs = led.s0_plus_ln2
        res.add(snap.t, lhs, rhs * (1.0 + eps) + atol, _upper_ok(lhs, rhs, eps, atol))

    late = _late_sup_abs_s(traj)
    res.notes.append(f"sup over [T/2, T] of max|S| = {late:.12g}")
    res.add(traj.records[-1].t, late, math.inf, math.isfinite(late))

    integral = _s_high_norm_time_integral(traj)
    res.notes.append(f"time integral of high-Lq curvature norm = {integral:.12g}")
    res.add(traj.records[-1].t, integral, math.inf, math.isfinite(integral))

    if refined is not None:
        for label, fn in (("late_sup", _late_sup_abs_s),
                          ("time_integral", _s_high_norm_time_integral)):
            ratio = fn(traj) / fn(refined)
            ok = REFINE_BAND[0] <= ratio <= REFINE_BAND[1]
            res.add(traj.records[-1].t, ratio, REFINE_BAND[1], ok)
            res.notes.append(f"{label} refinement ratio = {ratio:.6g}")
    res.record_violations(led)
    return res


def _late_sup_abs_s(traj) -> float:
    T = traj.config.T_final
    vals = [max(abs(r.min_S), abs(r.max_S)) for r in traj.records if r.t >= 0.5 * T - 1e-14]
    return max(vals) if vals else math.nan


def _s_high_norm_time_integral(traj) -> float:
    """int_0^T ( int |S|^q dVol_g )^{(n-2)/n} dt with q = n^2/(2(n-2))."""
    n = traj.manifold.n
    q = n * n / (2.0 * (n - 2.0))
    ts = np.array([s.t for s in traj.snapshots])
    vals = np.array(
        [float(np.sum(s.gvol_weights * np.abs(s.S) ** q)) ** ((n - 2.0) / n)
         for s in traj.snapshots]
    )
    return float(np.trapezoid(vals, ts))


# ---------------------------------------------------------------------------
# parabolic Sobolev inequality


def _weighted_dirichlet(manifold, f, node_weight) -> float:
    # int w^2 |grad f|^2 d(mu) with w averaged onto faces
    wf = 0.5 * (node_weight[:-1] + node_weight[1:])
    df = np.diff(f) / manifold.face_h
    return float(np.sum(manifold.face_weights * wf**2 * df * df * manifold.face_h))


def _sample_spacetime_fields(traj, samples: int, seed: int):
    """Deterministic test family: polynomials in x times smooth time cutoffs."""
    man = traj.manifold
    xi = man.nodes / man.x_max
    T = traj.config.T_final
    rng = np.random.default_rng(seed)
    fields = [("const", lambda t, xi=xi: np.ones_like(xi))]

    def u_interp(t):
        snaps = traj.snapshots
        ts = [s.t for s in snaps]
        j = int(np.searchsorted(ts, t))
        j = min(max(j, 0), len(snaps) - 1)
        return snaps[j].u

    fields.append(("u_along_run", u_interp))
    for j in range(max(samples - 2, 0)):
        coeff = rng.uniform(-1.0, 1.0, size=5)
        a = rng.uniform(0.0, 0.5)
        b = rng.uniform(a + 0.2, 1.0)

        def make(coeff=coeff, a=a, b=b):
            def f(t, xi=xi):
                s = min(max((t / T - a) / (b - a), 0.0), 1.0)
                ramp = s * s * (3.0 - 2.0 * s)
                poly = (coeff[0] + coeff[1] * xi + coeff[2] * xi**2
                        + coeff[3] * xi**3 + coeff[4] * xi**4)
                return (0.25 + 0.75 * ramp) * poly

            return f

        fields.append((f"poly_{j}", make()))
    return fields


def check_parabolic_sobolev(traj, samples: int = 20, seed: int = 2024) -> MonitorResult:
    """Space-time Sobolev inequality with the flow-adapted constants.

    For each sampled field f the inequality
    ``||f^2||_{L^{(n+2)/n}(M_T,g)} <= n/(n+2) (A_T ||grad f||^2 + B_T
    ||f||^2) + 2/(n+2) sup_t ||f(t)||^2`` is evaluated by quadrature over
    the trajectory's evolving measure.  Needs A(T), B(T) in the ledger.
    """
    led = traj.ledger
    res = MonitorResult(monitor_id="parabolic_sobolev")
    if led.A_T is None or led.B_T is None:
        res.applicable = False
        res.notes.append("Sobolev constants unavailable (no Yamabe estimate or S0 unbounded)")
        return res
    man = traj.manifold
    n = man.n
    eps = slack_epsilon(traj)
    q = (n + 2.0) / n
    ts = np.array([s.t for s in traj.snapshots])
    for name, ffun in _sample_spacetime_fields(traj, samples, seed):
        lhs_t = np.empty(ts.size)
        grad_t = np.empty(ts.size)
        l2_t = np.empty(ts.size)
        for i, snap in enumerate(traj.snapshots):
            fv = np.asarray(ffun(snap.t), dtype=float)
            gw = snap.gvol_weights
            lhs_t[i] = float(np.sum(gw * np.abs(fv) ** (2.0 * q)))
            grad_t[i] = _weighted_dirichlet(man, fv, snap.u)
            l2_t[i] = float(np.sum(gw * fv * fv))
        lhs = float(np.trapezoid(lhs_t, ts)) ** (1.0 / q)
        rhs = (
            n / (n + 2.0)
            * (led.A_T * float(np.trapezoid(grad_t, ts)) + led.B_T * float(np.trapezoid(l2_t, ts)))
            + 2.0 / (n + 2.0) * float(l2_t.max())
        )
        ok = _upper_ok(lhs, rhs, eps)
        res.add(ts[-1], lhs, rhs * (1.0 + eps), ok)
        if not ok:
            res.notes.append(f"violated by field {name}")
    res.record_violations(led)
    return res


# ---------------------------------------------------------------------------
# energy decay


def check_energy_decay(traj, window: int = 5, trend_slack: float = 1e-6) -> MonitorResult:
    """Decay of the curvature-normalization energy and the H^1 ceiling.

    ``int (S - rho)^2 dVol_g`` must be non-increasing in trend (after
    averaging over `window` snapshots), and ``||u||_{H^1}`` must stay
    below the explicit ceiling ``(n+2)/4 (rho0 + ||(S0)_-||_inf)``.
    """
    led = traj.ledger
    res = MonitorResult(monitor_id="energy_decay")
    energies = np.array([r.energy for r in traj.records])
    ts = traj.times
    if energies.size > window:
        kernel = np.ones(window) / window
        smooth = np.convolve(energies, kernel, mode="valid")
        tsm = ts[window - 1:]
        for i in range(1, smooth.size):
            ok = smooth[i] <= smooth[i - 1] + trend_slack * (1.0 + smooth[i - 1])
            if not ok:
                res.add(float(tsm[i]), float(smooth[i]), float(smooth[i - 1]), False)
        if res.passed:
            res.add(float(tsm[-1]), float(smooth[-1]), float(smooth[0]), True)
    res.notes.append(
        f"energy initial {energies[0]:.12g} final {energies[-1]:.12g}"
    )

    if led.s0_minus_bounded:
        n = traj.manifold.n
        ceiling = 0.25 * (n + 2) * (led.rho0 + led.s0_minus_lp[math.inf])
        eps = slack_epsilon(traj)
        for snap in traj.snapshots:
            lhs = h1_norm(traj.manifold, snap.u)
            res.add(snap.t, lhs, ceiling * (1.0 + eps), _upper_ok(lhs, ceiling, eps))
    res.record_violations(led)
    return res


# ---------------------------------------------------------------------------
# iteration chain diagnostics


def cutoff_times(T: float, k_max: int) -> List[float]:
    """Nested cylinder start times (1/2 - 1/2^k) T, clamped at zero."""
    return [max(0.0, (0.5 - 0.5**k) * T) for k in range(0, k_max + 1)]


def make_cutoff(t_lo: float, t_hi: float, T: float):
    """Monotone piecewise-cubic ramp: 0 before t_lo, 1 after t_hi.

    The smoothstep's max slope is 1.5/(t_hi - t_lo) <= 2^{k+1}/T for the
    level-k window, inside the required derivative budget.
    """
    if t_hi <= t_lo:
        return lambda t: 1.0

    def eta(t):
        s = min(max((t - t_lo) / (t_hi - t_lo), 0.0), 1.0)
        return s * s * (3.0 - 2.0 * s)

    return eta


@dataclass
class ChainLevel:
    k: int
    t_k: float
    lhs: float        # ||S_+^{2 beta}||_{L^{(n+2)/n}} on the level-k cylinder
    rhs: float        # ||S_+^{2 beta}||_{L^{N}} on the previous cylinder
    ratio: float


@dataclass
class ChainReport:
    beta: float
    k_max: int
    conjugate_exponent: float     # N = n^2/(n^2 - 2n + 4)
    moser_exponent: float         # (n+2)/(n N) = (n^3 + 8)/n^3
    levels: List[ChainLevel] = field(default_factory=list)
    cutoffs: List[object] = field(default_factory=list)

    @property
    def finite(self) -> bool:
        return all(math.isfinite(l.lhs) and math.isfinite(l.rhs) for l in self.levels)

    def describe(self) -> str:
        lines = [
            f"iteration chain: beta = {self.beta:g}, "
            f"N = {self.conjugate_exponent:.12g}, "
            f"bootstrap exponent = {self.moser_exponent:.12g}",
            f"{'k':>3} {'t_k':>12} {'lhs':>18} {'rhs':>18} {'ratio':>12}",
        ]
        for l in self.levels:
            lines.append(
                f"{l.k:>3} {l.t_k:>12.6g} {l.lhs:>18.10g} {l.rhs:>18.10g} {l.ratio:>12.6g}"
            )
        return "\n".join(lines)


def _cylinder_norm(traj, power: float, q: float, t_lo: float) -> float:
    """||S_+^{power}||_{L^q} over M x [t_lo, T] in the evolving measure."""
    ts = np.array([s.t for s in traj.snapshots])
    vals = np.array(
        [float(np.sum(s.gvol_weights * np.maximum(s.S, 0.0) ** (power * q)))
         for s in traj.snapshots]
    )
    if t_lo <= ts[0]:
        return float(np.trapezoid(vals, ts)) ** (1.0 / q)
    j = int(np.searchsorted(ts, t_lo))
    if j >= ts.size:
        return 0.0
    # linear interpolation of the integrand at the cylinder base
    if j > 0 and ts[j] > t_lo:
        w = (t_lo - ts[j - 1]) / (ts[j] - ts[j - 1])
        v0 = (1 - w) * vals[j - 1] + w * vals[j]
        tcut = np.concatenate(([t_lo], ts[j:]))
        vcut = np.concatenate(([v0], vals[j:]))
    else:
        tcut, vcut = ts[j:], vals[j:]
    return float(np.trapezoid(vcut, tcut)) ** (1.0 / q)


def moser_chain(traj, beta: float, k_max: int = 6) -> ChainReport:
    """Norm bootstrap ledger over the nested space-time cylinders.

    For each level k the pair
    ``(||S_+^{2 beta}||_{L^{(n+2)/n}(M_k)}, ||S_+^{2 beta}||_{L^N(M_{k-1})})``
    is computed, with ``N = n^2/(n^2-2n+4)`` and cylinders
    ``M_k = M x [t_k, T]``.  Their ratios are diagnostics: the chain's
    constant is non-constructive, so only finiteness and refinement
    stability are asserted by callers.
    """
    if not beta > 1.0:
        raise ValueError("chain exponent beta must exceed 1")
    if not 1 <= k_max <= 8:
        raise ValueError("k_max must lie in [1, 8]")
    n = traj.manifold.n
    N = n * n / (n * n - 2.0 * n + 4.0)
    q_hi = (n + 2.0) / n
    T = traj.config.T_final
    tks = cutoff_times(T, k_max)
    report = ChainReport(
        beta=beta,
        k_max=k_max,
        conjugate_exponent=N,
        moser_exponent=q_hi / N,
    )
    for k in range(1, k_max + 1):
        report.cutoffs.append(make_cutoff(tks[k - 1], tks[k], T))
        lhs = _cylinder_norm(traj, 2.0 * beta, q_hi, tks[k])
        rhs = _cylinder_norm(traj, 2.0 * beta, N, tks[k - 1])
        if rhs > 0.0:
            ratio = lhs / rhs
        else:
            ratio = 0.0 if lhs == 0.0 else math.inf
        report.levels.append(ChainLevel(k=k, t_k=tks[k], lhs=lhs, rhs=rhs, ratio=ratio))
    return report


# ---------------------------------------------------------------------------
# refinement comparison and the monitor driver


def refinement_ratio(traj_coarse, traj_fine, quantity: str) -> float:
    """Coarse/fine ratio of a trajectory summary (expected near 1)."""
    fns = {
        "inf_u": lambda tr: min(r.min_u for r in tr.records),
        "late_sup_abs_s": _late_sup_abs_s,
        "s_time_integral": _s_high_norm_time_integral,
    }
    try:
        fn = fns[quantity]
    except KeyError:
        raise ValueError(f"unknown refinement quantity {quantity!r}") from None
    return fn(traj_coarse) / fn(traj_fine)


MONITOR_NAMES = (
    "s_minus_decay",
    "scal_lower",
    "u_upper",
    "u_lower",
    "s_upper",
    "parabolic_sobolev",
    "energy_decay",
)


def run_monitors(
    traj,
    names=MONITOR_NAMES,
    p_values=P_DEFAULT,
    refined=None,
    sobolev_samples: int = 20,
    seed: int = 2024,
) -> List[MonitorResult]:
    out: List[MonitorResult] = []
    for name in names:
        if name == "s_minus_decay":
            out.extend(check_s_minus_decay(traj, p) for p in p_values)
        elif name == "scal_lower":
            out.append(check_scal_lower(traj))
        elif name == "u_upper":
            out.append(check_u_upper(traj))
        elif name == "u_lower":
            out.append(check_u_lower(traj, refined=refined))
        elif name == "s_upper":
            out.append(check_s_upper(traj, refined=refined))
        elif name == "parabolic_sobolev":
            out.append(check_parabolic_sobolev(traj, samples=sobolev_samples, seed=seed))
        elif name == "energy_decay":
            out.append(check_energy_decay(traj))
        else:
            raise ValueError(f"unknown monitor {name!r}")
    return out
