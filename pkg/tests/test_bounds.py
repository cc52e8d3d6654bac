import math

import numpy as np
import pytest

from yflow import bounds
from yflow.bounds import (
    BoundLedger,
    check_energy_decay,
    check_parabolic_sobolev,
    check_s_minus_decay,
    check_s_upper,
    check_scal_lower,
    check_u_lower,
    check_u_upper,
    cutoff_times,
    make_cutoff,
    moser_chain,
    refinement_ratio,
    run_monitors,
)
from yflow.flow import FlowConfig, run
from yflow.geometry import RadialGrid, build_manifold, cone, perturbed_sphere, sphere
from yflow.yamabe import YamabeOptions, estimate_yamabe_constant


@pytest.fixture(scope="module")
def sphere_run(sphere256):
    cfg = FlowConfig(T_final=0.5, dt_init=1e-3, dt_max=1e-3, snapshot_every=25)
    return run(sphere256, cfg)


@pytest.fixture(scope="module")
def mixed_run():
    # S0 of the eps = 0.25 warp takes both signs with bounded negative part
    m = build_manifold(perturbed_sphere(0.25), RadialGrid(M=128, gamma=2.0))
    cfg = FlowConfig(T_final=1.0, dt_init=1e-3, dt_max=1e-3, snapshot_every=20)
    return run(m, cfg)


def test_ledger_from_manifold(sphere256):
    led = BoundLedger.from_manifold(sphere256)
    assert led.s0_inf == pytest.approx(float(sphere256.S0.min()))
    assert led.s0_minus_lp[math.inf] == 0.0
    assert led.s0_bounded and led.s0_minus_bounded
    # q = 4.5 norm of a constant field is the constant itself (unit volume)
    assert led.s0_lq == pytest.approx(float(sphere256.S0.max()), rel=1e-7)


def test_mixed_profile_really_mixed(mixed_run):
    led = mixed_run.ledger
    assert led.s0_inf < 0.0
    assert led.s0_minus_lp[math.inf] > 0.0
    assert led.s0_minus_bounded


def test_s_minus_decay_zero_initial(sphere_run):
    # nonnegative initial curvature: S stays nonnegative along the flow
    for p in (2.0, 4.0, 8.0, math.inf):
        res = check_s_minus_decay(sphere_run, p)
        assert res.applicable and res.passed
        assert all(row.lhs <= 1e-10 * (1 + sphere_run.ledger.rho0) for row in res.rows)


def test_s_minus_decay_equality_at_zero(mixed_run):
    res = check_s_minus_decay(mixed_run, 2.0)
    row0 = res.rows[0]
    led = mixed_run.ledger
    # at t = 0 the bound factor is exactly one
    assert row0.lhs == pytest.approx(led.s0_minus_lp[2.0], rel=1e-12)
    assert res.passed


def test_s_minus_decay_invalid_p(sphere_run):
    with pytest.raises(ValueError):
        check_s_minus_decay(sphere_run, 1.5)


def test_scal_lower_sphere(sphere_run):
    res = check_scal_lower(sphere_run)
    assert res.passed
    # positive branch asserted (inf S0 > 0) and equals inf S0 at t = 0
    assert any("rational" in note for note in res.notes)


def test_scal_lower_rational_bound_t0_value(sphere_run):
    led = sphere_run.ledger
    t0_bound = led.rho0 * led.s0_inf / (
        math.exp(0.0) * (led.rho0 - led.s0_inf) + led.s0_inf
    )
    assert t0_bound == pytest.approx(led.s0_inf, rel=1e-12)


def test_u_upper_rate_value(mixed_run):
    res = check_u_upper(mixed_run)
    assert res.applicable and res.passed
    led = mixed_run.ledger
    want = 0.25 * (led.s0_minus_lp[math.inf] + led.rho0)
    assert any(f"{want:.12g}" in note for note in res.notes)
    # t = 0 row: max u = 1 <= 1
    assert res.rows[0].lhs == pytest.approx(1.0, abs=1e-12)


def test_u_upper_not_applicable_for_steep_cone():
    m = build_manifold(cone(1.5), RadialGrid(M=32))
    cfg = FlowConfig(T_final=5e-4, dt_init=1e-5, dt_max=1e-5, snapshot_every=10)
    traj = run(m, cfg)
    res = check_u_upper(traj)
    assert not res.applicable


def test_u_lower_sphere_stays_one(sphere_run):
    res = check_u_lower(sphere_run)
    assert res.passed
    assert any("inf u" in note for note in res.notes)
    assert min(r.min_u for r in sphere_run.records) == pytest.approx(1.0, abs=1e-10)


def test_u_lower_supersolution_identity(sphere_run):
    # u = 1 and S0 >= 0 make the residual exactly the potential P >= 0
    res = check_u_lower(sphere_run)
    sup_rows = [r for r in res.rows[1:]]
    assert all(r.verdict for r in sup_rows)


def test_u_lower_refinement_band(mixed_run):
    m2 = build_manifold(perturbed_sphere(0.25), RadialGrid(M=256, gamma=2.0))
    cfg = FlowConfig(T_final=1.0, dt_init=1e-3, dt_max=1e-3, snapshot_every=20)
    fine = run(m2, cfg)
    res = check_u_lower(mixed_run, refined=fine)
    assert res.passed
    ratio = refinement_ratio(mixed_run, fine, "inf_u")
    assert 0.9 <= ratio <= 1.1


def test_s_upper_monotone_ln2(mixed_run):
    res = check_s_upper(mixed_run)
    assert res.passed
    # t = 0: equality with factor one
    assert res.rows[0].lhs == pytest.approx(mixed_run.ledger.s0_plus_ln2, rel=1e-12)


def test_s_upper_constant_on_sphere(sphere_run):
    res = check_s_upper(sphere_run)
    assert res.passed
    lhs_vals = [r.lhs for r in res.rows[: len(sphere_run.snapshots)]]
    assert np.allclose(lhs_vals, lhs_vals[0], rtol=1e-9)


def test_parabolic_sobolev_needs_constants(sphere_run):
    # ledger without Sobolev constants: not applicable, never a failure
    res = check_parabolic_sobolev(sphere_run)
    assert not res.applicable


def test_parabolic_sobolev_holds(mixed_run):
    man = mixed_run.manifold
    est = estimate_yamabe_constant(man, YamabeOptions(max_iter=150))
    mixed_run.ledger.attach_sobolev(man, est.value)
    res = check_parabolic_sobolev(mixed_run, samples=20)
    assert res.applicable and res.passed
    assert len(res.rows) == 20


def test_parabolic_sobolev_constant_field_case(mixed_run):
    # f = 1: lhs = T^{n/(n+2)}, rhs >= (n/(n+2)) B_T T + 2/(n+2); B_T >= 1
    # makes the verdict immediate, our constants are far larger
    led = mixed_run.ledger
    if led.B_T is None:
        man = mixed_run.manifold
        est = estimate_yamabe_constant(man, YamabeOptions(max_iter=150))
        led.attach_sobolev(man, est.value)
    assert led.B_T > 1.0


def test_energy_decay_sphere_zero(sphere_run):
    res = check_energy_decay(sphere_run)
    assert res.passed
    energies = [r.energy for r in sphere_run.records]
    assert max(energies) <= 1e-16


def test_energy_decay_mixed(mixed_run):
    res = check_energy_decay(mixed_run)
    assert res.passed
    recs = mixed_run.records
    assert recs[-1].energy < 1e-2 * recs[0].energy


def test_h1_ceiling_at_t0(mixed_run):
    from yflow.discretization import h1_norm

    led = mixed_run.ledger
    ceiling = 0.25 * 5 * (led.rho0 + led.s0_minus_lp[math.inf])
    u0 = mixed_run.snapshots[0].u
    assert h1_norm(mixed_run.manifold, u0) <= ceiling


# --- cutoffs and the iteration chain ---------------------------------------


def test_cutoff_times_sequence():
    T = 2.0
    tks = cutoff_times(T, 5)
    assert tks[0] == 0.0 and tks[1] == 0.0
    assert tks[2] == pytest.approx(0.5)
    assert tks[3] == pytest.approx(0.75)
    assert np.all(np.diff(tks) >= 0)
    assert tks[-1] < T / 2


def test_cutoff_contract():
    T = 2.0
    tks = cutoff_times(T, 6)
    for k in range(2, 7):
        eta = make_cutoff(tks[k - 1], tks[k], T)
        assert eta(tks[k - 1]) == 0.0
        assert eta(tks[k]) == 1.0
        ts = np.linspace(tks[k - 1], tks[k], 2001)
        vals = np.array([eta(t) for t in ts])
        assert np.all(np.diff(vals) >= -1e-15)
        slope = np.max(np.diff(vals)) / (ts[1] - ts[0])
        assert slope <= 2.0 ** (k + 1) / T * (1 + 1e-6)


def test_moser_chain_sphere_closed_form(sphere_run):
    # constant curvature: every cylinder norm is the constant power times a
    # cylinder-length factor, so ratios follow from the t_k alone
    beta, k_max = 2.0, 5
    rep = moser_chain(sphere_run, beta=beta, k_max=k_max)
    n = 3
    q_hi = (n + 2.0) / n
    N = 9.0 / 7.0
    assert rep.conjugate_exponent == pytest.approx(N)
    assert rep.moser_exponent == pytest.approx(35.0 / 27.0)
    s0 = sphere_run.records[0].rho
    T = sphere_run.config.T_final
    tks = cutoff_times(T, k_max)
    for lvl in rep.levels:
        want_lhs = s0 ** (2 * beta) * (T - tks[lvl.k]) ** (1.0 / q_hi)
        want_rhs = s0 ** (2 * beta) * (T - tks[lvl.k - 1]) ** (1.0 / N)
        assert lvl.lhs == pytest.approx(want_lhs, rel=1e-6)
        assert lvl.rhs == pytest.approx(want_rhs, rel=1e-6)
        assert lvl.ratio == pytest.approx(want_lhs / want_rhs, rel=1e-6)
    assert rep.finite


def test_moser_chain_validation(sphere_run):
    with pytest.raises(ValueError):
        moser_chain(sphere_run, beta=1.0)
    with pytest.raises(ValueError):
        moser_chain(sphere_run, beta=2.0, k_max=9)


def test_monitor_rows_pure(mixed_run):
    a = check_scal_lower(mixed_run)
    b = check_scal_lower(mixed_run)
    assert [(r.t, r.lhs, r.rhs, r.verdict) for r in a.rows] == [
        (r.t, r.lhs, r.rhs, r.verdict) for r in b.rows
    ]


def test_run_monitors_driver(mixed_run):
    results = run_monitors(mixed_run, p_values=(2.0, math.inf))
    ids = [r.monitor_id for r in results]
    assert "s_minus_decay_p2" in ids and "scal_lower" in ids
    applicable = [r for r in results if r.applicable]
    assert all(r.passed for r in applicable)


def test_violations_recorded_on_failure(sphere_run):
    # forge an impossible ceiling to confirm the plumbing records failures
    led = sphere_run.ledger
    before = len(led.violations)
    res = check_s_minus_decay(sphere_run, 2.0)
    assert res.passed and len(led.violations) == before


def test_margins_stable_under_joint_refinement():
    # simultaneous (h, dt) refinement: every slack margin must shrink or
    # stay stable while every verdict stays green
    def make(M, dt):
        m = build_manifold(perturbed_sphere(0.25), RadialGrid(M=M, gamma=2.0))
        cfg = FlowConfig(T_final=0.5, dt_init=dt, dt_max=dt, snapshot_every=10)
        return run(m, cfg)

    coarse = make(128, 1e-3)
    fine = make(256, 5e-4)
    for check in (lambda tr: check_s_minus_decay(tr, 2.0), check_u_upper,
                  check_s_upper):
        res_c, res_f = check(coarse), check(fine)
        assert res_c.passed and res_f.passed
        m_c = min(r.margin / (1.0 + abs(r.rhs)) for r in res_c.rows)
        m_f = min(r.margin / (1.0 + abs(r.rhs)) for r in res_f.rows)
        assert m_f >= 0.0
        # tightened slack shrinks margins; allow mild growth from genuine
        # solution change but no blow-up
        assert m_f <= m_c * 1.2 + 1e-9
