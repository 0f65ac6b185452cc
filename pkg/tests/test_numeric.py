import json
import math

import numpy as np
import pytest

from gradedsg import algebra as al
from gradedsg import backlund as bt
from gradedsg import numeric as nm
from gradedsg.errors import (CFLViolation, ConfigError, InconsistentSystem,
                             VelocityOutOfRange)


# ---------------------------------------------------------------------------
# parameter algebra

def test_structure_tensor_matches_symbolic_kernel():
    # all 16 basis products agree with the symbolic normalization at v = 1
    ctx = al.BT_CTX
    exprs = {"1": al.GradedExpr.rational(1, ctx)}
    for name in nm.BASIS[1:]:
        exprs[name] = al.gen(name, ctx)
    for i, bi in enumerate(nm.BASIS):
        for j, bj in enumerate(nm.BASIS):
            num = nm.GradedNumber.basis(bi) * nm.GradedNumber.basis(bj)
            sym = exprs[bi] * exprs[bj]
            expect = np.zeros(4)
            for key, coef in sym.terms.items():
                cf = key[3]
                idx = {al.CF_ONE: 0, al.CF_ALPHA: 1, ("L", "+"): 2,
                       ("L", "-"): 3}[cf]
                expect[idx] += float(coef)  # v-powers frozen to one
            assert np.allclose(num.coords, expect), (bi, bj)


def test_odd_squares_are_table_exact():
    psi = nm.GradedNumber.basis("lambda+") * 0.7
    sq = psi * psi
    assert sq.coords[1] == 0.0 and sq.coords[2] == 0.0 and sq.coords[3] == 0.0
    # lambda+^2 = v+ = 1 numerically; the pure-odd square of a single line
    # is scalar by the table, not by float cancellation
    assert sq.scalar_part == pytest.approx(0.49)


def test_fermion_bilinear_is_alpha_line():
    s = nm.FieldState.empty(L=2.0, h=0.25)
    s.psip[:] = 0.3
    s.psim[:] = -0.2
    s.X[:] = 0.0
    src = nm.fermion_source(s)
    # alpha (psi- psi+) = -psi- psi+ coefficient-wise, source = 2*that*sin(X/2)
    assert np.allclose(src, 0.0)  # sin(0) vanishes
    s.X[:] = math.pi
    src = nm.fermion_source(s)
    assert np.allclose(src, 2.0 * 0.2 * 0.3 * 1.0)


# ---------------------------------------------------------------------------
# kink and solver

def test_kink_values_and_limits():
    assert nm.kink(0.0) == pytest.approx(math.pi)
    assert nm.kink(-60.0) == pytest.approx(0.0, abs=1e-12)
    assert nm.kink(60.0) == pytest.approx(2 * math.pi, abs=1e-12)
    with pytest.raises(VelocityOutOfRange):
        nm.kink(0.0, v=1.0)


def test_static_kink_residual_fine_grid():
    assert nm.static_kink_residual(2.0 ** -9) < 1e-8


def test_second_order_stencil_refinement_plateau():
    # the plain second-order residual oracle decreases by ~4x per halving
    def res2(h):
        s = nm.kink_state(20.0, h)
        r = (s.X[:-2] - 2 * s.X[1:-1] + s.X[2:]) / (h * h) - np.sin(s.X[1:-1])
        return float(np.max(np.abs(r)))

    r1, r2 = res2(2.0 ** -6), res2(2.0 ** -7)
    assert 3.5 < r1 / r2 < 4.5


def test_energy_values():
    s = nm.kink_state(20.0, 2.0 ** -7)
    assert abs(nm.energy(s) - 8.0) < 1e-6
    v = 0.5
    gamma = 1 / math.sqrt(1 - v * v)
    sv = nm.kink_state(20.0, 2.0 ** -7, v=v)
    assert abs(nm.energy(sv) - 8.0 * gamma) < 1e-5


def test_leapfrog_vacuum_and_cfl():
    s0 = nm.FieldState.empty(5.0, 2.0 ** -5)
    out = nm.solve_leapfrog(s0, 1.0)
    assert np.all(out.X == 0.0)
    with pytest.raises(CFLViolation):
        nm.solve_leapfrog(s0, 1.0, dt=1.0)


def test_leapfrog_kink_accuracy_and_convergence():
    errs = {}
    for h in (2.0 ** -6, 2.0 ** -7):
        s0 = nm.kink_state(20.0, h, v=0.3)
        out = nm.solve_leapfrog(s0, 10.0, dt=h / 2)
        errs[h] = float(np.max(np.abs(out.X - nm.kink(out.x, out.t, 0.3))))
    assert errs[2.0 ** -7] < 1e-4
    assert 3.5 <= errs[2.0 ** -6] / errs[2.0 ** -7] <= 4.5


def test_energy_drift():
    s0 = nm.kink_state(20.0, 2.0 ** -7, v=0.3)
    e0 = nm.energy(s0)
    out = nm.solve_leapfrog(s0, 10.0, dt=s0.h / 8)
    assert abs(nm.energy(out) - e0) / e0 < 1e-6


# ---------------------------------------------------------------------------
# numeric Backlund map

@pytest.fixture(scope="module")
def body_spec():
    return bt.export_body_system(bt.BTSystem())


def test_body_bt_rejects_zero_parameter(body_spec):
    with pytest.raises(ConfigError):
        nm.BodyBT.from_spec(body_spec, 0.0)


def test_vacuum_seed_gives_kink(body_spec):
    for a in (1.0, 1.2, 0.8):
        body = nm.BodyBT.from_spec(body_spec, a)
        seed = nm.FieldState.empty(20.0, 2.0 ** -7)
        tgt = nm.integrate_bt_body(seed, body)
        exact = nm.kink(tgt.x, 0.0, body.kink_speed, 0.0)
        assert float(np.max(np.abs(tgt.X - exact))) < 1e-6
        # expected boost factor (p+q)/2 matches the profile steepness
        assert body.kink_gamma == pytest.approx(
            1 / math.sqrt(1 - body.kink_speed ** 2))


def test_bt_output_solves_classical_equation(body_spec):
    body = nm.BodyBT.from_spec(body_spec, 1.2)
    seed = nm.FieldState.empty(20.0, 2.0 ** -7)
    tgt = nm.integrate_bt_body(seed, body)
    dt = seed.h / 2
    levels = nm.bt_target_time_march(body, tgt, dt, 2)
    res = nm.classical_residual_on_grid(levels[1], levels[0], levels[2], dt)
    assert res < 1e-6


def test_kink_seed_accepted_and_corrupted_sign_rejected(body_spec):
    body = nm.BodyBT.from_spec(body_spec, 1.2)
    seed = nm.kink_state(20.0, 2.0 ** -7)
    out = nm.integrate_bt_body(seed, body)  # no exception
    assert np.all(np.isfinite(out.X))
    bad = nm.BodyBT(body.a, body.p, -body.q, body.arg_p, body.arg_q,
                    body.seed_body, body.target_body, body.spec)
    with pytest.raises(InconsistentSystem):
        nm.integrate_bt_body(seed, bad)


def test_seed_residual_bound(body_spec):
    # output residual stays within a modest multiple of the seed residual
    # plus the discretization budget (vacuum seed: exact zero seed residual)
    body = nm.BodyBT.from_spec(body_spec, 1.1)
    seed = nm.FieldState.empty(20.0, 2.0 ** -7)
    tgt = nm.integrate_bt_body(seed, body)
    dt = seed.h / 2
    levels = nm.bt_target_time_march(body, tgt, dt, 2)
    res = nm.classical_residual_on_grid(levels[1], levels[0], levels[2], dt)
    assert res <= 10.0 * 0.0 + 1e-6


# ---------------------------------------------------------------------------
# fermions

def test_fermions_zero_data_stay_zero():
    out = nm.integrate_fermions(lambda xm, xp: np.zeros_like(xm),
                                lambda xm: np.zeros_like(xm),
                                lambda xp: np.zeros_like(xp), h=2.0 ** -5)
    assert not np.any(out.u) and not np.any(out.w)


def test_fermions_zero_background_closed_form():
    out = nm.integrate_fermions(lambda xm, xp: np.zeros_like(xm),
                                lambda xm: np.ones_like(xm),
                                lambda xp: np.zeros_like(xp), h=2.0 ** -7)
    XM, XP = np.meshgrid(out.xm, out.xp, indexing="ij")
    exact_u = nm.bessel_series(XM * XP)
    assert float(np.max(np.abs(out.u - exact_u))) < 1e-6
    # the partner line integrates the first one: w = 2 d+ u
    s = XM * XP
    term = np.ones_like(s)
    w = np.zeros_like(s)
    for k in range(1, 40):
        term = term * (s / 4.0) / (k * k)
        with np.errstate(divide="ignore", invalid="ignore"):
            w += np.where(XP > 0, term * (2.0 * k) / XP, 0.0)
    w[:, 0] = out.xm / 2.0  # limit of the series on the edge
    assert float(np.max(np.abs(out.w - w))) < 1e-6


def test_fermions_kink_background_residual():
    out = nm.integrate_fermions(lambda xm, xp: nm.kink((xp + xm) / 2.0),
                                lambda xm: np.exp(-xm),
                                lambda xp: np.zeros_like(xp), h=2.0 ** -7)
    assert max(out.residual_plus, out.residual_minus) < 1e-5


def test_fermions_refinement_study():
    errs = {}
    for h in (2.0 ** -5, 2.0 ** -6):
        out = nm.integrate_fermions(lambda xm, xp: np.zeros_like(xm),
                                    lambda xm: np.ones_like(xm),
                                    lambda xp: np.zeros_like(xp), h=h,
                                    richardson=False)
        XM, XP = np.meshgrid(out.xm, out.xp, indexing="ij")
        errs[h] = float(np.max(np.abs(out.u - nm.bessel_series(XM * XP))))
    assert 3.5 < errs[2.0 ** -5] / errs[2.0 ** -6] < 4.5


# ---------------------------------------------------------------------------
# CSV output

def test_csv_dump(tmp_path):
    s = nm.kink_state(2.0, 0.5)
    path = tmp_path / "out.csv"
    nm.dump_csv(str(path), [s], {"check": "test", "h": 0.5})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    header = json.loads(lines[0][2:])
    assert header["check"] == "test"
    assert lines[1] == ("t,x,X,psi_plus_lambda_plus_coeff,"
                        "psi_minus_lambda_minus_coeff,residual")
    assert len(lines) == 2 + len(s.x)
