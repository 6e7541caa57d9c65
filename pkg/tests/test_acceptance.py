"""End-to-end acceptance gate.

Eight independent criteria, one test each, every test printing a single
PASS/FAIL line with the measured worst-case numbers so the run can be audited
from the pytest output alone. Tolerances are fixed here on purpose; loosening
them is a contract change, not a tuning knob.
"""

import time

import numpy as np
import pytest

from finsler2d import (Circle, Connection, FiberProfileMetric, FourierProfile,
                       RandersMetric, RiemannianMetric, RiemannianNormProfile,
                       DifferenceData, NavigationData, ShiftedEllipsoid,
                       VERDICT_NO_SOLUTION, VERDICT_NORMAL_FORM, classify_k,
                       difference_from_k, douglas_residual,
                       ellipsoid_equivalence, fiber_equation_residual,
                       gb_residual, integral_condition, integrate_geodesic,
                       k_from_riemannian, metric_from_navigation,
                       normalize_torsion, normal_form_k,
                       numeric_principal_value, parallel_transport,
                       path_hausdorff, pde_residual, pde_system_residual,
                       periodicity_defect, pullback, randers_invariant,
                       riemannian_witness, sin_profile, spray_coefficients,
                       symmetrize, theta_grid)
from finsler2d.classify import cubic_analysis
from finsler2d.metrics import is_spd

SEED = 20260814


def _report(capfd, num, ok, detail):
    with capfd.disabled():
        print(f"[acceptance {num}] {'PASS' if ok else 'FAIL'}: {detail}")


def _fan(n):
    th = theta_grid(n)
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def _draw_ac(rng):
    return rng.uniform(-2.0, 2.0), rng.uniform(0.1, 4.0)


# -- 1: normal-form round trip -------------------------------------------------

def test_criterion_1_normal_form_round_trip(capfd):
    rng = np.random.default_rng(SEED + 1)
    t0 = time.perf_counter()
    bad_verdicts = 0
    worst_ac = 0.0
    worst_k = 0.0
    for _ in range(200):
        a, c = _draw_ac(rng)
        k = normal_form_k(a, c)
        res = classify_k(k)
        if res.verdict != VERDICT_NORMAL_FORM:
            bad_verdicts += 1
            continue
        worst_ac = max(worst_ac, abs(res.a - a), abs(res.c - c))
        back = k_from_riemannian(res.witness)
        worst_k = max(worst_k, float(np.abs(back.array - k.array).max()))
    elapsed = time.perf_counter() - t0
    ok = (bad_verdicts == 0 and worst_ac <= 1e-8 and worst_k <= 1e-10
          and elapsed < 1.0)
    _report(capfd, 1, ok,
            f"200 draws, max |(A,C) error| = {worst_ac:.3g} (<= 1e-8), "
            f"max K reproduction error = {worst_k:.3g} (<= 1e-10), "
            f"{elapsed:.3f} s (< 1 s)")
    assert bad_verdicts == 0
    assert worst_ac <= 1e-8
    assert worst_k <= 1e-10
    assert elapsed < 1.0


# -- 2: central-equation closure -------------------------------------------------

def test_criterion_2_central_equation_closure(capfd):
    rng = np.random.default_rng(SEED + 1)   # same draws as criterion 1
    grid = theta_grid(512)
    fan = _fan(8)
    t0 = time.perf_counter()
    worst_basis = 0.0
    worst_pde = 0.0
    n_convex = 0
    for _ in range(200):
        a, c = _draw_ac(rng)
        dd_norm = difference_from_k(normal_form_k(a, c))
        m = np.eye(2) + 0.25 * rng.uniform(-1.0, 1.0, size=(2, 2))
        if abs(np.linalg.det(m)) < 0.3:
            m = np.eye(2)
        dd = dd_norm.transform(m)
        norm = normalize_torsion(dd)
        res = classify_k(__import__("finsler2d").k_from_difference(norm.data))
        assert res.verdict == VERDICT_NORMAL_FORM
        wit = RiemannianNormProfile(res.witness)
        for prof in (wit, sin_profile()):
            r = fiber_equation_residual(prof, res.k, grid)
            worst_basis = max(worst_basis, float(np.abs(r).max()))
        combo = wit + 0.3 * sin_profile()
        if combo(grid).min() > 0.0:
            n_convex += 1          # h = f + f'' is the witness part, positive
        met = pullback(FiberProfileMetric(combo), norm.L)
        for y in fan:
            worst_pde = max(worst_pde, float(
                np.abs(pde_residual(met, dd, [0.0, 0.0], y)).max()))
    elapsed = time.perf_counter() - t0
    ok = worst_basis <= 1e-9 and worst_pde <= 1e-8 and elapsed < 2.0
    _report(capfd, 2, ok,
            f"basis residual max = {worst_basis:.3g} (<= 1e-9) on 512-point "
            f"grid, combination residual after inverse normalization = "
            f"{worst_pde:.3g} (<= 1e-8), {n_convex}/200 draws strictly "
            f"convex, {elapsed:.3f} s (< 2 s)")
    assert worst_basis <= 1e-9
    assert worst_pde <= 1e-8
    assert elapsed < 2.0


# -- 3: linear system internal consistency ---------------------------------------

def _random_difference(rng):
    gam = rng.normal(size=(2, 2, 2))
    gam = 0.5 * (gam + gam.transpose(0, 2, 1))
    tors = np.zeros((2, 2, 2))
    tors[:, 0, 1] = rng.normal(size=2)
    tors[:, 1, 0] = -tors[:, 0, 1]
    return DifferenceData(gam, tors)


def _variant_metric(rng, i):
    if i % 3 == 0:
        low = np.array([[rng.uniform(0.5, 1.5), 0.0],
                        [rng.uniform(-0.5, 0.5), rng.uniform(0.5, 1.5)]])
        a = low @ low.T
        b = rng.uniform(-0.3, 0.3, size=2)
        if float(b @ np.linalg.solve(a, b)) < 0.8:
            return RandersMetric(a, b)
        return RiemannianMetric(a)
    if i % 3 == 1:
        low = np.array([[rng.uniform(0.5, 1.5), 0.0],
                        [rng.uniform(-0.5, 0.5), rng.uniform(0.5, 1.5)]])
        return RiemannianMetric(low @ low.T)
    return FiberProfileMetric(FourierProfile(
        rng.uniform(0.9, 1.3), (0.0, rng.uniform(-0.1, 0.1)),
        (0.0, rng.uniform(-0.1, 0.1))))


def test_criterion_3_contraction_and_symmetrization(capfd):
    rng = np.random.default_rng(SEED + 3)
    worst_contract = 0.0
    for i in range(100):
        met = _variant_metric(rng, i)
        dd = _random_difference(rng)
        ang = rng.uniform(0.0, 2.0 * np.pi)
        y = rng.uniform(0.3, 2.0) * np.array([np.cos(ang), np.sin(ang)])
        sys = pde_system_residual(met, dd, [0.0, 0.0], y)
        scal = pde_residual(met, dd, [0.0, 0.0], y)
        worst_contract = max(worst_contract,
                             float(np.abs(sys @ y - 2.0 * scal).max()))
    worst_sym = 0.0
    fan = _fan(8)
    for _ in range(20):
        a, c = _draw_ac(rng)
        k = normal_form_k(a, c)
        dd = difference_from_k(k)
        combo = RiemannianNormProfile(riemannian_witness(a, c)) \
            + 0.3 * sin_profile()
        met = symmetrize(FiberProfileMetric(combo))
        for y in fan:
            worst_sym = max(worst_sym, float(
                np.abs(pde_residual(met, dd, [0.0, 0.0], y)).max()))
    ok = worst_contract <= 1e-8 and worst_sym <= 1e-8
    _report(capfd, 3, ok,
            f"100 pairs, max |contract(system) - 2 scalar| = "
            f"{worst_contract:.3g} (<= 1e-8); symmetrized solution residual "
            f"max = {worst_sym:.3g} (<= 1e-8)")
    assert worst_contract <= 1e-8
    assert worst_sym <= 1e-8


# -- 4: rejection soundness ------------------------------------------------------

def test_criterion_4_rejection_soundness(capfd):
    rng = np.random.default_rng(SEED + 4)
    from finsler2d import k_from_factorization
    n_rejected = 0
    n_flagged = 0
    worst_pv = 0.0
    min_defect = np.inf
    for i in range(50):
        if i % 2 == 0:
            # integral obstruction: factorization exists but B != D
            while True:
                a, b = rng.uniform(-2.0, 2.0, size=2)
                if abs(a - b) >= 0.05:
                    break
            c = rng.uniform(0.2, 4.0)
            k = k_from_factorization(a, b, c)
            an = cubic_analysis(k)
            ic = integral_condition(an)
            pv = numeric_principal_value(an.factorization)
            worst_pv = max(worst_pv, abs(pv - ic.value))
        else:
            # root obstruction: three distinct real roots
            while True:
                roots = np.sort(rng.uniform(-2.0, 2.0, size=3))
                if np.diff(roots).min() >= 0.1:
                    break
            k3 = rng.uniform(0.3, 2.0)
            coeffs = k3 * np.poly(roots)
            k = coeffs
        res = classify_k(k)
        if res.verdict == VERDICT_NO_SOLUTION:
            n_rejected += 1
        rep = periodicity_defect(k)
        if rep.pole is not None:
            n_flagged += 1
        elif rep.defect >= 1e-3:
            n_flagged += 1
            min_defect = min(min_defect, rep.defect)
    ok = n_rejected == 50 and n_flagged == 50 and worst_pv <= 1e-6
    _report(capfd, 4, ok,
            f"50/50 rejected = {n_rejected == 50}, 50/50 show pole or defect "
            f">= 1e-3 = {n_flagged == 50} (smallest defect {min_defect:.3g}), "
            f"|closed form - principal value| max = {worst_pv:.3g} (<= 1e-6)")
    assert n_rejected == 50
    assert n_flagged == 50
    assert worst_pv <= 1e-6


# -- 5: transport and compatibility link ------------------------------------------

def test_criterion_5_transport_gb_link(capfd):
    euclid = RiemannianMetric(np.eye(2))
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])

    def connection_with(mat):
        return Connection(
            lambda x: np.einsum("j,ik->ijk", np.array([-x[1], x[0]]), mat),
            n=2)

    t0 = time.perf_counter()
    clean = parallel_transport(connection_with(rot), Circle(), [1.0, 0.0],
                               metric=euclid)
    pert_mat = rot + 0.05 * np.array([[1.0, 0.0], [0.0, 0.0]])
    pert_conn = connection_with(pert_mat)
    pert = parallel_transport(pert_conn, Circle(), [1.0, 0.0], metric=euclid)
    elapsed = time.perf_counter() - t0

    gb0 = gb_residual(euclid, pert_conn, [1.0, 0.0], [1.0, 0.0])
    velocity0 = np.array([0.0, 1.0])           # circle velocity at t = 0
    predicted = float(gb0 @ velocity0)
    first = next(i for i in range(pert.t.size)
                 if abs(pert.f_drift[i]) > 1e-7)
    sign_match = np.sign(pert.f_drift[first]) == np.sign(predicted)

    ok = (clean.max_drift <= 1e-8 and pert.max_drift >= 1e-3
          and sign_match and elapsed < 1.0)
    _report(capfd, 5, ok,
            f"antisymmetric drift = {clean.max_drift:.3g} (<= 1e-8), "
            f"perturbed drift = {pert.max_drift:.3g} (>= 1e-3), early drift "
            f"sign matches gb residual along the curve = {sign_match}, "
            f"{elapsed:.3f} s (< 1 s)")
    assert clean.max_drift <= 1e-8
    assert pert.max_drift >= 1e-3
    assert sign_match
    assert elapsed < 1.0


# -- 6: coinciding geodesics under projective change -------------------------------

def test_criterion_6_douglas_geodesic_link(capfd):
    rng = np.random.default_rng(SEED + 6)
    euclid = RiemannianMetric(np.eye(2))
    cvec = np.array([0.3, -0.2])
    d = np.zeros((2, 2, 2))
    for i in range(2):
        d[i, i, :] += cvec
        d[i, :, i] += cvec
    dconn = Connection(d)

    worst_premise = 0.0
    for y in _fan(16):
        res, _ = douglas_residual(euclid, dconn, [0.0, 0.0], y)
        worst_premise = max(worst_premise, float(np.abs(res).max()))

    worst_h = 0.0
    for _ in range(20):
        x0 = rng.uniform(-1.0, 1.0, size=2)
        ang = rng.uniform(0.0, 2.0 * np.pi)
        y0 = rng.uniform(0.5, 1.5) * np.array([np.cos(ang), np.sin(ang)])
        gf = integrate_geodesic(euclid, x0, y0, (0.0, 1.0), n_samples=257)
        gd = integrate_geodesic(dconn, x0, y0, (0.0, 1.0), n_samples=257)
        worst_h = max(worst_h, path_hausdorff(gf.x, gd.x))
    ok = worst_premise <= 1e-12 and worst_h <= 1e-6
    _report(capfd, 6, ok,
            f"projective premise residual = {worst_premise:.3g}, 20 initial "
            f"conditions, max Hausdorff = {worst_h:.3g} (<= 1e-6)")
    assert worst_premise <= 1e-12
    assert worst_h <= 1e-6


# -- 7: wind data and ellipsoid equivalence ----------------------------------------

def _random_spd(rng, lo=0.4, hi=2.0):
    low = np.array([[rng.uniform(lo, hi), 0.0],
                    [rng.uniform(-0.8, 0.8), rng.uniform(lo, hi)]])
    return low @ low.T


def test_criterion_7_randers_zermelo(capfd):
    rng = np.random.default_rng(SEED + 7)
    worst_boundary = 0.0
    n_equivalent = 0
    for _ in range(100):
        q1 = _random_spd(rng)
        v1 = rng.uniform(-0.6, 0.6, size=2)
        target = float(v1 @ q1 @ v1)
        q2 = _random_spd(rng)
        direction = rng.normal(size=2)
        direction /= np.linalg.norm(direction)
        v2 = direction * np.sqrt(target / float(direction @ q2 @ direction))
        eq = ellipsoid_equivalence(ShiftedEllipsoid(q1, v1),
                                   ShiftedEllipsoid(q2, v2))
        if eq.equivalent:
            n_equivalent += 1
            worst_boundary = max(worst_boundary, eq.max_boundary_error)

    n_rejected = 0
    for _ in range(50):
        q1, q2 = _random_spd(rng), _random_spd(rng)
        v1 = rng.uniform(-0.6, 0.6, size=2)
        v1 += np.array([0.05, 0.0]) if np.linalg.norm(v1) < 0.05 else 0.0
        gap = rng.uniform(1e-4, 0.5) * rng.choice([-1.0, 1.0])
        target = float(v1 @ q1 @ v1) * (1.0 + gap) + abs(gap)
        direction = rng.normal(size=2)
        direction /= np.linalg.norm(direction)
        v2 = direction * np.sqrt(target / float(direction @ q2 @ direction))
        eq = ellipsoid_equivalence(ShiftedEllipsoid(q1, v1),
                                   ShiftedEllipsoid(q2, v2))
        if not eq.equivalent:
            n_rejected += 1

    worst_inv = 0.0
    for _ in range(50):
        h = _random_spd(rng)
        w = rng.uniform(-0.6, 0.6, size=2)
        if float(w @ h @ w) >= 0.95:
            w = w * 0.5
        nav = NavigationData(h, w)
        met = metric_from_navigation(nav)
        worst_inv = max(worst_inv, abs(randers_invariant(met)
                                       - nav.wind_norm2))

    ok = (n_equivalent == 100 and worst_boundary <= 1e-8
          and n_rejected == 50 and worst_inv <= 1e-9)
    _report(capfd, 7, ok,
            f"100/100 matched pairs equivalent = {n_equivalent == 100} "
            f"(boundary error max {worst_boundary:.3g} <= 1e-8), 50/50 "
            f"mismatches rejected = {n_rejected == 50}, invariant "
            f"preservation max = {worst_inv:.3g} (<= 1e-9)")
    assert n_equivalent == 100
    assert worst_boundary <= 1e-8
    assert n_rejected == 50
    assert worst_inv <= 1e-9


# -- 8: convexity criterion ---------------------------------------------------------

def _bisect_zero(fn, lo, hi, iters=60):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if flo * fn(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
            flo = fn(lo)
    return 0.5 * (lo + hi)


def _nonconvex_direction(prof, th, f, h):
    """A direction where the numeric tensor must fail the SPD test: the
    argmin of whichever factor is negative, or a sign crossing of f."""
    cands = []
    if f.min() < 0.0:
        cands.append(th[int(np.argmin(f))])
        i = int(np.argmin(f))
        j = i
        while f[j] < 0.0:
            j = (j - 1) % th.size
        cands.append(_bisect_zero(lambda t: prof(t), th[j], th[(j + 1) % th.size]
                                  if th[(j + 1) % th.size] > th[j]
                                  else th[j] + 2.0 * np.pi / th.size))
    if h.min() < 0.0:
        cands.append(th[int(np.argmin(h))])
    return cands


def test_criterion_8_convexity_criterion(capfd):
    rng = np.random.default_rng(SEED + 8)
    th = theta_grid(1024)
    worst_det = 0.0
    n_convex = 0
    n_checked = 0
    while n_checked < 100:
        a0 = rng.uniform(0.6, 1.4)
        amp = 0.15 if n_checked % 2 == 0 else 0.9
        weights = amp / np.arange(1.0, 5.0) ** 2
        prof = FourierProfile(a0, rng.uniform(-1.0, 1.0, size=4) * weights,
                              rng.uniform(-1.0, 1.0, size=4) * weights)
        f = prof(th)
        h = f + prof(th, 2)
        if min(abs(f.min()), abs(h.min())) < 1e-8:
            continue                       # guard band: redraw near the fence
        n_checked += 1
        expect = f.min() > 0.0 and h.min() > 0.0
        met = FiberProfileMetric(prof)

        for i in range(0, th.size, 16):    # 64-direction determinant check
            y = np.array([np.cos(th[i]), np.sin(th[i])])
            g = met.fundamental_tensor([0.0, 0.0], y).g
            det = float(np.linalg.det(g))
            ref = f[i] ** 3 * h[i]
            worst_det = max(worst_det,
                            abs(det - ref) / max(1e-12, abs(ref)))

        if expect:
            n_convex += 1
            spd = all(met.fundamental_tensor(
                [0.0, 0.0], np.array([np.cos(t), np.sin(t)])).is_spd()
                for t in th[::8])
            assert spd, "positive profile produced a non-SPD tensor"
        else:
            probes = _nonconvex_direction(prof, th, f, h)
            bad = any(not met.fundamental_tensor(
                [0.0, 0.0], np.array([np.cos(t), np.sin(t)])).is_spd()
                for t in probes)
            assert bad, "negative min produced no non-SPD direction"
    ok = worst_det <= 1e-8
    _report(capfd, 8, ok,
            f"100 profiles ({n_convex} convex, {100 - n_convex} not), SPD "
            f"equivalence verified both ways, max relative determinant "
            f"error = {worst_det:.3g} (<= 1e-8)")
    assert worst_det <= 1e-8
