"""Monodromy matrices: closed forms, series bounds, class diagnostics."""

import numpy as np
import pytest
from scipy.linalg import expm

import bandcomb as bc
from bandcomb import monodromy as mono
from bandcomb.errors import YCapExceededError


def scalar_monodromy(c, z):
    """Closed form for a scalar constant potential: one matrix exponential."""
    om = np.sqrt(complex(z * z - c))
    if abs(om) < 1e-12:
        return np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex)
    return np.array([[np.cos(om), np.sin(om) / om],
                     [-om * np.sin(om), np.cos(om)]])


def test_free_equation_closed_form(free1):
    for z in (1.7, 2.3 + 0.7j, 0.4 - 1.1j):
        r = mono.schrodinger_monodromy(free1, z)
        ref = np.array([[np.cos(z), np.sin(z) / z],
                        [-z * np.sin(z), np.cos(z)]])
        assert np.max(np.abs(r.m - ref)) < 1e-12
        assert r.det_residual < 1e-12 and r.symplectic_residual < 1e-12


def test_scalar_constant_closed_form(c1):
    for z in (3.0, 0.5, 2.0 + 1.5j):
        r = mono.schrodinger_monodromy(c1, z)
        assert np.max(np.abs(r.m - scalar_monodromy(1.0, z))) < 1e-12


def test_diagonal_potential_decouples(d12):
    z = 3.0
    r = mono.schrodinger_monodromy(d12, z)
    # blocks interleave the two scalar problems
    for idx, c in enumerate((1.0, 2.0)):
        ref = scalar_monodromy(c, z)
        got = np.array([[r.m[idx, idx], r.m[idx, idx + 2]],
                        [r.m[idx + 2, idx], r.m[idx + 2, idx + 2]]])
        assert np.max(np.abs(got - ref)) < 1e-10


def test_canonical_free(canonfree):
    z = 1.3 - 0.4j
    r = mono.canonical_monodromy(canonfree, z)
    ref = np.diag([np.exp(1j * z), np.exp(-1j * z)])
    assert np.max(np.abs(r.m - ref)) < 1e-12


def test_canonical_constant_trace(canon1):
    r = mono.canonical_monodromy(canon1, 2.0)
    assert abs(np.trace(r.m) - 2 * np.cos(np.sqrt(3))) < 1e-12
    r0 = mono.canonical_monodromy(canon1, 0.0)
    assert abs(np.trace(r0.m) - 2 * np.cosh(1.0)) < 1e-12


def test_modified_monodromy_shares_spectrum(c1):
    z = 2.7
    r = mono.schrodinger_monodromy(c1, z)
    assert abs(np.trace(r.psi) - np.trace(r.m)) < 1e-12
    ev_m = np.linalg.eigvals(r.m)
    ev_p = np.linalg.eigvals(r.psi)
    # match as multisets: conjugate pairs sort unstably
    for w in ev_m:
        assert np.min(np.abs(ev_p - w)) < 1e-10


def test_y_cap_refusal(free1):
    with pytest.raises(YCapExceededError):
        mono.schrodinger_monodromy(free1, 1 + 35j)


def test_magnus_fourth_order_convergence():
    spec = bc.trig({0: [[1.0]], 1: [[0.4]]}, label="conv")
    z = 2.2
    ref = mono.monodromy_grid(spec, [z], method="rk4")[0]
    errs = []
    from bandcomb.monodromy import _propagate
    for h in (1 / 32, 1 / 64):
        m = _propagate(spec, np.array([z]), "magnus4", h=h)[0]
        errs.append(np.max(np.abs(m - ref)))
    ratio = errs[0] / errs[1]
    assert 11 < ratio < 21, f"order-4 step halving should gain ~16x, got {ratio:.1f}"


def test_magnus_aligned_to_segments(piecewise2):
    z = 1.9
    exact = mono.monodromy_grid(piecewise2, [z], method="segment_exact")[0]
    magnus = mono.monodromy_grid(piecewise2, [z], method="magnus4")[0]
    assert np.max(np.abs(exact - magnus)) < 1e-12


def test_method_cross_validation(piecewise2, trig2):
    rng = np.random.default_rng(23)
    zs = rng.uniform(0.5, 9.5, 6) + 1j * rng.uniform(-1.5, 1.5, 6)
    for spec in (piecewise2, trig2):
        for z in zs:
            methods = ["magnus4", "rk4"]
            if spec.kind in ("constant", "piecewise"):
                methods.append("segment_exact")
            mats = {m: mono.monodromy_grid(spec, [z], method=m)[0] for m in methods}
            base = mats["magnus4"]
            scale = max(1.0, float(np.max(np.abs(base))))
            for name, m in mats.items():
                # the fixed-step RK4 is a loose cross-check only
                tol = 1e-9 * scale if name != "rk4" else 2e-4 * scale
                assert np.max(np.abs(m - base)) < tol, (spec.label, name, z)


def test_picard_order_zero_free(free1):
    pr = mono.picard_series(free1, 2.0, 0)
    ref = np.array([[np.cos(2.0), np.sin(2.0) / 2.0],
                    [-2.0 * np.sin(2.0), np.cos(2.0)]])
    assert pr.tail_bound == 0.0
    assert np.max(np.abs(pr.m - ref)) < 1e-12


def test_picard_scalar_within_stated_bound(c1):
    z = 5.0
    pr = mono.picard_series(c1, z, 6)
    ref = scalar_monodromy(1.0, z)
    w_got = mono.weighted_blocks(pr.m, z, 1)
    w_ref = mono.weighted_blocks(ref, z, 1)
    err = np.max(np.abs(w_got - w_ref))
    assert err <= pr.tail_bound + 1e-12
    # the bound itself is the quoted kappa^(n+1)/(n+1)! e^(|Im z| + kappa)
    import math
    kappa = 1.0 / 5.0
    assert abs(pr.tail_bound - kappa ** 7 / math.factorial(7) * np.exp(kappa)) < 1e-15


def test_picard_canonical_vs_exponential(canon1):
    z = 4.0
    pr = mono.picard_series(canon1, z, 8)
    j = canon1.j_matrix
    v = canon1.eval(0.0)
    ref = expm(1j * j @ (z * np.eye(2) - v))
    assert np.max(np.abs(pr.m - ref)) <= pr.tail_bound + 1e-12


def test_entirety_contour_proxy(c1):
    # discrete Cauchy test: the integral of M around a small square vanishes
    c = 2.0 + 0.5j
    s = 0.4
    corners = [c - s - 1j * s, c + s - 1j * s, c + s + 1j * s, c - s + 1j * s]
    from scipy.integrate import simpson
    total = np.zeros((2, 2), dtype=complex)
    for a, b in zip(corners, corners[1:] + corners[:1]):
        ts = np.linspace(0, 1, 321)
        zs = a + (b - a) * ts
        ms = mono.monodromy_grid(c1, zs)
        total += simpson(ms, x=ts, axis=0) * (b - a)
    assert np.max(np.abs(total)) < 1e-6


def test_class_diagnostics_free(free2):
    zs = np.linspace(-3, 3, 9) + 0j
    rep = mono.class_diagnostics(free2, zs)
    assert rep.max_det_residual < 1e-12
    assert rep.max_symplectic_residual < 1e-12
    assert not rep.flags


def test_class_diagnostics_scalar(c1):
    rng = np.random.default_rng(2)
    zs = rng.uniform(-10, 10, 12) + 1j * rng.uniform(-3, 3, 12)
    rep = mono.class_diagnostics(c1, zs)
    assert rep.max_symplectic_residual < 1e-9
    assert rep.high_energy_trend_ok


def test_class_diagnostics_trig(trig2):
    zs = np.array([1.0, 2.5 + 0.5j, 4.0 - 0.8j, 7.0])
    rep = mono.class_diagnostics(trig2, zs)
    assert rep.max_symplectic_residual < 1e-8
    assert rep.max_det_residual < 1e-8
    assert not rep.unit_multiplier_violations


def test_unimodularity_across_grid(trig2, canon1):
    for spec in (trig2, canon1):
        zs = np.linspace(-8, 8, 60) + 0j
        m = mono.monodromy_grid(spec, zs)
        dets = np.linalg.det(m)
        assert np.max(np.abs(dets - 1)) < 1e-8
