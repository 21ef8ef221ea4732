"""Fundamental solutions and monodromy matrices over one period.

Two operator families are supported.  The second-order family propagates
the 2N-dimensional system (f, f') of  -f'' + V(t) f = z^2 f  with initial
blocks theta(0) = I, theta'(0) = 0, phi(0) = 0, phi'(0) = I, and assembles

    M(z) = [[theta(1), phi(1)], [theta'(1), phi'(1)]].

The first-order (canonical) family propagates  psi' = i J (z I - V(t)) psi,
psi(0) = I, and M(z) = psi(1, z).

Both generators satisfy  A(t, z) J + J A(t, zbar)* = 0, so every propagator
built from exponentials of (combinations of) generator samples inherits the
exact identity  M(z) J M(zbar)* = J  up to rounding; unimodularity follows.

Propagators: exact per-segment exponentials for piecewise-constant data, a
commutator-free fourth-order Magnus scheme with steps aligned to potential
breakpoints, a plain RK4 for cross-checks, and the iterated-integral
(Picard) series with its explicit factorial remainder bound.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.linalg import expm as scipy_expm

from .config import DEFAULT, Tolerances
from .errors import StepControllerError, YCapExceededError
from .potential import CANONICAL, SCHRODINGER, PotentialSpec, validate

# Gauss-Legendre nodes on [0, 1] and the commutator-free order-4 weights.
_GL_C1 = 0.5 - np.sqrt(3) / 6
_GL_C2 = 0.5 + np.sqrt(3) / 6
_CF_A1 = 0.25 + np.sqrt(3) / 6
_CF_A2 = 0.25 - np.sqrt(3) / 6


# ----------------------------------------------------------------------
# small-matrix exponentials and the cos/sinc pair, batched over z

def _cosh_sqrt(p):
    return np.cosh(np.sqrt(p.astype(complex)))


def _sinhc_sqrt(p):
    """sinh(sqrt(p)) / sqrt(p); entire in p, series used near zero."""
    p = p.astype(complex)
    small = np.abs(p) < 1e-8
    r = np.sqrt(np.where(small, 1.0, p))
    return np.where(small, 1.0 + p / 6.0 + p * p / 120.0, np.sinh(r) / r)


def _matfun_cs(p):
    """(cosh(sqrt(P)), sinh(sqrt(P))/sqrt(P)) for a stack of small matrices."""
    n = p.shape[-1]
    if n == 1:
        return _cosh_sqrt(p), _sinhc_sqrt(p)
    if n == 2:
        return _matfun_cs_22(p)
    w, v = np.linalg.eig(p)
    vinv = np.linalg.inv(v)
    c = np.einsum("...ij,...j,...jk->...ik", v, _cosh_sqrt(w), vinv)
    s = np.einsum("...ij,...j,...jk->...ik", v, _sinhc_sqrt(w), vinv)
    return c, s


def _matfun_cs_22(p):
    """Cayley-Hamilton evaluation of the cos/sinc pair on 2x2 stacks."""
    tr = p[..., 0, 0] + p[..., 1, 1]
    det = p[..., 0, 0] * p[..., 1, 1] - p[..., 0, 1] * p[..., 1, 0]
    mu = tr / 2
    disc = np.sqrt((mu * mu - det).astype(complex))
    lam1, lam2 = mu + disc, mu - disc
    eye = np.zeros_like(p)
    eye[..., 0, 0] = eye[..., 1, 1] = 1.0

    sep = np.abs(lam1 - lam2)
    scale = 1.0 + np.abs(lam1) + np.abs(lam2)
    degenerate = sep < 1e-6 * scale

    out = []
    for f, fprime in ((_cosh_sqrt, _dcosh_sqrt), (_sinhc_sqrt, _dsinhc_sqrt)):
        f1, f2 = f(lam1), f(lam2)
        denom = np.where(degenerate, 1.0, lam1 - lam2)
        alpha = np.where(degenerate, fprime(mu), (f1 - f2) / denom)
        beta = np.where(degenerate, f(mu) - mu * fprime(mu),
                        (f2 * lam1 - f1 * lam2) / denom)
        out.append(alpha[..., None, None] * p + beta[..., None, None] * eye)
    return out[0], out[1]


def _dcosh_sqrt(p):
    # d/dp cosh(sqrt p) = sinh(sqrt p) / (2 sqrt p)
    return 0.5 * _sinhc_sqrt(p)


def _dsinhc_sqrt(p):
    # d/dp [sinh(sqrt p)/sqrt p] = (cosh(sqrt p) - sinh(sqrt p)/sqrt p) / (2p)
    p = p.astype(complex)
    small = np.abs(p) < 1e-6
    safe = np.where(small, 1.0, p)
    val = (_cosh_sqrt(safe) - _sinhc_sqrt(safe)) / (2 * safe)
    return np.where(small, 1.0 / 6.0 + p / 60.0, val)


def _expm_small(k):
    """exp of a stack of small matrices; closed form for 1x1 and 2x2."""
    n = k.shape[-1]
    if n == 1:
        return np.exp(k)
    if n == 2:
        tr = k[..., 0, 0] + k[..., 1, 1]
        mu = tr / 2
        d = k.copy()
        d[..., 0, 0] -= mu
        d[..., 1, 1] -= mu
        # D is trace free, D^2 = delta^2 I
        delta2 = d[..., 0, 0] * d[..., 0, 0] + d[..., 0, 1] * d[..., 1, 0]
        ch = _cosh_sqrt(delta2)
        sh = _sinhc_sqrt(delta2)
        eye = np.zeros_like(k)
        eye[..., 0, 0] = eye[..., 1, 1] = 1.0
        return np.exp(mu)[..., None, None] * (ch[..., None, None] * eye
                                              + sh[..., None, None] * d)
    try:
        w, v = np.linalg.eig(k)
        vinv = np.linalg.inv(v)
        cond = np.linalg.cond(v)
        if np.max(cond) > 1e10:
            raise np.linalg.LinAlgError
        return np.einsum("...ij,...j,...jk->...ik", v, np.exp(w), vinv)
    except np.linalg.LinAlgError:
        flat = k.reshape(-1, n, n)
        return np.stack([scipy_expm(m) for m in flat]).reshape(k.shape)


# ----------------------------------------------------------------------
# one-step maps

def _schrod_step(w_mixed, u):
    """exp of [[0, u I], [Y, 0]] given Y = w_mixed, via the cos/sinc pair.

    With P = u Y, the exponential is [[c(P), u s(P)], [Y s(P), c(P)]].
    """
    p = u * w_mixed
    c, s = _matfun_cs(p)
    n = w_mixed.shape[-1]
    if n == 1:
        top = np.concatenate([c, u * s], axis=-1)
        bot = np.concatenate([w_mixed * s, c], axis=-1)
        return np.concatenate([top, bot], axis=-2)
    ys = w_mixed @ s
    top = np.concatenate([c, u * s], axis=-1)
    bot = np.concatenate([ys, c], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def _schrod_w(spec, t, zs):
    """Stack of W(t, z) = V(t) - z^2 I over the z batch."""
    v = spec.eval(t)
    n = spec.n
    return v[None, :, :] - (zs ** 2)[:, None, None] * np.eye(n)[None, :, :]


def _canon_gen(spec, t, zs):
    """Stack of i J (z I - V(t)) over the z batch."""
    v = spec.eval(t)
    n = spec.n
    j = spec.j_matrix
    zi = (zs[:, None, None] * np.eye(n)[None, :, :]) - v[None, :, :]
    return 1j * np.einsum("ij,bjk->bik", j, zi)


def _smooth_pieces(spec, h):
    """Uniform substeps between potential breakpoints."""
    cuts = [0.0, *spec.breakpoints, 1.0]
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a < 1e-15:
            continue
        nst = max(1, int(np.ceil((b - a) / h)))
        pieces.append((a, (b - a) / nst, nst))
    return pieces


def _propagate(spec, zs, method, tol: Tolerances = DEFAULT, h=None):
    """Monodromy stack (len(zs), dim, dim) by the requested method."""
    zs = np.asarray(zs, dtype=complex)
    if np.max(np.abs(zs.imag)) > tol.y_cap:
        raise YCapExceededError(
            f"|Im z| = {np.max(np.abs(zs.imag)):.2f} above cap {tol.y_cap}")
    if method == "segment_exact":
        return _propagate_segment_exact(spec, zs)
    if method == "magnus4":
        return _propagate_magnus(spec, zs, h or tol.magnus_step)
    if method == "rk4":
        return _propagate_rk4(spec, zs, h or tol.magnus_step / 4)
    raise ValueError(f"unknown method {method!r}")


def _propagate_segment_exact(spec, zs):
    if spec.kind == "constant":
        segments = [(1.0, spec.matrix)]
    elif spec.kind == "piecewise":
        segments = spec.segments
    else:
        raise ValueError("segment_exact needs a piecewise-constant potential")
    b = len(zs)
    dim = spec.dim
    m = np.broadcast_to(np.eye(dim, dtype=complex), (b, dim, dim)).copy()
    for length, vmat in segments:
        if spec.family == SCHRODINGER:
            w = vmat[None, :, :] - (zs ** 2)[:, None, None] * np.eye(spec.n)
            step = _schrod_step(length * w, length)
        else:
            j = spec.j_matrix
            zi = zs[:, None, None] * np.eye(spec.n)[None, :, :] - vmat[None, :, :]
            step = _expm_small(1j * length * np.einsum("ij,bjk->bik", j, zi))
        m = step @ m
    return m


def _propagate_magnus(spec, zs, h):
    b = len(zs)
    dim = spec.dim
    m = np.broadcast_to(np.eye(dim, dtype=complex), (b, dim, dim)).copy()
    for a, hs, nst in _smooth_pieces(spec, h):
        for k in range(nst):
            t0 = a + k * hs
            if spec.family == SCHRODINGER:
                w1 = _schrod_w(spec, t0 + _GL_C1 * hs, zs)
                w2 = _schrod_w(spec, t0 + _GL_C2 * hs, zs)
                u = hs / 2
                right = _schrod_step(hs * (_CF_A1 * w1 + _CF_A2 * w2), u)
                left = _schrod_step(hs * (_CF_A2 * w1 + _CF_A1 * w2), u)
            else:
                a1 = _canon_gen(spec, t0 + _GL_C1 * hs, zs)
                a2 = _canon_gen(spec, t0 + _GL_C2 * hs, zs)
                right = _expm_small(hs * (_CF_A1 * a1 + _CF_A2 * a2))
                left = _expm_small(hs * (_CF_A2 * a1 + _CF_A1 * a2))
            m = left @ (right @ m)
    return m


def _full_generator(spec, t, zs):
    if spec.family == SCHRODINGER:
        w = _schrod_w(spec, t, zs)
        n = spec.n
        b = len(zs)
        g = np.zeros((b, 2 * n, 2 * n), dtype=complex)
        g[:, :n, n:] = np.eye(n)
        g[:, n:, :n] = w
        return g
    return _canon_gen(spec, t, zs)


def _propagate_rk4(spec, zs, h):
    b = len(zs)
    dim = spec.dim
    m = np.broadcast_to(np.eye(dim, dtype=complex), (b, dim, dim)).copy()
    for a, hs, nst in _smooth_pieces(spec, h):
        for k in range(nst):
            t0 = a + k * hs
            if not np.all(np.isfinite(m)):
                raise StepControllerError(f"propagation lost finiteness at t = {t0:.6f}")
            k1 = _full_generator(spec, t0, zs) @ m
            k2 = _full_generator(spec, t0 + hs / 2, zs) @ (m + hs / 2 * k1)
            k3 = _full_generator(spec, t0 + hs / 2, zs) @ (m + hs / 2 * k2)
            k4 = _full_generator(spec, t0 + hs, zs) @ (m + hs * k3)
            m = m + hs / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return m


# ----------------------------------------------------------------------
# public single-point interface

@dataclass
class MonodromyResult:
    z: complex
    m: np.ndarray
    family: str
    method: str
    det_residual: float
    symplectic_residual: float
    psi: np.ndarray = None
    trunc_error_bound: float = None

    @property
    def dim(self):
        return self.m.shape[0]


def default_method(spec: PotentialSpec) -> str:
    return "segment_exact" if spec.kind in ("constant", "piecewise") else "magnus4"


def monodromy_grid(spec, zs, method=None, tol: Tolerances = DEFAULT):
    """Monodromy stack over an array of z, without per-point diagnostics."""
    method = method or default_method(spec)
    return _propagate(spec, np.asarray(zs, dtype=complex), method, tol)


def lyapunov_matrix_stack(spec, zs, m=None, method=None, tol: Tolerances = DEFAULT):
    """(M + M^-1)/2 over a z batch, stable far from the real axis.

    Direct inversion fails once the entries reach 1/sqrt(eps), but the class
    identity M(z) J M(zbar)* = J supplies the inverse as J M(zbar)* J^-1,
    perfectly conditioned at any height.  The structural route is taken for
    entries above 1e6; at real z it reuses M itself, and the second-order
    family is even in z, so purely imaginary z also costs no extra solve.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    if m is None:
        m = monodromy_grid(spec, zs, method=method, tol=tol)
    norms = np.abs(m).max(axis=(-2, -1))
    big = norms > 1e6
    l = np.empty_like(m)
    if np.any(~big):
        l[~big] = 0.5 * (m[~big] + np.linalg.inv(m[~big]))
    if np.any(big):
        j = spec.j_matrix
        jinv = np.linalg.inv(j)
        zb = zs[big]
        free = (np.abs(zb.imag) < 1e-14)
        if spec.family == SCHRODINGER:
            free |= np.abs(zb.real) < 1e-14     # even in z: M(zbar) = M(z) on i R
        mc = np.empty_like(m[big])
        mc[free] = m[big][free]
        if np.any(~free):
            mc[~free] = _propagate(spec, np.conj(zb[~free]),
                                   method or default_method(spec), tol)
        minv = j @ mc.conj().transpose(0, 2, 1) @ jinv
        l[big] = 0.5 * (m[big] + minv)
    return l


def _diagnostics(spec, z, m, m_conj, tol):
    det_res = abs(np.linalg.det(m) - 1.0)
    j = spec.j_matrix
    symp = np.linalg.norm(m @ j @ m_conj.conj().T - j)
    return float(det_res), float(symp)


def _evaluate(spec, z, method, tol: Tolerances):
    z = complex(z)
    if abs(z.imag) > tol.y_cap:
        raise YCapExceededError(f"|Im z| = {abs(z.imag):.2f} above cap {tol.y_cap}")
    trunc = None
    if method == "magnus4":
        h = tol.magnus_step
        m_h = _propagate(spec, np.array([z]), method, tol, h=h)[0]
        m = _propagate(spec, np.array([z]), method, tol, h=h / 2)[0]
        trunc = float(np.linalg.norm(m - m_h)) / 15.0
        if z.imag == 0.0:
            m_conj = m
        else:
            m_conj = _propagate(spec, np.array([np.conj(z)]), method, tol, h=h / 2)[0]
    else:
        m = _propagate(spec, np.array([z]), method, tol)[0]
        m_conj = m if z.imag == 0.0 else _propagate(
            spec, np.array([np.conj(z)]), method, tol)[0]
    det_res, symp = _diagnostics(spec, z, m, m_conj, tol)
    return m, det_res, symp, trunc


def schrodinger_monodromy(spec, z, method=None, tol: Tolerances = DEFAULT):
    """MonodromyResult for the second-order family, with the modified matrix Psi."""
    if spec.family != SCHRODINGER:
        raise ValueError("spec does not belong to the second-order family")
    method = method or default_method(spec)
    m, det_res, symp, trunc = _evaluate(spec, z, method, tol)
    psi = modified_monodromy(m, complex(z), spec.n)
    return MonodromyResult(z=complex(z), m=m, family=SCHRODINGER, method=method,
                           det_residual=det_res, symplectic_residual=symp,
                           psi=psi, trunc_error_bound=trunc)


def canonical_monodromy(spec, z, method=None, tol: Tolerances = DEFAULT):
    if spec.family != CANONICAL:
        raise ValueError("spec does not belong to the canonical family")
    method = method or default_method(spec)
    m, det_res, symp, trunc = _evaluate(spec, z, method, tol)
    return MonodromyResult(z=complex(z), m=m, family=CANONICAL, method=method,
                           det_residual=det_res, symplectic_residual=symp,
                           trunc_error_bound=trunc)


def monodromy_at(spec, z, method=None, tol: Tolerances = DEFAULT):
    if spec.family == SCHRODINGER:
        return schrodinger_monodromy(spec, z, method, tol)
    return canonical_monodromy(spec, z, method, tol)


def modified_monodromy(m, z, n):
    """Conjugate M by diag(I, z I): blocks [[theta, z phi], [theta'/z, phi']].

    Shares trace and eigenvalues with M; undefined at z = 0 (returns None).
    """
    if z == 0:
        return None
    psi = np.array(m, dtype=complex)
    psi[:n, n:] *= z
    psi[n:, :n] /= z
    return psi


def weighted_blocks(m, z, n):
    """Blocks weighted as [[theta, |z|_1 phi], [theta'/|z|_1, phi']].

    This is the normalization in which the Picard remainder bound is stated;
    method cross-comparisons use it so one number controls all four blocks.
    """
    z1 = max(1.0, abs(z))
    w = np.array(m, dtype=complex)
    w[:n, n:] *= z1
    w[n:, :n] /= z1
    return w


# ----------------------------------------------------------------------
# Picard (iterated-integral) series with explicit remainder bounds

@dataclass
class PicardResult:
    z: complex
    order: int
    m: np.ndarray
    tail_bound: float
    quad_error: float
    family: str

    @property
    def method(self):
        return f"picard({self.order})"


def picard_series(spec, z, order, tol: Tolerances = DEFAULT, grid=2049):
    """Partial sum of the iterated-integral series plus a rigorous tail bound.

    The nested integrals are evaluated with cumulative Simpson on a uniform
    grid, refined until the change between two grid levels is far below the
    analytic factorial tail bound, which is always returned alongside.
    """
    z = complex(z)
    if abs(z.imag) > tol.y_cap:
        raise YCapExceededError(f"|Im z| = {abs(z.imag):.2f} above cap {tol.y_cap}")
    summary = validate(spec)
    norm_v = float(np.sqrt(summary.norm_sq))

    if spec.family == SCHRODINGER:
        bound = _picard_bound_schrod(norm_v, z, order)
        build = _picard_schrod
    else:
        bound = _picard_bound_canonical(spec, norm_v, z, order, grid)
        build = _picard_canonical

    m_prev = build(spec, z, order, grid)
    m_cur = build(spec, z, order, 2 * grid - 1)
    quad = float(np.max(np.abs(m_cur - m_prev)))
    levels = 0
    while quad > max(bound / 100.0, 1e-13) and levels < 2:
        m_prev, grid = m_cur, 2 * grid - 1
        m_cur = build(spec, z, order, 2 * grid - 1)
        quad = float(np.max(np.abs(m_cur - m_prev)))
        levels += 1
    return PicardResult(z=z, order=order, m=m_cur, tail_bound=bound,
                        quad_error=quad, family=spec.family)


def _picard_bound_schrod(norm_v, z, order):
    import math
    z1 = max(1.0, abs(z))
    kappa = norm_v / z1
    n1 = order + 1
    return kappa ** n1 / math.factorial(n1) * math.exp(abs(z.imag) + kappa)


def _picard_bound_canonical(spec, norm_v, z, order, grid):
    import math
    ts = np.linspace(0, 1, min(grid, 513))
    opnorms = np.array([np.linalg.norm(spec.eval(t), 2) for t in ts])
    int_v = float(np.trapezoid(opnorms, ts))
    n1 = order + 1
    return norm_v ** n1 / math.factorial(n1) * math.exp(abs(z.imag) + int_v)


def _cumint(y, dx):
    """Cumulative Simpson along axis 0 of a (G, ...) array, starting at 0.

    scipy's routine silently drops imaginary parts on some versions, so the
    real and imaginary channels are integrated separately.
    """
    y = np.asarray(y)
    re = cumulative_simpson(y.real, dx=dx, axis=0, initial=0.0)
    im = cumulative_simpson(y.imag, dx=dx, axis=0, initial=0.0)
    return re + 1j * im


def _picard_schrod(spec, z, order, grid):
    n = spec.n
    ts = np.linspace(0.0, 1.0, grid)
    dx = ts[1] - ts[0]
    v = np.array([spec.eval(t) for t in ts])

    small_z = abs(z) < 1e-6
    if small_z:
        one = np.ones_like(ts)
        kc, ks = one, ts          # cos zs -> 1, sin zs / z -> s
        ct, st_over_z = one, ts   # cos zt -> 1, sin zt / z -> t
    else:
        kc, ks = np.cos(z * ts), np.sin(z * ts)
        ct, st_over_z = np.cos(z * ts), np.sin(z * ts) / z

    def iterate(f0, f0p):
        total, totalp = f0.copy(), f0p.copy()
        fn = f0
        for _ in range(order):
            vf = v @ fn
            if small_z:
                i1 = _cumint(vf, dx)
                i_s = _cumint(ts[:, None, None] * vf, dx)
                fn = ts[:, None, None] * i1 - i_s
                fnp = i1
            else:
                ic = _cumint(kc[:, None, None] * vf, dx)
                isn = _cumint(ks[:, None, None] * vf, dx)
                fn = (np.sin(z * ts)[:, None, None] * ic
                      - np.cos(z * ts)[:, None, None] * isn) / z
                fnp = (np.cos(z * ts)[:, None, None] * ic
                       + np.sin(z * ts)[:, None, None] * isn)
            total = total + fn
            totalp = totalp + fnp
        return total[-1], totalp[-1]

    eye = np.eye(n, dtype=complex)
    theta0 = ct[:, None, None] * eye[None]
    theta0p = (-z * np.sin(z * ts))[:, None, None] * eye[None] if not small_z \
        else (-(z ** 2) * ts)[:, None, None] * eye[None]
    phi0 = st_over_z[:, None, None] * eye[None]
    phi0p = ct[:, None, None] * eye[None]

    th1, th1p = iterate(theta0, theta0p)
    ph1, ph1p = iterate(phi0, phi0p)
    return np.block([[th1, ph1], [th1p, ph1p]])


def _picard_canonical(spec, z, order, grid):
    n = spec.n
    ts = np.linspace(0.0, 1.0, grid)
    dx = ts[1] - ts[0]
    v = np.array([spec.eval(t) for t in ts])
    j = spec.j_matrix
    jd = np.diag(j).copy()

    exp_plus = np.exp(1j * z * ts[:, None] * jd[None, :])    # e^{izJt} diagonal
    exp_minus = np.exp(-1j * z * ts[:, None] * jd[None, :])

    psi_n = exp_plus[:, :, None] * np.eye(n, dtype=complex)[None]
    total = psi_n.copy()
    jv = np.einsum("i,tij->tij", jd, v)
    for _ in range(order):
        integrand = exp_minus[:, :, None] * (jv @ psi_n)
        acc = _cumint(integrand, dx)
        psi_n = -1j * exp_plus[:, :, None] * acc
        total = total + psi_n
    return total[-1]


# ----------------------------------------------------------------------
# class-membership diagnostics

@dataclass
class ClassReport:
    max_det_residual: float
    max_symplectic_residual: float
    unit_multiplier_violations: list
    high_energy_ratios: np.ndarray
    high_energy_trend_ok: bool
    flags: list


def class_diagnostics(spec, z_grid, tol: Tolerances = DEFAULT):
    """Numerical membership checks for the monodromy class.

    Checks, over the supplied grid: unimodularity and the conjugate
    symplectic identity; that multipliers of modulus one only occur at
    (numerically) real z; and that (Delta_j(iy) - cos iy) / e^y decays along
    an imaginary ray.  Violations signal an implementation bug, since both
    families are class members, so they are collected into flags.
    """
    from .lyapunov import branch_values  # local import to avoid a cycle

    flags = []
    z_grid = np.asarray(z_grid, dtype=complex)
    max_det, max_symp = 0.0, 0.0
    violations = []
    for z in z_grid:
        res = monodromy_at(spec, z, tol=tol)
        max_det = max(max_det, res.det_residual)
        max_symp = max(max_symp, res.symplectic_residual)
        if abs(z.imag) > 1e-6:
            tau = np.linalg.eigvals(res.m)
            off = float(np.min(np.abs(np.abs(tau) - 1.0)))
            if off < 1e-6:
                violations.append((complex(z), off))
    if max_det > tol.det_residual:
        flags.append(f"det residual {max_det:.2e} above cap")
    if max_symp > tol.symplectic_residual:
        flags.append(f"symplectic residual {max_symp:.2e} above cap")
    if violations:
        flags.append(f"{len(violations)} unit-modulus multipliers off the real axis")

    ys = np.linspace(6.0, min(14.0, tol.y_cap), 5)
    ratios = []
    for y in ys:
        deltas = branch_values(spec, 1j * y, reduced=False, tol=tol)
        ratios.append(float(np.max(np.abs(deltas - np.cos(1j * y))) / np.exp(y)))
    ratios = np.array(ratios)
    trend_ok = bool(ratios[-1] <= ratios[0] + 1e-12)
    if not trend_ok:
        flags.append("high-energy ratio (Delta - cos z)/e^y is not decaying")
    return ClassReport(max_det_residual=max_det, max_symplectic_residual=max_symp,
                       unit_multiplier_violations=violations,
                       high_energy_ratios=ratios, high_energy_trend_ok=trend_ok,
                       flags=flags)
