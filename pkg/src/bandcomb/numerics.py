"""Shared numerical kernels.

Dense eigenvalues, Newton-identity characteristic polynomials, Sylvester
discriminants, winding-number zero counts, principal-value (Hilbert)
integrals of sampled data and truncated half-plane quadrature.  Everything
here is a pure function of its inputs; no state is shared.
"""

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (BoundaryFloorError, EigenConvergenceError,
                     WidenWindowError)


# ----------------------------------------------------------------------
# dense eigenvalues

def eig_dense(a, tol: Tolerances = DEFAULT):
    """Eigenvalues of a small dense complex matrix, as an unordered array.

    LAPACK's Hessenberg + shifted-QR path does the work; if it fails to
    converge we fall back to companion-matrix roots of the characteristic
    polynomial recovered from power traces.  The result is checked against
    trace and determinant before it is returned.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if not np.all(np.isfinite(a)):
        raise EigenConvergenceError("matrix has non-finite entries")
    try:
        w = np.linalg.eigvals(a)
    except np.linalg.LinAlgError:
        traces = power_traces(a, n)
        coeffs = newton_charpoly(traces).coeffs
        w = np.roots(coeffs)
    resid_tr = abs(w.sum() - np.trace(a))
    det = np.linalg.det(a)
    resid_det = abs(np.prod(w) - det) / max(1.0, abs(det))
    scale = max(1.0, float(np.linalg.norm(a)))
    if resid_tr > tol.tol_eig * scale or resid_det > tol.tol_eig * scale:
        cond = np.linalg.cond(a)
        raise EigenConvergenceError(
            f"eigenvalue check failed: trace residual {resid_tr:.3e}, "
            f"det residual {resid_det:.3e}, cond(A) = {cond:.3e}")
    return w


def power_traces(a, m_max: int):
    """[Tr A, Tr A^2, ..., Tr A^m_max]."""
    a = np.asarray(a, dtype=complex)
    out = np.empty(m_max, dtype=complex)
    p = a
    for m in range(m_max):
        out[m] = np.trace(p)
        if m + 1 < m_max:
            p = p @ a
    return out


# ----------------------------------------------------------------------
# Newton identities

class PolyCoeffs:
    """Monic polynomial sum_j c_j nu^(d-j), c_0 = 1, stored highest power first."""

    def __init__(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if abs(coeffs[0] - 1.0) > 1e-12:
            raise ValueError("PolyCoeffs requires monic normalization c_0 = 1")
        self.coeffs = coeffs
        self.degree = len(coeffs) - 1

    def __call__(self, nu):
        return np.polyval(self.coeffs, nu)

    def roots(self):
        return np.roots(self.coeffs)

    def max_imag(self):
        return float(np.max(np.abs(self.coeffs.imag)))


def newton_charpoly(traces) -> PolyCoeffs:
    """Characteristic polynomial coefficients from power sums.

    Given s_k = sum of k-th powers of the roots for k = 1..d, the recursion
        c_j = -(1/j) * sum_{k=1..j} s_k c_{j-k}
    produces the monic coefficients, so that
        det(A - nu I) = (-1)^d sum_j c_j nu^(d-j)
    when s_k = Tr A^k.
    """
    s = np.asarray(traces, dtype=complex)
    d = len(s)
    c = np.zeros(d + 1, dtype=complex)
    c[0] = 1.0
    for j in range(1, d + 1):
        acc = 0.0 + 0.0j
        for k in range(1, j + 1):
            acc += s[k - 1] * c[j - k]
        c[j] = -acc / j
    return PolyCoeffs(c)


def batched_newton_coeffs(traces):
    """Newton recursion applied along the last axis: traces[..., k] -> coeffs[..., j]."""
    s = np.asarray(traces, dtype=complex)
    d = s.shape[-1]
    c = np.zeros(s.shape[:-1] + (d + 1,), dtype=complex)
    c[..., 0] = 1.0
    for j in range(1, d + 1):
        acc = np.zeros(s.shape[:-1], dtype=complex)
        for k in range(1, j + 1):
            acc += s[..., k - 1] * c[..., j - k]
        c[..., j] = -acc / j
    return c


def sylvester_discriminant(coeffs):
    """Discriminant of a monic polynomial via the Sylvester resultant.

    disc(p) = (-1)^(d(d-1)/2) Res(p, p') for monic p.  Pure polynomial
    arithmetic in the coefficients, hence smooth through root collisions.
    Supports leading batch dimensions: coeffs[..., k].
    """
    c = np.asarray(coeffs, dtype=complex)
    d = c.shape[-1] - 1
    if d < 2:
        out = np.ones(c.shape[:-1], dtype=complex)
        return out if c.ndim > 1 else complex(out)
    dp = c[..., :-1] * np.arange(d, 0, -1)
    n = 2 * d - 1
    s = np.zeros(c.shape[:-1] + (n, n), dtype=complex)
    for i in range(d - 1):          # rows built from p
        s[..., i, i:i + d + 1] = c
    for i in range(d):              # rows built from p'
        s[..., d - 1 + i, i:i + d] = dp
    res = np.linalg.det(s)
    sign = (-1) ** (d * (d - 1) // 2)
    return sign * res


# ----------------------------------------------------------------------
# contour regions and winding counts

class ContourRegion:
    """Rectangle or disc with a sampled boundary, for argument-principle counts."""

    def __init__(self, shape, boundary_samples=256, tol: Tolerances = DEFAULT):
        if boundary_samples < tol.contour_min_samples:
            raise ValueError(f"need at least {tol.contour_min_samples} boundary samples")
        self.shape = shape
        self.boundary_samples = boundary_samples

    @classmethod
    def disc(cls, center, radius, boundary_samples=256):
        if radius <= 0:
            raise ValueError("disc radius must be positive")
        return cls(("disc", complex(center), float(radius)), boundary_samples)

    @classmethod
    def rectangle(cls, corner_lo, corner_hi, boundary_samples=256):
        lo, hi = complex(corner_lo), complex(corner_hi)
        if not (hi.real > lo.real and hi.imag > lo.imag):
            raise ValueError("rectangle corners must satisfy lo < hi componentwise")
        return cls(("rect", lo, hi), boundary_samples)

    def boundary(self):
        """Closed boundary polyline, positively oriented, last point = first."""
        m = self.boundary_samples
        if self.shape[0] == "disc":
            _, c, r = self.shape
            th = np.linspace(0.0, 2 * np.pi, m + 1)
            return c + r * np.exp(1j * th)
        _, lo, hi = self.shape
        a, b = lo.real, hi.real
        c, d = lo.imag, hi.imag
        per_side = max(m // 4, 16)
        bottom = a + np.linspace(0, 1, per_side, endpoint=False) * (b - a) + 1j * c
        right = b + 1j * (c + np.linspace(0, 1, per_side, endpoint=False) * (d - c))
        top = b - np.linspace(0, 1, per_side, endpoint=False) * (b - a) + 1j * d
        left = a + 1j * (d - np.linspace(0, 1, per_side, endpoint=False) * (d - c))
        return np.concatenate([bottom, right, top, left, [a + 1j * c]])

    def contains(self, z):
        if self.shape[0] == "disc":
            _, c, r = self.shape
            return abs(z - c) < r
        _, lo, hi = self.shape
        return lo.real < z.real < hi.real and lo.imag < z.imag < hi.imag

    def interior_grid(self, n):
        """n-point low-discrepancy interior sample (Halton bases 2 and 3)."""
        u = _halton(n, 2)
        v = _halton(n, 3)
        if self.shape[0] == "disc":
            _, c, r = self.shape
            return c + r * np.sqrt(u) * np.exp(2j * np.pi * v)
        _, lo, hi = self.shape
        return lo + u * (hi.real - lo.real) + 1j * v * (hi.imag - lo.imag)

    def split(self):
        """Subdivide into 4 congruent rectangles (a disc splits its bounding box)."""
        if self.shape[0] == "disc":
            _, c, r = self.shape
            lo, hi = c - r * (1 + 1j), c + r * (1 + 1j)
        else:
            _, lo, hi = self.shape
        mid = (lo + hi) / 2
        quads = [
            (lo, mid),
            (complex(mid.real, lo.imag), complex(hi.real, mid.imag)),
            (complex(lo.real, mid.imag), complex(mid.real, hi.imag)),
            (mid, hi),
        ]
        return [ContourRegion.rectangle(a, b, self.boundary_samples) for a, b in quads]

    def shrunk(self, factor):
        if self.shape[0] == "disc":
            _, c, r = self.shape
            return ContourRegion.disc(c, r * factor, self.boundary_samples)
        _, lo, hi = self.shape
        mid = (lo + hi) / 2
        return ContourRegion.rectangle(mid + (lo - mid) * factor,
                                       mid + (hi - mid) * factor,
                                       self.boundary_samples)

    def jittered(self, rng):
        shift = (rng.uniform(-0.03, 0.03) + 1j * rng.uniform(-0.03, 0.03)) * self.extent
        if self.shape[0] == "disc":
            _, c, r = self.shape
            return ContourRegion.disc(c + shift, r, self.boundary_samples)
        _, lo, hi = self.shape
        return ContourRegion.rectangle(lo + shift, hi + shift, self.boundary_samples)

    @property
    def extent(self):
        if self.shape[0] == "disc":
            return 2 * self.shape[2]
        _, lo, hi = self.shape
        return max(hi.real - lo.real, hi.imag - lo.imag)


def _halton(n, base):
    out = np.empty(n)
    for i in range(n):
        f, r, k = 1.0, 0.0, i + 1
        while k > 0:
            f /= base
            r += f * (k % base)
            k //= base
        out[i] = r
    return out


def count_zeros(f, region: ContourRegion, tol: Tolerances = DEFAULT) -> int:
    """Number of zeros of an analytic f inside the region, with multiplicity.

    Accumulates the phase of f along the boundary; any segment whose phase
    jump exceeds pi/2 is bisected, so windings cannot be lost.  If the
    boundary comes too close to a zero (relative modulus floor) the count is
    rejected with BoundaryFloorError and the caller should move the region.
    """
    pts = region.boundary()
    try:
        vals = np.asarray(f(pts), dtype=complex)
        if vals.shape != pts.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.asarray([f(z) for z in pts], dtype=complex)
    scale = np.max(np.abs(vals))
    if scale == 0.0:
        raise BoundaryFloorError("function vanishes on the whole sampled boundary")
    floor = tol.contour_floor_rel * scale
    if np.min(np.abs(vals)) <= floor:
        raise BoundaryFloorError(
            f"boundary modulus {np.min(np.abs(vals)):.3e} under floor {floor:.3e}")

    total = 0.0
    for i in range(len(pts) - 1):
        total += _segment_phase(f, pts[i], pts[i + 1], vals[i], vals[i + 1],
                                floor, tol.contour_max_depth)
    w = total / (2 * np.pi)
    wi = int(round(w))
    if abs(w - wi) > 0.1:
        raise BoundaryFloorError(f"winding {w:.4f} did not settle on an integer")
    return wi


def _segment_phase(f, za, zb, fa, fb, floor, depth):
    dphi = np.angle(fb / fa)
    if abs(dphi) <= np.pi / 2:
        return dphi
    if depth == 0:
        raise BoundaryFloorError("phase bisection depth exhausted")
    zm = (za + zb) / 2
    fm = f(zm)
    if abs(fm) <= floor:
        raise BoundaryFloorError("bisection point modulus under floor")
    return (_segment_phase(f, za, zm, fa, fm, floor, depth - 1)
            + _segment_phase(f, zm, zb, fm, fb, floor, depth - 1))


# ----------------------------------------------------------------------
# principal-value Hilbert integral of sampled data

def pv_hilbert(t, q, x, tol: Tolerances = DEFAULT):
    """(1/pi) PV int q(s) / (s - x) ds from nonnegative sampled data.

    The samples (t, q) describe a function with compact effective support;
    both window ends must have decayed relative to max q, otherwise a
    WidenWindowError asks the caller for a larger window.  Near s = x the
    integral uses symmetric excision of radius eps = a few local grid steps;
    the excised part is restored in closed form from a local quadratic fit,
    which cancels the odd leading term analytically.
    """
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    qmax = float(np.max(np.abs(q))) if len(q) else 0.0
    if np.any(q < -1e-12 * max(1.0, qmax)):
        raise ValueError("pv_hilbert expects q >= 0")
    if qmax > 0 and max(abs(q[0]), abs(q[-1])) > tol.decay_window_rel * qmax:
        raise WidenWindowError(
            "sampled q has not decayed at the window ends; widen the window")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([_pv_single(t, q, xi, tol) for xi in xs])
    return float(out[0]) if np.ndim(x) == 0 else out


def _pv_single(t, q, x, tol):
    if len(t) < 2 or np.max(np.abs(q)) == 0.0:
        return 0.0
    if x <= t[0] or x >= t[-1]:
        return float(np.trapezoid(q / (t - x), t)) / np.pi

    j = int(np.searchsorted(t, x))
    h_loc = max(t[min(j, len(t) - 1)] - t[j - 1], 1e-300)
    eps = tol.pv_excision_steps * h_loc
    lo = max(t[0], x - eps)
    hi = min(t[-1], x + eps)

    # left and right regular pieces, with interpolated values at the cut
    left_t = np.concatenate([t[t < lo], [lo]])
    right_t = np.concatenate([[hi], t[t > hi]])
    left_q = np.concatenate([q[t < lo], [np.interp(lo, t, q)]])
    right_q = np.concatenate([[np.interp(hi, t, q)], q[t > hi]])
    val = 0.0
    if len(left_t) > 1:
        val += float(np.trapezoid(left_q / (left_t - x), left_t))
    if len(right_t) > 1:
        val += float(np.trapezoid(right_q / (right_t - x), right_t))

    # excised window from a local quadratic model q(x+u) = a0 + a1 u + a2 u^2
    half = max(3 * eps, 4 * h_loc)
    sel = np.abs(t - x) <= half
    while np.count_nonzero(sel) < 3 and half < (t[-1] - t[0]):
        half *= 2
        sel = np.abs(t - x) <= half
    a2, a1, a0 = np.polyfit(t[sel] - x, q[sel], 2)
    ulo, uhi = lo - x, hi - x
    val += a0 * (np.log(abs(uhi)) - np.log(abs(ulo))) \
        + a1 * (uhi - ulo) + a2 * (uhi ** 2 - ulo ** 2) / 2
    return val / np.pi


# ----------------------------------------------------------------------
# truncated half-plane quadrature

def quad_halfplane(g, extent, delta, edges=(), tol: Tolerances = DEFAULT,
                   ny=48, nx_base=240, tail_exponent=None):
    """Integral of g over the upper half-plane, truncated and extrapolated.

    g must accept a complex ndarray and return values elementwise.  The
    window is [-extent, extent] x [delta, extent]; the x-mesh is graded
    toward the supplied real 'edges' (integrable inverse-square-root
    singularities allowed there) and the y-mesh is geometric toward the
    real axis.  The lower cutoff contributes an O(delta) strip, removed by
    Richardson extrapolation from delta and delta/2; a power-law tail
    |g| ~ C |z|^-p (p = tail_exponent) is added analytically from a ring
    sample at the truncation radius.

    Returns (value, error_estimate, converged); never silently fails.
    """
    def rect(dlt, scale):
        xs = _graded_axis(-extent, extent, int(nx_base * scale), edges)
        ys = np.geomspace(dlt, extent, int(ny * scale))
        zz = xs[None, :] + 1j * ys[:, None]
        gv = np.asarray(g(zz), dtype=float)
        return float(np.trapezoid(np.trapezoid(gv, xs, axis=1), ys))

    i_coarse = 2 * rect(delta / 2, 1.0) - rect(delta, 1.0)
    i_half = rect(delta / 2, 1.5)
    i_full = rect(delta, 1.5)
    i_fine = 2 * i_half - i_full
    mesh_err = abs(i_fine - i_coarse)
    strip_err = abs(i_half - i_full) / 3

    tail = 0.0
    if tail_exponent is not None and tail_exponent > 2:
        r0 = 0.98 * extent
        ths = np.linspace(0.12, np.pi - 0.12, 9)
        ring = float(np.mean(np.abs(g(r0 * np.exp(1j * ths)))))
        tail = ring * np.pi * r0 ** 2 / (tail_exponent - 2)

    value = i_fine + tail
    err = mesh_err + strip_err + 0.5 * tail
    converged = mesh_err <= max(0.05 * abs(value), 1e-12)
    return value, err, converged


def _graded_axis(a, b, n, edges):
    """Mesh on [a, b] refined geometrically toward each listed edge point."""
    pts = set(np.linspace(a, b, n))
    for e in edges:
        if not (a <= e <= b):
            continue
        d = (b - a) / n
        while d > 1e-7 * (b - a):
            for s in (-1.0, 1.0):
                p = e + s * d
                if a < p < b:
                    pts.add(p)
            d *= 0.5
    return np.array(sorted(pts))
