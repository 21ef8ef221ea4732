"""Real-axis band and gap structure, eigenvalue ladders, disc counts.

The band-multiplicity function m(x) counts Lyapunov branches inside
[-1, 1], duplicates included; a point belongs to the spectrum iff
m(x) >= 1.  Gaps are the maximal open intervals with m = 0, the
full-multiplicity set has m = dim and the partial set 0 < m < dim.  Gap
endpoints are refined by lockstep bisection and classified by which of
|det(M - I)|, |det(M + I)|, |rho_reduced| vanishes there; ties report
every label, since an endpoint can be an eigenvalue and a resonance at
the same time.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .config import DEFAULT, Tolerances
from .errors import BoundaryFloorError
from .lyapunov import RhoEvaluator, build_l
from .monodromy import lyapunov_matrix_stack, monodromy_grid
from .numerics import ContourRegion, count_zeros
from .potential import SCHRODINGER, PotentialSpec

_IM_TOL = 1e-9
_RE_TOL = 1e-12


@dataclass
class Component:
    lo: float
    hi: float
    mult: int
    truncated: bool = False   # touches the window boundary

    @property
    def width(self):
        return self.hi - self.lo


@dataclass
class GapRecord:
    lo: float
    hi: float
    labels_lo: tuple
    labels_hi: tuple
    residuals_lo: dict
    residuals_hi: dict
    truncated: bool = False

    @property
    def length(self):
        return self.hi - self.lo

    @property
    def midpoint(self):
        return 0.5 * (self.lo + self.hi)


@dataclass
class SpectralBandStructure:
    window: tuple
    xs: np.ndarray
    mult: np.ndarray
    dim: int
    components: list
    gaps: list
    sigma_full: list
    sigma_partial: list
    gamma0: float = None          # upper edge of the semi-infinite lambda gap
    lambda_gaps: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def gap_length_sq_sum(self):
        """Sum over gaps of |g_n|^2, symmetric pairs counted once each,
        the central (zero-symmetric) gap excluded."""
        total = 0.0
        for g in self.gaps:
            if g.truncated or (g.lo < 0.0 < g.hi):
                continue
            total += g.length ** 2
        return total

    def lambda_gap_sq_sum(self):
        return sum((hi - lo) ** 2 for lo, hi in self.lambda_gaps)

    def support_components(self):
        """Maximal intervals where m < dim (where the Lyapunov exponent can
        be positive), with interior multiplicity breakpoints attached."""
        out = []
        run = []
        for c in self.components:
            if c.mult < self.dim:
                run.append(c)
            elif run:
                out.append(_merge_run(run))
                run = []
        if run:
            out.append(_merge_run(run))
        return out


def _merge_run(run):
    breaks = [c.hi for c in run[:-1]]
    return (run[0].lo, run[-1].hi, breaks, any(c.truncated for c in run))


# ----------------------------------------------------------------------
# multiplicity sweep

def band_multiplicity(spec, xs, tol: Tolerances = DEFAULT, method=None):
    """m(x) on an array of real points, by batched eigensolve of L."""
    xs = np.asarray(xs, dtype=float)
    l = lyapunov_matrix_stack(spec, xs.astype(complex), method=method, tol=tol)
    w = np.linalg.eigvals(l)
    inside = (np.abs(w.imag) <= _IM_TOL) & (np.abs(w.real) <= 1.0 + _RE_TOL)
    return inside.sum(axis=1)


def scan_bands(spec, window, grid_n=256, tol: Tolerances = DEFAULT,
               method=None) -> SpectralBandStructure:
    """Sweep m(x), refine every multiplicity transition, classify gap edges.

    grid_n is the sample density per unit length (at least 256).  A gap
    narrower than two grid cells is reported but flagged for refinement.
    """
    grid_n = max(grid_n, 256)
    a, b = float(window[0]), float(window[1])
    npts = max(int((b - a) * grid_n) + 1, 16)
    xs = np.linspace(a, b, npts)
    mult = band_multiplicity(spec, xs, tol, method)

    # refine all transitions in lockstep
    idx = np.nonzero(np.diff(mult) != 0)[0]
    lo = xs[idx].copy()
    hi = xs[idx + 1].copy()
    m_left = mult[idx].copy()
    flags = []
    while len(lo) and np.max(hi - lo) > tol.endpoint_bisect:
        mid = 0.5 * (lo + hi)
        m_mid = band_multiplicity(spec, mid, tol, method)
        take_left = m_mid == m_left
        lo = np.where(take_left, mid, lo)
        hi = np.where(take_left, hi, mid)
    cuts = list(0.5 * (lo + hi))

    # constant-multiplicity components between refined cuts
    edges = [a, *cuts, b]
    components = []
    for xl, xr in zip(edges[:-1], edges[1:]):
        if xr - xl <= tol.endpoint_bisect:
            continue
        mm = int(band_multiplicity(spec, np.array([0.5 * (xl + xr)]), tol, method)[0])
        components.append(Component(lo=xl, hi=xr, mult=mm,
                                    truncated=(xl <= a + 1e-12 or xr >= b - 1e-12)))

    step = xs[1] - xs[0]
    rho = RhoEvaluator(spec, tol, method=method)
    gaps, sigma_full, sigma_partial = [], [], []
    for comp in components:
        if comp.mult == 0:
            rec = _classify_gap(spec, comp, rho, tol, method)
            if comp.width < 2 * step:
                flags.append(f"gap ({comp.lo:.6f}, {comp.hi:.6f}) narrower than "
                             "two grid cells; flagged for refinement")
            gaps.append(rec)
        elif comp.mult == spec.dim:
            sigma_full.append((comp.lo, comp.hi))
        else:
            sigma_partial.append((comp.lo, comp.hi))

    gamma0, lambda_gaps = None, []
    if spec.family == SCHRODINGER:
        for g in gaps:
            if g.truncated:
                continue
            if g.lo < 0.0 < g.hi or abs(g.lo + g.hi) < 1e-9:
                gamma0 = max(g.lo ** 2, g.hi ** 2)
            elif g.lo > 0.0:
                lambda_gaps.append((g.lo ** 2, g.hi ** 2))

    return SpectralBandStructure(window=(a, b), xs=xs, mult=mult, dim=spec.dim,
                                 components=components, gaps=gaps,
                                 sigma_full=sigma_full, sigma_partial=sigma_partial,
                                 gamma0=gamma0, lambda_gaps=lambda_gaps, flags=flags)


def _periodic_dets(spec, x, tol, method):
    m = monodromy_grid(spec, np.array([complex(x)]), method=method, tol=tol)[0]
    eye = np.eye(m.shape[0])
    return abs(np.linalg.det(m - eye)), abs(np.linalg.det(m + eye))


def _classify_gap(spec, comp, rho, tol, method):
    labels, residuals = [], []
    for e in (comp.lo, comp.hi):
        r_per, r_ape = _periodic_dets(spec, e, tol, method)
        r_res = abs(rho(complex(e))) if rho.degree and rho.degree > 1 else np.inf
        res = {"Periodic": float(r_per), "Antiperiodic": float(r_ape),
               "Resonance": float(r_res)}
        names = tuple(k for k, v in res.items() if v <= tol.classifier_threshold)
        if not names:
            names = (min(res, key=res.get),)
        labels.append(names)
        residuals.append(res)
    return GapRecord(lo=comp.lo, hi=comp.hi,
                     labels_lo=labels[0], labels_hi=labels[1],
                     residuals_lo=residuals[0], residuals_hi=residuals[1],
                     truncated=comp.truncated)


# ----------------------------------------------------------------------
# periodic / anti-periodic eigenvalue ladders

@dataclass
class EigenvalueLadder:
    parity: str
    entries: list                 # (z, multiplicity), sorted by z
    labels: list                  # (n, j, z)
    drift: list                   # (n, max_j |z_{n,j} - pi n|)
    flags: list


def _det_shift(spec, zs, sign, tol, method):
    """det(M(z) - sign*I) over a batch, realified by the symmetry of the class.

    Conjugating det(M(x) - I) on the real axis gives (-1)^dim det(M(x) - I),
    so the determinant is real for even dim and purely imaginary for odd;
    det(M(x) + I) is real in every dimension.
    """
    m = monodromy_grid(spec, np.asarray(zs, dtype=complex), method=method, tol=tol)
    eye = np.eye(m.shape[-1])
    d = np.linalg.det(m - sign * eye)
    if sign > 0 and m.shape[-1] % 2 == 1:
        return d.imag
    return d.real


def eigen_ladder(spec, parity, n_range, tol: Tolerances = DEFAULT,
                 method=None, scan_density=420) -> EigenvalueLadder:
    """Real zeros of det(M -+ I) around each block center pi*n, labeled.

    parity 'even' hunts periodic eigenvalues near even multiples of pi,
    'odd' anti-periodic ones near odd multiples; n_range lists the integers
    n of the block centers pi*n (even integers for 'even' and odd for
    'odd').  Touching zeros (no sign change) are caught through minima of
    the realified determinant and finished on its derivative; every
    multiplicity is confirmed by a contour count on a small disc.
    """
    sign = +1.0 if parity == "even" else -1.0
    expected_parity = 0 if parity == "even" else 1
    flags = []
    entries = []
    labels = []
    drift = []

    def g(x):
        return float(_det_shift(spec, [x], sign, tol, method)[0])

    def det_complex(z):
        m = monodromy_grid(spec, np.array([z]), method=method, tol=tol)[0]
        return complex(np.linalg.det(m - sign * np.eye(m.shape[0])))

    for n in n_range:
        if n % 2 != expected_parity:
            raise ValueError(f"block index {n} has the wrong parity for {parity!r}")
        center = np.pi * n
        lo, hi = center - np.pi / 2, center + np.pi / 2
        xs = np.linspace(lo, hi, scan_density)
        vals = _det_shift(spec, xs, sign, tol, method)
        scale = float(np.max(np.abs(vals)))
        roots = _real_roots(g, xs, vals, scale)
        block = []
        for r in roots:
            mult = _disc_multiplicity(det_complex, r, roots, tol)
            block.append((r, mult))
        count = sum(m for _, m in block)
        if count != spec.dim:
            flags.append(f"block n={n}: found {count} roots with multiplicity, "
                         f"expected {spec.dim}")
        block.sort()
        j = 1
        bd = 0.0
        for r, mult in block:
            entries.append((r, mult))
            for _ in range(mult):
                labels.append((n, j, r))
                j += 1
            bd = max(bd, abs(r - center))
        drift.append((n, bd))

    entries.sort()
    return EigenvalueLadder(parity=parity, entries=entries, labels=labels,
                            drift=drift, flags=flags)


def _real_roots(g, xs, vals, scale):
    """Sign-change roots plus touching (even-multiplicity) minima of g."""
    roots = []
    for i in range(len(xs) - 1):
        if vals[i] == 0.0:
            roots.append(float(xs[i]))
        elif vals[i] * vals[i + 1] < 0:
            roots.append(float(brentq(g, xs[i], xs[i + 1], xtol=1e-13)))
    # touching zeros: local minima of |g| that dip far below the block scale
    absv = np.abs(vals)
    for i in range(1, len(xs) - 1):
        if absv[i] <= absv[i - 1] and absv[i] <= absv[i + 1] \
                and absv[i] < 1e-4 * scale:
            x0 = _refine_touch(g, xs[i], xs[i] - xs[i - 1])
            if x0 is not None and not any(abs(x0 - r) < 1e-7 for r in roots):
                if abs(g(x0)) < 1e-8 * scale:
                    roots.append(x0)
    return sorted(roots)


def _refine_touch(g, x0, h):
    def slope(x):
        return (g(x - 2 * h) - 8 * g(x - h) + 8 * g(x + h) - g(x + 2 * h)) / (12 * h)
    lo, hi = x0 - 2 * h, x0 + 2 * h
    slo, shi = slope(lo), slope(hi)
    tries = 0
    while slo * shi > 0 and tries < 12:
        lo -= 2 * h
        hi += 2 * h
        slo, shi = slope(lo), slope(hi)
        tries += 1
    if slo * shi > 0:
        return None
    for _ in range(3):
        mid = brentq(slope, lo, hi, xtol=1e-13)
        h /= 4
        lo, hi = mid - 4 * h, mid + 4 * h
        if slope(lo) * slope(hi) > 0:
            return mid
    return mid


def _disc_multiplicity(det_complex, root, all_roots, tol):
    others = [abs(root - r) for r in all_roots if abs(root - r) > 1e-9]
    radius = min(0.1, (min(others) / 3) if others else 0.1)
    for attempt in range(4):
        try:
            return count_zeros(det_complex,
                               ContourRegion.disc(complex(root), radius), tol)
        except BoundaryFloorError:
            radius *= 0.9
    return 1


# ----------------------------------------------------------------------
# argument-principle verification of per-disc counts

def disc_counts(spec, parity, ns, tol: Tolerances = DEFAULT, method=None):
    """count_zeros of det(M -+ I) on the discs of radius pi/2 around the
    asymptotic centers; returns rows (n, count, expected = dim)."""
    sign = +1.0 if parity == "even" else -1.0

    def det_complex(z):
        m = monodromy_grid(spec, np.array([z]), method=method, tol=tol)[0]
        return complex(np.linalg.det(m - sign * np.eye(m.shape[0])))

    rows = []
    for n in ns:
        center = 2 * np.pi * n if parity == "even" else np.pi * (2 * n + 1)
        radius = np.pi / 2
        count = None
        for attempt in range(4):
            try:
                count = count_zeros(det_complex,
                                    ContourRegion.disc(center, radius), tol)
                break
            except BoundaryFloorError:
                radius *= 0.9
        rows.append((n, count, spec.dim))
    return rows
