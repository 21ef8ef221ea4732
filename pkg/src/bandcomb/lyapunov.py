"""Lyapunov functions, discriminants, branch continuation and classification.

From a monodromy matrix M the matrix L = (M + M^-1)/2 is formed; its
eigenvalues Delta_j(z) are the Lyapunov functions.  Their characteristic
polynomial is recovered from power traces by Newton's identities, and the
discriminant rho (the squared product of pairwise differences) is evaluated
both from the eigenvalues and, independently, as a Sylvester resultant in
the polynomial coefficients.

Real self-adjoint potentials make the branches permanently coincide in
pairs, so the full discriminant vanishes identically.  The reduced objects
divide the power traces by the structural multiplicity before running the
Newton recursion, which realizes the characteristic polynomial of the
distinct branches only; its discriminant is the one whose isolated zeros
are the resonances.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .config import DEFAULT, Tolerances
from .errors import (AmbiguousOrderError, BoundaryFloorError, BranchPointHit,
                     ConditioningError)
from .monodromy import (MonodromyResult, default_method,
                        lyapunov_matrix_stack, monodromy_grid)
from .numerics import (ContourRegion, PolyCoeffs, batched_newton_coeffs,
                       count_zeros, eig_dense, newton_charpoly, power_traces,
                       sylvester_discriminant)


# ----------------------------------------------------------------------
# pointwise Lyapunov data

@dataclass
class LyapunovSet:
    z: complex
    deltas: np.ndarray          # eigenvalues of L, unordered
    multipliers: np.ndarray     # tau_j with |tau_j| >= 1, tau + 1/tau = 2 Delta
    phi: PolyCoeffs             # characteristic polynomial of L
    rho: complex                # prod_{i<j} (Delta_i - Delta_j)^2 over all branches
    rho_resultant: complex      # the same number via the Sylvester determinant


def build_l(m, tol: Tolerances = DEFAULT):
    """(M + M^-1)/2 with a conditioning guard on the inverse."""
    m = np.asarray(m, dtype=complex)
    minv = np.linalg.inv(m)
    cond = np.linalg.norm(m) * np.linalg.norm(minv)
    if cond > tol.lyapunov_cond_cap:
        raise ConditioningError(
            f"norm(M) * norm(M^-1) = {cond:.3e} above cap {tol.lyapunov_cond_cap:.1e}")
    return 0.5 * (m + minv)


def lyapunov_at(mono: MonodromyResult, tol: Tolerances = DEFAULT) -> LyapunovSet:
    l = build_l(mono.m, tol)
    dim = l.shape[0]
    deltas = eig_dense(l, tol)
    traces = power_traces(l, dim)
    phi = newton_charpoly(traces)
    rho = _pair_product(deltas)
    rho_res = sylvester_discriminant(phi.coeffs)
    multipliers = _multiplier_branch(deltas)
    return LyapunovSet(z=mono.z, deltas=deltas, multipliers=multipliers,
                       phi=phi, rho=complex(rho), rho_resultant=complex(rho_res))


def _pair_product(vals):
    vals = np.asarray(vals)
    n = len(vals)
    out = 1.0 + 0j
    for i in range(n):
        for j in range(i + 1, n):
            out *= (vals[i] - vals[j]) ** 2
    return out


def _multiplier_branch(deltas):
    """tau solving tau^2 - 2 Delta tau + 1 = 0 on the |tau| >= 1 branch."""
    s = np.sqrt(deltas.astype(complex) ** 2 - 1.0)
    tau_plus, tau_minus = deltas + s, deltas - s
    pick = np.abs(tau_plus) >= np.abs(tau_minus)
    return np.where(pick, tau_plus, tau_minus)


def trace_identity_check(mono: MonodromyResult, m_max=8):
    """Compare Tr L^m with the binomial combination of Tr M^(2p-m).

    Expanding L^m = 2^-m (M + M^-1)^m termwise gives
        Tr L^m = 2^-m sum_{p=0..m} C(m, p) Tr M^(2p-m),
    which ties the Lyapunov traces to monodromy power traces of both signs.
    Returns (max relative deviation, per-m table).
    """
    if m_max > 8:
        raise ValueError("trace identity check supports m_max <= 8")
    l = build_l(mono.m)
    dim = l.shape[0]
    t_l = power_traces(l, m_max)
    minv = np.linalg.inv(mono.m)
    rows, worst = [], 0.0
    for m in range(1, m_max + 1):
        acc = 0.0 + 0j
        for p in range(m + 1):
            k = 2 * p - m
            mk = np.linalg.matrix_power(mono.m if k >= 0 else minv, abs(k))
            acc += math.comb(m, p) * np.trace(mk)
        acc /= 2 ** m
        dev = abs(acc - t_l[m - 1]) / max(1.0, abs(acc))
        rows.append((m, complex(t_l[m - 1]), complex(acc), float(dev)))
        worst = max(worst, float(dev))
    return worst, rows


# ----------------------------------------------------------------------
# branch evaluation through traces

_PROBE_POINTS = (0.373 + 0.291j, 1.137 + 0.522j, 2.707 + 0.843j)


def structural_multiplicity(spec, tol: Tolerances = DEFAULT) -> int:
    """How often each distinct Lyapunov branch repeats, detected by probing.

    Real self-adjoint potentials double every branch; scalar-type data can
    collapse all of them.  The returned multiplicity divides the dimension
    and is the gcd of eigenvalue cluster sizes at a few generic complex z.
    """
    sizes = []
    for z in _PROBE_POINTS:
        vals = branch_values(spec, z, reduced=False, tol=tol)
        sizes.extend(_cluster_sizes(vals, tol.branch_cluster_rel))
    return math.gcd(*sizes)


def _cluster_sizes(vals, rel):
    vals = sorted(vals, key=lambda w: (w.real, w.imag))
    scale = max(1.0, max(abs(v) for v in vals))
    sizes, current = [], 1
    for a, b in zip(vals[:-1], vals[1:]):
        if abs(b - a) <= rel * scale:
            current += 1
        else:
            sizes.append(current)
            current = 1
    sizes.append(current)
    return sizes


def branch_coeffs(spec, zs, reduced=True, method=None, tol: Tolerances = DEFAULT,
                  multiplicity=None):
    """Monic characteristic coefficients of the (reduced) branch set, batched.

    Power traces of L are divided by the structural multiplicity before the
    Newton recursion; for multiplicity m the full polynomial is the m-th
    power of the reduced one, so its power sums are exactly m times larger.
    Everything is polynomial in traces, hence smooth through collisions.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    l = lyapunov_matrix_stack(spec, zs, method=method, tol=tol)
    dim = l.shape[-1]
    mult = 1
    if reduced:
        mult = multiplicity or structural_multiplicity(spec, tol)
    d = dim // mult
    traces = np.empty(zs.shape + (d,), dtype=complex)
    p = l
    for k in range(d):
        traces[..., k] = np.einsum("...ii->...", p) / mult
        if k + 1 < d:
            p = p @ l
    return batched_newton_coeffs(traces)


def branch_values(spec, z, reduced=True, method=None, tol: Tolerances = DEFAULT,
                  multiplicity=None):
    """Unordered (reduced) Lyapunov branch values at a single z."""
    if reduced:
        coeffs = branch_coeffs(spec, [z], reduced=True, method=method, tol=tol,
                               multiplicity=multiplicity)[0]
        return np.roots(coeffs)
    l = lyapunov_matrix_stack(spec, np.array([z]), method=method, tol=tol)[0]
    return eig_dense(l, tol)


def make_branch_sampler(spec, reduced=True, method=None, tol: Tolerances = DEFAULT):
    """Callable z -> branch values, with the multiplicity probed only once."""
    mult = structural_multiplicity(spec, tol) if reduced else 1

    def sampler(z):
        coeffs = branch_coeffs(spec, [z], reduced=reduced, method=method,
                               tol=tol, multiplicity=mult)[0]
        return np.roots(coeffs)
    sampler.degree = spec.dim // mult
    sampler.multiplicity = mult
    return sampler


class RhoEvaluator:
    """Reduced discriminant as a smooth function of z (vectorized).

    For potentials this is the Sylvester discriminant of the trace-divided
    characteristic polynomial; for a raw branch sampler it falls back to the
    pairwise product of the supplied values.
    """

    def __init__(self, source, tol: Tolerances = DEFAULT, method=None):
        self.tol = tol
        if callable(source) and not hasattr(source, "eval"):
            self._sampler = source
            self._spec = None
            self.degree = getattr(source, "degree", None)
        else:
            self._spec = source
            self._sampler = None
            self.multiplicity = structural_multiplicity(source, tol)
            self.degree = source.dim // self.multiplicity
            self._method = method

    def __call__(self, z):
        if self._spec is not None:
            zs = np.atleast_1d(np.asarray(z, dtype=complex))
            coeffs = branch_coeffs(self._spec, zs, reduced=True, tol=self.tol,
                                   method=self._method,
                                   multiplicity=self.multiplicity)
            out = sylvester_discriminant(coeffs)
            return out[0] if np.ndim(z) == 0 else out
        if np.ndim(z) == 0:
            return _pair_product(self._sampler(z))
        return np.array([_pair_product(self._sampler(w)) for w in np.ravel(z)]).reshape(np.shape(z))


# ----------------------------------------------------------------------
# analytic continuation of branches along paths

@dataclass
class BranchPath:
    points: list                  # polyline actually walked
    values: list                  # values[k][i] = branch i at points[k]
    permutation: np.ndarray       # slot i of the start maps to slot perm[i]
    min_separation: float

    @property
    def is_identity(self):
        return bool(np.all(self.permutation == np.arange(len(self.permutation))))


def continue_branches(source, path, tol: Tolerances = DEFAULT, method=None,
                      initial_steps=12):
    """Track branch values along a polyline with adaptive step control.

    Consecutive value sets are matched by minimal total displacement; the
    step is halved whenever the smallest pairwise separation drops under
    branch_sep_factor times the largest per-step motion.  A separation
    collapse below the configured floor reports the hit location.
    """
    sampler = source if callable(source) else make_branch_sampler(
        source, reduced=True, method=method, tol=tol)
    path = [complex(p) for p in path]
    cur = np.asarray(sampler(path[0]))
    order = np.argsort(cur.real + 1e-6 * cur.imag)
    cur = cur[order]
    values = [cur.copy()]
    points = [path[0]]
    min_sep = _min_separation(cur)

    for a, b in zip(path[:-1], path[1:]):
        t = 0.0
        dt = 1.0 / initial_steps
        while t < 1.0 - 1e-12:
            step = min(dt, 1.0 - t)
            znew = a + (b - a) * (t + step)
            new = np.asarray(sampler(znew))
            new, motion = _match(cur, new)
            sep = _min_separation(cur)
            min_sep = min(min_sep, sep)
            if sep < tol.branch_collapse:
                raise BranchPointHit(znew)
            if motion > 0 and sep < tol.branch_sep_factor * motion and step > 1e-12:
                dt = step / 2
                continue
            cur = new
            t += step
            points.append(znew)
            values.append(cur.copy())
            if motion < sep / (4 * tol.branch_sep_factor):
                dt = min(2 * dt, 1.0)

    start, final = values[0], values[-1]
    cost = np.abs(final[:, None] - start[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(start), dtype=int)
    perm[cols] = rows
    return BranchPath(points=points, values=values, permutation=perm,
                      min_separation=float(min_sep))


def _match(cur, new):
    cost = np.abs(cur[:, None] - new[None, :])
    rows, cols = linear_sum_assignment(cost)
    ordered = np.empty_like(new)
    ordered[rows] = new[cols]
    return ordered, float(np.max(cost[rows, cols]))


def _min_separation(vals):
    n = len(vals)
    if n < 2:
        return np.inf
    d = np.abs(vals[:, None] - vals[None, :])
    d[np.arange(n), np.arange(n)] = np.inf
    return float(d.min())


def circle_path(center, radius, segments=24):
    th = np.linspace(0.0, 2 * np.pi, segments + 1)
    return list(center + radius * np.exp(1j * th))


# ----------------------------------------------------------------------
# branch point classification

@dataclass
class BranchPointRecord:
    z0: complex
    kappa: int                 # cycle length of the loop permutation
    m: int                     # (Delta_1 - Delta_2)^2 vanishes to order 2m + 1
    inside_band: bool
    vanishing_order: float     # fitted log-log slope before rounding
    permutation: np.ndarray = field(default=None, repr=False)


def polish_rho_zero(rho, z0, tol: Tolerances = DEFAULT, multiplicity=None):
    """Refine a zero of rho by multiplicity-aware Newton.

    For a zero of order mu the update z - mu * rho / rho' restores quadratic
    convergence; mu comes from a contour count around the initial guess when
    not supplied.  Real even-order zeros are finished on d(rho)/dx, which has
    a simple zero exactly at the minimum.
    """
    z = complex(z0)
    if multiplicity is None:
        multiplicity = _count_near(rho, z, 1e-2, tol)
    mu = max(multiplicity, 1)
    for _ in range(60):
        h = tol.newton_step_rel * max(1.0, abs(z))
        d = (rho(z + h) - rho(z - h)) / (2 * h)
        val = rho(z)
        if d == 0:
            break
        step = mu * val / d
        z = z - step
        if abs(step) < 1e-13 * max(1.0, abs(z)):
            break
    if mu % 2 == 0 and abs(z.imag) < 1e-7:
        z = complex(_refine_even_real(rho, z.real, tol), 0.0)
    return z, mu


def _refine_even_real(rho, x0, tol: Tolerances):
    """Root of d(rho)/dx around an even-order real minimum of rho.

    Five-point stencil keeps the derivative bias at O(h^4), so the located
    minimum is reliable to well below 1e-8 in double precision.
    """
    h = 1e-4 * max(1.0, abs(x0))

    def slope(x):
        vals = [rho(complex(x + k * h)).real for k in (-2, -1, 1, 2)]
        return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)

    lo, hi = x0 - 20 * h, x0 + 20 * h
    slo, shi = slope(lo), slope(hi)
    grow = 0
    while slo * shi > 0 and grow < 16:
        lo -= 20 * h
        hi += 20 * h
        slo, shi = slope(lo), slope(hi)
        grow += 1
    if slo * shi > 0:
        return x0
    return brentq(slope, lo, hi, xtol=1e-13)


def _count_near(rho, z, radius, tol):
    for attempt in range(4):
        try:
            return count_zeros(rho, ContourRegion.disc(z, radius * (0.9 ** attempt)), tol)
        except BoundaryFloorError:
            continue
    return 1


def classify_branch_point(source, z0_guess, tol: Tolerances = DEFAULT,
                          method=None, loop_radius=None):
    """Classify a collision of Lyapunov branches near z0_guess.

    kappa is the cycle length of the branch permutation along a small loop;
    the vanishing order of the colliding pair's squared difference comes
    from a log-log slope over radii spanning three decades and is rounded to
    the nearest odd integer.  An even fitted order (an analytic crossing,
    not a branch point) refuses classification with AmbiguousOrderError.
    """
    sampler = source if callable(source) else make_branch_sampler(
        source, reduced=True, method=method, tol=tol)
    rho = RhoEvaluator(sampler, tol)
    z0, mu = polish_rho_zero(rho, z0_guess, tol)

    r_lo, r_hi = tol.order_fit_radii
    radii = np.geomspace(r_lo, r_hi, tol.order_fit_points) * max(1.0, abs(z0))
    direction = np.exp(0.37j)
    vals = np.array([_colliding_gap(sampler(z0 + r * direction)) for r in radii])
    floor = 1e-13 * max(1.0, float(np.max(vals)))
    keep = vals > floor
    if np.count_nonzero(keep) < 4:
        raise AmbiguousOrderError(float("nan"),
                                  "squared branch gap is below noise at all radii")
    slope = np.polyfit(np.log(radii[keep]), np.log(vals[keep]), 1)[0]

    nearest_odd = int(2 * round((slope - 1) / 2) + 1)
    if nearest_odd < 1 or abs(slope - nearest_odd) > tol.order_slope_tol:
        raise AmbiguousOrderError(slope)
    m = (nearest_odd - 1) // 2

    r_loop = loop_radius or min(0.05 * max(1.0, abs(z0)), 0.3)
    loop = continue_branches(sampler, circle_path(z0, r_loop), tol=tol)
    start = loop.values[0]
    i, j = _closest_pair(start)
    kappa = _cycle_length(loop.permutation, i)

    pair_mean = 0.5 * (start[i] + start[j])
    inside = bool(abs(pair_mean.imag) < 1e-6 and -1 + 1e-9 < pair_mean.real < 1 - 1e-9)
    return BranchPointRecord(z0=z0, kappa=kappa, m=m, inside_band=inside,
                             vanishing_order=float(slope),
                             permutation=loop.permutation)


def _colliding_gap(vals):
    """Smallest squared pairwise distance: the colliding pair's |D1 - D2|^2."""
    n = len(vals)
    best = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            best = min(best, abs(vals[i] - vals[j]) ** 2)
    return best


def _closest_pair(vals):
    n = len(vals)
    best, pair = np.inf, (0, 1 if len(vals) > 1 else 0)
    for i in range(n):
        for j in range(i + 1, n):
            d = abs(vals[i] - vals[j])
            if d < best:
                best, pair = d, (i, j)
    return pair


def _cycle_length(perm, start):
    k, cur = 0, start
    while True:
        cur = perm[cur]
        k += 1
        if cur == start or k > len(perm):
            return k


# ----------------------------------------------------------------------
# high-energy asymptotics

@dataclass
class HighEnergyReport:
    fitted_means: np.ndarray      # recovered eigenvalues of the mean matrix
    true_means: np.ndarray
    residual_exponent: float      # decay rate of the defect after the 1/z term
    logdet_coeffs: np.ndarray     # per-y cubic-scaled determinant residuals
    logdet_exponent: float


def high_energy_check(spec, ys, tol: Tolerances = DEFAULT):
    """Check the large-|z| structure of the branches along the imaginary axis.

    At z = iy the branches behave like cos z + v_j sin z / (2z) with v_j the
    eigenvalues of the mean matrix; solving for v_j at each y recovers the
    means, and the residual should decay like a further power of 1/y.  The
    determinant of L obeys log(2^dim det L) = dim*y + Tr V0 / y + O(y^-3),
    which is checked through the cubic-scaled residual.
    """
    from .potential import SCHRODINGER, validate
    if spec.family != SCHRODINGER:
        raise ValueError("high-energy check applies to the second-order family")
    summary = validate(spec)
    v_true = np.sort(np.linalg.eigvalsh(summary.mean))
    dim = spec.dim

    ys = np.asarray(ys, dtype=float)
    fitted, resid, ldet_resid = [], [], []
    for y in ys:
        z = 1j * y
        l = lyapunov_matrix_stack(spec, np.array([z]), tol=tol)[0]
        deltas = eig_dense(l, tol)
        x = (deltas - np.cos(z)) * 2 * z / np.sin(z)
        x = np.sort(x.real)
        fitted.append(x)
        v_rep = np.sort(np.repeat(v_true, dim // len(v_true)))
        resid.append(float(np.max(np.abs(x - v_rep))))
        ld = np.log(np.linalg.det(l).real * 2.0 ** dim)
        ldet_resid.append(ld - dim * y - np.trace(summary.mean).real / y)
    fitted = np.mean(fitted, axis=0)
    # collapse the repeated copies back to one estimate per distinct mean
    rep = dim // len(v_true)
    fitted_means = fitted.reshape(-1, rep).mean(axis=1)

    resid = np.maximum(resid, 1e-300)
    res_slope = np.polyfit(np.log(ys), np.log(resid), 1)[0]
    ldet = np.abs(np.array(ldet_resid)) + 1e-300
    ldet_slope = np.polyfit(np.log(ys), np.log(ldet), 1)[0]
    return HighEnergyReport(fitted_means=fitted_means, true_means=v_true,
                            residual_exponent=float(res_slope),
                            logdet_coeffs=np.array(ldet_resid) * ys ** 3,
                            logdet_exponent=float(ldet_slope))
