"""Resonances: isolated zeros of the reduced branch discriminant.

Each collision of distinct Lyapunov branches is a zero of the reduced
discriminant rho.  Asymptotically the zeros sit near multiples of pi with
a 1/n correction controlled by the eigenvalues of the mean matrix; those
asymptotic positions seed the search, and an argument-principle
subdivision of the requested region localizes every zero before Newton
polishing.  Root finding always evaluates rho through the Sylvester
resultant of the trace-built polynomial, never the eigenvalue product,
so the iteration stays smooth through the collision itself.
"""

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (AmbiguousOrderError, BoundaryFloorError,
                     PermanentDegeneracy)
from .lyapunov import (BranchPointRecord, RhoEvaluator, classify_branch_point,
                       polish_rho_zero)
from .numerics import ContourRegion, count_zeros
from .potential import SCHRODINGER, validate

_CELL_FLOOR = 4e-3        # cells smaller than this hold one multiple zero
_DEDUP = 1e-7


@dataclass
class ResonanceRecord:
    z0: complex
    multiplicity: int
    branch_record: BranchPointRecord = None
    branch_note: str = ""
    seed: complex = None
    family_index: tuple = None   # (n, (j, k)) when seeded

    @property
    def is_real(self):
        return abs(self.z0.imag) < 1e-9


@dataclass
class Seed:
    z: complex
    n: int
    pair: tuple
    alt: complex     # the halved-correction variant kept for the report


def estimate_b(spec, tol: Tolerances = DEFAULT):
    """Per-branch cosine-correction coefficients b_j = v_j / 2, ascending.

    The leading large-|z| form of the branches is
    cos z + v_j sin z / (2 z) with v_j the eigenvalues of the mean matrix,
    which matches cos z + b_j sin z / z exactly when b_j = v_j / 2.
    """
    if spec.family != SCHRODINGER:
        raise ValueError("b estimates apply to the second-order family")
    summary = validate(spec)
    return np.sort(np.linalg.eigvalsh(summary.mean)) / 2.0


def resonance_seeds(spec, n_range, tol: Tolerances = DEFAULT):
    """Asymptotic zero positions pi*n + (b_j + b_k) / (2 pi n), per pair j < k.

    Two corrections circulate for this family, differing by a factor two in
    the denominator; the constant-potential oracle singles out this one, and
    the alternative is carried along so verification reports can show both.
    Seeding is suppressed for potentials whose reduced discriminant is
    constant (all branches permanently coincide).
    """
    b = estimate_b(spec, tol)
    rho = RhoEvaluator(spec, tol)
    if rho.degree < 2:
        raise PermanentDegeneracy(
            "all Lyapunov branches coincide permanently; no resonances to seed")
    mult = rho.multiplicity
    # one b per distinct branch: the mean-matrix eigenvalues repeat with the
    # same structural multiplicity as the branches themselves
    if len(b) * 2 == spec.dim and rho.degree == len(b):
        b_distinct = b
    else:
        b_distinct = np.sort(np.unique(np.round(b, 12)))
        if len(b_distinct) != rho.degree:
            b_distinct = b[:rho.degree]
    seeds = []
    for n in n_range:
        if n == 0:
            continue
        for j in range(len(b_distinct)):
            for k in range(j + 1, len(b_distinct)):
                corr = (b_distinct[j] + b_distinct[k]) / (2 * np.pi * n)
                seeds.append(Seed(z=np.pi * n + corr, n=n, pair=(j, k),
                                  alt=np.pi * n + corr / 2))
    return seeds


def find_resonances(spec, region: ContourRegion, tol: Tolerances = DEFAULT,
                    classify=False, method=None, seeds=None):
    """All zeros of the reduced discriminant inside the region.

    The region is probed at 16 interior points first: if rho vanishes
    identically (permanently degenerate pairing) the search signals
    PermanentDegeneracy instead of chasing noise.  Otherwise cells are
    subdivided by argument-principle counts until each holds a single
    (possibly multiple) zero, which is then Newton-polished and
    re-verified by a count on a small disc.
    """
    rho = RhoEvaluator(spec, tol, method=method)
    if rho.degree < 2:
        raise PermanentDegeneracy(
            "reduced discriminant has degree < 2; branches coincide permanently")
    probes = region.interior_grid(16)
    pvals = np.abs(rho(probes))
    boundary_scale = float(np.max(np.abs(rho(region.boundary()[::4]))))
    scale = max(float(pvals.max()), boundary_scale)
    if scale < tol.degenerate_probe_rel * max(1.0, boundary_scale):
        raise PermanentDegeneracy("discriminant vanishes on the whole probe set")

    rng = np.random.default_rng(7)
    found = []
    queue = [region]
    guard = 0
    while queue and guard < 600:
        guard += 1
        cell = queue.pop()
        count = _robust_count(rho, cell, rng, tol)
        if count is None or count == 0:
            continue
        if count == 1 or cell.extent < _CELL_FLOOR:
            z0, mu = polish_rho_zero(rho, _cell_center(cell), tol,
                                     multiplicity=count)
            if not region.contains(z0) and abs(z0.imag) > 1e-9:
                continue
            found.append((z0, count))
            continue
        queue.extend(_split_off_center(cell))

    records = _assemble(rho, found, region, tol)
    if classify:
        sampler_spec = spec
        for rec in records:
            try:
                rec.branch_record = classify_branch_point(
                    sampler_spec, rec.z0, tol=tol, method=method)
            except AmbiguousOrderError as exc:
                rec.branch_note = (f"not a branch point: {exc}; even-order "
                                   "collision of analytic branches")
    if seeds:
        for rec in records:
            best = min(seeds, key=lambda s: abs(s.z - rec.z0))
            if abs(best.z - rec.z0) < 0.5:
                rec.seed = complex(best.z)
                rec.family_index = (best.n, best.pair)
    return records


def _cell_center(cell):
    if cell.shape[0] == "disc":
        return cell.shape[1]
    return (cell.shape[1] + cell.shape[2]) / 2


def _robust_count(rho, cell, rng, tol):
    for attempt in range(5):
        try:
            return count_zeros(rho, cell, tol)
        except BoundaryFloorError:
            cell = cell.jittered(rng) if attempt % 2 else cell.shrunk(0.96)
    return None


def _split_off_center(cell):
    """Split a cell slightly off the midlines, so real-axis zeros cannot sit
    exactly on a shared edge of the children."""
    if cell.shape[0] == "disc":
        _, c, r = cell.shape
        lo, hi = c - r * (1 + 1j), c + r * (1 + 1j)
    else:
        _, lo, hi = cell.shape
    fx, fy = 0.513, 0.487
    mx = lo.real + fx * (hi.real - lo.real)
    my = lo.imag + fy * (hi.imag - lo.imag)
    quads = [(lo, complex(mx, my)),
             (complex(mx, lo.imag), complex(hi.real, my)),
             (complex(lo.real, my), complex(mx, hi.imag)),
             (complex(mx, my), hi)]
    return [ContourRegion.rectangle(a, b, cell.boundary_samples) for a, b in quads]


def _assemble(rho, found, region, tol):
    # dedupe zeros found from adjacent cells, then close under conjugation
    uniq = []
    for z0, mu in sorted(found, key=lambda t: (t[0].real, t[0].imag)):
        if any(abs(z0 - u.z0) < _DEDUP for u in uniq):
            continue
        if abs(z0.imag) < 1e-9:
            z0 = complex(z0.real, 0.0)
        uniq.append(ResonanceRecord(z0=z0, multiplicity=mu))
    extra = []
    for rec in uniq:
        if rec.z0.imag != 0.0:
            zc = np.conj(rec.z0)
            if region.contains(zc) and not any(abs(zc - u.z0) < _DEDUP for u in uniq):
                zp, _ = polish_rho_zero(rho, zc, tol, multiplicity=rec.multiplicity)
                extra.append(ResonanceRecord(z0=zp, multiplicity=rec.multiplicity))
    uniq.extend(extra)

    for rec in uniq:
        rec.multiplicity = _verify_multiplicity(rho, rec, uniq, tol)
    return uniq


def _verify_multiplicity(rho, rec, all_recs, tol):
    others = [abs(rec.z0 - r.z0) for r in all_recs if r is not rec]
    radius = min(1e-4, min(others) / 3) if others else 1e-4
    for attempt in range(4):
        try:
            return count_zeros(rho, ContourRegion.disc(rec.z0, radius), tol)
        except BoundaryFloorError:
            radius *= 1.7     # widen: the zero may sit just outside
    return rec.multiplicity


# ----------------------------------------------------------------------
# seed-accuracy verification

@dataclass
class SeedAccuracyRow:
    n: int
    zero: complex
    seed: complex
    alt_seed: complex
    err_seed: float
    err_alt: float


@dataclass
class SeedReport:
    rows: list
    chosen: str                 # which correction denominator matched
    max_scaled_error: float     # max over rows of |seed - zero| * n

    def summary(self):
        return (f"denominator resolution: {self.chosen}; "
                f"max n-scaled seed error {self.max_scaled_error:.3e}")


def seed_accuracy(spec, n_range, half_width=0.45, tol: Tolerances = DEFAULT,
                  method=None):
    """Locate the zero nearest each seed and tabulate both correction variants.

    The two circulating asymptotic corrections differ by a factor two; the
    one with the smaller n-scaled error is reported as chosen, resolving the
    ambiguity empirically.
    """
    seeds = resonance_seeds(spec, n_range, tol)
    rho = RhoEvaluator(spec, tol, method=method)
    rows = []
    for s in seeds:
        region = ContourRegion.rectangle(
            complex(s.z.real - half_width, -0.35),
            complex(s.z.real + half_width, 0.35))
        recs = find_resonances(spec, region, tol, method=method)
        if not recs:
            continue
        best = min(recs, key=lambda r: abs(r.z0 - s.z))
        rows.append(SeedAccuracyRow(
            n=s.n, zero=best.z0, seed=complex(s.z), alt_seed=complex(s.alt),
            err_seed=abs(best.z0 - s.z), err_alt=abs(best.z0 - s.alt)))
    tot_seed = sum(r.err_seed for r in rows)
    tot_alt = sum(r.err_alt for r in rows)
    chosen = ("(b_j + b_k) / (2 pi n)" if tot_seed <= tot_alt
              else "(b_j + b_k) / (4 pi n)")
    max_scaled = max((r.err_seed * abs(r.n) for r in rows), default=0.0)
    return SeedReport(rows=rows, chosen=chosen, max_scaled_error=max_scaled)
