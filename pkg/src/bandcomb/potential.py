"""1-periodic Hermitian matrix potentials.

A PotentialSpec fixes the operator family (second-order "schrodinger" or
first-order "canonical") and one of four concrete representations of the
coefficient matrix V(t) on the unit period: a constant matrix, a piecewise
constant profile, a trigonometric polynomial, or uniform samples with an
interpolation order.  Canonical potentials carry the block off-diagonal
shape V = [[0, v], [v*, 0]] with the signature matrix
J = diag(I_{N1}, -I_{N2}).
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ValidationError

SCHRODINGER = "schrodinger"
CANONICAL = "canonical"

_KINDS = ("constant", "piecewise", "trig", "sampled")


def _as_matrix(m, n):
    a = np.asarray(m, dtype=complex)
    if a.shape != (n, n):
        raise ValidationError(f"expected a {n}x{n} matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class PotentialSpec:
    """Validated description of a 1-periodic Hermitian N x N potential.

    kind-specific payload:
      constant : matrix
      piecewise: segments, a list of (length, matrix) with lengths summing to 1;
                 segments are left closed [a, b), the last one closes at t = 1
      trig     : coeffs, a dict m -> c_m for m >= 0; c_{-m} = c_m* is implied
      sampled  : samples (S x N x N on the uniform grid t_k = k/S) and
                 interp_order 1 or 3 (cubic re-symmetrizes after interpolation)
    """
    family: str
    n: int
    kind: str
    matrix: np.ndarray = None
    segments: tuple = None
    coeffs: dict = None
    samples: np.ndarray = None
    interp_order: int = 3
    n1: int = None
    n2: int = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.family not in (SCHRODINGER, CANONICAL):
            raise ValidationError(f"unknown family {self.family!r}")
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown kind {self.kind!r}")
        if self.family == CANONICAL:
            if self.n1 is None or self.n2 is None or self.n1 + self.n2 != self.n:
                raise ValidationError("canonical family needs N1 + N2 = N")
        if self.kind == "sampled" and self.interp_order not in (1, 3):
            raise ValidationError("interp_order must be 1 or 3")

    # -- evaluation -----------------------------------------------------

    def eval(self, t):
        """V(t) for t folded into [0, 1)."""
        t = float(t) % 1.0
        if self.kind == "constant":
            return np.array(self.matrix, dtype=complex)
        if self.kind == "piecewise":
            a = 0.0
            for length, m in self.segments:
                if t < a + length or (a + length >= 1.0 - 1e-15):
                    return np.array(m, dtype=complex)
                a += length
            return np.array(self.segments[-1][1], dtype=complex)
        if self.kind == "trig":
            v = np.zeros((self.n, self.n), dtype=complex)
            for m, c in self.coeffs.items():
                c = np.asarray(c, dtype=complex)
                if m == 0:
                    v += c
                else:
                    ph = np.exp(2j * np.pi * m * t)
                    v += c * ph + c.conj().T * np.conj(ph)
            return v
        # sampled
        interp = self._interpolant()
        v = interp(t)
        return 0.5 * (v + v.conj().T)

    def _interpolant(self):
        cached = getattr(self, "_interp_cache", None)
        if cached is None:
            s = len(self.samples)
            ts = np.arange(s + 1) / s
            vals = np.concatenate([self.samples, self.samples[:1]], axis=0)
            if self.interp_order == 1:
                def interp(t, ts=ts, vals=vals):
                    k = min(int(np.searchsorted(ts, t, side="right")) - 1, s - 1)
                    w = (t - ts[k]) * s
                    return (1 - w) * vals[k] + w * vals[k + 1]
                cached = interp
            else:
                spline = CubicSpline(ts, vals, axis=0, bc_type="periodic")
                cached = spline
            object.__setattr__(self, "_interp_cache", cached)
        return cached

    @property
    def dim(self):
        """Monodromy dimension: 2N for the second-order family, N for canonical."""
        return 2 * self.n if self.family == SCHRODINGER else self.n

    @property
    def j_matrix(self):
        """The structure matrix entering M(z) J M(zbar)* = J."""
        if self.family == SCHRODINGER:
            z = np.zeros((self.n, self.n))
            i = np.eye(self.n)
            return np.block([[z, i], [-i, z]]).astype(complex)
        return np.diag(np.concatenate([np.ones(self.n1), -np.ones(self.n2)])).astype(complex)

    @property
    def breakpoints(self):
        """Interior discontinuities, so propagators can align steps to them."""
        if self.kind != "piecewise":
            return ()
        cuts, a = [], 0.0
        for length, _ in self.segments[:-1]:
            a += length
            cuts.append(a)
        return tuple(cuts)

    @property
    def is_smooth(self):
        return self.kind in ("constant", "trig", "sampled")


@dataclass(frozen=True)
class PotentialSummary:
    norm_sq: float            # int_0^1 Tr V V* dt
    mean: np.ndarray          # V0 = int_0^1 V dt
    mean_eigs: np.ndarray     # eigenvalues of V0, ascending
    b_moments: tuple          # Tr (V0)^n / n!  for n = 1..4
    mean_square: np.ndarray   # int_0^1 V^2 dt


def constant(matrix, family=SCHRODINGER, n1=None, n2=None, label=""):
    m = np.atleast_2d(np.asarray(matrix, dtype=complex))
    return PotentialSpec(family, m.shape[0], "constant", matrix=m,
                         n1=n1, n2=n2, label=label)


def piecewise(segments, family=SCHRODINGER, n1=None, n2=None, label=""):
    segs = tuple((float(l), np.atleast_2d(np.asarray(m, dtype=complex)))
                 for l, m in segments)
    n = segs[0][1].shape[0]
    return PotentialSpec(family, n, "piecewise", segments=segs,
                         n1=n1, n2=n2, label=label)


def trig(coeffs, family=SCHRODINGER, n1=None, n2=None, label=""):
    cc = {int(m): np.atleast_2d(np.asarray(c, dtype=complex))
          for m, c in coeffs.items()}
    if any(m < 0 for m in cc):
        raise ValidationError("trig coefficients are given for m >= 0 only")
    n = next(iter(cc.values())).shape[0]
    return PotentialSpec(family, n, "trig", coeffs=cc, n1=n1, n2=n2, label=label)


def sampled(samples, interp_order=3, family=SCHRODINGER, n1=None, n2=None, label=""):
    arr = np.asarray(samples, dtype=complex)
    return PotentialSpec(family, arr.shape[1], "sampled", samples=arr,
                         interp_order=interp_order, n1=n1, n2=n2, label=label)


def zero(n, family=SCHRODINGER, n1=None, n2=None):
    return constant(np.zeros((n, n)), family=family, n1=n1, n2=n2, label="zero")


def canonical_offdiag(v, n1=None, n2=None, label=""):
    """Constant canonical potential from its off-diagonal block v."""
    v = np.atleast_2d(np.asarray(v, dtype=complex))
    n1 = n1 or v.shape[0]
    n2 = n2 or v.shape[1]
    m = np.zeros((n1 + n2, n1 + n2), dtype=complex)
    m[:n1, n1:] = v
    m[n1:, :n1] = v.conj().T
    return constant(m, family=CANONICAL, n1=n1, n2=n2, label=label)


# ----------------------------------------------------------------------
# validation

def validate(spec: PotentialSpec, grid=257) -> PotentialSummary:
    """Check Hermiticity and block shape, then compute norms and means.

    Norms and means use exact formulas for constant / piecewise / trig
    representations and composite quadrature for sampled ones.
    """
    ts = np.linspace(0.0, 1.0, grid, endpoint=False)
    worst_t, worst = 0.0, 0.0
    for t in ts:
        v = spec.eval(t)
        r = float(np.linalg.norm(v - v.conj().T))
        if r > worst:
            worst, worst_t = r, t
    if worst > 1e-12 * max(1.0, _scale(spec)):
        raise ValidationError(
            f"potential is not Hermitian: residual {worst:.3e} at t = {worst_t:.6f}")

    if spec.family == CANONICAL:
        for t in ts[::8]:
            v = spec.eval(t)
            if (np.linalg.norm(v[:spec.n1, :spec.n1]) > 1e-12
                    or np.linalg.norm(v[spec.n1:, spec.n1:]) > 1e-12):
                raise ValidationError(
                    f"canonical potential has nonzero diagonal block at t = {t:.6f}")

    if spec.kind == "constant":
        v0 = np.array(spec.matrix)
        norm_sq = float(np.trace(v0 @ v0.conj().T).real)
        vsq = v0 @ v0
    elif spec.kind == "piecewise":
        v0 = sum(l * m for l, m in spec.segments)
        norm_sq = float(sum(l * np.trace(m @ m.conj().T).real for l, m in spec.segments))
        vsq = sum(l * (m @ m) for l, m in spec.segments)
        total = sum(l for l, _ in spec.segments)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"piecewise segment lengths sum to {total}, not 1")
    elif spec.kind == "trig":
        v0 = spec.coeffs.get(0, np.zeros((spec.n, spec.n), dtype=complex)).copy()
        norm_sq = float(np.trace(v0 @ v0.conj().T).real)
        vsq = v0 @ v0
        for m, c in spec.coeffs.items():
            if m == 0:
                continue
            norm_sq += 2 * float(np.trace(c @ c.conj().T).real)
            vsq = vsq + c @ c.conj().T + c.conj().T @ c
    else:
        # periodic trapezoid on the sample grid is spectrally accurate
        vals = np.array([spec.eval(t) for t in ts])
        v0 = vals.mean(axis=0)
        norm_sq = float(np.mean([np.trace(v @ v.conj().T).real for v in vals]))
        vsq = np.mean([v @ v for v in vals], axis=0)

    v0 = 0.5 * (v0 + v0.conj().T)
    eigs = np.sort(np.linalg.eigvalsh(v0))
    fact = [1, 1, 2, 6, 24]
    b = tuple(float(np.trace(np.linalg.matrix_power(v0, k)).real) / fact[k]
              for k in range(1, 5))
    return PotentialSummary(norm_sq=norm_sq, mean=v0, mean_eigs=eigs,
                            b_moments=b, mean_square=vsq)


def _scale(spec):
    try:
        return float(np.linalg.norm(spec.eval(0.0)))
    except Exception:
        return 1.0


# ----------------------------------------------------------------------
# JSON interchange

def _mat_to_json(m):
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def _mat_from_json(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def to_json_dict(spec: PotentialSpec) -> dict:
    d = {"family": spec.family, "N": spec.n, "kind": spec.kind}
    if spec.family == CANONICAL:
        d["N1"], d["N2"] = spec.n1, spec.n2
    if spec.kind == "constant":
        d["matrix"] = _mat_to_json(spec.matrix)
    elif spec.kind == "piecewise":
        d["segments"] = [{"length": l, "matrix": _mat_to_json(m)}
                         for l, m in spec.segments]
    elif spec.kind == "trig":
        d["coeffs"] = [{"m": m, "matrix": _mat_to_json(c)}
                       for m, c in sorted(spec.coeffs.items())]
    else:
        d["samples"] = [_mat_to_json(v) for v in spec.samples]
        d["interp_order"] = spec.interp_order
    if spec.label:
        d["label"] = spec.label
    return d


def from_json_dict(d: dict) -> PotentialSpec:
    family = d["family"]
    kind = d["kind"]
    kw = dict(family=family, label=d.get("label", ""))
    if family == CANONICAL:
        kw["n1"], kw["n2"] = d["N1"], d["N2"]
    if kind == "constant":
        return constant(_mat_from_json(d["matrix"]), **kw)
    if kind == "piecewise":
        return piecewise([(s["length"], _mat_from_json(s["matrix"]))
                          for s in d["segments"]], **kw)
    if kind == "trig":
        return trig({c["m"]: _mat_from_json(c["matrix"]) for c in d["coeffs"]}, **kw)
    if kind == "sampled":
        return sampled(np.array([_mat_from_json(v) for v in d["samples"]]),
                       interp_order=d.get("interp_order", 3), **kw)
    raise ValidationError(f"unknown kind {kind!r} in potential file")


def load(path) -> PotentialSpec:
    with open(path) as fh:
        spec = from_json_dict(json.load(fh))
    validate(spec)
    return spec


def save(spec: PotentialSpec, path):
    with open(path, "w") as fh:
        json.dump(to_json_dict(spec), fh, indent=1, sort_keys=True)
        fh.write("\n")
