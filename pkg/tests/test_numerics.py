"""Kernels: eigenvalues, Newton identities, winding counts, PV, half-plane."""

import itertools

import numpy as np
import pytest

from bandcomb import numerics as nx
from bandcomb.errors import BoundaryFloorError, EigenConvergenceError, WidenWindowError


# -- independent oracle: determinant expansion over permutations ----------

def brute_charpoly(a):
    """Coefficients of det(nu I - A), monic, by direct permutation expansion.

    Polynomial arithmetic over the symmetric group; exponential cost, fine
    for dimensions up to five, and completely independent of the library's
    trace recursion.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    coeffs = np.zeros(n + 1, dtype=complex)
    for perm in itertools.permutations(range(n)):
        sign = _perm_sign(perm)
        # product over i of (nu * delta_{i,perm(i)} - A[i, perm(i)])
        poly = np.array([1.0 + 0j])
        for i, j in enumerate(perm):
            if i == j:
                poly = np.convolve(poly, np.array([1.0, -a[i, j]]))
            else:
                poly = np.convolve(poly, np.array([-a[i, j]]))
        coeffs[n + 1 - len(poly):] += sign * poly
    return coeffs


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def test_brute_charpoly_sanity():
    a = np.diag([2.0, 5.0])
    # (nu - 2)(nu - 5) = nu^2 - 7 nu + 10
    assert np.allclose(brute_charpoly(a), [1, -7, 10])


# -- eig_dense -------------------------------------------------------------

def test_eig_identity():
    w = nx.eig_dense(np.eye(2))
    assert np.allclose(sorted(w.real), [1, 1]) and np.allclose(w.imag, 0)


def test_eig_diagonal_cosh():
    z = 0.0
    a = np.diag([np.cos(z), np.cosh(1.0)])
    w = np.sort(nx.eig_dense(a).real)
    assert np.allclose(w, [1.0, np.cosh(1.0)], atol=1e-14)


def test_eig_matches_brute_force_roots():
    rng = np.random.default_rng(3)
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    a = 0.5 * (g + g.conj().T)
    w = np.sort(nx.eig_dense(a).real)
    roots = np.sort(np.roots(brute_charpoly(a)).real)
    assert np.max(np.abs(w - roots)) < 1e-10


def test_eig_rejects_nonfinite():
    with pytest.raises(EigenConvergenceError):
        nx.eig_dense(np.array([[np.nan, 0], [0, 1.0]]))


# -- Newton identities ------------------------------------------------------

def test_newton_symmetric_pair():
    phi = nx.newton_charpoly([0.0, 2.0])
    assert np.allclose(phi.coeffs, [1, 0, -1])
    assert np.allclose(np.sort(phi.roots().real), [-1, 1])


def test_newton_quartic_coefficient_pattern():
    # for any matrix, the nu^2 coefficient equals (T1^2 - T2)/2
    rng = np.random.default_rng(5)
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    t = nx.power_traces(m, 4)
    phi = nx.newton_charpoly(t)
    assert np.allclose(phi.coeffs[2], (t[0] ** 2 - t[1]) / 2, atol=1e-12)


def test_newton_agrees_with_determinant_expansion():
    rng = np.random.default_rng(11)
    for dim in (2, 3, 4, 5):
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        phi = nx.newton_charpoly(nx.power_traces(a, dim))
        # brute force gives det(nu I - A) = sum phi_j nu^(d-j) directly
        ref = brute_charpoly(a)
        assert np.max(np.abs(phi.coeffs - ref)) < 1e-10, f"dim {dim}"


def test_newton_3x3_tight():
    rng = np.random.default_rng(13)
    a = rng.standard_normal((3, 3))
    phi = nx.newton_charpoly(nx.power_traces(a, 3))
    assert np.max(np.abs(phi.coeffs - brute_charpoly(a))) < 1e-12


# -- Sylvester discriminant --------------------------------------------------

def test_discriminant_matches_pairwise_product():
    rng = np.random.default_rng(17)
    for deg in (2, 3, 4):
        roots = rng.standard_normal(deg) + 1j * rng.standard_normal(deg)
        coeffs = np.poly(roots)
        disc = nx.sylvester_discriminant(coeffs)
        ref = np.prod([(roots[i] - roots[j]) ** 2
                       for i in range(deg) for j in range(i + 1, deg)])
        assert abs(disc - ref) < 1e-9 * max(1.0, abs(ref))


# -- winding counts -----------------------------------------------------------

def test_count_monomial():
    region = nx.ContourRegion.disc(0.0, 1.0)
    assert nx.count_zeros(lambda z: z ** 2, region) == 2


def test_count_free_periodic_det():
    # V = 0, N = 1: det(M - I) = 2 - 2 cos z, double zeros at 2 pi n
    region = nx.ContourRegion.disc(2 * np.pi, np.pi / 2)
    assert nx.count_zeros(lambda z: 2 - 2 * np.cos(z), region) == 2


def test_count_discriminant_oracle():
    # reduced discriminant of diag(1, 2): (cos w1 - cos w2)^2, double zero
    # where sqrt(z^2-1) + sqrt(z^2-2) = 2 pi n
    def rho(z):
        w1 = np.sqrt(z * z - 1 + 0j)
        w2 = np.sqrt(z * z - 2 + 0j)
        return (np.cos(w1) - np.cos(w2)) ** 2
    region = nx.ContourRegion.disc(4 * np.pi, np.pi / 2)
    assert nx.count_zeros(rho, region) == 2


def test_count_invariant_under_refinement():
    f = lambda z: (z - 0.3) * (z + 0.4j) ** 2
    for samples in (256, 512):
        region = nx.ContourRegion.disc(0.0, 1.0, boundary_samples=samples)
        assert nx.count_zeros(f, region) == 3


def test_count_rejects_boundary_zero():
    region = nx.ContourRegion.disc(0.0, 1.0)
    with pytest.raises(BoundaryFloorError):
        nx.count_zeros(lambda z: z - 1.0, region)


# -- principal value ----------------------------------------------------------

def _semicircle_samples(n=4001):
    t = np.linspace(-1.0, 1.0, n)
    return t, np.sqrt(np.maximum(1 - t * t, 0.0))


def test_pv_zero_function():
    t = np.linspace(-2, 2, 101)
    assert nx.pv_hilbert(t, np.zeros_like(t), 0.7) == 0.0


def test_pv_odd_symmetry_at_origin():
    t, q = _semicircle_samples()
    assert abs(nx.pv_hilbert(t, q, 0.0)) < 1e-8


def test_pv_matches_one_gap_closed_form():
    # (1/pi) int sqrt(1-t^2)/(t-2) dt = sqrt(3) - 2
    t, q = _semicircle_samples(20001)
    val = nx.pv_hilbert(t, q, 2.0)
    assert abs(val - (np.sqrt(3) - 2.0)) < 1e-6


def test_pv_density_constant_on_gap():
    # p(x) = x + PV = 0 on (-1, 1) for the semicircle; the square-root edges
    # demand a fine mesh from the sampled-data route
    t, q = _semicircle_samples(32001)
    xs = np.linspace(-0.9, 0.9, 13)
    p = xs + nx.pv_hilbert(t, q, xs)
    assert np.max(np.abs(p)) < 1e-6


def test_pv_requires_decay():
    t = np.linspace(-1, 1, 101)
    with pytest.raises(WidenWindowError):
        nx.pv_hilbert(t, np.ones_like(t), 0.0)


# -- half-plane quadrature ------------------------------------------------------

def test_halfplane_zero():
    val, err, ok = nx.quad_halfplane(lambda z: np.zeros_like(z, dtype=float),
                                     10.0, 0.05)
    assert val == 0.0 and ok


def test_halfplane_one_gap_dirichlet():
    # k(z) = sqrt(z^2 - 1) with k ~ z: (1/pi) iint |k' - 1|^2 = 1/2
    def g(z):
        w = np.sqrt(z * z - 1)
        w = np.where((w * np.conj(z)).real < 0, -w, w)
        return np.abs(z / w - 1) ** 2 / np.pi
    val, err, ok = nx.quad_halfplane(g, 24.0, 0.02, edges=(-1.0, 1.0),
                                     tail_exponent=4)
    assert ok
    assert abs(val - 0.5) < 0.02 * 0.5 + err
    assert abs(val - 0.5) < 0.015
