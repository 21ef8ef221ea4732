"""Potential representations, validation, norms, JSON interchange."""

import numpy as np
import pytest

import bandcomb as bc
from bandcomb import potential
from bandcomb.errors import ValidationError


def test_validate_zero():
    summ = bc.validate(bc.zero(2))
    assert summ.norm_sq == 0.0
    assert np.allclose(summ.mean, 0)
    assert np.allclose(summ.mean_eigs, [0, 0])


def test_validate_canonical_norm():
    summ = bc.validate(bc.canonical_offdiag([[1.0]]))
    assert abs(summ.norm_sq - 2.0) < 1e-14      # two unit off-diagonal entries


def test_validate_trig_norm():
    a = 0.37
    summ = bc.validate(bc.trig({1: [[a]]}))     # V = 2a cos(2 pi t)
    assert abs(summ.norm_sq - 2 * a * a) < 1e-14
    assert np.allclose(summ.mean, 0)


def test_eval_piecewise_left_closed():
    a, b = np.array([[1.0]]), np.array([[5.0]])
    spec = bc.piecewise([(0.5, a), (0.5, b)])
    assert spec.eval(0.5)[0, 0] == 5.0          # boundary belongs to the right segment
    assert spec.eval(0.49999)[0, 0] == 1.0
    assert spec.eval(0.0)[0, 0] == 1.0


def test_eval_trig_constant_term():
    spec = bc.trig({0: np.eye(2)})
    for t in (0.0, 0.3, 0.77):
        assert np.allclose(spec.eval(t), np.eye(2))


def test_eval_sampled_linear_midpoint():
    a = np.array([[1.0, 0], [0, 2.0]])
    b = np.array([[3.0, 0], [0, 4.0]])
    spec = bc.sampled([a, b], interp_order=1)
    assert np.allclose(spec.eval(0.25), (a + b) / 2)


def test_sampled_cubic_resymmetrizes():
    rng = np.random.default_rng(1)
    mats = []
    for _ in range(8):
        g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        mats.append(0.5 * (g + g.conj().T))
    spec = bc.sampled(np.array(mats), interp_order=3)
    for t in np.linspace(0, 1, 23, endpoint=False):
        v = spec.eval(t)
        assert np.linalg.norm(v - v.conj().T) < 1e-12


def test_rejects_non_hermitian():
    with pytest.raises(ValidationError, match="not Hermitian"):
        bc.validate(bc.constant([[0.0, 1.0], [0.0, 0.0]]))


def test_rejects_canonical_block_violation():
    bad = bc.constant([[1.0, 0.0], [0.0, 0.0]], family=bc.CANONICAL, n1=1, n2=1)
    with pytest.raises(ValidationError, match="diagonal block"):
        bc.validate(bad)


def test_rejects_bad_segment_lengths():
    spec = bc.piecewise([(0.5, [[1.0]]), (0.4, [[2.0]])])
    with pytest.raises(ValidationError, match="sum"):
        bc.validate(spec)


def test_canonical_anticommutes_with_j(canon1):
    j = canon1.j_matrix
    for t in np.linspace(0, 1, 17, endpoint=False):
        v = canon1.eval(t)
        assert np.linalg.norm(j @ v + v @ j) < 1e-14


def test_norm_invariant_under_representation_change():
    m = np.array([[2.0, 1j], [-1j, 0.5]])
    n1 = bc.validate(bc.constant(m)).norm_sq
    n2 = bc.validate(bc.piecewise([(1.0, m)])).norm_sq
    assert abs(n1 - n2) < 1e-14


def test_hermitian_everywhere_property():
    rng = np.random.default_rng(9)
    c1m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    spec = bc.trig({0: 0.5 * (g + g.conj().T), 1: c1m, 2: 0.3 * c1m})
    for t in np.linspace(0, 1, 41, endpoint=False):
        v = spec.eval(t)
        assert np.linalg.norm(v - v.conj().T) < 1e-12


def test_json_roundtrip(tmp_path):
    specs = [
        bc.constant([[1.0, 0.5j], [-0.5j, 2.0]], label="const"),
        bc.piecewise([(0.25, [[1.0]]), (0.75, [[2.0]])], label="pw"),
        bc.trig({0: [[1.0]], 2: [[0.3 + 0.1j]]}, label="trig"),
        bc.canonical_offdiag([[1.0]], label="can"),
    ]
    for spec in specs:
        path = tmp_path / f"{spec.label}.json"
        potential.save(spec, path)
        back = potential.load(path)
        for t in (0.0, 0.3, 0.9):
            assert np.allclose(back.eval(t), spec.eval(t)), spec.label
        assert back.family == spec.family
        # byte-stable on re-save
        path2 = tmp_path / f"{spec.label}-2.json"
        potential.save(back, path2)
        assert path.read_bytes() == path2.read_bytes()


def test_b_moments_match_mean_matrix(d12):
    summ = bc.validate(d12)
    assert np.allclose(summ.mean_eigs, [1.0, 2.0])
    # Tr V0^n / n! for diag(1, 2)
    assert np.allclose(summ.b_moments,
                       [3.0, (1 + 4) / 2, (1 + 8) / 6, (1 + 16) / 24])
