"""Shared fixtures: the standard potential zoo and cached heavy artifacts."""

import numpy as np
import pytest

import bandcomb as bc
from bandcomb import quasimomentum as qm


@pytest.fixture(scope="session")
def free1():
    return bc.zero(1)


@pytest.fixture(scope="session")
def free2():
    return bc.zero(2)


@pytest.fixture(scope="session")
def c1():
    return bc.constant([[1.0]], label="c1")


@pytest.fixture(scope="session")
def d12():
    return bc.constant([[1.0, 0.0], [0.0, 2.0]], label="d12")


@pytest.fixture(scope="session")
def offdiag():
    return bc.constant([[0.0, 1.0], [1.0, 0.0]], label="offdiag")


@pytest.fixture(scope="session")
def mathieu():
    # V(t) = 2 a cos(2 pi t) with a = 0.1
    return bc.trig({1: [[0.1]]}, label="mathieu")


def make_trig2():
    rng = np.random.default_rng(7)
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    c0 = 0.5 * (g + g.conj().T) * 0.7 + 3.5 * np.eye(2)
    c1m = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) * 0.225
    return bc.trig({0: c0, 1: c1m}, label="trig2")


@pytest.fixture(scope="session")
def trig2():
    return make_trig2()


@pytest.fixture(scope="session")
def trig2b():
    # stronger coupling: opens a gap whose interior branches leave the real
    # axis, bounded by genuine square-root branch points
    c0 = np.array([[3.0, 0.5], [0.5, 4.0]])
    c1m = np.array([[0.4, 0.3 + 0.2j], [0.3 - 0.2j, -0.4]])
    return bc.trig({0: c0, 1: c1m}, label="trig2b")


@pytest.fixture(scope="session")
def realsym2():
    # real symmetric: branches pair up, reduced discriminant has degree 2
    return bc.trig({0: np.diag([1.0, 3.0]),
                    1: np.array([[0.3, 0.5], [0.5, -0.2]])}, label="realsym2")


@pytest.fixture(scope="session")
def canon1():
    return bc.canonical_offdiag([[1.0]], label="v1")


@pytest.fixture(scope="session")
def canonfree():
    return bc.constant(np.zeros((2, 2)), family=bc.CANONICAL, n1=1, n2=1,
                       label="canonical-zero")


@pytest.fixture(scope="session")
def piecewise2():
    return bc.piecewise([(0.5, [[0.6]]), (0.5, [[1.7]])], label="pw2")


@pytest.fixture(scope="session")
def qmap_c1(c1):
    return qm.build_map(c1)


@pytest.fixture(scope="session")
def qmap_v1(canon1):
    return qm.build_map(canon1)


@pytest.fixture(scope="session")
def qmap_trig2(trig2):
    return qm.build_map(trig2)
