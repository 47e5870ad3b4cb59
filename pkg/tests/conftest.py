import pytest

from ghzloops.lattice import Boundary, LatticeKind, LatticeSpec, build_lattice


@pytest.fixture(scope="session")
def hc2():
    return build_lattice(LatticeSpec(LatticeKind.HONEYCOMB, L=2))


@pytest.fixture(scope="session")
def hc3():
    return build_lattice(LatticeSpec(LatticeKind.HONEYCOMB, L=3))


@pytest.fixture(scope="session")
def sq2():
    return build_lattice(LatticeSpec(LatticeKind.SQUARE, L=2))


@pytest.fixture(scope="session")
def sq3():
    return build_lattice(LatticeSpec(LatticeKind.SQUARE, L=3))


@pytest.fixture(scope="session")
def hc3_open():
    return build_lattice(LatticeSpec(LatticeKind.HONEYCOMB, L=3, boundary=Boundary.OPEN))


@pytest.fixture(scope="session")
def sq3_open():
    return build_lattice(LatticeSpec(LatticeKind.SQUARE, L=3, boundary=Boundary.OPEN))
