import sys

import pytest

from union_find import UnionFind, find_orbits


def test_union_and_components():
    uf = UnionFind(range(6))
    assert uf.union(4, 1)
    assert uf.union(5, 3)
    assert not uf.union(1, 4)
    assert uf.connected(1, 4) and not uf.connected(1, 3)
    assert len(uf) == 4
    assert uf.components() == [[0], [1, 4], [2], [3, 5]]


def test_orbits_of_a_cyclic_shift():
    orbits = find_orbits([3], list(range(6)), lambda step, x: (x + step) % 6)
    assert orbits == [[0, 3], [1, 4], [2, 5]]


if __name__ == '__main__':
    sys.exit(pytest.main([__file__]))
