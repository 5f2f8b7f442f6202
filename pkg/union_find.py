"""Disjoint-set forest used for conjugacy orbits, cosets and class merging."""
from typing import Callable, Dict, Hashable, Iterable, List


class UnionFind:
    def __init__(self, items: Iterable[Hashable]):
        self.parent = {x: x for x in items}
        self.rank = {x: 0 for x in self.parent}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y) -> bool:
        """Merges the sets of x and y; False if they were already together."""
        x, y = self.find(x), self.find(y)
        if x == y:
            return False
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        elif self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        self.parent[y] = x
        del self.rank[y]
        return True

    def connected(self, x, y) -> bool:
        return self.find(x) == self.find(y)

    def reps(self):
        return set(self.rank)

    def __len__(self):
        return len(self.rank)

    def components(self, key: Callable = None) -> List[List]:
        """All sets, each sorted, ordered by their smallest member."""
        groups: Dict = {}
        for x in self.parent:
            groups.setdefault(self.find(x), []).append(x)
        members = [sorted(group, key=key) for group in groups.values()]
        return sorted(members, key=lambda group: key(group[0]) if key else group[0])


def find_orbits(gens, space, action) -> List[List]:
    """Orbits of the group generated by gens acting on space."""
    uf = UnionFind(space)
    for g in gens:
        for x in space:
            uf.union(x, action(g, x))
    return uf.components()
