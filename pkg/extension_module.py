"""
Two-cocycle machinery for extensions 0 -> Z^n -> E -> (Z2)^n -> 1.

Everything is written additively: the action phi(s) is a diagonal sign matrix,
and the extension law is (v, s)(w, u) = (v + phi(s) w + f(s, u), s + u).
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Sequence, Tuple

from affine_module import DyVec
from bieberbach_module import BottGroup, GroupElement, multiply, selector_bits, selector_index, selector_string

Element = Tuple[Tuple[int, ...], int]


@dataclass(frozen=True)
class ActionTable:
    """phi(s) as diagonal signs, indexed by selector int."""
    n: int
    signs: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.signs) != 2 ** self.n:
            raise ValueError(f"Action table needs {2 ** self.n} entries, got {len(self.signs)}")
        if any(x != 1 for x in self.signs[0]):
            raise ValueError("Action of the trivial selector must be the identity")
        for k in range(2 ** self.n):
            for l in range(2 ** self.n):
                product = tuple(a * b for a, b in zip(self.signs[k], self.signs[l]))
                if product != self.signs[k ^ l]:
                    raise ValueError("Action table is not a homomorphism")

    @classmethod
    def trivial(cls, n: int) -> "ActionTable":
        return cls(n, tuple((1,) * n for _ in range(2 ** n)))

    def act(self, k: int, vec: DyVec) -> DyVec:
        return DyVec(tuple(x if sign == 1 else -x for sign, x in zip(self.signs[k], vec.entries)))


@dataclass(frozen=True)
class CocycleTable:
    """f(s, u) for all pairs of selectors; values may be dyadic for coboundaries of real cochains."""
    n: int
    values: Tuple[Tuple[DyVec, ...], ...]

    def __post_init__(self):
        size = 2 ** self.n
        if len(self.values) != size or any(len(row) != size for row in self.values):
            raise ValueError(f"Cocycle table for n={self.n} must be {size} x {size}")

    @classmethod
    def zero(cls, n: int) -> "CocycleTable":
        row = tuple(DyVec.zeros(n) for _ in range(2 ** n))
        return cls(n, tuple(row for _ in range(2 ** n)))

    def __call__(self, k: int, l: int) -> DyVec:
        return self.values[k][l]

    def is_integral(self) -> bool:
        return all(value.is_integral() for row in self.values for value in row)

    def with_entry(self, k: int, l: int, value: DyVec) -> "CocycleTable":
        rows = [list(row) for row in self.values]
        rows[k][l] = value
        return CocycleTable(self.n, tuple(tuple(row) for row in rows))

    def to_json(self) -> List[dict]:
        entries = []
        for k, row in enumerate(self.values):
            for l, value in enumerate(row):
                if any(x != 0 for x in value):
                    entries.append({
                        "s": selector_string(selector_bits(k, self.n)),
                        "u": selector_string(selector_bits(l, self.n)),
                        "f": [x.numerator if x.is_integer() else str(x) for x in value],
                    })
        return entries

    @classmethod
    def from_json(cls, n: int, entries: Sequence[dict]) -> "CocycleTable":
        table = cls.zero(n)
        for entry in entries:
            k = selector_index([int(c) for c in entry["s"]])
            l = selector_index([int(c) for c in entry["u"]])
            table = table.with_entry(k, l, DyVec.from_json(entry["f"]))
        return table


def action_table_of(G: BottGroup) -> ActionTable:
    """The action s -> D(s) of F2^n on Z^n induced by G."""
    return ActionTable(G.n, tuple(G.signs(k) for k in range(2 ** G.n)))


def cocycle_of(G: BottGroup) -> CocycleTable:
    """f(s, u) = t(s) + D(s) t(u) - t(s + u), read from the group's tables."""
    size = 2 ** G.n
    return CocycleTable(G.n, tuple(tuple(DyVec(G.cocycle(k, l)) for l in range(size)) for k in range(size)))


def check_cocycle(phi: ActionTable, f: CocycleTable) -> bool:
    """
    Normalization f(0, u) = f(s, 0) = 0 and, for all s, u, w,
    phi(s) f(u, w) + f(s, u + w) = f(s, u) + f(s + u, w).
    """
    if phi.n != f.n:
        raise ValueError(f"Dimension mismatch: action {phi.n} vs cocycle {f.n}")
    size = 2 ** phi.n
    zero = DyVec.zeros(phi.n)
    for k in range(size):
        if f(0, k) != zero or f(k, 0) != zero:
            return False
    for k, l, m in itertools.product(range(size), repeat=3):
        if phi.act(k, f(l, m)) + f(k, l ^ m) != f(k, l) + f(k ^ l, m):
            logging.debug(f"Cocycle identity fails at selectors {k}, {l}, {m}")
            return False
    return True


def coboundary(phi: ActionTable, cochain: Sequence[DyVec]) -> CocycleTable:
    """delta(lambda)(s, u) = phi(s) lambda(u) + lambda(s) - lambda(s + u)."""
    size = 2 ** phi.n
    if len(cochain) != size:
        raise ValueError(f"Cochain needs {size} values, got {len(cochain)}")
    if any(x != 0 for x in cochain[0]):
        raise ValueError("Cochain must vanish on the trivial selector")
    return CocycleTable(phi.n, tuple(
        tuple(phi.act(k, cochain[l]) + cochain[k] - cochain[k ^ l] for l in range(size))
        for k in range(size)))


def extension_multiply(phi: ActionTable, f: CocycleTable, x: Element, y: Element) -> Element:
    """
    Product in the abstract extension of Z^n by F2^n.

    Args:
        phi: Action of the quotient on the lattice.
        f: Integer-valued cocycle.
        x: (v, k) with k the selector index.
        y: (w, l) likewise.

    Returns:
        (v + phi(k) w + f(k, l), k xor l).
    """
    (v, k), (w, l) = x, y
    value = f(k, l).to_ints()
    return tuple(a + (b if sign == 1 else -b) + c for a, sign, b, c in zip(v, phi.signs[k], w, value)), k ^ l


def _box(n: int, radius: int) -> Iterator[Tuple[int, ...]]:
    return itertools.product(range(-radius, radius + 1), repeat=n)


def extension_equals_group(phi: ActionTable, f: CocycleTable, G: BottGroup, radius: int = 1) -> bool:
    """Compares the abstract extension law with G's multiplication on the box |v| <= radius."""
    if not f.is_integral():
        raise ValueError("Extension needs an integer-valued cocycle")
    size = 2 ** G.n
    box = list(_box(G.n, radius))
    for k, l in itertools.product(range(size), repeat=2):
        s, u = selector_bits(k, G.n), selector_bits(l, G.n)
        for v in box:
            x = GroupElement(v, s)
            for w in box:
                product = multiply(G, x, GroupElement(w, u))
                if extension_multiply(phi, f, (v, k), (w, l)) != (product.v, product.selector):
                    return False
    return True


def find_torsion(phi: ActionTable, f: CocycleTable, radius: int = 1) -> Element | None:
    """An element of order two in the abstract extension, searched over the box."""
    identity = ((0,) * phi.n, 0)
    for k in range(1, 2 ** phi.n):
        for v in _box(phi.n, radius):
            if extension_multiply(phi, f, (v, k), (v, k)) == identity:
                return v, k
    return None


def coboundary_isomorphism_holds(phi: ActionTable, f: CocycleTable, g: CocycleTable,
                                 cochain: Sequence[DyVec], radius: int = 1) -> bool:
    """
    Checks that (v, s) -> (v + lambda(s), s) carries the f-extension law to the g-law.

    Holds when f - g is the coboundary of the integer cochain lambda.
    """
    shifts: Dict[int, Tuple[int, ...]] = {k: value.to_ints() for k, value in enumerate(cochain)}

    def psi(x: Element) -> Element:
        v, k = x
        return tuple(a + b for a, b in zip(v, shifts[k])), k

    size = 2 ** phi.n
    box = list(_box(phi.n, radius))
    for k, l in itertools.product(range(size), repeat=2):
        for v in box:
            for w in box:
                x, y = (v, k), (w, l)
                if psi(extension_multiply(phi, f, x, y)) != extension_multiply(phi, g, psi(x), psi(y)):
                    return False
    return True
