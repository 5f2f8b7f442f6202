"""
The Bieberbach group Gamma(A) of a real Bott tower.

Every element is stored canonically as (v, s): the lattice vector v in Z^n and
the holonomy selector s in F2^n, standing for the motion
translation(v) o g_1^s_1 o ... o g_n^s_n. Selectors are ints internally
(bit i is s_i) and bit tuples at the API boundary.
"""
import functools
import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import sympy
from sympy import ZZ
from sympy.matrices.normalforms import hermite_normal_form, invariant_factors

from affine_module import AffineMap, Dyadic, DyVec, IntMatrix, compose
from bott_module import BottMatrix, lift_generators, torus_rank
from union_find import UnionFind, find_orbits

# --- Configuration ---
FINGERPRINT_BUDGET = 2 ** 20
FINGERPRINT_MODULI = (2, 4)
# GL(n, F2) is enumerated exhaustively for the square-map form
SQUARE_FORM_MAX_DIM = 4


class FingerprintBudgetError(RuntimeError):
    """The finite quotient requested is larger than FINGERPRINT_BUDGET."""


def selector_bits(k: int, n: int) -> Tuple[int, ...]:
    return tuple((k >> i) & 1 for i in range(n))


def selector_index(bits: Sequence[int]) -> int:
    return sum(int(b) << i for i, b in enumerate(bits))


def selector_string(bits: Sequence[int]) -> str:
    return "".join(str(b) for b in bits)


@dataclass(frozen=True)
class GroupElement:
    v: Tuple[int, ...]
    s: Tuple[int, ...]

    def __post_init__(self):
        v = tuple(int(x) for x in self.v)
        s = tuple(int(x) for x in self.s)
        if len(v) != len(s):
            raise ValueError(f"Lattice part has length {len(v)} but selector has length {len(s)}")
        if any(b not in (0, 1) for b in s):
            raise ValueError(f"Selector must be a bit vector, got {s}")
        object.__setattr__(self, 'v', v)
        object.__setattr__(self, 's', s)

    @property
    def selector(self) -> int:
        return selector_index(self.s)

    def to_json(self) -> dict:
        return {"v": list(self.v), "s": selector_string(self.s)}

    @classmethod
    def from_json(cls, data: dict) -> "GroupElement":
        try:
            return cls(tuple(data["v"]), tuple(int(c) for c in data["s"]))
        except KeyError as e:
            raise ValueError(f"Group element JSON is missing key {e}") from e


@dataclass(frozen=True)
class AbelianInvariants:
    free_rank: int
    torsion: Tuple[int, ...]

    def to_json(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": list(self.torsion)}

    def __str__(self):
        parts = [f"Z^{self.free_rank}"] if self.free_rank else []
        parts += [f"Z{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class CenterDescription:
    rank: int
    generators: Tuple[GroupElement, ...]

    def to_json(self) -> dict:
        return {"rank": self.rank, "generators": [g.to_json() for g in self.generators]}


@dataclass(frozen=True)
class Fingerprint:
    order: int
    element_order_multiset: Tuple[Tuple[int, int], ...]
    center_order: int
    commutator_order: int
    abelianization: AbelianInvariants
    class_size_multiset: Tuple[Tuple[int, int], ...]

    def is_abelian(self) -> bool:
        return self.commutator_order == 1

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "element_orders": [list(pair) for pair in self.element_order_multiset],
            "center_order": self.center_order,
            "commutator_order": self.commutator_order,
            "abelianization": self.abelianization.to_json(),
            "class_sizes": [list(pair) for pair in self.class_size_multiset],
        }


class BottGroup:
    """
    The group generated by Z^n and a list of commuting diagonal-holonomy motions.

    Tables of D(s), t(s) and the cocycle f(s, u) are built once at construction.
    """

    def __init__(self, generators: Sequence[AffineMap], matrix: BottMatrix | None = None):
        if not generators:
            raise ValueError("A Bott group needs at least one generator")
        self.n = generators[0].dim
        self.matrix = matrix
        self.generators = tuple(generators)
        for g in self.generators:
            if g.dim != self.n:
                raise ValueError(f"Dimension mismatch among generators: {g.dim} vs {self.n}")
            if not g.linear.is_diagonal() or any(x not in (1, -1) for x in g.linear.diagonal_entries()):
                raise ValueError(f"Generator linear part {g.linear.rows} is not a diagonal sign matrix")
        if len(self.generators) != self.n:
            raise ValueError(f"Expected {self.n} generators, got {len(self.generators)}")

        size = 2 ** self.n
        self._representatives: List[AffineMap] = []
        for k in range(size):
            rep = AffineMap.identity(self.n)
            for i in range(self.n):
                if (k >> i) & 1:
                    rep = compose(rep, self.generators[i])
            self._representatives.append(rep)
        self._signs = [rep.linear.diagonal_entries() for rep in self._representatives]
        self._translations = [rep.translation for rep in self._representatives]

        self._by_signs: Dict[Tuple[int, ...], List[int]] = {}
        for k, signs in enumerate(self._signs):
            for other in self._by_signs.get(signs, []):
                if (self._translations[k] - self._translations[other]).is_integral():
                    raise ValueError("Generators are not independent modulo the lattice Z^n")
            self._by_signs.setdefault(signs, []).append(k)

        self._cocycle: List[List[Tuple[int, ...]]] = []
        for k in range(size):
            row = []
            for l in range(size):
                value = self._translations[k] + self.act(k, self._translations[l]) - self._translations[k ^ l]
                if not value.is_integral():
                    raise ValueError("Generators do not define an extension of Z^n: cocycle is not integral")
                row.append(value.to_ints())
            self._cocycle.append(row)

    @classmethod
    def from_matrix(cls, A: BottMatrix) -> "BottGroup":
        return cls(lift_generators(A), matrix=A)

    @classmethod
    def from_generators(cls, generators: Sequence[AffineMap]) -> "BottGroup":
        return cls(generators)

    def act(self, k: int, vec: DyVec) -> DyVec:
        return DyVec(tuple(x if sign == 1 else -x for sign, x in zip(self._signs[k], vec.entries)))

    def signs(self, k: int) -> Tuple[int, ...]:
        return self._signs[k]

    def translation(self, k: int) -> DyVec:
        return self._translations[k]

    def representative(self, k: int) -> AffineMap:
        return self._representatives[k]

    def cocycle(self, k: int, l: int) -> Tuple[int, ...]:
        return self._cocycle[k][l]

    def selectors_with_signs(self, signs: Tuple[int, ...]) -> List[int]:
        return self._by_signs.get(tuple(signs), [])

    def flipped_coordinates(self) -> List[int]:
        """Coordinates negated by some holonomy element."""
        return [j for j in range(self.n) if any(signs[j] == -1 for signs in self._signs)]

    def fixed_coordinates(self) -> List[int]:
        flipped = set(self.flipped_coordinates())
        return [j for j in range(self.n) if j not in flipped]

    def generator_elements(self) -> List[GroupElement]:
        return [GroupElement((0,) * self.n, selector_bits(1 << i, self.n)) for i in range(self.n)]

    def identity(self) -> GroupElement:
        return GroupElement((0,) * self.n, (0,) * self.n)


def representative(G: BottGroup, s: Sequence[int]) -> AffineMap:
    """The section g_1^s_1 o ... o g_n^s_n."""
    if len(s) != G.n:
        raise ValueError(f"Selector length {len(s)} does not match n={G.n}")
    return G.representative(selector_index(s))


def multiply(G: BottGroup, x: GroupElement, y: GroupElement) -> GroupElement:
    """(v, s)(w, u) = (v + D(s) w + f(s, u), s + u)."""
    k, l = x.selector, y.selector
    signs = G.signs(k)
    f = G.cocycle(k, l)
    v = tuple(a + (b if sign == 1 else -b) + c for a, sign, b, c in zip(x.v, signs, y.v, f))
    return GroupElement(v, selector_bits(k ^ l, G.n))


def invert(G: BottGroup, x: GroupElement) -> GroupElement:
    """Inverse of x = (v, s): (-D(s) v - D(s) f(s, s), s), since s + s = 0."""
    k = x.selector
    signs = G.signs(k)
    f = G.cocycle(k, k)
    return GroupElement(tuple(-(a + c) if sign == 1 else a + c for a, sign, c in zip(x.v, signs, f)), x.s)


def realize(G: BottGroup, x: GroupElement) -> AffineMap:
    """The rigid motion translation(v) o representative(s)."""
    k = x.selector
    return AffineMap(DyVec(x.v) + G.translation(k), IntMatrix.diagonal(G.signs(k)))


def seifert_action(G: BottGroup, x: GroupElement, point: DyVec) -> DyVec:
    """(v, s) . p = v + D(s) p + t(s)."""
    k = x.selector
    return DyVec(x.v) + G.act(k, point) + G.translation(k)


def canonicalize(G: BottGroup, m: AffineMap) -> GroupElement | None:
    """
    Finds (v, s) with m = realize(v, s), or None if m is not in the group.

    Every selector whose holonomy equals the linear part of m is tried, since
    s -> D(s) need not be injective.
    """
    if m.dim != G.n:
        raise ValueError(f"Dimension mismatch: map {m.dim} vs group {G.n}")
    if not m.linear.is_diagonal():
        return None
    for k in G.selectors_with_signs(m.linear.diagonal_entries()):
        diff = m.translation - G.translation(k)
        if diff.is_integral():
            return GroupElement(diff.to_ints(), selector_bits(k, G.n))
    return None


def holonomy(G: BottGroup) -> Tuple[int, frozenset]:
    """
    The holonomy group L(Gamma) as a set of diagonal sign vectors.

    Returns:
        (rank, elements) with |elements| = 2^rank.
    """
    elements = frozenset(G.signs(k) for k in range(2 ** G.n))
    return len(elements).bit_length() - 1, elements


def neg_count_multiset(G: BottGroup) -> Tuple[int, ...]:
    """Sorted counts of -1 entries over the holonomy elements."""
    _, elements = holonomy(G)
    return tuple(sorted(signs.count(-1) for signs in elements))


def torsion_free_check(G: BottGroup) -> bool:
    """True iff every non-lattice coset has a +1 coordinate with non-integral translation."""
    for k in range(1, 2 ** G.n):
        signs, t = G.signs(k), G.translation(k)
        if not any(signs[j] == 1 and not t[j].is_integer() for j in range(G.n)):
            logging.debug(f"Selector {selector_string(selector_bits(k, G.n))} contains an element of finite order")
            return False
    return True


def _abelian_invariants(n: int, relations: List[List[int]]) -> AbelianInvariants:
    if not relations:
        return AbelianInvariants(n, ())
    matrix = sympy.Matrix(relations)
    factors = [abs(int(f)) for f in invariant_factors(matrix, domain=ZZ)]
    return AbelianInvariants(n - matrix.rank(), tuple(sorted(f for f in factors if f > 1)))


def abelianization(G: BottGroup) -> AbelianInvariants:
    """
    H_1 of the tower, from the Smith normal form of the commutator relations.

    In generator coordinates the lattice vector e_i is 2 [g_i], so an element
    (v, s) abelianizes to 2v + s; each relation is [g_i g_j g_i^-1] - [g_j].
    """
    n = G.n
    gens = G.generator_elements()
    for i, g in enumerate(gens):
        square = multiply(G, g, g)
        if square != GroupElement(tuple(1 if j == i else 0 for j in range(n)), (0,) * n):
            raise ValueError(f"Generator {i + 1} does not square to a unit translation")
    relations = []
    for i in range(n):
        inverse_i = invert(G, gens[i])
        for j in range(n):
            if i == j:
                continue
            conj = multiply(G, multiply(G, gens[i], gens[j]), inverse_i)
            row = [2 * a + b for a, b in zip(conj.v, conj.s)]
            row[j] -= 1
            if any(row):
                relations.append(row)
    return _abelian_invariants(n, relations)


def closed_form_abelianization(A: BottMatrix) -> AbelianInvariants:
    """Z^k + (Z2)^(n-k) with k the torus rank."""
    k = torus_rank(A)
    return AbelianInvariants(k, (2,) * (A.n - k))


def center_basis(G: BottGroup) -> CenterDescription:
    """
    Generators of the center.

    Central elements are pure translations w fixed by the holonomy, so w is zero
    on every flipped coordinate. The admissible w form the lattice spanned by the
    fixed unit vectors and the fixed parts of t(s) over selectors with D(s) = I
    and integral t(s) on the flipped coordinates; its Hermite basis is returned.
    """
    n = G.n
    flipped = G.flipped_coordinates()
    fixed = G.fixed_coordinates()
    if not fixed:
        return CenterDescription(0, ())
    # doubled coordinates keep the half-integers integral
    spanning = [[2 if j == i else 0 for j in fixed] for i in fixed]
    for k in range(1, 2 ** n):
        if any(sign == -1 for sign in G.signs(k)):
            continue
        t = G.translation(k)
        if all(t[j].is_integer() for j in flipped):
            spanning.append([(t[j] * 2).numerator for j in fixed])
    basis = hermite_normal_form(sympy.Matrix(spanning).T)
    generators = []
    for c in range(basis.cols):
        if all(basis[r, c] == 0 for r in range(basis.rows)):
            continue
        entries = [Dyadic(Fraction(0))] * n
        for r, j in enumerate(fixed):
            entries[j] = Dyadic(Fraction(int(basis[r, c]), 2))
        element = canonicalize(G, AffineMap.pure_translation(DyVec(tuple(entries))))
        if element is None:
            raise RuntimeError(f"Center vector {entries} is not in the group")
        generators.append(element)
    return CenterDescription(len(generators), tuple(generators))


class FiniteQuotient:
    """Gamma / L for L = sum of moduli[j] * Z e_j, elements as (v mod L, selector int)."""

    def __init__(self, G: BottGroup, moduli: Tuple[int, ...]):
        self.G = G
        self.n = G.n
        self.moduli = moduli
        self.order = math.prod(moduli) * 2 ** G.n
        self._signs = [G.signs(k) for k in range(2 ** G.n)]
        self._cocycle = [[G.cocycle(k, l) for l in range(2 ** G.n)] for k in range(2 ** G.n)]
        self.identity = ((0,) * self.n, 0)

    def elements(self) -> List[Tuple[Tuple[int, ...], int]]:
        lattice = itertools.product(*(range(m) for m in self.moduli))
        return [(v, k) for v in lattice for k in range(2 ** self.n)]

    def multiply(self, x, y):
        (v, k), (w, l) = x, y
        signs, f = self._signs[k], self._cocycle[k][l]
        return (tuple((a + sign * b + c) % m for a, sign, b, c, m in zip(v, signs, w, f, self.moduli)), k ^ l)

    def element_order(self, x) -> int:
        order = 1
        while x != self.identity:
            x = self.multiply(x, x)
            order *= 2
        return order

    def inverse(self, x):
        order = self.element_order(x)
        result = self.identity
        for _ in range(order - 1):
            result = self.multiply(result, x)
        return result

    def generators(self):
        return [((0,) * self.n, 1 << i) for i in range(self.n)]

    def subgroup(self, seeds) -> set:
        """The subgroup generated by seeds (finite, so closure under products suffices)."""
        members = {self.identity}
        frontier = [self.identity]
        while frontier:
            h = frontier.pop()
            for c in seeds:
                y = self.multiply(h, c)
                if y not in members:
                    members.add(y)
                    frontier.append(y)
        return members

    def commutator_subgroup(self) -> Tuple[set, set]:
        """Normal closure of the generator commutators, with a generating set."""
        gens = self.generators()
        inverses = [self.inverse(g) for g in gens]
        seeds = set()
        for a, a_inv in zip(gens, inverses):
            for b, b_inv in zip(gens, inverses):
                c = self.multiply(self.multiply(a, b), self.multiply(a_inv, b_inv))
                if c != self.identity:
                    seeds.add(c)
        members = self.subgroup(seeds)
        while True:
            conjugates = {self.multiply(self.multiply(g, h), g_inv)
                          for g, g_inv in zip(gens, inverses) for h in seeds} - members
            if not conjugates:
                return members, seeds
            seeds |= conjugates
            members = self.subgroup(seeds)


def finite_quotient_fingerprint(G: BottGroup, m: int, mod_center: bool = False) -> Fingerprint:
    """
    Isomorphism invariants of Gamma / L, L = m Z^n (plus the central lattice if mod_center).

    Raises:
        ValueError: m is not a supported modulus.
        FingerprintBudgetError: the quotient has more than FINGERPRINT_BUDGET elements.
    """
    if m not in FINGERPRINT_MODULI:
        raise ValueError(f"Modulus must be one of {FINGERPRINT_MODULI}, got {m}")
    fixed = set(G.fixed_coordinates()) if mod_center else set()
    moduli = tuple(1 if j in fixed else m for j in range(G.n))
    quotient = FiniteQuotient(G, moduli)
    if quotient.order > FINGERPRINT_BUDGET:
        raise FingerprintBudgetError(f"Quotient order {quotient.order} exceeds budget {FINGERPRINT_BUDGET}")

    elements = quotient.elements()
    gens = quotient.generators()
    inverses = [quotient.inverse(g) for g in gens]

    element_orders = Counter(quotient.element_order(x) for x in elements)
    center = [x for x in elements if all(quotient.multiply(x, g) == quotient.multiply(g, x) for g in gens)]
    classes = find_orbits(list(zip(gens, inverses)), elements,
                          lambda pair, x: quotient.multiply(quotient.multiply(pair[0], x), pair[1]))
    class_sizes = Counter(len(c) for c in classes)

    commutators, seeds = quotient.commutator_subgroup()
    cosets = UnionFind(elements)
    for x in elements:
        for c in seeds:
            cosets.union(x, quotient.multiply(x, c))
    # N_k = number of cosets killed by 2^k, for the invariant factors of G/G'
    exponents = Counter()
    for rep in cosets.reps():
        k, y = 0, rep
        while y not in commutators:
            y = quotient.multiply(y, y)
            k += 1
        exponents[k] += 1
    torsion = _abelian_torsion_from_exponents(exponents)

    return Fingerprint(
        order=sum(size * count for size, count in class_sizes.items()),
        element_order_multiset=tuple(sorted(element_orders.items())),
        center_order=len(center),
        commutator_order=len(commutators),
        abelianization=AbelianInvariants(0, torsion),
        class_size_multiset=tuple(sorted(class_sizes.items())),
    )


def _abelian_torsion_from_exponents(exponents: Counter) -> Tuple[int, ...]:
    """Invariant factors of an abelian 2-group from the count of elements of each order 2^k."""
    top = max(exponents) if exponents else 0
    killed = []  # log2 of the number of elements of order dividing 2^k
    running = 0
    for k in range(top + 1):
        running += exponents.get(k, 0)
        killed.append(running.bit_length() - 1)
    # at_least[k] = number of cyclic factors of order >= 2^k
    at_least = [killed[k] - killed[k - 1] for k in range(1, top + 1)] + [0]
    torsion = []
    for k in range(1, top + 1):
        torsion += [2 ** k] * (at_least[k - 1] - at_least[k])
    return tuple(sorted(torsion))


@functools.lru_cache(maxsize=None)
def _general_linear_columns(n: int) -> Tuple[Tuple[int, ...], ...]:
    """Every invertible n x n matrix over F2, as a tuple of column bitmasks."""
    result = []

    def extend(columns, span):
        if len(columns) == n:
            result.append(tuple(columns))
            return
        for c in range(1, 2 ** n):
            if c not in span:
                extend(columns + [c], span | {x ^ c for x in span})

    extend([], frozenset({0}))
    return tuple(result)


def _reduced_echelon(rows: Sequence[int]) -> Tuple[int, ...]:
    basis: List[int] = []
    for r in rows:
        for b in basis:
            r = min(r, r ^ b)
        if not r:
            continue
        lead = 1 << (r.bit_length() - 1)
        basis = [b ^ r if b & lead else b for b in basis]
        basis.append(r)
        basis.sort(reverse=True)
    return tuple(basis)


def square_form(G: BottGroup) -> Tuple[int, ...] | None:
    """
    Canonical form of the squaring map of Gamma / 2Z^n.

    Squaring (v, s) gives f(s, s) mod 2, a quadratic map q: F2^n -> F2^n. Row j of
    the value matrix [q(e_i) | q(e_i + e_k) + q(e_i) + q(e_k)] holds the
    coefficients of the j-th component; its row space, minimized over all
    changes of basis of F2^n, is invariant under group isomorphism.
    Returns None above SQUARE_FORM_MAX_DIM.
    """
    n = G.n
    if n > SQUARE_FORM_MAX_DIM:
        logging.warning(f"Square-map form skipped for n={n} (exhaustive only up to n={SQUARE_FORM_MAX_DIM})")
        return None
    q = [sum((value % 2) << j for j, value in enumerate(G.cocycle(k, k))) for k in range(2 ** n)]
    pairs = list(itertools.combinations(range(n), 2))
    width = n + len(pairs)
    best = None
    for columns in _general_linear_columns(n):
        values = [q[c] for c in columns]
        values += [q[columns[i] ^ columns[j]] ^ q[columns[i]] ^ q[columns[j]] for i, j in pairs]
        rows = [sum(((value >> r) & 1) << (width - 1 - p) for p, value in enumerate(values)) for r in range(n)]
        form = _reduced_echelon(rows)
        if best is None or form < best:
            best = form
    return best


def square_form_strings(form: Tuple[int, ...] | None, n: int) -> List[str] | None:
    if form is None:
        return None
    width = n + n * (n - 1) // 2
    return [format(row, f"0{width}b") for row in form]


if __name__ == '__main__':
    from bott_module import enumerate_matrices
    for A in enumerate_matrices(3):
        G = BottGroup.from_matrix(A)
        print(A.compact(), holonomy(G)[0], neg_count_multiset(G), abelianization(G), center_basis(G).rank)
