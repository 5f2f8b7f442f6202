import itertools
import random
import sys
from fractions import Fraction

import numpy as np
import pytest

from affine_module import HALF, AffineMap, DyVec, IntMatrix, apply, compose
from bieberbach_module import (AbelianInvariants, BottGroup, FingerprintBudgetError, GroupElement, abelianization,
                               canonicalize, center_basis, closed_form_abelianization, finite_quotient_fingerprint,
                               holonomy, invert, multiply, neg_count_multiset, realize, representative, seifert_action,
                               selector_bits, square_form, torsion_free_check)
from bott_module import BottMatrix, enumerate_matrices, lift_generators, load_label_table

LABELS3 = load_label_table(3)
LABELS4 = load_label_table(4)
ALL_MATRICES = [A for n in range(1, 5) for A in enumerate_matrices(n)]
SMALL_MATRICES = [A for n in range(1, 4) for A in enumerate_matrices(n)]
BOX = range(-2, 3)


def group3(label: str) -> BottGroup:
    return BottGroup.from_matrix(LABELS3.matrix(label))


def group4(label: str) -> BottGroup:
    return BottGroup.from_matrix(LABELS4.matrix(label))


def elements(n: int, values=(0, 1)):
    for v in itertools.product(values, repeat=n):
        for k in range(2 ** n):
            yield GroupElement(v, selector_bits(k, n))


def random_element(rng: random.Random, n: int) -> GroupElement:
    return GroupElement(tuple(rng.randint(-2, 2) for _ in range(n)), tuple(rng.randint(0, 1) for _ in range(n)))


def test_multiplication_matches_motion_composition_on_unit_box():
    for A in enumerate_matrices(3) + enumerate_matrices(2):
        G = BottGroup.from_matrix(A)
        items = list(elements(A.n))
        for x in items:
            for y in items:
                assert realize(G, multiply(G, x, y)) == compose(realize(G, x), realize(G, y))


@pytest.mark.slow
def test_multiplication_matches_motion_composition_on_full_box():
    for A in SMALL_MATRICES:
        G = BottGroup.from_matrix(A)
        n, items = A.n, list(elements(A.n, BOX))
        motions = [realize(G, x) for x in items]
        doubled = np.array([m.translation.scale(2).to_ints() for m in motions])
        signs = np.array([m.linear.diagonal_entries() for m in motions])
        # compose for diagonal linear parts, translations doubled
        expected_t = signs[:, None, :] * doubled[None, :, :] + doubled[:, None, :]
        expected_d = signs[:, None, :] * signs[None, :, :]

        products = [multiply(G, x, y) for x in items for y in items]
        v = np.array([p.v for p in products]).reshape(len(items), len(items), n)
        k = np.array([p.selector for p in products]).reshape(len(items), len(items))
        table_t = np.array([G.translation(j).scale(2).to_ints() for j in range(2 ** n)])
        table_d = np.array([G.signs(j) for j in range(2 ** n)])
        assert np.array_equal(2 * v + table_t[k], expected_t), A.compact()
        assert np.array_equal(table_d[k], expected_d), A.compact()


def test_multiplication_matches_motion_composition_sampled():
    rng = random.Random(4)
    groups = [BottGroup.from_matrix(A) for A in enumerate_matrices(4)]
    for _ in range(10000):
        G = rng.choice(groups)
        x, y = random_element(rng, 4), random_element(rng, 4)
        assert realize(G, multiply(G, x, y)) == compose(realize(G, x), realize(G, y))


def test_inverse_and_canonical_form():
    for A in SMALL_MATRICES:
        G = BottGroup.from_matrix(A)
        for x in elements(A.n, BOX):
            assert multiply(G, x, invert(G, x)) == G.identity()
            assert canonicalize(G, realize(G, x)) == x


def test_inverse_and_canonical_form_sampled():
    rng = random.Random(7)
    groups = [BottGroup.from_matrix(A) for A in enumerate_matrices(4)]
    for _ in range(10000):
        G = rng.choice(groups)
        x = random_element(rng, 4)
        assert multiply(G, x, invert(G, x)) == G.identity()
        assert canonicalize(G, realize(G, x)) == x


def test_representative_is_ordered_product_of_generators():
    for A in enumerate_matrices(3):
        G = BottGroup.from_matrix(A)
        gens = lift_generators(A)
        for k in range(8):
            s = selector_bits(k, 3)
            expected = AffineMap.identity(3)
            for g, bit in zip(gens, s):
                if bit:
                    expected = compose(expected, g)
            assert representative(G, s) == expected
    with pytest.raises(ValueError):
        representative(group3("A1"), (1, 0))


def test_seifert_action_matches_motion():
    grid = [DyVec.of(p) for p in itertools.product(["0", "1/4", "-1/2"], repeat=3)]
    for A in enumerate_matrices(3):
        G = BottGroup.from_matrix(A)
        for x in elements(3, BOX):
            for p in grid[::4]:
                assert seifert_action(G, x, p) == apply(realize(G, x), p)


def test_seifert_action_matches_motion_sampled():
    rng = random.Random(9)
    groups = [BottGroup.from_matrix(A) for A in enumerate_matrices(4)]
    for _ in range(10000):
        G = rng.choice(groups)
        x = random_element(rng, 4)
        p = DyVec.of(Fraction(rng.randint(-8, 8), 4) for _ in range(4))
        assert seifert_action(G, x, p) == apply(realize(G, x), p)


def test_canonicalize_rejects_non_members():
    G = group3("A1")
    assert canonicalize(G, AffineMap.pure_translation(DyVec.unit(3, 0, HALF))) is None
    assert canonicalize(G, AffineMap(DyVec.zeros(3), IntMatrix(((0, 1, 0), (1, 0, 0), (0, 0, 1))))) is None


def test_every_bott_group_is_torsion_free():
    for A in ALL_MATRICES:
        assert torsion_free_check(BottGroup.from_matrix(A)), A.compact()


def test_reflection_group_has_torsion():
    reflection = AffineMap(DyVec.zeros(2), IntMatrix.diagonal((1, -1)))
    shift = AffineMap(DyVec.unit(2, 1, HALF), IntMatrix.identity(2))
    G = BottGroup.from_generators([reflection, shift])
    assert not torsion_free_check(G)


def test_dependent_generators_are_rejected():
    g = AffineMap(DyVec.unit(2, 0, HALF), IntMatrix.identity(2))
    with pytest.raises(ValueError):
        BottGroup.from_generators([g, g])
    with pytest.raises(ValueError):
        BottGroup.from_generators([AffineMap(DyVec.zeros(2), IntMatrix(((0, 1), (1, 0))))] * 2)


def f2_rank(matrix) -> int:
    rows = [int("".join(str(int(x) % 2) for x in row), 2) for row in matrix]
    rank = 0
    for bit in reversed(range(len(matrix))):
        index = next((i for i, r in enumerate(rows) if r >> bit & 1), None)
        if index is None:
            continue
        pivot = rows.pop(index)
        rows = [r ^ pivot if r >> bit & 1 else r for r in rows]
        rank += 1
    return rank


def test_holonomy_rank_is_f2_rank_of_nilpotent_part():
    for A in ALL_MATRICES:
        rank, members = holonomy(BottGroup.from_matrix(A))
        assert rank == f2_rank(A.nilpotent_part()), A.compact()
        assert len(members) == 2 ** rank


def test_holonomy_ranks():
    assert holonomy(group3("A1"))[0] == 1
    assert holonomy(group3("A5"))[0] == 2
    assert holonomy(group3("A7"))[0] == 1
    assert holonomy(BottGroup.from_matrix(BottMatrix.identity(4)))[0] == 0


def test_negative_eigenvalue_counts():
    assert neg_count_multiset(group3("A1")) == (0, 1)
    assert neg_count_multiset(group3("A7")) == (0, 2)
    assert neg_count_multiset(group3("A5")) == (0, 1, 1, 2)


def test_abelianization_matches_closed_form():
    for A in ALL_MATRICES:
        assert abelianization(BottGroup.from_matrix(A)) == closed_form_abelianization(A), A.compact()
    assert abelianization(group3("A7")) == AbelianInvariants(1, (2, 2))


def test_center_with_two_fixed_coordinates():
    G = group4("Aa3")
    center = center_basis(G)
    assert center.rank == 2
    translations = {realize(G, g).translation for g in center.generators}
    assert all(realize(G, g).linear == IntMatrix.identity(4) for g in center.generators)
    assert translations == {DyVec.of([1, 0, 0, 0]), DyVec.of([0, 0, "1/2", 0])}


def test_group_element_json():
    x = GroupElement((1, -2, 0), (0, 1, 1))
    assert x.to_json() == {"v": [1, -2, 0], "s": "011"}
    assert GroupElement.from_json(x.to_json()) == x
    with pytest.raises(ValueError):
        GroupElement.from_json({"v": [0]})
    center = center_basis(group4("Aa3")).to_json()
    assert center["rank"] == 2
    assert [GroupElement.from_json(g) for g in center["generators"]] == list(center_basis(group4("Aa3")).generators)


def test_center_with_one_fixed_coordinate():
    G = group4("Aa13")
    center = center_basis(G)
    assert center.rank == 1
    assert realize(G, center.generators[0]) == AffineMap.pure_translation(DyVec.of([1, 0, 0, 0]))


def test_center_elements_commute_with_generators():
    for A in ALL_MATRICES:
        G = BottGroup.from_matrix(A)
        _, members = holonomy(G)
        for z in center_basis(G).generators:
            translation = realize(G, z).translation
            assert all(translation == DyVec(tuple(t * s for s, t in zip(signs, translation.entries)))
                       for signs in members)
            for g in G.generator_elements():
                assert multiply(G, z, g) == multiply(G, g, z)


def test_fingerprint_of_flat_torus():
    fp = finite_quotient_fingerprint(BottGroup.from_matrix(BottMatrix.identity(3)), 2)
    assert fp.order == 64
    assert fp.element_order_multiset == ((1, 1), (2, 7), (4, 56))
    assert fp.is_abelian()
    assert fp.abelianization.torsion == (4, 4, 4)
    assert finite_quotient_fingerprint(BottGroup.from_matrix(BottMatrix.identity(3)), 2, mod_center=True).order == 8


def test_fingerprint_of_nonabelian_quotient():
    fp = finite_quotient_fingerprint(group3("A1"), 2)
    assert fp.order == 64
    assert fp.center_order == 16
    assert fp.commutator_order == 2
    assert fp.abelianization.torsion == (2, 4, 4)
    assert sum(size * count for size, count in fp.class_size_multiset) == fp.order


def test_fingerprint_limits():
    with pytest.raises(ValueError):
        finite_quotient_fingerprint(group3("A1"), 3)
    G7 = BottGroup.from_matrix(BottMatrix.identity(7))
    with pytest.raises(FingerprintBudgetError):
        finite_quotient_fingerprint(G7, 4)


def test_square_form_separates_last_nonorientable_pair():
    assert square_form(group4("Aa10")) != square_form(group4("Aa14"))
    assert square_form(group4("Aa10")) == square_form(group4("Aa12"))
    assert square_form(BottGroup.from_matrix(BottMatrix.identity(5))) is None


if __name__ == '__main__':
    sys.exit(pytest.main([__file__]))
