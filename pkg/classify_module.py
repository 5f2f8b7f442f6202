"""
Diffeomorphism classification of real Bott towers.

Matrices are bucketed by invariants of their Bieberbach groups; inside a bucket,
explicit affine conjugators are searched and verified, and the buckets are only
accepted once every member is connected to the others by a witness.
"""
import functools
import itertools
import json
import logging
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from affine_module import AffineMap, Dyadic, DyVec, IntMatrix, compose, conjugate, inverse, to_dyadic
from bieberbach_module import (AbelianInvariants, BottGroup, Fingerprint, abelianization, canonicalize,
                               center_basis, finite_quotient_fingerprint, holonomy, neg_count_multiset,
                               square_form, square_form_strings)
from bott_module import (DATA_DIR, BottMatrix, LabelTable, column_characters, enumerate_matrices,
                         load_label_table, matrix_conjugacy, orientable, parse_matrix, torus_rank)
from union_find import UnionFind

# --- Configuration ---
DEFAULT_ENTRY_BOUND = 1
DEFAULT_TRANSLATIONS = ("0", "1/4", "1/2", "3/4")
REFERENCE_PATH = os.path.join(DATA_DIR, "reference_classes.json")
WITNESS_CORPUS_PATH = os.path.join(DATA_DIR, "witness_corpus.json")
MATRIX_CONJUGACY_CAVEAT = "bounded GL(n,Z) search; absence is not a proof"

# Order used for the separation table: cheapest and most readable first.
INVARIANT_FIELDS = (
    "holonomy_rank",
    "orientable",
    "torus_rank",
    "neg_count_multiset",
    "abelianization",
    "center_rank",
    "fingerprint_m2",
    "fingerprint_m2_center",
    "fingerprint_m4",
    "fingerprint_m4_center",
    "square_form",
)


class UndeterminedClassificationError(RuntimeError):
    """Matrices share every invariant but no witness connects them, or a witness contradicts an invariant."""

    def __init__(self, message: str, labels: Sequence[str] = ()):
        super().__init__(message)
        self.labels = tuple(labels)

    def __reduce__(self):
        return self.__class__, (str(self), self.labels)


@dataclass(frozen=True)
class InvariantVector:
    n: int
    holonomy_rank: int
    orientable: bool
    torus_rank: int
    neg_count_multiset: Tuple[int, ...]
    abelianization: AbelianInvariants
    center_rank: int
    fingerprint_m2: Fingerprint
    fingerprint_m2_center: Fingerprint
    fingerprint_m4: Fingerprint
    fingerprint_m4_center: Fingerprint
    square_form: Tuple[int, ...] | None

    def first_difference(self, other: "InvariantVector") -> str | None:
        for name in INVARIANT_FIELDS:
            if getattr(self, name) != getattr(other, name):
                return name
        return None

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "holonomy_rank": self.holonomy_rank,
            "orientable": self.orientable,
            "torus_rank": self.torus_rank,
            "neg_count_multiset": list(self.neg_count_multiset),
            "abelianization": self.abelianization.to_json(),
            "center_rank": self.center_rank,
            "fingerprint_m2": self.fingerprint_m2.to_json(),
            "fingerprint_m2_center": self.fingerprint_m2_center.to_json(),
            "fingerprint_m4": self.fingerprint_m4.to_json(),
            "fingerprint_m4_center": self.fingerprint_m4_center.to_json(),
            "square_form": square_form_strings(self.square_form, self.n),
        }


def invariant_vector(A: BottMatrix) -> InvariantVector:
    """
    Computes every diffeomorphism invariant of Gamma(A).

    Args:
        A: The Bott matrix.

    Returns:
        The InvariantVector; fields are compared in INVARIANT_FIELDS order.

    Raises:
        FingerprintBudgetError: a finite quotient is too large to enumerate.
    """
    G = BottGroup.from_matrix(A)
    rank, _ = holonomy(G)
    return InvariantVector(
        n=A.n,
        holonomy_rank=rank,
        orientable=orientable(A),
        torus_rank=torus_rank(A),
        neg_count_multiset=neg_count_multiset(G),
        abelianization=abelianization(G),
        center_rank=center_basis(G).rank,
        fingerprint_m2=finite_quotient_fingerprint(G, 2, mod_center=False),
        fingerprint_m2_center=finite_quotient_fingerprint(G, 2, mod_center=True),
        fingerprint_m4=finite_quotient_fingerprint(G, 4, mod_center=False),
        fingerprint_m4_center=finite_quotient_fingerprint(G, 4, mod_center=True),
        square_form=square_form(G),
    )


@dataclass(frozen=True)
class SearchSpace:
    """Conjugators (b, B) with |B_ij| <= entry_bound and every b_j mod 1 in translations."""
    entry_bound: int = DEFAULT_ENTRY_BOUND
    translations: Tuple[Dyadic, ...] = tuple(to_dyadic(x) for x in DEFAULT_TRANSLATIONS)

    def __post_init__(self):
        if self.entry_bound < 1:
            raise ValueError(f"Entry bound must be at least 1, got {self.entry_bound}")
        values = sorted(set(to_dyadic(x) for x in self.translations))
        if not values:
            raise ValueError("Translation grid is empty")
        if any(x < 0 or x >= 1 for x in values):
            raise ValueError(f"Translation grid values must lie in [0, 1), got {[str(x) for x in values]}")
        object.__setattr__(self, 'translations', tuple(values))

    @property
    def scale(self) -> int:
        """Common denominator of the grid, at least 2 so half-integers stay integral."""
        return 2 ** max(1, max(x.exponent for x in self.translations))

    def scaled_translations(self) -> np.ndarray:
        return np.array([(x * self.scale).numerator for x in self.translations], dtype=np.int64)

    def contains(self, gamma: AffineMap) -> bool:
        if any(abs(x) > self.entry_bound for row in gamma.linear.rows for x in row):
            return False
        return all(x.frac() in self.translations for x in gamma.translation)

    def to_json(self) -> dict:
        return {"entry_bound": self.entry_bound, "translations": [str(x) for x in self.translations]}


@dataclass(frozen=True)
class Witness:
    """gamma with gamma Gamma(source) gamma^-1 = Gamma(target)."""
    source: BottMatrix
    target: BottMatrix
    conjugator: AffineMap

    @property
    def n(self) -> int:
        return self.source.n

    def to_json(self, labels: LabelTable | None = None) -> dict:
        name = labels.label if labels is not None else BottMatrix.compact
        return {
            "n": self.n,
            "source": name(self.source),
            "target": name(self.target),
            "B": self.conjugator.linear.to_json(),
            "b": self.conjugator.translation.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict, labels: LabelTable | None = None) -> "Witness":
        try:
            n = int(data["n"])
            source = parse_matrix(str(data["source"]), n, labels)
            target = parse_matrix(str(data["target"]), n, labels)
            return cls(source, target, AffineMap.from_json(data))
        except KeyError as e:
            raise ValueError(f"Witness JSON is missing key {e}") from e
        except TypeError as e:
            raise ValueError(f"Witness JSON entry is malformed: {e}") from e


def verify_witness(w: Witness) -> bool:
    """
    True iff gamma g gamma^-1 lies in Gamma(target) for every generator g of
    Gamma(source), and gamma^-1 h gamma lies in Gamma(source) for every generator h
    of Gamma(target).
    """
    if w.source.n != w.target.n or w.conjugator.dim != w.source.n:
        raise ValueError(f"Dimension mismatch in witness {w.source.compact()} -> {w.target.compact()}")
    if not w.conjugator.linear.is_unimodular():
        return False
    G = BottGroup.from_matrix(w.source)
    H = BottGroup.from_matrix(w.target)
    gamma = w.conjugator
    gamma_inverse = inverse(gamma)
    for g in G.generators:
        if canonicalize(H, conjugate(gamma, g)) is None:
            return False
    for h in H.generators:
        if canonicalize(G, conjugate(gamma_inverse, h)) is None:
            return False
    return True


def compose_witnesses(first: Witness, second: Witness) -> Witness:
    """first: A -> A', second: A' -> A'' gives A -> A''."""
    if first.target != second.source:
        raise ValueError(f"Cannot chain {first.target.compact()} into {second.source.compact()}")
    return Witness(first.source, second.target, compose(second.conjugator, first.conjugator))


def invert_witness(w: Witness) -> Witness:
    """A -> A' with conjugator gamma gives A' -> A with gamma^-1."""
    return Witness(w.target, w.source, inverse(w.conjugator))


def load_witness_corpus(path: str, labels_path: str | None = None) -> List[Witness]:
    """Reads a witness file holding one witness object or a list of them."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Witness file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    entries = data if isinstance(data, list) else [data]
    tables: Dict[int, LabelTable] = {}
    witnesses = []
    for entry in entries:
        if not isinstance(entry, dict) or "n" not in entry:
            raise ValueError(f"Witness entry in {path} needs an object with key 'n'")
        try:
            n = int(entry["n"])
        except TypeError as e:
            raise ValueError(f"Witness entry in {path} has a bad dimension: {entry['n']!r}") from e
        if n not in tables:
            tables[n] = load_label_table(n, labels_path) if labels_path else load_label_table(n)
        witnesses.append(Witness.from_json(entry, tables[n]))
    return witnesses


@functools.lru_cache(maxsize=None)
def _unimodular_blocks(size: int, bound: int) -> Tuple[np.ndarray, ...]:
    """All size x size integer matrices with entries in [-bound, bound] and det +-1, simplest first."""
    found = []
    for entries in itertools.product(range(-bound, bound + 1), repeat=size * size):
        block = np.array(entries, dtype=np.int64).reshape(size, size)
        if round(abs(np.linalg.det(block))) == 1:
            found.append(entries)
    found.sort(key=lambda e: (sum(1 for x in e if x), sum(1 for x in e if x < 0), [abs(x) for x in e], e))
    return tuple(np.array(e, dtype=np.int64).reshape(size, size) for e in found)


def _character_maps(source_chars: List[int], target_chars: List[int]) -> Iterator[Dict[int, int]]:
    """
    Linear isomorphisms from the span of the target column characters onto the
    span of the source ones that send every target character to a source
    character, matching the number of columns carrying each character.
    """
    coordinates = {0: 0}
    basis: List[int] = []
    for c in target_chars:
        if c not in coordinates:
            bit = 1 << len(basis)
            basis.append(c)
            coordinates.update({value ^ c: mask | bit for value, mask in list(coordinates.items())})
    source_counts = Counter(source_chars)
    source_values = sorted(source_counts)
    for images in itertools.product(source_values, repeat=len(basis)):
        span = {0}
        for image in images:
            span |= {x ^ image for x in span}
        if len(span) != 2 ** len(basis):
            continue

        def image_of(c):
            value = 0
            for i, image in enumerate(images):
                if (coordinates[c] >> i) & 1:
                    value ^= image
            return value

        mapping = {c: image_of(c) for c in set(target_chars)}
        if Counter(mapping[c] for c in target_chars) == source_counts:
            yield mapping


def _block_matrices(n: int, mapping: Dict[int, int], source_chars: List[int],
                    target_chars: List[int], bound: int) -> Iterator[np.ndarray]:
    """B supported on (row j, column k) only where the mapped character of row j is that of column k."""
    groups = []
    for c in sorted(set(source_chars)):
        rows = [j for j in range(n) if mapping[target_chars[j]] == c]
        columns = [k for k in range(n) if source_chars[k] == c]
        groups.append((rows, columns, _unimodular_blocks(len(rows), bound)))
    for blocks in itertools.product(*(g[2] for g in groups)):
        B = np.zeros((n, n), dtype=np.int64)
        for (rows, columns, _), block in zip(groups, blocks):
            B[np.ix_(rows, columns)] = block
        yield B


def _feasible_translations(B: np.ndarray, images: List[Tuple[int, ...]], targets: Dict[Tuple[int, ...], np.ndarray],
                           grid: np.ndarray, scale: int) -> np.ndarray:
    """
    Boolean array over the translation grid (one axis per coordinate) marking the
    b for which every conjugated generator (b + B e_i / 2 - M_i b, M_i) lands in
    the target group. Works in units of 1/scale.
    """
    n = B.shape[0]
    g = len(grid)
    total = np.ones((g,) * n, dtype=bool)
    for i in range(n):
        signs = images[i]
        t = targets[signs]  # scaled t(u) for every u with D(u) = M_i
        allowed = np.ones((len(t),) + (g,) * n, dtype=bool)
        for j in range(n):
            condition = (grid[None, :] * (1 - signs[j]) + (scale // 2) * B[j, i] - t[:, j:j + 1]) % scale == 0
            shape = [len(t)] + [1] * n
            shape[j + 1] = g
            allowed &= condition.reshape(shape)
        total &= allowed.any(axis=0)
        if not total.any():
            break
    return total


def conjugator_search(A: BottMatrix, A2: BottMatrix, space: SearchSpace | None = None) -> Witness | None:
    """
    Looks for a verified witness gamma = (b, B) inside the search space.

    B is built from unimodular blocks compatible with the holonomy characters, so
    that B D_i B^-1 is diagonal; b is then read off the translation grid with a
    vectorised congruence test and each candidate is verified exactly.
    """
    if A.n != A2.n:
        raise ValueError(f"Dimension mismatch: {A.n} vs {A2.n}")
    space = space or SearchSpace()
    n = A.n
    if A == A2:
        return Witness(A, A2, AffineMap.identity(n))

    source_chars = column_characters(A)
    target_chars = column_characters(A2)
    H = BottGroup.from_matrix(A2)
    scale = space.scale
    grid = space.scaled_translations()
    by_signs: Dict[Tuple[int, ...], List[List[int]]] = {}
    for k in range(2 ** n):
        by_signs.setdefault(H.signs(k), []).append([(x * scale).numerator for x in H.translation(k)])
    targets = {signs: np.array(rows, dtype=np.int64) for signs, rows in by_signs.items()}

    for mapping in _character_maps(source_chars, target_chars):
        # sign of generator i on row j is bit i of the character mapped to row j
        images = [tuple(-1 if (mapping[target_chars[j]] >> i) & 1 else 1 for j in range(n)) for i in range(n)]
        if any(signs not in targets for signs in images):
            continue
        for B in _block_matrices(n, mapping, source_chars, target_chars, space.entry_bound):
            feasible = _feasible_translations(B, images, targets, grid, scale)
            for index in np.argwhere(feasible):
                b = DyVec(tuple(space.translations[int(x)] for x in index))
                witness = Witness(A, A2, AffineMap(b, IntMatrix.from_numpy(B)))
                if verify_witness(witness):
                    return witness
    return None


@dataclass(frozen=True)
class ClassRecord:
    members: Tuple[BottMatrix, ...]
    orientable: bool
    torus_rank: int
    witnesses: Tuple[Witness, ...]
    name: str | None = None
    # (member, P) pairs; P is None where the bounded search found nothing
    matrix_conjugacy: Tuple[Tuple[BottMatrix, IntMatrix | None], ...] | None = None


@dataclass(frozen=True)
class Partition:
    n: int
    classes: Tuple[ClassRecord, ...]
    separations: Tuple[Tuple[BottMatrix, BottMatrix, str], ...]
    space: SearchSpace
    labels: LabelTable = field(compare=False)
    vectors: Dict[int, InvariantVector] = field(default_factory=dict, compare=False, repr=False)

    def class_labels(self) -> List[List[str]]:
        return [[self.labels.label(A) for A in c.members] for c in self.classes]


def worker_count(workers: int | None = None) -> int:
    """Worker processes for classification: the argument, else BOTT_THREADS, else the CPU count."""
    if workers is not None:
        return max(1, workers)
    raw = os.environ.get("BOTT_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
        if value < 1:
            raise ValueError(raw)
        return value
    except ValueError:
        logging.warning(f"Ignoring invalid BOTT_THREADS={raw!r}; using one worker.")
        return 1


def _parallel_map(fn, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _connect_bucket(members: List[BottMatrix], space: SearchSpace, labels: LabelTable) -> List[Witness]:
    """Spanning forest of witnesses over one invariant bucket, trying pairs in ascending id order."""
    components = UnionFind(A.id for A in members)
    witnesses = []
    for A, A2 in itertools.combinations(members, 2):
        if components.connected(A.id, A2.id):
            continue
        witness = conjugator_search(A, A2, space)
        if witness is not None:
            components.union(A.id, A2.id)
            witnesses.append(witness)
            logging.debug(f"Witness {labels.label(A)} -> {labels.label(A2)}: {witness.conjugator.to_json()}")
    if len(components) > 1:
        parts = [[labels.label(BottMatrix.from_id(members[0].n, i)) for i in group] for group in components.components()]
        raise UndeterminedClassificationError(
            f"Matrices {parts} share all invariants but no witness joins them within {space.to_json()}",
            labels=[label for part in parts for label in part])
    return witnesses


def audit_witness_invariance(p: "Partition", vectors: Dict[int, InvariantVector] | None = None) -> None:
    """Raises if a witness of the partition joins matrices with different invariant vectors."""
    vectors = vectors if vectors is not None else p.vectors
    name = p.labels.label
    for w in (w for record in p.classes for w in record.witnesses):
        difference = vectors[w.source.id].first_difference(vectors[w.target.id])
        if difference is not None:
            raise UndeterminedClassificationError(
                f"Witness {name(w.source)} -> {name(w.target)} contradicts invariant '{difference}'",
                labels=[name(w.source), name(w.target)])


def classify(n: int, space: SearchSpace | None = None, workers: int | None = None,
             with_matrix_conjugacy: bool = False, labels: LabelTable | None = None) -> Partition:
    """
    Partitions the Bott matrices of size n into diffeomorphism classes.

    Raises:
        UndeterminedClassificationError: an invariant bucket could not be connected by witnesses.
        FingerprintBudgetError: a finite quotient exceeded the enumeration budget.
    """
    space = space or SearchSpace()
    if labels is None:
        try:
            labels = load_label_table(n)
        except FileNotFoundError as e:
            logging.warning(f"{e}; reporting compact matrix forms.")
            labels = LabelTable(n)
    logging.info(f"--- Starting classification for n={n} ---")
    matrices = enumerate_matrices(n)
    workers = worker_count(workers)

    vectors = _parallel_map(invariant_vector, matrices, workers)
    vector_of = {A.id: vec for A, vec in zip(matrices, vectors)}

    buckets: Dict[InvariantVector, List[BottMatrix]] = {}
    for A, vec in zip(matrices, vectors):
        buckets.setdefault(vec, []).append(A)
    ordered = sorted(buckets.values(), key=lambda members: members[0].id)
    logging.info(f"{len(matrices)} matrices fall into {len(ordered)} invariant buckets.")

    forests = _parallel_map(functools.partial(_connect_bucket, space=space, labels=labels), ordered, workers)

    classes = []
    for members, witnesses in zip(ordered, forests):
        root = members[0]
        conjugacy = None
        if with_matrix_conjugacy:
            conjugacy = tuple((A, matrix_conjugacy(root, A)) for A in members)
        classes.append(ClassRecord(
            members=tuple(members),
            orientable=vector_of[root.id].orientable,
            torus_rank=vector_of[root.id].torus_rank,
            witnesses=tuple(witnesses),
            matrix_conjugacy=conjugacy,
        ))

    separations = []
    for first, second in itertools.combinations(classes, 2):
        a, b = first.members[0], second.members[0]
        separations.append((a, b, vector_of[a.id].first_difference(vector_of[b.id])))

    partition = Partition(n, tuple(classes), tuple(separations), space, labels, vector_of)
    audit_witness_invariance(partition)
    logging.info(f"Classification for n={n} finished with {len(classes)} classes.")
    return partition


@dataclass(frozen=True)
class ReferenceClass:
    name: str
    orientable: bool
    torus_rank: int
    labels: Tuple[str, ...]


def load_reference(n: int, path: str = REFERENCE_PATH) -> List[ReferenceClass]:
    """
    Loads the reference classification for dimension n.

    Args:
        n: Matrix size.
        path: JSON fixture keyed by n.

    Returns:
        The reference classes in their published order.

    Raises:
        FileNotFoundError: the fixture file does not exist.
        ValueError: the fixture has no classification for n.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Reference fixture not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    if str(n) not in data:
        raise ValueError(f"No reference classification for n={n} in {path}")
    return [ReferenceClass(c["name"], bool(c["orientable"]), int(c["torus_rank"]), tuple(c["labels"]))
            for c in data[str(n)]]


@dataclass(frozen=True)
class ClassComparison:
    name: str
    status: str
    missing: Tuple[str, ...]
    extra: Tuple[str, ...]
    annotation_ok: bool


@dataclass(frozen=True)
class ReferenceReport:
    n: int
    matched: bool
    comparisons: Tuple[ClassComparison, ...]
    unmatched_classes: Tuple[Tuple[str, ...], ...]

    def lines(self) -> List[str]:
        lines = [f"n={self.n}: {'match' if self.matched else 'MISMATCH'}"]
        for c in self.comparisons:
            line = f"  ({c.name}) {c.status}"
            if c.missing:
                line += f"; missing from computed class: {', '.join(c.missing)}"
            if c.extra:
                line += f"; not in reference class: {', '.join(c.extra)}"
            if not c.annotation_ok:
                line += "; orientability or torus rank differs"
            lines.append(line)
        for labels in self.unmatched_classes:
            lines.append(f"  computed class without reference counterpart: {', '.join(labels)}")
        return lines


def compare_with_reference(p: Partition, reference: Sequence[ReferenceClass]) -> ReferenceReport:
    """Matches each reference class with the computed class that overlaps it most."""
    computed = [frozenset(labels) for labels in p.class_labels()]

    def ordered(labels):
        return tuple(sorted(labels, key=lambda label: (p.labels.matrix(label).id if label in p.labels else -1, label)))

    comparisons = []
    for ref in reference:
        expected = frozenset(ref.labels)
        best = max(range(len(computed)), key=lambda i: (len(computed[i] & expected), -i))
        record = p.classes[best]
        annotation_ok = record.orientable == ref.orientable and record.torus_rank == ref.torus_rank
        missing = ordered(expected - computed[best])
        extra = ordered(computed[best] - expected)
        status = "match" if not missing and not extra and annotation_ok else "mismatch"
        comparisons.append(ClassComparison(ref.name, status, missing, extra, annotation_ok))

    reference_sets = {frozenset(ref.labels) for ref in reference}
    unmatched = tuple(ordered(c) for c in computed if c not in reference_sets)
    matched = all(c.status == "match" for c in comparisons) and not unmatched
    return ReferenceReport(p.n, matched, tuple(comparisons), unmatched)


def attach_reference_names(p: Partition, reference: Sequence[ReferenceClass]) -> Partition:
    """Names each class after the reference class with exactly the same labels; other classes keep their name."""
    names = {frozenset(ref.labels): ref.name for ref in reference}
    classes = tuple(replace(record, name=names.get(frozenset(labels), record.name))
                    for record, labels in zip(p.classes, p.class_labels()))
    return replace(p, classes=classes)


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    partition = classify(3)
    for labels in partition.class_labels():
        print(labels)
