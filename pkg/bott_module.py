"""
Bott matrices: upper-unitriangular 0/1 matrices describing how each Z2 factor of
(Z2)^n acts on the later circle coordinates of the n-torus.
"""
import itertools
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from affine_module import HALF, AffineMap, DyVec, IntMatrix

# --- Configuration ---
DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
LABELS_PATH = os.path.join(DATA_DIR, "bott_labels.json")
DEFAULT_CONJUGACY_BOUND = 1


def strict_upper_positions(n: int) -> List[Tuple[int, int]]:
    """Row-major (i, j), i < j, 0-based."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


@dataclass(frozen=True)
class BottMatrix:
    n: int
    strict_upper: Tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Dimension must be at least 1, got {self.n}")
        bits = tuple(int(b) for b in self.strict_upper)
        if len(bits) != self.n * (self.n - 1) // 2:
            raise ValueError(f"Expected {self.n * (self.n - 1) // 2} strict-upper bits for n={self.n}, got {len(bits)}")
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"Bott matrix entries must be 0 or 1, got {bits}")
        object.__setattr__(self, 'strict_upper', bits)

    @property
    def id(self) -> int:
        """The strict-upper bits read as a binary number, a_12 most significant."""
        value = 0
        for b in self.strict_upper:
            value = (value << 1) | b
        return value

    @classmethod
    def from_id(cls, n: int, matrix_id: int) -> "BottMatrix":
        length = n * (n - 1) // 2
        if not 0 <= matrix_id < 2 ** length:
            raise ValueError(f"Matrix id {matrix_id} out of range for n={n}")
        return cls(n, tuple((matrix_id >> (length - 1 - k)) & 1 for k in range(length)))

    @classmethod
    def from_bits(cls, n: int, bits: str) -> "BottMatrix":
        return cls(n, tuple(int(c) for c in bits))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "BottMatrix":
        n = len(rows)
        for i, row in enumerate(rows):
            if len(row) != n:
                raise ValueError(f"Row {i + 1} has length {len(row)}, expected {n}")
            for j, x in enumerate(row):
                if i == j and x != 1:
                    raise ValueError("Bott matrix diagonal must be all 1")
                if i > j and x != 0:
                    raise ValueError("Bott matrix must be upper triangular")
        return cls(n, tuple(int(rows[i][j]) for i, j in strict_upper_positions(n)))

    @classmethod
    def identity(cls, n: int) -> "BottMatrix":
        return cls(n, (0,) * (n * (n - 1) // 2))

    def entry(self, i: int, j: int) -> int:
        """a_ij with 0-based indices."""
        if i == j:
            return 1
        if i > j:
            return 0
        index = i * self.n - i * (i + 1) // 2 + (j - i - 1)
        return self.strict_upper[index]

    @property
    def rows(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(tuple(self.entry(i, j) for j in range(self.n)) for i in range(self.n))

    def bits(self) -> str:
        return "".join(str(b) for b in self.strict_upper)

    def compact(self) -> str:
        return f"n={self.n};bits={self.bits()}"

    def to_json(self) -> dict:
        return {"n": self.n, "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_json(cls, data: dict) -> "BottMatrix":
        matrix = cls.from_rows(data["rows"])
        if "n" in data and data["n"] != matrix.n:
            raise ValueError(f"Declared n={data['n']} does not match {matrix.n} rows")
        return matrix

    def nilpotent_part(self) -> np.ndarray:
        """A - I as an integer array."""
        return np.array(self.rows, dtype=np.int64) - np.eye(self.n, dtype=np.int64)


def enumerate_matrices(n: int) -> List[BottMatrix]:
    """All 2^(n(n-1)/2) Bott matrices of size n, in ascending id order."""
    if n < 1:
        raise ValueError(f"Dimension must be at least 1, got {n}")
    count = 2 ** (n * (n - 1) // 2)
    return [BottMatrix.from_id(n, k) for k in range(count)]


def lift_generators(A: BottMatrix) -> List[AffineMap]:
    """
    The lifts g_i = (1/2 e_i, D_i) of the (Z2)^n generators to R^n.

    D_i is diagonal with entry (-1)^a_ij in position j > i and 1 elsewhere.
    """
    n = A.n
    generators = []
    for i in range(n):
        signs = tuple(-1 if j > i and A.entry(i, j) else 1 for j in range(n))
        generators.append(AffineMap(DyVec.unit(n, i, HALF), IntMatrix.diagonal(signs)))
    return generators


def column_characters(A: BottMatrix) -> List[int]:
    """Per column k, the bitmask of generators i (bit i) that flip coordinate k."""
    return [sum(1 << i for i in range(k) if A.entry(i, k)) for k in range(A.n)]


def torus_rank(A: BottMatrix) -> int:
    """Number of coordinates that no generator conjugates."""
    return sum(1 for c in column_characters(A) if c == 0)


def orientable(A: BottMatrix) -> bool:
    """True iff every lifted generator D_i has determinant 1, i.e. each row of A has an even number of off-diagonal ones."""
    return all(sum(A.entry(i, j) for j in range(i + 1, A.n)) % 2 == 0 for i in range(A.n))


def matrix_conjugacy(A: BottMatrix, A2: BottMatrix, bound: int = DEFAULT_CONJUGACY_BOUND) -> IntMatrix | None:
    """
    Searches P in GL(n, Z) with entries in [-bound, bound] and P A P^-1 = A2.

    Solves P N = N2 P (N = A - I) column by column. Returns None when nothing is
    found inside the box; that says nothing about conjugacy outside it.
    """
    if A.n != A2.n:
        raise ValueError(f"Dimension mismatch: {A.n} vs {A2.n}")
    n = A.n
    if A == A2:
        return IntMatrix.identity(n)

    N = A.nilpotent_part()
    N2 = A2.nilpotent_part()
    for k in range(1, n):
        if np.linalg.matrix_rank(np.linalg.matrix_power(N, k)) != np.linalg.matrix_rank(np.linalg.matrix_power(N2, k)):
            return None

    candidates = np.array(list(itertools.product(range(-bound, bound + 1), repeat=n)), dtype=np.int64)
    candidates = candidates[np.any(candidates != 0, axis=1)]
    images = candidates @ N2.T  # row r is N2 @ candidates[r]
    columns: List[np.ndarray] = []

    def search(k: int) -> np.ndarray | None:
        if k == n:
            P = np.stack(columns, axis=1)
            if round(abs(np.linalg.det(P))) == 1:
                return P
            return None
        # column k of P N is the sum of the earlier columns i with N[i, k] = 1
        target = np.zeros(n, dtype=np.int64)
        for i in range(k):
            if N[i, k]:
                target += columns[i]
        for r in np.nonzero(np.all(images == target, axis=1))[0]:
            columns.append(candidates[r])
            found = search(k + 1)
            columns.pop()
            if found is not None:
                return found
        return None

    P = search(0)
    if P is None:
        return None
    result = IntMatrix.from_numpy(P)
    if not result.is_unimodular():
        return None
    return result


@dataclass(frozen=True)
class LabelTable:
    """Conventional labels (I3, A1, ..., Aa32) keyed to matrix ids for one dimension."""
    n: int
    ids: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.ids.values())) != len(self.ids):
            raise ValueError(f"Label table for n={self.n} maps two labels to one matrix")
        full = 2 ** (self.n * (self.n - 1) // 2)
        if self.ids and len(self.ids) != full:
            raise ValueError(f"Label table for n={self.n} has {len(self.ids)} entries, expected {full}")
        object.__setattr__(self, '_labels', {v: k for k, v in self.ids.items()})

    def label(self, A: BottMatrix) -> str:
        return self._labels.get(A.id, A.compact())

    def matrix(self, label: str) -> BottMatrix:
        if label in self.ids:
            return BottMatrix.from_id(self.n, self.ids[label])
        if label.startswith("n="):
            return parse_compact(label)
        raise ValueError(f"Unknown label '{label}' for n={self.n}")

    def __contains__(self, label: str) -> bool:
        return label in self.ids


def load_label_table(n: int, path: str = LABELS_PATH) -> LabelTable:
    """
    Loads the label table for dimension n from the JSON fixture.

    Args:
        n: Matrix size.
        path: Fixture file mapping labels to strict-upper bit strings, keyed by n.

    Returns:
        The table; empty (compact forms only) if the fixture has no entry for n.

    Raises:
        FileNotFoundError: the fixture file does not exist.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Label fixture not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    entries = data.get(str(n))
    if entries is None:
        logging.debug(f"No labels for n={n} in {path}; using compact forms.")
        return LabelTable(n)
    return LabelTable(n, {label: BottMatrix.from_bits(n, bits).id for label, bits in entries.items()})


def parse_compact(text: str) -> BottMatrix:
    """Parses "n=4;bits=010011"."""
    try:
        parts = dict(part.split("=", 1) for part in text.strip().split(";"))
        return BottMatrix.from_bits(int(parts["n"]), parts["bits"])
    except (KeyError, ValueError) as e:
        raise ValueError(f"Cannot parse compact matrix '{text}': {e}") from e


def parse_matrix(text: str, n: int, labels: LabelTable | None = None) -> BottMatrix:
    """
    Reads a matrix given as a label, a bit string or JSON rows, tried in that order.

    Args:
        text: The user input, e.g. "A7", "110", "n=3;bits=110" or "[[1,1,1],[0,1,0],[0,0,1]]".
        n: Expected dimension.
        labels: Label table for n, if available.

    Returns:
        The matrix.
    """
    text = text.strip()
    if labels is not None and text in labels:
        return labels.matrix(text)
    if text.startswith("n="):
        matrix = parse_compact(text)
    elif text and set(text) <= {"0", "1"} or (text == "" and n == 1):
        matrix = BottMatrix.from_bits(n, text)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValueError(f"'{text}' is not a label, bit string or JSON matrix") from e
        matrix = BottMatrix.from_json(data) if isinstance(data, dict) else BottMatrix.from_rows(data)
    if matrix.n != n:
        raise ValueError(f"Matrix '{text}' has n={matrix.n}, expected {n}")
    return matrix


if __name__ == '__main__':
    for A in enumerate_matrices(3):
        print(A.compact(), "orientable" if orientable(A) else "nonorientable", f"T^{torus_rank(A)}")
