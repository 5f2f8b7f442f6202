"""
Exact affine motions of R^n.

Translation parts are dyadic rationals (power-of-two denominators) and linear
parts are integer matrices, so every composition, inverse and action is exact.
"""
import functools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np
import sympy

_DYADIC_POWER_RE = re.compile(r"^\s*([+-]?\d+)\s*/\s*2\s*\^\s*(\d+)\s*$")


@functools.total_ordering
@dataclass(frozen=True)
class Dyadic:
    """A rational number numerator / 2**exponent kept in lowest terms."""
    value: Fraction

    def __post_init__(self):
        value = Fraction(self.value)
        denominator = value.denominator
        if denominator & (denominator - 1):
            raise ValueError(f"{value} is not a dyadic rational")
        object.__setattr__(self, 'value', value)

    @property
    def numerator(self) -> int:
        return self.value.numerator

    @property
    def exponent(self) -> int:
        return self.value.denominator.bit_length() - 1

    def is_integer(self) -> bool:
        return self.value.denominator == 1

    def floor(self) -> int:
        return math.floor(self.value)

    def frac(self) -> "Dyadic":
        """Representative of the value modulo 1, in [0, 1)."""
        return Dyadic(self.value - math.floor(self.value))

    def __add__(self, other):
        return Dyadic(self.value + to_dyadic(other).value)

    __radd__ = __add__

    def __sub__(self, other):
        return Dyadic(self.value - to_dyadic(other).value)

    def __rsub__(self, other):
        return Dyadic(to_dyadic(other).value - self.value)

    def __mul__(self, other):
        return Dyadic(self.value * to_dyadic(other).value)

    __rmul__ = __mul__

    def __neg__(self):
        return Dyadic(-self.value)

    def __eq__(self, other):
        if isinstance(other, Dyadic):
            return self.value == other.value
        if isinstance(other, (int, Fraction)):
            return self.value == other
        return NotImplemented

    def __lt__(self, other):
        return self.value < to_dyadic(other).value

    def __hash__(self):
        return hash(self.value)

    def __str__(self):
        if self.is_integer():
            return str(self.numerator)
        return f"{self.value.numerator}/{self.value.denominator}"

    def __repr__(self):
        return f"Dyadic({self})"


def to_dyadic(x) -> Dyadic:
    """Coerces an int, Fraction, Dyadic or text form ("3", "1/4", "-3/2^3") to a Dyadic."""
    if isinstance(x, Dyadic):
        return x
    if isinstance(x, bool):
        raise ValueError(f"Not a dyadic value: {x!r}")
    if isinstance(x, (int, Fraction, np.integer)):
        return Dyadic(Fraction(int(x)) if isinstance(x, np.integer) else Fraction(x))
    if isinstance(x, str):
        return parse_dyadic(x)
    raise ValueError(f"Not a dyadic value: {x!r}")


def parse_dyadic(text: str) -> Dyadic:
    """
    Parses the text form of a dyadic rational.

    Args:
        text: "p/q" with q a power of two, "p/2^k", or an integer.

    Returns:
        The normalized Dyadic.

    Raises:
        ValueError: the text is not a number or the denominator is not a power of two.
    """
    match = _DYADIC_POWER_RE.match(text)
    if match:
        return Dyadic(Fraction(int(match.group(1)), 2 ** int(match.group(2))))
    try:
        return Dyadic(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"Cannot parse dyadic value '{text}': {e}") from e


ZERO = Dyadic(Fraction(0))
HALF = Dyadic(Fraction(1, 2))


@dataclass(frozen=True)
class DyVec:
    entries: Tuple[Dyadic, ...]

    def __post_init__(self):
        object.__setattr__(self, 'entries', tuple(to_dyadic(x) for x in self.entries))

    @classmethod
    def of(cls, values: Iterable) -> "DyVec":
        return cls(tuple(values))

    @classmethod
    def zeros(cls, n: int) -> "DyVec":
        return cls((ZERO,) * n)

    @classmethod
    def unit(cls, n: int, i: int, scale=1) -> "DyVec":
        """scale * e_i (0-based i)."""
        scale = to_dyadic(scale)
        return cls(tuple(scale if j == i else ZERO for j in range(n)))

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self) -> Iterator[Dyadic]:
        return iter(self.entries)

    def __getitem__(self, index: int) -> Dyadic:
        return self.entries[index]

    def _check_dim(self, other: "DyVec"):
        if self.dim != other.dim:
            raise ValueError(f"Dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: "DyVec") -> "DyVec":
        self._check_dim(other)
        return DyVec(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "DyVec") -> "DyVec":
        self._check_dim(other)
        return DyVec(tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> "DyVec":
        return DyVec(tuple(-a for a in self.entries))

    def scale(self, k) -> "DyVec":
        k = to_dyadic(k)
        return DyVec(tuple(k * a for a in self.entries))

    def is_integral(self) -> bool:
        return all(a.is_integer() for a in self.entries)

    def to_ints(self) -> Tuple[int, ...]:
        if not self.is_integral():
            raise ValueError(f"{self} has non-integer entries")
        return tuple(a.numerator for a in self.entries)

    def mod_one(self) -> "DyVec":
        return DyVec(tuple(a.frac() for a in self.entries))

    def to_json(self) -> List[str]:
        return [str(a) for a in self.entries]

    @classmethod
    def from_json(cls, data: Sequence) -> "DyVec":
        return cls(tuple(to_dyadic(x) for x in data))

    def __str__(self):
        return "(" + ", ".join(str(a) for a in self.entries) + ")"


@functools.lru_cache(maxsize=4096)
def _exact_det(rows: Tuple[Tuple[int, ...], ...]) -> int:
    return int(sympy.Matrix(rows).det())


@functools.lru_cache(maxsize=4096)
def _exact_inverse(rows: Tuple[Tuple[int, ...], ...]) -> Tuple[Tuple[int, ...], ...]:
    inverse = sympy.Matrix(rows).inv()
    return tuple(tuple(int(inverse[i, j]) for j in range(len(rows))) for i in range(len(rows)))


@dataclass(frozen=True)
class IntMatrix:
    rows: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.rows)
        if any(len(row) != len(rows) for row in rows):
            raise ValueError(f"Matrix must be square, got rows of lengths {[len(r) for r in rows]}")
        object.__setattr__(self, 'rows', rows)

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def diagonal(cls, entries: Sequence[int]) -> "IntMatrix":
        n = len(entries)
        return cls(tuple(tuple(entries[i] if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def from_numpy(cls, array: np.ndarray) -> "IntMatrix":
        return cls(tuple(tuple(int(x) for x in row) for row in array.tolist()))

    @property
    def dim(self) -> int:
        return len(self.rows)

    def to_numpy(self) -> np.ndarray:
        return np.array(self.rows, dtype=np.int64).reshape(self.dim, self.dim)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.dim != other.dim:
            raise ValueError(f"Dimension mismatch: {self.dim} vs {other.dim}")
        n = self.dim
        return IntMatrix(tuple(
            tuple(sum(self.rows[i][k] * other.rows[k][j] for k in range(n)) for j in range(n))
            for i in range(n)))

    def apply(self, vec: DyVec) -> DyVec:
        if self.dim != vec.dim:
            raise ValueError(f"Dimension mismatch: matrix {self.dim} vs vector {vec.dim}")
        out = []
        for row in self.rows:
            acc = ZERO
            for coefficient, x in zip(row, vec.entries):
                if coefficient:
                    acc = acc + x * coefficient
            out.append(acc)
        return DyVec(tuple(out))

    def det(self) -> int:
        if self.dim == 0:
            return 1
        return _exact_det(self.rows)

    def is_unimodular(self) -> bool:
        return self.det() in (1, -1)

    def inverse(self) -> "IntMatrix":
        if not self.is_unimodular():
            raise ValueError(f"Linear part {self.rows} is not unimodular (det {self.det()})")
        if self.is_diagonal():
            # +-1 diagonals are involutions
            return self
        return IntMatrix(_exact_inverse(self.rows))

    def is_diagonal(self) -> bool:
        return all(x == 0 for i, row in enumerate(self.rows) for j, x in enumerate(row) if i != j)

    def diagonal_entries(self) -> Tuple[int, ...]:
        return tuple(self.rows[i][i] for i in range(self.dim))

    def to_json(self) -> List[List[int]]:
        return [list(row) for row in self.rows]


@dataclass(frozen=True)
class AffineMap:
    """The motion x -> linear @ x + translation."""
    translation: DyVec
    linear: IntMatrix

    def __post_init__(self):
        if self.translation.dim != self.linear.dim:
            raise ValueError(
                f"Dimension mismatch: translation {self.translation.dim} vs linear {self.linear.dim}")

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls(DyVec.zeros(n), IntMatrix.identity(n))

    @classmethod
    def pure_translation(cls, vec: DyVec) -> "AffineMap":
        return cls(vec, IntMatrix.identity(vec.dim))

    @property
    def dim(self) -> int:
        return self.linear.dim

    def to_json(self) -> dict:
        return {"b": self.translation.to_json(), "B": self.linear.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "AffineMap":
        try:
            return cls(DyVec.from_json(data["b"]), IntMatrix(tuple(tuple(r) for r in data["B"])))
        except KeyError as e:
            raise ValueError(f"Affine map JSON is missing key {e}") from e
        except TypeError as e:
            raise ValueError(f"Affine map JSON is malformed: {e}") from e


def apply(f: AffineMap, x: DyVec) -> DyVec:
    """Image of the point x under f."""
    if f.dim != x.dim:
        raise ValueError(f"Dimension mismatch: map {f.dim} vs point {x.dim}")
    return f.linear.apply(x) + f.translation


def compose(f: AffineMap, g: AffineMap) -> AffineMap:
    """
    Composition f o g, i.e. first g then f.

    With f = (s, M) and g = (t, N) the result is (M t + s, M N).
    """
    if f.dim != g.dim:
        raise ValueError(f"Dimension mismatch: {f.dim} vs {g.dim}")
    return AffineMap(f.linear.apply(g.translation) + f.translation, f.linear @ g.linear)


def inverse(f: AffineMap) -> AffineMap:
    """
    Inverse of an affine map with unimodular linear part.

    Args:
        f: The map (b, B).

    Returns:
        (-B^-1 b, B^-1).

    Raises:
        ValueError: B is not invertible over the integers.
    """
    linear_inverse = f.linear.inverse()
    return AffineMap(-linear_inverse.apply(f.translation), linear_inverse)


def decompose(f: AffineMap) -> Tuple[IntMatrix, DyVec]:
    """Splits f into its linear (rotational) part and its translation part."""
    return f.linear, f.translation


def conjugate(gamma: AffineMap, f: AffineMap) -> AffineMap:
    """gamma o f o gamma^-1."""
    return compose(compose(gamma, f), inverse(gamma))


if __name__ == '__main__':
    g1 = AffineMap(DyVec.unit(3, 0, HALF), IntMatrix.diagonal((1, 1, -1)))
    g3 = AffineMap(DyVec.unit(3, 2, HALF), IntMatrix.identity(3))
    print(f"g1 o g3 = {compose(g1, g3).to_json()}")
    print(f"g1 o g1 = {compose(g1, g1).to_json()}")
