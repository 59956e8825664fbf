"""Exact rational scalars and the dense linear algebra everything else reduces to.

Two scalar modes exist: exact (arbitrary-precision rationals) and float
(doubles, for the analytic primitives).  Mixing them in one operation is a
bug in the caller, so it raises instead of silently promoting.  All
structural decisions (kernels, ranks, solvability) are exact-only.
"""

from __future__ import annotations

import enum
from fractions import Fraction


class Mode(enum.Enum):
    EXACT = "exact"
    FLOAT = "float"


class ModeError(TypeError):
    """Raised when exact and float values meet in one operation."""


class SolveFailure(enum.Enum):
    NO_SOLUTION = "no solution"
    NOT_UNIQUE = "not unique"


NO_SOLUTION = SolveFailure.NO_SOLUTION
NOT_UNIQUE = SolveFailure.NOT_UNIQUE


class Scalar:
    """A rational or a double, tagged so the two never mix silently.

    ints and Fractions coerce to exact mode; Python floats to float mode.
    An int may meet a float Scalar (the conversion is exact), a Fraction
    may not.
    """

    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, Scalar):
            value = value.value
        if isinstance(value, bool):
            raise TypeError("bool is not a scalar")
        if isinstance(value, int):
            value = Fraction(value)
        elif isinstance(value, str):
            value = Fraction(value)
        if not isinstance(value, (Fraction, float)):
            raise TypeError(f"cannot build a Scalar from {type(value).__name__}")
        self.value = value

    @property
    def mode(self) -> Mode:
        return Mode.EXACT if isinstance(self.value, Fraction) else Mode.FLOAT

    @staticmethod
    def exact(value) -> "Scalar":
        if isinstance(value, float):
            raise ModeError("float given where an exact rational is required")
        return Scalar(value)

    @staticmethod
    def from_float(value) -> "Scalar":
        return Scalar(float(value))

    @staticmethod
    def zero(mode: Mode) -> "Scalar":
        return Scalar(Fraction(0)) if mode is Mode.EXACT else Scalar(0.0)

    @staticmethod
    def one(mode: Mode) -> "Scalar":
        return Scalar(Fraction(1)) if mode is Mode.EXACT else Scalar(1.0)

    def _coerced(self, other) -> "Scalar":
        # ints are mode-agnostic; everything else must already match.
        if isinstance(other, int) and not isinstance(other, bool):
            return Scalar(float(other)) if self.mode is Mode.FLOAT else Scalar(other)
        if isinstance(other, Fraction):
            other = Scalar(other)
        elif isinstance(other, float):
            other = Scalar(other)
        if not isinstance(other, Scalar):
            raise TypeError(f"cannot combine Scalar with {type(other).__name__}")
        if other.mode is not self.mode:
            raise ModeError(f"mixed-mode operation: {self!r} with {other!r}")
        return other

    def __add__(self, other):
        other = self._coerced(other)
        return Scalar(self.value + other.value)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerced(other)
        return Scalar(self.value - other.value)

    def __rsub__(self, other):
        other = self._coerced(other)
        return Scalar(other.value - self.value)

    def __mul__(self, other):
        other = self._coerced(other)
        return Scalar(self.value * other.value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerced(other)
        if other.is_zero:
            raise ZeroDivisionError("scalar division by zero")
        return Scalar(self.value / other.value)

    def __rtruediv__(self, other):
        other = self._coerced(other)
        if self.is_zero:
            raise ZeroDivisionError("scalar division by zero")
        return Scalar(other.value / self.value)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("Scalar exponents must be int")
        if n < 0 and self.is_zero:
            raise ZeroDivisionError("zero to a negative power")
        return Scalar(self.value ** n)

    def __neg__(self):
        return Scalar(-self.value)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, float)) and not isinstance(other, bool):
            try:
                other = self._coerced(other)
            except ModeError:
                return False
        if not isinstance(other, Scalar):
            return NotImplemented
        if other.mode is not self.mode:
            return False
        return self.value == other.value

    def __hash__(self):
        return hash(self.value)

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def __bool__(self):
        return not self.is_zero

    def to_float(self) -> "Scalar":
        return Scalar(float(self.value))

    def as_fraction(self) -> Fraction:
        if self.mode is not Mode.EXACT:
            raise ModeError("float Scalar has no exact rational value")
        return self.value

    def __str__(self):
        if self.mode is Mode.EXACT:
            return str(self.value)
        return repr(self.value)

    def __repr__(self):
        return f"Scalar({self})"


def qq(value) -> Scalar:
    """Shorthand for an exact Scalar."""
    return Scalar.exact(value)


def vadd(u, v):
    return tuple(a + b for a, b in zip(u, v, strict=True))


def vsub(u, v):
    return tuple(a - b for a, b in zip(u, v, strict=True))


def vscale(c: Scalar, v):
    return tuple(c * a for a in v)


def zero_vector(n: int, mode: Mode = Mode.EXACT):
    return tuple(Scalar.zero(mode) for _ in range(n))


def unit_vector(n: int, i: int, mode: Mode = Mode.EXACT):
    return tuple(
        Scalar.one(mode) if j == i else Scalar.zero(mode) for j in range(n)
    )


class Matrix:
    """Dense matrix of Scalars, all in one mode.

    Empty matrices (zero rows) are legal but need an explicit column count.
    """

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries, cols: int | None = None):
        rows = []
        for row in entries:
            rows.append(tuple(e if isinstance(e, Scalar) else Scalar(e) for e in row))
        self.entries = tuple(rows)
        self.rows = len(self.entries)
        if self.rows == 0:
            if cols is None:
                raise ValueError("empty matrix needs an explicit column count")
            self.cols = cols
        else:
            self.cols = len(self.entries[0])
            if any(len(r) != self.cols for r in self.entries):
                raise ValueError("ragged rows")
            if cols is not None and cols != self.cols:
                raise ValueError("column count disagrees with the rows")
        mode = self.mode
        for row in self.entries:
            for e in row:
                if e.mode is not mode:
                    raise ModeError("matrix entries mix exact and float modes")

    @property
    def mode(self) -> Mode:
        if self.rows == 0 or self.cols == 0:
            return Mode.EXACT
        return self.entries[0][0].mode

    @staticmethod
    def identity(n: int, mode: Mode = Mode.EXACT) -> "Matrix":
        return Matrix([unit_vector(n, i, mode) for i in range(n)], cols=n)

    @staticmethod
    def zeros(rows: int, cols: int, mode: Mode = Mode.EXACT) -> "Matrix":
        return Matrix([zero_vector(cols, mode) for _ in range(rows)], cols=cols)

    @staticmethod
    def from_columns(columns, rows: int | None = None) -> "Matrix":
        columns = [tuple(c) for c in columns]
        if not columns:
            if rows is None:
                raise ValueError("empty column list needs an explicit row count")
            return Matrix.zeros(rows, 0) if rows else Matrix([], cols=0)
        n = len(columns[0])
        return Matrix([[col[i] for col in columns] for i in range(n)], cols=len(columns))

    def column(self, j: int):
        return tuple(self.entries[i][j] for i in range(self.rows))

    def columns(self):
        return [self.column(j) for j in range(self.cols)]

    def row(self, i: int):
        return self.entries[i]

    def transpose(self) -> "Matrix":
        return Matrix(
            [[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)],
            cols=self.rows,
        )

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch: {self.shape} @ {other.shape}")
        mode = self.mode if self.rows and self.cols else other.mode
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = Scalar.zero(mode)
                for t in range(self.cols):
                    acc = acc + self.entries[i][t] * other.entries[t][j]
                row.append(acc)
            out.append(row)
        return Matrix(out, cols=other.cols)

    def apply(self, vec):
        vec = tuple(vec)
        if len(vec) != self.cols:
            raise ValueError("vector length does not match column count")
        mode = self.mode
        out = []
        for i in range(self.rows):
            acc = Scalar.zero(mode)
            for t in range(self.cols):
                acc = acc + self.entries[i][t] * vec[t]
            out.append(acc)
        return tuple(out)

    def __add__(self, other: "Matrix") -> "Matrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return Matrix(
            [vadd(r, s) for r, s in zip(self.entries, other.entries)], cols=self.cols
        )

    def __sub__(self, other: "Matrix") -> "Matrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return Matrix(
            [vsub(r, s) for r, s in zip(self.entries, other.entries)], cols=self.cols
        )

    def scaled(self, c: Scalar) -> "Matrix":
        return Matrix([vscale(c, r) for r in self.entries], cols=self.cols)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self):
        return hash((self.shape, self.entries))

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols})"

    def pretty(self) -> str:
        cells = [[str(e) for e in row] for row in self.entries]
        width = max((len(c) for row in cells for c in row), default=1)
        return "\n".join(
            "[ " + "  ".join(c.rjust(width) for c in row) + " ]" for row in cells
        )

    def _require_exact(self, what: str):
        if self.mode is not Mode.EXACT:
            raise ModeError(f"{what} requires exact mode; got float entries")

    def rref(self):
        """Reduced row echelon form.  Returns (rows, pivot column list)."""
        self._require_exact("row reduction")
        rows = [list(r) for r in self.entries]
        pivots = []
        r = 0
        for c in range(self.cols):
            if r == len(rows):
                break
            pivot_row = None
            for i in range(r, len(rows)):
                if not rows[i][c].is_zero:
                    pivot_row = i
                    break
            if pivot_row is None:
                continue
            rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
            inv = Scalar.one(Mode.EXACT) / rows[r][c]
            rows[r] = [inv * e for e in rows[r]]
            for i in range(len(rows)):
                if i != r and not rows[i][c].is_zero:
                    f = rows[i][c]
                    rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
            pivots.append(c)
            r += 1
        return [tuple(row) for row in rows], pivots

    def rank(self) -> int:
        _, pivots = self.rref()
        return len(pivots)

    def is_invertible(self) -> bool:
        return self.rows == self.cols and self.rank() == self.rows

    def inverse(self) -> "Matrix":
        self._require_exact("matrix inversion")
        if self.rows != self.cols:
            raise ValueError("only square matrices invert")
        n = self.rows
        aug = Matrix(
            [list(self.entries[i]) + list(unit_vector(n, i)) for i in range(n)],
            cols=2 * n,
        )
        rows, pivots = aug.rref()
        if pivots != list(range(n)):
            raise ValueError("matrix is singular")
        return Matrix([row[n:] for row in rows], cols=n)

    def kron(self, other: "Matrix") -> "Matrix":
        """Kronecker product; block (i,j) is self[i][j] * other."""
        out_rows = self.rows * other.rows
        out_cols = self.cols * other.cols
        if out_rows == 0:
            return Matrix([], cols=out_cols)
        out = []
        for i in range(self.rows):
            for k in range(other.rows):
                row = []
                for j in range(self.cols):
                    for l in range(other.cols):
                        row.append(self.entries[i][j] * other.entries[k][l])
                out.append(row)
        return Matrix(out, cols=out_cols)


def hstack(matrices) -> Matrix:
    matrices = list(matrices)
    rows = matrices[0].rows
    if any(m.rows != rows for m in matrices):
        raise ValueError("row counts differ")
    cols = sum(m.cols for m in matrices)
    if rows == 0:
        return Matrix([], cols=cols)
    return Matrix(
        [sum((list(m.entries[i]) for m in matrices), []) for i in range(rows)],
        cols=cols,
    )


def vstack(matrices, cols: int | None = None) -> Matrix:
    matrices = [m for m in matrices]
    if not matrices:
        if cols is None:
            raise ValueError("empty stack needs an explicit column count")
        return Matrix([], cols=cols)
    width = matrices[0].cols
    if any(m.cols != width for m in matrices):
        raise ValueError("column counts differ")
    entries = []
    for m in matrices:
        entries.extend(m.entries)
    return Matrix(entries, cols=width)


def kernel_basis(m: Matrix):
    """Echelon basis of the right kernel, ordered by free column.

    Exact mode only; every returned vector v satisfies m @ v = 0 and
    rank(m) + len(basis) = m.cols.
    """
    m._require_exact("kernel_basis")
    rows, pivots = m.rref()
    pivot_set = set(pivots)
    free = [c for c in range(m.cols) if c not in pivot_set]
    basis = []
    for f in free:
        v = [Scalar.zero(Mode.EXACT)] * m.cols
        v[f] = Scalar.one(Mode.EXACT)
        for r, p in enumerate(pivots):
            v[p] = -rows[r][f]
        basis.append(tuple(v))
    return basis


def solve_unique(m: Matrix, rhs):
    """Solve m x = rhs expecting exactly one solution.

    Returns the solution vector, or NO_SOLUTION / NOT_UNIQUE as ordinary
    values; the caller decides which outcomes are errors.
    """
    m._require_exact("solve_unique")
    rhs = tuple(e if isinstance(e, Scalar) else Scalar(e) for e in rhs)
    if len(rhs) != m.rows:
        raise ValueError("right-hand side length does not match row count")
    out = solve_affine(m, rhs)
    if out is NO_SOLUTION:
        return NO_SOLUTION
    particular, homogeneous = out
    if homogeneous:
        return NOT_UNIQUE
    return particular


def solve_affine(m: Matrix, rhs):
    """General exact solve: (particular solution, kernel basis) or NO_SOLUTION."""
    m._require_exact("solve_affine")
    rhs = tuple(e if isinstance(e, Scalar) else Scalar(e) for e in rhs)
    if m.rows == 0:
        return zero_vector(m.cols), kernel_basis(m)
    aug = Matrix(
        [list(m.entries[i]) + [rhs[i]] for i in range(m.rows)], cols=m.cols + 1
    )
    rows, pivots = aug.rref()
    if m.cols in pivots:
        return NO_SOLUTION
    particular = [Scalar.zero(Mode.EXACT)] * m.cols
    for r, p in enumerate(pivots):
        particular[p] = rows[r][m.cols]
    return tuple(particular), kernel_basis(m)


def solve_matrix(m: Matrix, rhs: Matrix):
    """Solve m X = rhs column by column, expecting uniqueness throughout."""
    cols = []
    for j in range(rhs.cols):
        x = solve_unique(m, rhs.column(j))
        if isinstance(x, SolveFailure):
            return x
        cols.append(x)
    return Matrix.from_columns(cols, rows=m.cols)


def span_contains(basis, vector) -> bool:
    """Does the exact span of `basis` contain `vector`?"""
    if not basis:
        return all(e.is_zero for e in vector)
    m = Matrix.from_columns(basis)
    return solve_affine(m, vector) is not NO_SOLUTION


def spans_equal(basis_a, basis_b) -> bool:
    """Do two exact vector lists span the same subspace?"""
    if not basis_a and not basis_b:
        return True
    n = len(basis_a[0]) if basis_a else len(basis_b[0])
    ma = Matrix(basis_a, cols=n)
    mb = Matrix(basis_b, cols=n)
    ra = ma.rank()
    rb = mb.rank()
    if ra != rb:
        return False
    joint = vstack([ma, mb], cols=n)
    return joint.rank() == ra
