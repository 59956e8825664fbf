"""Exact scalars and rational linear algebra."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weilkit import Matrix, Mode, ModeError, Scalar, qq
from weilkit.exactlin import (
    NO_SOLUTION,
    NOT_UNIQUE,
    hstack,
    kernel_basis,
    solve_affine,
    solve_unique,
    span_contains,
    spans_equal,
    unit_vector,
    vstack,
)

rationals = st.fractions(
    min_value=Fraction(-6), max_value=Fraction(6), max_denominator=5
)


def small_matrix(rows, cols):
    return st.lists(
        st.lists(rationals, min_size=cols, max_size=cols),
        min_size=rows,
        max_size=rows,
    ).map(lambda rs: Matrix([[qq(x) for x in r] for r in rs]))


matrices = st.integers(1, 4).flatmap(
    lambda r: st.integers(1, 4).flatmap(lambda c: small_matrix(r, c))
)


# ----- scalars ----------------------------------------------------------------


def test_scalar_modes_are_kept_apart():
    assert qq(Fraction(1, 3)).mode is Mode.EXACT
    assert Scalar(0.5).mode is Mode.FLOAT
    with pytest.raises(ModeError):
        qq(1) + Scalar(1.0)
    with pytest.raises(ModeError):
        Scalar(2.0).as_fraction()


def test_ints_coerce_into_either_mode():
    assert qq(Fraction(1, 2)) + 1 == qq(Fraction(3, 2))
    assert Scalar(0.5) + 1 == Scalar(1.5)
    assert qq(2) * Fraction(1, 4) == qq(Fraction(1, 2))


def test_scalar_division():
    assert qq(3) / qq(4) == qq(Fraction(3, 4))
    with pytest.raises(ZeroDivisionError):
        qq(1) / qq(0)
    with pytest.raises(ZeroDivisionError):
        qq(0) ** -1


@given(rationals, rationals, rationals)
def test_scalar_field_laws(a, b, c):
    x, y, z = qq(a), qq(b), qq(c)
    assert x + y == y + x
    assert (x + y) + z == x + (y + z)
    assert x * (y + z) == x * y + x * z
    if not y.is_zero:
        assert (x / y) * y == x


# ----- matrices ---------------------------------------------------------------


def test_identity_and_shapes():
    m = Matrix([[qq(1), qq(2)], [qq(3), qq(4)]])
    assert m @ Matrix.identity(2) == m
    assert Matrix.identity(2) @ m == m
    assert (m @ m).rows == 2
    assert Matrix.zeros(0, 3).cols == 3


def test_inverse_frozen():
    m = Matrix([[qq(2), qq(1)], [qq(5), qq(3)]])
    inv = m.inverse()
    assert inv == Matrix([[qq(3), qq(-1)], [qq(-5), qq(2)]])
    assert m @ inv == Matrix.identity(2)


def test_kron_frozen():
    a = Matrix([[qq(1), qq(2)], [qq(0), qq(3)]])
    b = Matrix([[qq(0), qq(1)], [qq(1), qq(0)]])
    k = a.kron(b)
    assert k.rows == 4 and k.cols == 4
    # top-left block is 1*b, top-right is 2*b
    assert k.entries[0][1] == qq(1)
    assert k.entries[0][3] == qq(2)
    assert k.entries[2][2] == qq(0)
    assert k.entries[3][2] == qq(3)


def test_stacking():
    a = Matrix([[qq(1), qq(2)]])
    b = Matrix([[qq(3), qq(4)]])
    assert vstack([a, b]).rows == 2
    assert hstack([a, b]).cols == 4
    with pytest.raises(ValueError):
        vstack([], cols=None)
    assert vstack([], cols=2).cols == 2


@given(matrices)
@settings(max_examples=60)
def test_rank_nullity(m):
    assert m.rank() + len(kernel_basis(m)) == m.cols


@given(matrices)
@settings(max_examples=60)
def test_kernel_vectors_annihilate(m):
    for v in kernel_basis(m):
        assert all(e.is_zero for e in m.apply(v))


@given(matrices, st.lists(rationals, min_size=4, max_size=4))
@settings(max_examples=60)
def test_solve_affine_solutions_solve(m, raw):
    rhs = m.apply(tuple(qq(x) for x in raw[: m.cols]) + tuple(
        qq(0) for _ in range(max(0, m.cols - len(raw)))
    ))
    out = solve_affine(m, rhs)
    assert out is not NO_SOLUTION
    particular, kernel = out
    assert m.apply(particular) == tuple(rhs)
    for v in kernel:
        assert all(e.is_zero for e in m.apply(v))


def test_solve_outcomes_are_values_not_errors():
    singular = Matrix([[qq(1), qq(2)], [qq(2), qq(4)]])
    assert solve_unique(singular, (qq(1), qq(1))) is NO_SOLUTION
    assert solve_unique(singular, (qq(1), qq(2))) is NOT_UNIQUE
    assert solve_affine(singular, (qq(1), qq(1))) is NO_SOLUTION


def test_rank_rejects_float_matrices():
    m = Matrix([[Scalar(1.0)]])
    with pytest.raises(ModeError):
        m.rank()


def test_span_helpers():
    e0 = unit_vector(3, 0)
    e1 = unit_vector(3, 1)
    inside = (qq(2), qq(-1), qq(0))
    outside = (qq(0), qq(0), qq(1))
    assert span_contains([e0, e1], inside)
    assert not span_contains([e0, e1], outside)
    assert spans_equal([e0, e1], [inside, e1])
    assert not spans_equal([e0], [e1])
    assert spans_equal([], [])


@given(matrices)
@settings(max_examples=40)
def test_span_invariant_under_column_mixing(m):
    cols = [m.column(j) for j in range(m.cols)]
    mixed = [tuple(a + b for a, b in zip(cols[0], c)) for c in cols[1:]]
    assert spans_equal(cols, cols[:1] + mixed) or m.cols == 1
