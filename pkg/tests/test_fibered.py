"""Projections, vertical fibers, and the checks built on them."""

import random
from fractions import Fraction

import pytest

from weilkit import (
    DiagramInWeil,
    FiberedError,
    FiberedMorphism,
    FiberedObject,
    InfinitesimalArrow,
    Mode,
    WeilMorphism,
    WeilPoint,
    check_fibered_microlinear,
    check_vertical_equalizer,
    check_vertical_left_exact,
    check_vertical_microlinearity,
    dual_numbers,
    fibered_exponential_pullback,
    fibered_suite,
    first_order_infinitesimals,
    jet_line,
    parse_map,
    qq,
    sphere_distance,
    vertical_fiber,
    vertical_functor_on_morphism,
    vertical_membership,
    vertical_suite,
)
from weilkit.fibered import (
    _broken_pullback_cone,
    _projection_pullback_cone,
    arrow_weil_functor,
    vertical_space_basis,
)
from weilkit.smooth import apply_map
from weilkit.weil import DiagramError, limit_cone


# ----- fibered objects -------------------------------------------------------


def test_from_text_round_trip():
    p = FiberedObject.from_text("fibered sphere(x,y,z) -> (x^2+y^2+z^2)")
    assert p.total_dim == 3 and p.base_dim == 1
    assert not p.is_linear
    again = FiberedObject.from_text(p.to_text())
    assert again.to_text() == p.to_text()


def test_declared_dimensions_must_match_the_map():
    grow = parse_map("map g(u) -> (u, u)")
    with pytest.raises(FiberedError):
        FiberedObject(2, 2, grow)
    with pytest.raises(FiberedError):
        FiberedObject(1, 1, grow)
    assert FiberedObject.from_map(grow).base_dim == 2


def test_coordinate_projection_is_linear():
    p = FiberedObject.coordinate_projection(3, 1)
    assert p.is_linear
    assert p.linear_rows() == [[Fraction(1), Fraction(0), Fraction(0)]]


def test_morphism_square_must_commute():
    p = FiberedObject.identity(1)
    q = FiberedObject.identity(1)
    top = parse_map("map t(u) -> (u + 1)")
    bottom = parse_map("map b(u) -> (u)")
    with pytest.raises(FiberedError):
        FiberedMorphism(p, q, top, bottom)
    ok = FiberedMorphism(p, q, top, parse_map("map b(u) -> (u + 1)"))
    assert ok.compose(FiberedMorphism.identity(p)).source is p


def test_lifting_needs_polynomial_projections():
    p = FiberedObject.from_text("fibered t(x) -> (exp(x))")
    with pytest.raises(FiberedError):
        arrow_weil_functor(dual_numbers(), p)


def test_lifted_projection_dimensions():
    w = first_order_infinitesimals(2)
    p = sphere_distance()
    lifted = arrow_weil_functor(w, p)
    assert lifted.total_dim == 3 * w.dimension
    assert lifted.base_dim == 1 * w.dimension


# ----- verticality -------------------------------------------------------------


def test_vertical_membership_trio():
    d = dual_numbers()
    p = FiberedObject.coordinate_projection(2, 1)
    x = d.basis_element(1)
    vertical = WeilPoint(d, [d.scalar(qq(3)), d.scalar(qq(5)) + x])
    tilted = WeilPoint(d, [d.scalar(qq(3)) + x, d.scalar(qq(5))])
    assert vertical_membership(p, d, vertical)
    assert not vertical_membership(p, d, tilted)
    base_only = WeilPoint.from_scalars(d, [Fraction(3), Fraction(5)])
    assert vertical_membership(p, d, base_only)


def test_vertical_space_basis_blocks_projected_nilpotents():
    d = dual_numbers()
    p = FiberedObject.coordinate_projection(2, 1)
    basis = vertical_space_basis(p, d)
    # flat layout (c0.1, c0.x, c1.1, c1.x): only the projected coordinate's
    # nilpotent slot is constrained away, units stay free
    assert len(basis) == 3
    assert all(v[1].is_zero for v in basis)


def test_sphere_fiber_frozen():
    fib = vertical_fiber(sphere_distance(), dual_numbers(), (qq(1), qq(0), qq(0)))
    assert fib.regular and fib.consistent
    assert fib.jacobian_rank == 1
    assert fib.dimension == 2
    kernel = [[e.value for e in v] for v in fib.kernel]
    assert kernel == [[0, 1, 0], [0, 0, 1]]
    # fiber points satisfy the defining equation exactly
    x = fib.point((qq(2), qq(-7)))
    assert vertical_membership(sphere_distance(), dual_numbers(), x)


def test_identity_fiber_is_a_single_point():
    fib = vertical_fiber(FiberedObject.identity(2), dual_numbers(), (qq(4), qq(5)))
    assert fib.dimension == 0
    assert fib.origin is not None
    assert fib.origin.base() == (qq(4), qq(5))


def test_higher_order_fiber_has_one_parameter_per_degree():
    fib = vertical_fiber(
        FiberedObject.coordinate_projection(2, 1), jet_line(2), (qq(0), qq(0))
    )
    assert fib.dimension == 2
    assert [d for d, *_ in fib.per_degree] == [1, 2]


def test_irregular_point_is_flagged():
    fib = vertical_fiber(sphere_distance(), dual_numbers(), (qq(0), qq(0), qq(0)))
    assert not fib.regular
    assert fib.jacobian_rank == 0


def test_inconsistent_fiber_equations_raise():
    # the second output sees the square of a degree-1 displacement, which
    # no degree-2 correction along the one-column jacobian can cancel
    p = FiberedObject.from_text("fibered f(x,y) -> (x, y^2)")
    fib = vertical_fiber(p, jet_line(2), (qq(0), qq(0)))
    assert not fib.regular
    with pytest.raises(FiberedError, match="degree 2"):
        fib.point((qq(1), qq(0)))


def test_float_input_rejected():
    with pytest.raises(FiberedError):
        vertical_fiber(sphere_distance(), dual_numbers(), (1.0, 0.0, 0.0))


# ----- the vertical functor ------------------------------------------------------


def test_vertical_functor_rejects_non_vertical_points():
    d = dual_numbers()
    p = FiberedObject.coordinate_projection(2, 1)
    m = FiberedMorphism.identity(p)
    tilted = WeilPoint(d, [d.scalar(qq(1)) + d.basis_element(1), d.scalar(qq(0))])
    with pytest.raises(FiberedError):
        vertical_functor_on_morphism(m, d, tilted)


def test_vertical_functor_transports_fibers():
    d = dual_numbers()
    p = FiberedObject.coordinate_projection(2, 1)
    q = FiberedObject.coordinate_projection(2, 1)
    top = parse_map("map t(a, b) -> (a, 3*b)")
    bottom = parse_map("map bt(s) -> (s)")
    m = FiberedMorphism(p, q, top, bottom)
    x = WeilPoint(d, [d.scalar(qq(2)), d.scalar(qq(1)) + d.basis_element(1)])
    y = vertical_functor_on_morphism(m, d, x)
    assert vertical_membership(q, d, y)
    assert y.coords[1] == d.scalar(qq(3)) + d.basis_element(1).scaled(qq(3))


def test_vertical_equalizer_report():
    p = FiberedObject.coordinate_projection(3, 1)
    rep = check_vertical_equalizer(p, first_order_infinitesimals(2), samples=8, seed=5)
    assert rep.ok, rep.render()


# ----- diagram-level checks -------------------------------------------------------


def test_left_exact_on_the_pullback_cone():
    v = check_vertical_left_exact(_projection_pullback_cone(), dual_numbers())
    assert v.ok and v.exactness == "exact"


def test_left_exact_refuses_the_broken_cone():
    v = check_vertical_left_exact(_broken_pullback_cone(), dual_numbers())
    assert not v.ok


def test_fibered_microlinear_conjunction():
    rng = random.Random(13)
    from weilkit.corpus import random_limit_cone

    cone = random_limit_cone(rng)
    v = check_fibered_microlinear(
        FiberedObject.coordinate_projection(2, 1), cone, samples=4, seed=3
    )
    assert v.ok, v.certificate


def test_vertical_microlinearity_linear_is_exact():
    d = dual_numbers()
    cone = limit_cone(DiagramInWeil((d,), ()))
    v = check_vertical_microlinearity(
        FiberedObject.coordinate_projection(3, 1), cone, (qq(0), qq(1), qq(2))
    )
    assert v.ok and v.exactness == "exact"


def test_vertical_microlinearity_sphere_is_graded():
    d = dual_numbers()
    cone = limit_cone(DiagramInWeil((d,), ()))
    v = check_vertical_microlinearity(
        sphere_distance(), cone, (qq(1), qq(0), qq(0))
    )
    assert v.ok and v.exactness == "graded"


def test_vertical_microlinearity_guards_the_cone():
    d = dual_numbers()
    with pytest.raises(DiagramError):
        check_vertical_microlinearity(
            FiberedObject.identity(1), DiagramInWeil((d,), ()), (qq(0),)
        )


# ----- exponential pullback -------------------------------------------------------


def test_exponential_pullback_frozen_instance():
    p = FiberedObject.coordinate_projection(2, 1)
    theta = InfinitesimalArrow.identity(dual_numbers("q"))
    rep = fibered_exponential_pullback(
        p, theta, dual_numbers(), jet_line(2, "z"), samples=4, seed=9
    )
    assert rep.ok, rep.render()


def test_exponential_pullback_needs_a_linear_surjection():
    theta = InfinitesimalArrow.identity(dual_numbers("q"))
    with pytest.raises(FiberedError):
        fibered_exponential_pullback(
            sphere_distance(), theta, dual_numbers(), dual_numbers("y")
        )


# ----- suites ---------------------------------------------------------------------


def test_fibered_suite_green():
    rep = fibered_suite(seed=1, samples=6)
    assert rep.ok, rep.render()


def test_fibered_suite_negative_controls():
    rep = fibered_suite(seed=1, samples=6, negative_controls=True)
    assert rep.ok, rep.render()


def test_vertical_suite_green():
    rep = vertical_suite(seed=1, samples=6)
    assert rep.ok, rep.render()


def test_vertical_suite_negative_controls():
    rep = vertical_suite(seed=1, samples=6, negative_controls=True)
    assert rep.ok, rep.render()
