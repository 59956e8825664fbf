"""Applying a Weil functor to a smooth map: exact higher-order forward AD.

A point of the lifted space R^n ^ W is n coordinates, each an element of W.
Evaluating a map body on such coordinates truncates its Taylor expansion at
the nilpotency degree of W: polynomial operations are literal, division is
a finite geometric series (the denominator needs an invertible scalar
part), and transcendental calls sum the classical series against the
nilpotent part, which only makes sense in float mode.

The same tree walker drives three element types: plain algebra elements,
two-level nested elements (a functor applied after another functor), and
symbolic elements whose coefficients are polynomials in the input
coordinates (these materialize the lifted map as a new SmoothMap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .exactlin import Mode, ModeError, Scalar
from .expr import (
    Expr,
    NonPolynomialError,
    SmoothMap,
    poly_add,
    poly_const,
    poly_is_constant,
    poly_mul,
    poly_scale,
    poly_sub,
    poly_to_expr,
    poly_var,
    serialize_expression,
)
from .reports import Verdict
from .weil import (
    WeilAlgebra,
    WeilElement,
    WeilMorphism,
    jet_line,
    make_presented,
    terminal,
)


class EvaluationError(ValueError):
    """A map body cannot be evaluated on the given lifted coordinates."""


# ----- points --------------------------------------------------------------


@dataclass(frozen=True)
class WeilPoint:
    """A tuple of coordinates in one algebra: a point of R^n ^ W."""

    algebra: WeilAlgebra
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        for c in self.coords:
            if not isinstance(c, WeilElement) or c.algebra != self.algebra:
                raise ValueError("coordinates must all live in the stated algebra")
        modes = {c.mode for c in self.coords}
        if len(modes) > 1:
            raise ModeError("point coordinates mix exact and float modes")

    @staticmethod
    def from_scalars(algebra: WeilAlgebra, values, mode: Mode = Mode.EXACT):
        """Embed ordinary numbers along the unit (zero nilpotent part)."""
        coords = []
        for v in values:
            if mode is Mode.FLOAT:
                coords.append(algebra.scalar(float(v)))
            else:
                coords.append(algebra.scalar(Scalar.exact(v)))
        return WeilPoint(algebra, coords)

    @property
    def mode(self) -> Mode:
        return self.coords[0].mode if self.coords else Mode.EXACT

    @property
    def arity(self) -> int:
        return len(self.coords)

    def base(self):
        """The underlying ordinary point: all augmentations."""
        return tuple(c.augmentation() for c in self.coords)

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coords) + ")"


def project_to_base(point: WeilPoint) -> WeilPoint:
    """Collapse nilpotents: the canonical projection onto ordinary points."""
    return WeilPoint.from_scalars(
        terminal(),
        [s.value for s in point.base()],
        point.mode,
    )


def embed_base(point: WeilPoint, algebra: WeilAlgebra) -> WeilPoint:
    """Re-embed the underlying ordinary point into a (possibly different) algebra."""
    return WeilPoint.from_scalars(algebra, [s.value for s in point.base()], point.mode)


def apply_morphism(phi: WeilMorphism, point: WeilPoint) -> WeilPoint:
    """Coordinatewise action of an algebra map: the reparametrization R^n ^ phi."""
    if point.algebra != phi.source:
        raise ValueError("point does not live over the morphism's source")
    return WeilPoint(phi.target, [phi.apply(c) for c in point.coords])


# ----- the generic tree walker ----------------------------------------------

_CALL_OPS = ("exp", "log", "sin", "cos", "sqrt")


def lift_eval(expr: Expr, values, template=None, var_names=None):
    """Evaluate an expression on ring elements (truncated Taylor semantics).

    values[i] feeds variable i; template supplies the ring when there are
    no variables at all.  Any element type with +, -, *, like(),
    scalar_part(), nilpotency_bound(), and invert() works.
    """
    if template is None:
        if not values:
            raise ValueError("need a template element when there are no values")
        template = values[0]
    names = list(var_names) if var_names else [f"x{i}" for i in range(len(values))]

    def describe(node):
        return serialize_expression(node, names)

    def run(node):
        op = node.op
        if op == "const":
            return template.like(node.value)
        if op == "var":
            return values[node.value]
        if op == "add":
            return run(node.args[0]) + run(node.args[1])
        if op == "sub":
            return run(node.args[0]) - run(node.args[1])
        if op == "mul":
            return run(node.args[0]) * run(node.args[1])
        if op == "div":
            num = run(node.args[0])
            den = run(node.args[1])
            try:
                return num * den.invert()
            except ZeroDivisionError as exc:
                raise EvaluationError(
                    f"denominator is not invertible in {describe(node)}: {exc}"
                ) from None
        if op == "intpow":
            base = run(node.args[0])
            n = node.value
            if n < 0:
                try:
                    base = base.invert()
                except ZeroDivisionError as exc:
                    raise EvaluationError(
                        f"negative power of a non-invertible value in "
                        f"{describe(node)}: {exc}"
                    ) from None
                n = -n
            out = base.like(1)
            b = base
            k = n
            while k:
                if k & 1:
                    out = out * b
                b = b * b if k > 1 else b
                k >>= 1
            return out
        if op in _CALL_OPS:
            return _taylor_call(op, run(node.args[0]), describe(node))
        raise ValueError(f"unknown node {op!r}")

    return run(expr)


def _series_coefficients(op: str, a: float, count: int):
    if op == "exp":
        e = math.exp(a)
        out = [e]
        for j in range(1, count):
            out.append(out[-1] / j)
        return out
    if op == "log":
        if a <= 0.0:
            raise EvaluationError(f"log() needs a positive scalar part, got {a!r}")
        out = [math.log(a)]
        for j in range(1, count):
            out.append((-1.0) ** (j - 1) / (j * a**j))
        return out
    if op == "sin":
        cycle = (math.sin(a), math.cos(a), -math.sin(a), -math.cos(a))
    elif op == "cos":
        cycle = (math.cos(a), -math.sin(a), -math.cos(a), math.sin(a))
    elif op == "sqrt":
        if a <= 0.0:
            raise EvaluationError(f"sqrt() needs a positive scalar part, got {a!r}")
        out = [math.sqrt(a)]
        for j in range(1, count):
            out.append(out[-1] * (1.5 - j) / (j * a))
        return out
    else:
        raise ValueError(op)
    out = []
    fact = 1.0
    for j in range(count):
        if j:
            fact *= j
        out.append(cycle[j % 4] / fact)
    return out


def _taylor_call(op: str, x, where: str):
    if getattr(x, "symbolic", False):
        raise NonPolynomialError(f"{op}() cannot appear in a symbolic lift: {where}")
    s = x.scalar_part()
    if s.mode is not Mode.FLOAT:
        raise ModeError(
            f"{op}() has no exact rational value; evaluate in float mode ({where})"
        )
    coeffs = _series_coefficients(op, s.value, x.nilpotency_bound())
    n = x - x.like(s)
    acc = x.like(coeffs[0])
    power = None
    for j in range(1, len(coeffs)):
        power = n if power is None else power * n
        if coeffs[j] != 0.0:
            acc = acc + x.like(coeffs[j]) * power
    return acc


def geometric_invert(x):
    """(s + n)^-1 as a finite series; s = scalar part must be nonzero."""
    s = x.scalar_part()
    if s.is_zero:
        raise ZeroDivisionError("zero scalar part")
    inv = Scalar.one(s.mode) / s
    m = (x - x.like(s)) * x.like(-inv)
    acc = x.like(1)
    power = None
    for _ in range(1, x.nilpotency_bound()):
        power = m if power is None else power * m
        acc = acc + power
    return acc * x.like(inv)


def apply_map(f: SmoothMap, point: WeilPoint) -> WeilPoint:
    """The lifted map on points: each body evaluated on the coordinates."""
    if f.arity_in != point.arity:
        raise ValueError(
            f"map takes {f.arity_in} inputs, point has {point.arity} coordinates"
        )
    template = point.algebra.one(point.mode)
    out = [
        lift_eval(b, list(point.coords), template=template, var_names=f.var_names)
        for b in f.bodies
    ]
    return WeilPoint(point.algebra, out)


def evaluate_at_scalars(f: SmoothMap, values, mode: Mode = Mode.EXACT):
    """Ordinary evaluation, as the lift over the one-dimensional algebra."""
    point = WeilPoint.from_scalars(terminal(), values, mode)
    return [c.coeffs[0] for c in apply_map(f, point).coords]


# ----- nested elements -------------------------------------------------------


class NestedElement:
    """An element of (R ^ W_inner) ^ W_outer: an outer vector of inner elements.

    Multiplication convolves along the outer structure constants while the
    coefficient products happen inside the inner algebra; this is the
    "apply one functor after the other" route, deliberately separate from
    collapsing to the tensor algebra first.
    """

    __slots__ = ("inner_algebra", "outer_algebra", "coeffs")

    def __init__(self, inner_algebra, outer_algebra, coeffs):
        coeffs = tuple(coeffs)
        if len(coeffs) != outer_algebra.dimension:
            raise ValueError("one inner element per outer basis vector")
        for c in coeffs:
            if not isinstance(c, WeilElement) or c.algebra != inner_algebra:
                raise ValueError("coefficients must live in the inner algebra")
        modes = {c.mode for c in coeffs}
        if len(modes) > 1:
            raise ModeError("nested coefficients mix exact and float modes")
        self.inner_algebra = inner_algebra
        self.outer_algebra = outer_algebra
        self.coeffs = coeffs

    @property
    def mode(self) -> Mode:
        return self.coeffs[0].mode

    def _peer(self, other):
        if (
            not isinstance(other, NestedElement)
            or other.inner_algebra != self.inner_algebra
            or other.outer_algebra != self.outer_algebra
        ):
            raise ValueError("nested elements live over different algebra pairs")

    def __add__(self, other):
        self._peer(other)
        return NestedElement(
            self.inner_algebra,
            self.outer_algebra,
            [a + b for a, b in zip(self.coeffs, other.coeffs)],
        )

    def __sub__(self, other):
        self._peer(other)
        return NestedElement(
            self.inner_algebra,
            self.outer_algebra,
            [a - b for a, b in zip(self.coeffs, other.coeffs)],
        )

    def __neg__(self):
        return NestedElement(
            self.inner_algebra, self.outer_algebra, [-a for a in self.coeffs]
        )

    def __mul__(self, other):
        self._peer(other)
        mode = self.mode
        out = [self.inner_algebra.zero(mode)] * self.outer_algebra.dimension
        for i, a in enumerate(self.coeffs):
            if a.is_zero:
                continue
            for j, b in enumerate(other.coeffs):
                if b.is_zero:
                    continue
                ab = a * b
                for k, c in enumerate(self.outer_algebra.structure_vector(i, j)):
                    if not c.is_zero:
                        cv = c if mode is Mode.EXACT else c.to_float()
                        out[k] = out[k] + ab.scaled(cv)
        return NestedElement(self.inner_algebra, self.outer_algebra, out)

    def like(self, value):
        if isinstance(value, Scalar):
            value = value.value
        mode = self.mode
        unit = (
            self.inner_algebra.scalar(float(value))
            if mode is Mode.FLOAT
            else self.inner_algebra.scalar(Scalar.exact(value))
        )
        zero = self.inner_algebra.zero(mode)
        coeffs = [unit] + [zero] * (self.outer_algebra.dimension - 1)
        return NestedElement(self.inner_algebra, self.outer_algebra, coeffs)

    def scalar_part(self) -> Scalar:
        mode = self.mode
        acc = Scalar.zero(mode)
        for lam, c in zip(self.outer_algebra.aug_covector, self.coeffs):
            if not lam.is_zero:
                lv = lam if mode is Mode.EXACT else lam.to_float()
                acc = acc + lv * c.augmentation()
        return acc

    def nilpotency_bound(self) -> int:
        return (
            self.inner_algebra.nilpotency_degree
            + self.outer_algebra.nilpotency_degree
            - 1
        )

    def invert(self):
        return geometric_invert(self)

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, NestedElement):
            return NotImplemented
        return (
            self.inner_algebra == other.inner_algebra
            and self.outer_algebra == other.outer_algebra
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.inner_algebra, self.outer_algebra, self.coeffs))

    def __repr__(self):
        body = ", ".join(f"[{c}]" for c in self.coeffs)
        return f"NestedElement({body})"


def nest(element: WeilElement) -> NestedElement:
    """Regroup an element of a tensor algebra as inner-valued outer coefficients.

    The element's algebra must have been built by tensor(); the left factor
    becomes the inner algebra.
    """
    info = element.algebra.tensor_info
    if info is None:
        raise ValueError("nest() needs an element of a tensor-built algebra")
    coeffs = []
    for i2 in range(info.right.dimension):
        inner = [
            element.coeffs[info.index_of_pair[(i1, i2)]]
            for i1 in range(info.left.dimension)
        ]
        coeffs.append(WeilElement(info.left, inner))
    return NestedElement(info.left, info.right, coeffs)


def flatten(nested: NestedElement, algebra: WeilAlgebra) -> WeilElement:
    """Inverse of nest(), into the given tensor-built algebra."""
    info = algebra.tensor_info
    if info is None:
        raise ValueError("flatten() needs a tensor-built target algebra")
    if info.left != nested.inner_algebra or info.right != nested.outer_algebra:
        raise ValueError("tensor factors do not match the nested element")
    mode = nested.mode
    out = [Scalar.zero(mode)] * algebra.dimension
    for i2, c in enumerate(nested.coeffs):
        for i1, v in enumerate(c.coeffs):
            out[info.index_of_pair[(i1, i2)]] = v
    return WeilElement(algebra, out)


def check_functor_composition(f: SmoothMap, point: WeilPoint) -> Verdict:
    """One functor after another versus the tensor functor, at one point.

    The point lives over a tensor-built algebra W1 (x) W2.  Route A
    evaluates directly there; route B regroups each coordinate into nested
    form, evaluates with two-level arithmetic, and flattens back.
    """
    info = point.algebra.tensor_info
    if info is None:
        raise ValueError("point must live over a tensor-built algebra")
    direct = apply_map(f, point)

    nested_values = [nest(c) for c in point.coords]
    template = nest(point.algebra.one(point.mode))
    routed = [
        lift_eval(b, nested_values, template=template, var_names=f.var_names)
        for b in f.bodies
    ]
    flattened = [flatten(r, point.algebra) for r in routed]

    ok = True
    worst = 0.0
    for a, b in zip(direct.coords, flattened):
        if point.mode is Mode.EXACT:
            if a != b:
                ok = False
        else:
            gap = _relative_gap(a.coeffs, b.coeffs)
            worst = max(worst, gap)
            if gap > 1e-9:
                ok = False
    detail = (
        "routes agree exactly"
        if point.mode is Mode.EXACT
        else f"largest relative gap {worst:.3e}"
    )
    return Verdict(
        ok,
        f"composite-vs-tensor on map {f.name}: {detail}",
        exactness="exact" if point.mode is Mode.EXACT else "sampled",
    )


def check_reparametrization_naturality(
    f: SmoothMap, phi: WeilMorphism, point: WeilPoint
) -> Verdict:
    """Changing the algebra commutes with applying the lifted map."""
    if point.algebra != phi.source:
        raise ValueError("point must live over the morphism's source algebra")
    lhs = apply_morphism(phi, apply_map(f, point))
    rhs = apply_map(f, apply_morphism(phi, point))
    ok = True
    worst = 0.0
    for a, b in zip(lhs.coords, rhs.coords):
        if point.mode is Mode.EXACT:
            if a != b:
                ok = False
        else:
            gap = _relative_gap(a.coeffs, b.coeffs)
            worst = max(worst, gap)
            if gap > 1e-9:
                ok = False
    detail = (
        "both orders agree exactly"
        if point.mode is Mode.EXACT
        else f"largest relative gap {worst:.3e}"
    )
    return Verdict(
        ok,
        f"reparametrization naturality on map {f.name}: {detail}",
        exactness="exact" if point.mode is Mode.EXACT else "sampled",
    )


def _relative_gap(xs, ys) -> float:
    worst = 0.0
    for x, y in zip(xs, ys):
        xv, yv = float(x.value), float(y.value)
        scale = max(1.0, abs(xv), abs(yv))
        worst = max(worst, abs(xv - yv) / scale)
    return worst


# ----- jets ------------------------------------------------------------------


def jet(f: SmoothMap, at, order: int, mode: Mode = Mode.EXACT):
    """Taylor coefficients of a one-input map: per output, the list
    [f(a), f'(a), f''(a)/2!, ...] up to the requested order."""
    if f.arity_in != 1:
        raise ValueError("jet() handles one-input maps; use mixed_jet for several")
    w = jet_line(order)
    a = float(at) if mode is Mode.FLOAT else Scalar.exact(at)
    gen = w.basis_element(1, mode) if order >= 1 else w.zero(mode)
    coord = w.scalar(a) + gen
    result = apply_map(f, WeilPoint(w, [coord]))
    return [list(c.coeffs) for c in result.coords]


def mixed_jet(f: SmoothMap, at, orders, mode: Mode = Mode.EXACT):
    """Mixed Taylor coefficients: per output, a dict keyed by the exponent
    tuple (e1..en), holding the coefficient of t1^e1 ... tn^en, which is the
    mixed partial derivative divided by e1! ... en!."""
    orders = tuple(int(o) for o in orders)
    if len(orders) != f.arity_in:
        raise ValueError("one order per input is required")
    if any(o < 0 for o in orders):
        raise ValueError("orders must be >= 0")
    names = tuple(f"t{i+1}" for i in range(len(orders)))
    rels = []
    for i, o in enumerate(orders):
        r = [0] * len(orders)
        r[i] = o + 1
        rels.append(tuple(r))
    w = make_presented(names, rels)
    coords = []
    for i, value in enumerate(at):
        a = float(value) if mode is Mode.FLOAT else Scalar.exact(value)
        gen_exp = tuple(1 if j == i else 0 for j in range(len(orders)))
        coord = w.scalar(a)
        if orders[i] >= 1:
            coord = coord + w.basis_element(w._index[gen_exp], mode)
        coords.append(coord)
    result = apply_map(f, WeilPoint(w, coords))
    out = []
    for c in result.coords:
        out.append({e: v for e, v in zip(w.basis, c.coeffs)})
    return out, w


# ----- symbolic lift ---------------------------------------------------------


class PolyElement:
    """Algebra element whose coefficients are polynomials in outside inputs."""

    __slots__ = ("algebra", "nvars", "coeffs")
    symbolic = True

    def __init__(self, algebra, nvars, coeffs):
        self.algebra = algebra
        self.nvars = nvars
        coeffs = tuple(coeffs)
        if len(coeffs) != algebra.dimension:
            raise ValueError("one polynomial per basis vector")
        self.coeffs = coeffs

    def _peer(self, other):
        if (
            not isinstance(other, PolyElement)
            or other.algebra != self.algebra
            or other.nvars != self.nvars
        ):
            raise ValueError("symbolic elements are not compatible")

    def __add__(self, other):
        self._peer(other)
        return PolyElement(
            self.algebra,
            self.nvars,
            [poly_add(a, b) for a, b in zip(self.coeffs, other.coeffs)],
        )

    def __sub__(self, other):
        self._peer(other)
        return PolyElement(
            self.algebra,
            self.nvars,
            [poly_sub(a, b) for a, b in zip(self.coeffs, other.coeffs)],
        )

    def __neg__(self):
        return PolyElement(
            self.algebra, self.nvars, [poly_scale(c, -1) for c in self.coeffs]
        )

    def __mul__(self, other):
        self._peer(other)
        out = [dict() for _ in range(self.algebra.dimension)]
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                if not b:
                    continue
                ab = poly_mul(a, b)
                for k, c in enumerate(self.algebra.structure_vector(i, j)):
                    if not c.is_zero:
                        out[k] = poly_add(out[k], poly_scale(ab, c.as_fraction()))
        return PolyElement(self.algebra, self.nvars, out)

    def like(self, value):
        if isinstance(value, Scalar):
            value = value.as_fraction()
        coeffs = [poly_const(value, self.nvars)] + [
            {} for _ in range(self.algebra.dimension - 1)
        ]
        return PolyElement(self.algebra, self.nvars, coeffs)

    def scalar_part(self):
        acc = {}
        for lam, c in zip(self.algebra.aug_covector, self.coeffs):
            if not lam.is_zero:
                acc = poly_add(acc, poly_scale(c, lam.as_fraction()))
        if not poly_is_constant(acc):
            raise NonPolynomialError(
                "scalar part depends on the inputs; this operation would leave "
                "the polynomial world"
            )
        value = acc.get((0,) * self.nvars, Fraction(0))
        return Scalar.exact(value)

    def nilpotency_bound(self) -> int:
        return self.algebra.nilpotency_degree

    def invert(self):
        # works when the scalar part is an input-free nonzero constant
        s = self.scalar_part()
        if s.is_zero:
            raise ZeroDivisionError("zero scalar part")
        return geometric_invert(self)

    def __eq__(self, other):
        if not isinstance(other, PolyElement):
            return NotImplemented
        return (
            self.algebra == other.algebra
            and self.nvars == other.nvars
            and self.coeffs == other.coeffs
        )


def coordinate_names(f_names, algebra: WeilAlgebra):
    return tuple(f"{v}_{b}" for v in f_names for b in range(algebra.dimension))


def lift_map(f: SmoothMap, algebra: WeilAlgebra) -> SmoothMap:
    """Materialize the lifted map as a polynomial map on coordinates.

    Input i's element of the algebra occupies the variable block
    [i*dim, (i+1)*dim); outputs follow the same layout.  Bodies must stay
    polynomial (division only by values with constant invertible scalar
    part); anything transcendental is rejected.
    """
    d = algebra.dimension
    n = f.arity_in
    total = n * d
    values = []
    for i in range(n):
        coeffs = [poly_var(i * d + b, total) for b in range(d)]
        values.append(PolyElement(algebra, total, coeffs))
    template = PolyElement(
        algebra, total, [poly_const(1, total)] + [{}] * (d - 1)
    )
    results = []
    for body in f.bodies:
        results.append(
            lift_eval(body, values, template=template, var_names=f.var_names)
        )
    names = coordinate_names(f.var_names, algebra)
    bodies = []
    for r in results:
        for c in r.coeffs:
            bodies.append(poly_to_expr(c, total))
    return SmoothMap(names, tuple(bodies), name=f"{f.name}_lift")


# ----- the lifted line as a ring object ---------------------------------------


@dataclass(frozen=True)
class LiftedLineStructure:
    """The ring operations of R ^ W, written out as polynomial maps."""

    algebra: WeilAlgebra
    addition: SmoothMap
    multiplication: SmoothMap
    negation: SmoothMap
    unit: SmoothMap
    zero: SmoothMap


def lifted_line_structure(algebra: WeilAlgebra) -> LiftedLineStructure:
    from .expr import var

    two_in = SmoothMap(("u", "v"), (var(0) + var(1),), name="plus")
    two_mul = SmoothMap(("u", "v"), (var(0) * var(1),), name="times")
    neg = SmoothMap(("u",), (-var(0),), name="negate")
    addition = lift_map(two_in, algebra)
    multiplication = lift_map(two_mul, algebra)
    negation = lift_map(neg, algebra)
    one_coeffs = [c.as_fraction() for c in algebra.one().coeffs]
    unit = SmoothMap((), tuple(_const_expr(c) for c in one_coeffs), name="one")
    zero = SmoothMap((), tuple(_const_expr(0) for _ in range(algebra.dimension)), name="zero")
    return LiftedLineStructure(algebra, addition, multiplication, negation, unit, zero)


def _const_expr(c):
    from .expr import const

    return const(c)
