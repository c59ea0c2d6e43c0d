"""Composition language for grid operators.

An :class:`OperatorExpr` is a finite tree whose leaves are diagonal in either
position or momentum space and whose nodes are Add / Mul / Scale / Commutator
/ Adjoint.  A leaf is a sum of (scalar lattice function) x (constant 4x4
matrix) pairs -- every operator appearing in the spin-dynamics equations has
this shape -- so applying a leaf never materializes per-point 4x4 matrices:

    (L psi)(x) = sum_j M_j (f_j(x) * psi(x)).

Scalar leaf arrays are built lazily per (grid, t) and cached; caches are
immutable after first build and safe to share across threads.  Mul(a, b)
applies b first (left factor last), matching left-to-right operator products
as written in equations.

Leaves flagged ``singular_origin`` (the longitudinal 1/p^2 projector and
friends) refuse to act on states whose k = 0 amplitude fraction exceeds the
zero-mode guard, and their scalar producers must return 0 in that bin.
"""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError, SingularMomentumError
from .grid import MOMENTUM, POSITION, GridSpec, SpinorField, zero_mode_weight

__all__ = [
    "OperatorExpr", "PositionDiag", "MomentumDiag", "ConstMatrix",
    "Add", "Mul", "Scale", "Commutator", "Adjoint",
    "apply_expr", "expectation", "hermiticity_residual", "block_parity",
    "DEFAULT_ZERO_MODE_GUARD",
]

DEFAULT_ZERO_MODE_GUARD = 1e-10


def _value(factor, t):
    return complex(factor(t)) if callable(factor) else complex(factor)


class OperatorExpr:
    """Base class; use the concrete leaves and combinators below."""

    def apply(self, field: SpinorField, t: float = 0.0,
              guard: float = DEFAULT_ZERO_MODE_GUARD) -> SpinorField:
        return apply_expr(self, field, t, guard)

    def __add__(self, other):
        return Add([self, other])

    def __sub__(self, other):
        return Add([self, Scale(-1.0, other)])

    def __matmul__(self, other):
        return Mul(self, other)

    def __rmul__(self, factor):
        return Scale(factor, self)


class _DiagLeaf(OperatorExpr):
    """Shared machinery of position- and momentum-diagonal leaves."""

    space = None

    def __init__(self, terms, name=None, time_dependent=False,
                 singular_origin=False):
        # terms: iterable of (producer, matrix); producer(grid, t) -> scalar
        # lattice array broadcastable to grid.shape
        self.terms = [(fn, np.asarray(m, dtype=complex)) for fn, m in terms]
        for _, m in self.terms:
            if m.shape != (4, 4):
                raise PreconditionError("leaf matrices must be 4x4")
        self.name = name
        self.time_dependent = bool(time_dependent)
        self.singular_origin = bool(singular_origin)
        self._cache = {}

    def _scalars(self, grid: GridSpec, t: float):
        key = (grid, t if self.time_dependent else None)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        arrays = tuple(np.asarray(fn(grid, t), dtype=complex) for fn, _ in self.terms)
        if len(self._cache) > 16:
            self._cache.clear()
        self._cache[key] = arrays
        return arrays

    def _apply(self, field: SpinorField, t: float, guard: float) -> SpinorField:
        grid = field.grid
        arrays = self._scalars(grid, t)
        # leaves that are identically zero (axes a 1D grid does not carry,
        # switched-off envelopes) act without any transform
        if all(a.size == 1 and complex(a.reshape(())) == 0 for a in arrays):
            return SpinorField(grid, np.zeros_like(field.values), field.space)
        field = field.in_space(self.space)
        if self.singular_origin:
            w0 = zero_mode_weight(field)
            if w0 > guard:
                raise SingularMomentumError(
                    f"operator {self.name or self.__class__.__name__} is singular at "
                    f"k=0 but the state has zero-mode weight {w0:.3e} > guard {guard:.1e}")
        flat = field.values.reshape(4, -1)
        out = np.zeros_like(flat)
        for (fn, mat), arr in zip(self.terms, arrays):
            if arr.size == 1 and complex(arr.reshape(())) == 0:
                continue
            scaled = (np.broadcast_to(arr, grid.shape).reshape(-1) * flat)
            out += mat @ scaled
        return SpinorField(grid, out.reshape(field.values.shape), self.space)

    def _adjoint(self):
        terms = [(_conj_producer(fn), m.conj().T) for fn, m in self.terms]
        return type(self)(terms, name=_adj_name(self.name),
                          time_dependent=self.time_dependent,
                          singular_origin=self.singular_origin)


def _conj_producer(fn):
    return lambda grid, t: np.conj(fn(grid, t))


def _adj_name(name):
    return None if name is None else name + "^H"


class PositionDiag(_DiagLeaf):
    space = POSITION


class MomentumDiag(_DiagLeaf):
    space = MOMENTUM


class ConstMatrix(OperatorExpr):
    """A constant 4x4 matrix, optionally with a time-dependent coefficient.

    Space-agnostic: acts pointwise in whichever space the state is in.
    """

    def __init__(self, matrix, coeff=1.0, name=None):
        self.matrix = np.asarray(matrix, dtype=complex)
        if self.matrix.shape != (4, 4):
            raise PreconditionError("ConstMatrix needs a 4x4 matrix")
        self.coeff = coeff
        self.name = name

    def _apply(self, field, t, guard):
        v = _value(self.coeff, t)
        if v == 0:
            return SpinorField(field.grid, np.zeros_like(field.values), field.space)
        flat = field.values.reshape(4, -1)
        out = v * (self.matrix @ flat)
        return SpinorField(field.grid, out.reshape(field.values.shape), field.space)

    def _adjoint(self):
        coeff = self.coeff
        conj = (lambda t, c=coeff: np.conj(c(t))) if callable(coeff) else np.conj(coeff)
        return ConstMatrix(self.matrix.conj().T, conj, _adj_name(self.name))


class Add(OperatorExpr):
    def __init__(self, children):
        self.children = list(children)
        if not self.children:
            raise PreconditionError("Add needs at least one child")

    def _apply(self, field, t, guard):
        acc = self.children[0]._apply(field, t, guard)
        for child in self.children[1:]:
            acc = acc + child._apply(field, t, guard)
        return acc

    def _adjoint(self):
        return Add([c._adjoint() for c in self.children])


class Mul(OperatorExpr):
    """Operator composition; the left factor is applied last."""

    def __init__(self, left, right):
        self.left = left
        self.right = right

    def _apply(self, field, t, guard):
        return self.left._apply(self.right._apply(field, t, guard), t, guard)

    def _adjoint(self):
        return Mul(self.right._adjoint(), self.left._adjoint())


class Scale(OperatorExpr):
    def __init__(self, factor, child):
        self.factor = factor
        self.child = child

    def _apply(self, field, t, guard):
        return self.child._apply(field, t, guard) * _value(self.factor, t)

    def _adjoint(self):
        factor = self.factor
        conj = (lambda t, f=factor: np.conj(f(t))) if callable(factor) else np.conj(factor)
        return Scale(conj, self.child._adjoint())


class Commutator(OperatorExpr):
    """[a, b] applied as a(b psi) - b(a psi)."""

    def __init__(self, a, b):
        self.a = a
        self.b = b

    def _apply(self, field, t, guard):
        ab = self.a._apply(self.b._apply(field, t, guard), t, guard)
        ba = self.b._apply(self.a._apply(field, t, guard), t, guard)
        return ab - ba

    def _adjoint(self):
        # [a,b]^H = [b^H, a^H]
        return Commutator(self.b._adjoint(), self.a._adjoint())


class Adjoint(OperatorExpr):
    def __init__(self, child):
        self.child = child
        self._resolved = None

    def _apply(self, field, t, guard):
        if self._resolved is None:
            self._resolved = self.child._adjoint()
        return self._resolved._apply(field, t, guard)

    def _adjoint(self):
        return self.child


def apply_expr(expr: OperatorExpr, field: SpinorField, t: float = 0.0,
               guard: float = DEFAULT_ZERO_MODE_GUARD) -> SpinorField:
    """Apply an operator expression; the result is returned in the input's
    space.  Raises on NaN/Inf in the output (upstream singularities)."""
    out = expr._apply(field, t, guard).in_space(field.space)
    if not np.all(np.isfinite(out.values)):
        raise FloatingPointError("operator application produced non-finite values")
    return out


def expectation(expr: OperatorExpr, field: SpinorField, t: float = 0.0,
                guard: float = DEFAULT_ZERO_MODE_GUARD) -> complex:
    """<psi | E | psi> with the dx^d-weighted inner product."""
    return field.inner(expr._apply(field, t, guard))


def hermiticity_residual(expr: OperatorExpr, fields, t: float = 0.0) -> float:
    """max over the given states of |<psi,E psi> - conj(<psi,E psi>)|."""
    worst = 0.0
    for f in fields:
        v = expectation(expr, f, t)
        worst = max(worst, abs(v - np.conj(v)))
    return worst


# -- static block-structure analysis -----------------------------------------

def _matrix_parity(m, tol=1e-12):
    scale = max(np.max(np.abs(m)), 1e-300)
    off = max(np.max(np.abs(m[:2, 2:])), np.max(np.abs(m[2:, :2])))
    diag = max(np.max(np.abs(m[:2, :2])), np.max(np.abs(m[2:, 2:])))
    if off <= tol * scale and diag <= tol * scale:
        return "zero"
    if off <= tol * scale:
        return "diagonal"
    if diag <= tol * scale:
        return "offdiagonal"
    return "mixed"


def _combine_add(parities):
    parities = {p for p in parities if p != "zero"}
    if not parities:
        return "zero"
    if len(parities) == 1:
        return parities.pop()
    return "mixed"


def _combine_mul(a, b):
    if "zero" in (a, b):
        return "zero"
    if "mixed" in (a, b):
        return "mixed"
    return "diagonal" if a == b else "offdiagonal"


def block_parity(expr: OperatorExpr) -> str:
    """Classify an expression's particle-antiparticle block structure as
    'diagonal', 'offdiagonal', 'zero', or 'mixed', by propagating the parity
    of every constant matrix leaf through the tree."""
    if isinstance(expr, _DiagLeaf):
        return _combine_add(_matrix_parity(m) for _, m in expr.terms)
    if isinstance(expr, ConstMatrix):
        return _matrix_parity(expr.matrix)
    if isinstance(expr, Add):
        return _combine_add(block_parity(c) for c in expr.children)
    if isinstance(expr, Mul):
        return _combine_mul(block_parity(expr.left), block_parity(expr.right))
    if isinstance(expr, Scale):
        return block_parity(expr.child)
    if isinstance(expr, Commutator):
        return _combine_add([
            _combine_mul(block_parity(expr.a), block_parity(expr.b)),
            _combine_mul(block_parity(expr.b), block_parity(expr.a)),
        ])
    if isinstance(expr, Adjoint):
        return block_parity(expr.child)
    raise PreconditionError(f"unknown expression node {type(expr).__name__}")
