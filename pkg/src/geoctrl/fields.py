"""Vector fields with symbolic components and compiled numeric kernels.

A VectorField is a tuple of expressions, one per state coordinate. The
symbolic side supports exact Jacobians and Lie brackets; the numeric
side compiles once to vectorized numpy callables shared by every
integrator in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .expr import (
    Expr,
    Const,
    compile_expr,
    differentiate,
    evaluate,
    parse_expression,
    simplify,
    to_string,
)

__all__ = ["Point", "VectorField", "jacobian", "lie_bracket"]

# points are plain float arrays of shape (n,); batches stack them as (N, n)
Point = np.ndarray


def _as_point(p: Sequence[float], n: int) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"expected a point of dimension {n}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class VectorField:
    """A smooth vector field on R^n given componentwise by expressions."""

    components: tuple[Expr, ...]
    var_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.components) != len(self.var_names):
            raise ValueError(
                f"{len(self.components)} components for {len(self.var_names)} variables"
            )

    @property
    def dim(self) -> int:
        return len(self.components)

    @staticmethod
    def parse(sources: Sequence[str], var_names: Sequence[str]) -> "VectorField":
        names = tuple(var_names)
        comps = tuple(parse_expression(src, names) for src in sources)
        return VectorField(comps, names)

    @staticmethod
    def constant(values: Sequence[float], var_names: Sequence[str]) -> "VectorField":
        return VectorField(tuple(Const(float(v)) for v in values), tuple(var_names))

    def __call__(self, p: Sequence[float]) -> np.ndarray:
        p = _as_point(p, self.dim)
        return np.array([evaluate(c, p) for c in self.components])

    def component_strings(self) -> tuple[str, ...]:
        return tuple(to_string(c, self.var_names) for c in self.components)

    def __str__(self) -> str:
        return "(" + ", ".join(self.component_strings()) + ")"

    def negate(self) -> "VectorField":
        cached = self.__dict__.get("_negated")
        if cached is None:
            from .expr import neg

            cached = VectorField(
                tuple(simplify(neg(c)) for c in self.components), self.var_names
            )
            object.__setattr__(self, "_negated", cached)
        return cached

    # compiled kernels are cached on first use; the dataclass is frozen so
    # the cache lives in object.__setattr__-installed slots
    def compiled(self) -> Callable[[np.ndarray], np.ndarray]:
        """Callable mapping (..., n) arrays of points to (..., n) vectors."""
        cached = self.__dict__.get("_compiled")
        if cached is None:
            fns = [compile_expr(c) for c in self.components]

            def call(X: np.ndarray) -> np.ndarray:
                X = np.asarray(X, dtype=float)
                return np.stack([f(X) for f in fns], axis=-1)

            object.__setattr__(self, "_compiled", call)
            cached = call
        return cached

    def compiled_jacobian(self) -> Callable[[np.ndarray], np.ndarray]:
        """Callable mapping (..., n) points to (..., n, n) Jacobians."""
        cached = self.__dict__.get("_compiled_jac")
        if cached is None:
            J = jacobian(self)
            fns = [[compile_expr(J[i][j]) for j in range(self.dim)] for i in range(self.dim)]

            def call(X: np.ndarray) -> np.ndarray:
                X = np.asarray(X, dtype=float)
                rows = [np.stack([f(X) for f in row], axis=-1) for row in fns]
                return np.stack(rows, axis=-2)

            object.__setattr__(self, "_compiled_jac", call)
            cached = call
        return cached


def jacobian(V: VectorField) -> list[list[Expr]]:
    """Matrix of partial derivatives, J[i][j] = d V^i / d x_j."""
    n = V.dim
    return [
        [simplify(differentiate(V.components[i], j)) for j in range(n)]
        for i in range(n)
    ]


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """Lie bracket [X, Y] = (DY) X - (DX) Y, componentwise symbolic."""
    if X.var_names != Y.var_names:
        raise ValueError("vector fields live on different variable tuples")
    from .expr import add, mul, sub

    n = X.dim
    JX = jacobian(X)
    JY = jacobian(Y)
    comps = []
    for i in range(n):
        acc: Expr = Const(0.0)
        for j in range(n):
            acc = add(acc, sub(mul(JY[i][j], X.components[j]), mul(JX[i][j], Y.components[j])))
        comps.append(simplify(acc))
    return VectorField(tuple(comps), X.var_names)
