"""Truncated multivariate Taylor towers (forward-mode jets).

A :class:`Jet` stores, for every multi-index ``alpha`` of total degree at most
``order`` over ``dim`` variables, the Taylor-normalized coefficient
``d^alpha f(p) / alpha!``.  The un-normalized partial derivative is recovered
with :meth:`Jet.partial`.

Jets carry an arbitrary leading array shape, so a single :class:`Jet` can hold
a whole tensor field sampled at a batch of points: ``coeffs`` has shape
``(*shape, M)`` where ``M`` is the number of monomials.  Arithmetic broadcasts
over ``shape`` exactly like numpy does.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class JetDomainError(ValueError):
    """A function was evaluated outside its domain (log/sqrt/division)."""

    def __init__(self, message: str, expr: str | None = None):
        self.expr = expr
        if expr is not None:
            message = f"{message} in subexpression '{expr}'"
        super().__init__(message)


class OrderError(ValueError):
    """The jet does not carry enough derivatives for the requested operation."""


@dataclass(frozen=True)
class Basis:
    dim: int
    order: int
    index: np.ndarray  # (M, dim) multi-indices, graded by total degree
    degree: np.ndarray
    factorial: np.ndarray  # alpha! for each multi-index
    lookup: dict
    # product table, pairs sorted by target monomial
    left: np.ndarray
    right: np.ndarray
    starts: np.ndarray

    @property
    def size(self) -> int:
        return len(self.index)


def _monomials(dim: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(order + 1):
        # reverse lexicographic inside a degree: (2,0), (1,1), (0,2)
        level = [a for a in itertools.product(range(deg, -1, -1), repeat=dim) if sum(a) == deg]
        out.extend(level)
    return out


@functools.lru_cache(maxsize=None)
def basis(dim: int, order: int) -> Basis:
    if order < 0:
        raise OrderError(f"negative jet order {order}")
    mons = _monomials(dim, order)
    lookup = {m: i for i, m in enumerate(mons)}
    index = np.array(mons, dtype=int).reshape(len(mons), dim)
    degree = index.sum(axis=1)
    fact = np.array([math.prod(math.factorial(k) for k in m) for m in mons], dtype=float)
    left, right, target = [], [], []
    for i, a in enumerate(mons):
        for j, b in enumerate(mons):
            if degree[i] + degree[j] <= order:
                left.append(i)
                right.append(j)
                target.append(lookup[tuple(x + y for x, y in zip(a, b))])
    target = np.array(target)
    perm = np.argsort(target, kind="stable")
    starts = np.searchsorted(target[perm], np.arange(len(mons)))
    return Basis(dim, order, index, degree, fact, lookup,
                 np.array(left)[perm], np.array(right)[perm], starts)


@functools.lru_cache(maxsize=None)
def _diff_table(dim: int, order: int, var: int):
    """Source indices and factors so that d/dx_var maps order -> order-1."""
    hi, lo = basis(dim, order), basis(dim, order - 1)
    src = np.empty(lo.size, dtype=int)
    fac = np.empty(lo.size)
    for k, m in enumerate(map(tuple, lo.index)):
        up = list(m)
        up[var] += 1
        src[k] = hi.lookup[tuple(up)]
        fac[k] = up[var]
    return src, fac


@functools.lru_cache(maxsize=None)
def _integral_table(dim: int, order: int, var: int):
    """Destination indices and divisors for the antiderivative order -> order+1."""
    lo, hi = basis(dim, order), basis(dim, order + 1)
    dst = np.empty(lo.size, dtype=int)
    div = np.empty(lo.size)
    for k, m in enumerate(map(tuple, lo.index)):
        up = list(m)
        up[var] += 1
        dst[k] = hi.lookup[tuple(up)]
        div[k] = up[var]
    return dst, div


class Jet:
    """Array of truncated Taylor expansions sharing one expansion point layout."""

    __array_priority__ = 1000  # make ndarray * Jet defer to Jet.__rmul__

    def __init__(self, coeffs, dim: int, order: int):
        coeffs = np.asarray(coeffs, dtype=float)
        self.dim = dim
        self.order = order
        self.basis = basis(dim, order)
        if coeffs.shape[-1:] != (self.basis.size,):
            raise ValueError(
                f"coefficient axis has length {coeffs.shape[-1:]}, expected {self.basis.size}")
        self.coeffs = coeffs

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, dim: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (basis(dim, order).size,))
        c[..., 0] = value
        return cls(c, dim, order)

    @classmethod
    def variable(cls, value, var: int, dim: int, order: int) -> "Jet":
        jet = cls.constant(value, dim, order)
        if order >= 1:
            e = [0] * dim
            e[var] = 1
            jet.coeffs[..., jet.basis.lookup[tuple(e)]] = 1.0
        return jet

    def like(self, value) -> "Jet":
        return Jet.constant(value, self.dim, self.order)

    # -- array protocol ---------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if Ellipsis not in idx:
            idx = idx + (Ellipsis,)
        return Jet(self.coeffs[idx + (slice(None),)], self.dim, self.order)

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.coeffs.reshape(shape + (self.basis.size,)), self.dim, self.order)

    def transpose(self, *axes) -> "Jet":
        axes = tuple(axes) + (self.ndim,)
        return Jet(self.coeffs.transpose(axes), self.dim, self.order)

    def swapaxes(self, a: int, b: int) -> "Jet":
        a, b = a % self.ndim, b % self.ndim
        return Jet(np.swapaxes(self.coeffs, a, b), self.dim, self.order)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        axes = np.atleast_1d(axis)
        axes = tuple(int(a) % self.ndim for a in axes)
        return Jet(self.coeffs.sum(axis=axes), self.dim, self.order)

    def copy(self) -> "Jet":
        return Jet(self.coeffs.copy(), self.dim, self.order)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, dim={self.dim}, order={self.order}, value={self.value!r})"

    # -- truncation / derivatives -----------------------------------------
    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        m = basis(self.dim, order).size
        return Jet(self.coeffs[..., :m], self.dim, order)

    def coeff(self, multi_index: Sequence[int]) -> np.ndarray:
        """Taylor-normalized coefficient ``d^alpha f / alpha!``."""
        alpha = tuple(int(a) for a in multi_index)
        if len(alpha) != self.dim:
            raise ValueError(f"multi-index {alpha} has wrong length for dim {self.dim}")
        if sum(alpha) > self.order:
            raise OrderError(f"multi-index {alpha} exceeds jet order {self.order}")
        return self.coeffs[..., self.basis.lookup[alpha]]

    def partial(self, multi_index: Sequence[int]) -> np.ndarray:
        """Un-normalized partial derivative ``d^alpha f``."""
        alpha = tuple(int(a) for a in multi_index)
        return self.coeff(alpha) * math.prod(math.factorial(a) for a in alpha)

    def diff(self, var: int) -> "Jet":
        """Jet of ``df/dx_var``; one order is lost."""
        if self.order < 1:
            raise OrderError("cannot differentiate an order-0 jet")
        src, fac = _diff_table(self.dim, self.order, var)
        return Jet(self.coeffs[..., src] * fac, self.dim, self.order - 1)

    def gradient(self) -> "Jet":
        """Stack of first partials along a new trailing tensor axis."""
        return stack([self.diff(a) for a in range(self.dim)], axis=-1)

    def antiderivative(self, var: int, constant=0.0) -> "Jet":
        """Jet of ``F`` with ``dF/dx_var = f`` and ``F = constant`` on ``x_var = x_var(p)``."""
        dst, div = _integral_table(self.dim, self.order, var)
        hi = basis(self.dim, self.order + 1)
        c = np.zeros(self.shape + (hi.size,))
        c[..., dst] = self.coeffs / div
        c[..., 0] += constant
        return Jet(c, self.dim, self.order + 1)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            if other.dim != self.dim:
                raise ValueError(f"jet dim mismatch {self.dim} vs {other.dim}")
            return other
        return None

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs, self.dim, self.order)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other) -> "Jet":
        o = self._coerce(other)
        if o is None:
            c = self.coeffs.copy() if np.ndim(other) == 0 else np.broadcast_to(
                self.coeffs, np.broadcast_shapes(self.shape, np.shape(other)) + (self.basis.size,)).copy()
            c[..., 0] += other
            return Jet(c, self.dim, self.order)
        k = min(self.order, o.order)
        return Jet(self.truncate(k).coeffs + o.truncate(k).coeffs, self.dim, k)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        o = self._coerce(other)
        if o is None:
            return Jet(self.coeffs * np.asarray(other, dtype=float)[..., None], self.dim, self.order)
        k = min(self.order, o.order)
        a, b = self.truncate(k), o.truncate(k)
        bs = a.basis
        prod = a.coeffs[..., bs.left] * b.coeffs[..., bs.right]
        return Jet(np.add.reduceat(prod, bs.starts, axis=-1), self.dim, k)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        o = self._coerce(other)
        if o is None:
            other = np.asarray(other, dtype=float)
            if np.any(other == 0):
                raise JetDomainError("division by zero")
            return Jet(self.coeffs / other[..., None], self.dim, self.order)
        return self * reciprocal(o)

    def __rtruediv__(self, other) -> "Jet":
        return reciprocal(self) * other

    def __pow__(self, p) -> "Jet":
        return power(self, p)

    def __rpow__(self, base) -> "Jet":
        return exp(self * log(np.asarray(base, dtype=float)))


# ---------------------------------------------------------------------------
# stacking and contraction

def stack(items: Sequence, axis: int = 0, like: Jet | None = None) -> Jet:
    """Stack jets (and plain numbers) along a new tensor axis."""
    jets = [x for x in items if isinstance(x, Jet)]
    ref = like if like is not None else (jets[0] if jets else None)
    if ref is None:
        raise ValueError("stack needs at least one Jet or a template")
    order = min([j.order for j in jets] + [ref.order])
    shape = np.broadcast_shapes(*[np.shape(x.value) if isinstance(x, Jet) else np.shape(x)
                                  for x in items], ref.shape)
    cols = []
    for x in items:
        j = x.truncate(order) if isinstance(x, Jet) else Jet.constant(x, ref.dim, order)
        cols.append(np.broadcast_to(j.coeffs, shape + (j.basis.size,)))
    if axis < 0:
        axis += len(shape) + 1
    return Jet(np.stack(cols, axis=axis), ref.dim, order)


def array(nested, like: Jet) -> Jet:
    """Build a tensor jet from a nested list of jets / numbers.

    Leaves share the batch shape of ``like``; the nesting levels become tensor
    axes placed after the batch axes.
    """
    batch = like.shape
    if isinstance(nested, (list, tuple)):
        parts = [array(x, like) for x in nested]
        k = min(p.order for p in parts)
        inner = np.broadcast_shapes(*[p.shape[len(batch):] for p in parts])
        m = basis(like.dim, k).size
        cols = [np.broadcast_to(p.truncate(k).coeffs, batch + inner + (m,)) for p in parts]
        return Jet(np.stack(cols, axis=len(batch)), like.dim, k)
    if isinstance(nested, Jet):
        if nested.shape != batch:
            return Jet(np.broadcast_to(nested.coeffs, batch + (nested.basis.size,)),
                       nested.dim, nested.order)
        return nested
    return Jet.constant(np.broadcast_to(np.asarray(nested, dtype=float), batch), like.dim, like.order)


def _free_letter(subscripts: str) -> str:
    for ch in "ZYXWVUTSRQ":
        if ch not in subscripts:
            return ch
    raise ValueError("no free einsum letter")


def einsum(subscripts: str, a, b) -> "Jet | np.ndarray":
    """Two-operand einsum where either operand may be a :class:`Jet`.

    Jet-jet contractions multiply the Taylor towers; plain arrays act as
    constant tensors.
    """
    lhs, out = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    if not ja and not jb:
        return np.einsum(subscripts, a, b)
    z = _free_letter(subscripts)
    if ja and jb:
        if a.dim != b.dim:
            raise ValueError("jet dim mismatch")
        k = min(a.order, b.order)
        a, b = a.truncate(k), b.truncate(k)
        bs = a.basis
        prod = np.einsum(f"{sa}{z},{sb}{z}->{out}{z}", a.coeffs[..., bs.left], b.coeffs[..., bs.right])
        return Jet(np.add.reduceat(prod, bs.starts, axis=-1), a.dim, k)
    if ja:
        return Jet(np.einsum(f"{sa}{z},{sb}->{out}{z}", a.coeffs, b), a.dim, a.order)
    return Jet(np.einsum(f"{sa},{sb}{z}->{out}{z}", a, b.coeffs), b.dim, b.order)


def inv(m: Jet) -> Jet:
    """Inverse of a batch of square jet matrices (last two tensor axes)."""
    x = Jet.constant(np.linalg.inv(m.value), m.dim, m.order)
    eye = np.eye(m.shape[-1])
    for _ in range(max(1, math.ceil(math.log2(m.order + 1))) + 1):
        mx = einsum("...ij,...jk->...ik", m, x)
        x = einsum("...ij,...jk->...ik", x, 2 * eye - mx)
    return x


def condition_number(m: Jet | np.ndarray) -> np.ndarray:
    v = m.value if isinstance(m, Jet) else np.asarray(m)
    return np.linalg.cond(v)


# ---------------------------------------------------------------------------
# composition with univariate functions

def compose(series: np.ndarray, x: Jet) -> Jet:
    """Evaluate ``sum_k series[..., k] * (x - x(p))**k``.

    ``series[..., k]`` must hold ``f^(k)(x(p)) / k!``; entries beyond ``x.order``
    are ignored.
    """
    series = np.asarray(series, dtype=float)
    delta = x - x.value
    n = min(series.shape[-1] - 1, x.order)
    out = x.like(series[..., n])
    for k in range(n - 1, -1, -1):
        out = out * delta + series[..., k]
    return out


def _check_domain(ok, message: str, expr: str | None):
    if not np.all(ok):
        raise JetDomainError(message, expr)


def _kfact(n: int) -> np.ndarray:
    return np.array([math.factorial(k) for k in range(n + 1)], dtype=float)


def exp(x, expr: str | None = None):
    if not isinstance(x, Jet):
        return np.exp(x)
    k = np.arange(x.order + 1)
    s = np.exp(x.value)[..., None] / _kfact(x.order)
    return compose(s * np.ones_like(k), x)


def sin(x, expr: str | None = None):
    if not isinstance(x, Jet):
        return np.sin(x)
    k = np.arange(x.order + 1)
    s = np.sin(x.value[..., None] + k * np.pi / 2) / _kfact(x.order)
    return compose(s, x)


def cos(x, expr: str | None = None):
    if not isinstance(x, Jet):
        return np.cos(x)
    k = np.arange(x.order + 1)
    s = np.cos(x.value[..., None] + k * np.pi / 2) / _kfact(x.order)
    return compose(s, x)


def log(x, expr: str | None = None):
    v = x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)
    _check_domain(v > 0, "log of non-positive value", expr)
    if not isinstance(x, Jet):
        return np.log(v)
    k = np.arange(1, x.order + 1)
    s = np.empty(v.shape + (x.order + 1,))
    s[..., 0] = np.log(v)
    s[..., 1:] = (-1.0) ** (k + 1) / (k * v[..., None] ** k)
    return compose(s, x)


def reciprocal(x, expr: str | None = None):
    v = x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)
    _check_domain(v != 0, "division by zero", expr)
    if not isinstance(x, Jet):
        return 1.0 / v
    k = np.arange(x.order + 1)
    s = (-1.0) ** k / v[..., None] ** (k + 1)
    return compose(s, x)


def _binomial_series(v: np.ndarray, p: float, order: int) -> np.ndarray:
    s = np.empty(v.shape + (order + 1,))
    coef = 1.0
    for k in range(order + 1):
        if k > 0:
            coef *= (p - (k - 1)) / k
        if coef == 0.0:
            s[..., k] = 0.0
        else:
            s[..., k] = coef * v ** (p - k)
    return s


def power(x, p, expr: str | None = None):
    """``x ** p`` for real exponent ``p`` (a jet exponent goes through exp/log)."""
    if isinstance(p, Jet):
        return exp(p * log(x, expr))
    p = float(p)
    if not isinstance(x, Jet):
        v = np.asarray(x, dtype=float)
        if not p.is_integer():
            _check_domain(v >= 0, "fractional power of negative value", expr)
        if p < 0:
            _check_domain(v != 0, "division by zero", expr)
        return v ** p
    v = x.value
    if p.is_integer() and p >= 0:
        n = int(p)
        out = x.like(1.0)
        base = x
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out
    if p.is_integer():
        return power(reciprocal(x, expr), -p)
    # fractional powers need a strictly positive base to be differentiable
    _check_domain(v > 0 if x.order > 0 else v >= 0, "fractional power of non-positive value", expr)
    return compose(_binomial_series(v, p, x.order), x)


def sqrt(x, expr: str | None = None):
    if not isinstance(x, Jet):
        v = np.asarray(x, dtype=float)
        _check_domain(v >= 0, "sqrt of negative value", expr)
        return np.sqrt(v)
    _check_domain(x.value > 0 if x.order > 0 else x.value >= 0, "sqrt of non-positive value", expr)
    return compose(_binomial_series(x.value, 0.5, x.order), x)


# ---------------------------------------------------------------------------
# seeding

def seed(point, order: int) -> list[Jet]:
    """Independent variable jets at ``point`` (shape ``(..., dim)``)."""
    point = np.asarray(point, dtype=float)
    dim = point.shape[-1]
    return [Jet.variable(point[..., a], a, dim, order) for a in range(dim)]


def lift(f: "Callable | object", point, order: int) -> Jet:
    """Jet of the scalar function ``f`` at ``point``.

    ``f`` is either a callable taking one jet per variable or an object with an
    ``evaluate(env)`` method and a ``variables`` ordering (e.g. a parsed field
    expression).
    """
    if order < 0:
        raise OrderError("order must be >= 0")
    xs = seed(point, order)
    if hasattr(f, "evaluate"):
        names = getattr(f, "variables", None)
        names = sorted(names) if names else []
        if len(names) != len(xs):
            raise ValueError(f"expression needs variables {names}, got a {len(xs)}-dim point")
        out = f.evaluate(dict(zip(names, xs)))
    else:
        out = f(*xs)
    if not isinstance(out, Jet):
        out = Jet.constant(np.broadcast_to(out, xs[0].shape) if xs else out,
                           len(xs), order)
    return out


def partial(j: Jet, multi_index: Sequence[int]) -> np.ndarray:
    return j.partial(multi_index)

