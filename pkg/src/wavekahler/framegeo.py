"""Riemannian geometry in an orthonormal moving frame.

Conventions used throughout the package (all indices are frame indices,
``b`` is the batch-of-points axis):

* structure functions ``c[b, i, j, k]``: ``[E_i, E_j] = sum_k c[i, j, k] E_k``
* connection coefficients ``A[b, i, j, k] = <nabla_{E_i} E_j, E_k>``
* curvature ``Rm[b, i, j, k, l] = <R(E_i, E_j) E_k, E_l>`` with
  ``R_{X,Y} = nabla_{[X,Y]} - [nabla_X, nabla_Y]``.  With this sign the round
  unit sphere has ``sum_ij Rm[i, j, i, j] = +2``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import jets
from .jets import Jet


class DegenerateFrameError(ValueError):
    pass


def permute(j: Jet, spec: str) -> Jet:
    """Reorder tensor axes of a jet with an einsum-style spec like ``'bijk->bjki'``."""
    lhs, rhs = spec.split("->")
    return Jet(np.einsum(f"{lhs}Z->{rhs}Z", j.coeffs), j.dim, j.order)


@dataclass(frozen=True)
class FramePatch:
    """A chart together with a declared-orthonormal frame.

    ``legs(env)`` returns the ``frame_dim x chart_dim`` matrix of chart components
    of the frame legs (nested lists of jets or numbers).  For the abstract kind,
    ``structure(env)`` returns ``c[i][j][k]`` directly and the leg components are
    used only to differentiate scalars.
    """

    name: str
    chart: tuple[str, ...]
    frame_dim: int
    legs: Callable[[dict], Sequence]
    domain: tuple[tuple[float, float], ...]
    structure: Callable[[dict], Sequence] | None = None
    derived: Callable[[dict], dict] | None = None
    leg_names: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def kind(self) -> str:
        return "abstract" if self.structure is not None else "coordinate"

    @property
    def chart_dim(self) -> int:
        return len(self.chart)

    def env(self, points, order: int) -> dict:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        xs = jets.seed(points, order)
        env = dict(zip(self.chart, xs))
        if self.derived is not None:
            env.update(self.derived(env))
        return env

    def at(self, points, order: int = 3) -> "FrameGeometry":
        return FrameGeometry(self, points, order)

    def sample(self, n: int, seed: int = 0, margin: float = 0.01) -> np.ndarray:
        return sample_box(self.domain, n, seed, margin)


def sample_box(domain, n: int, seed: int = 0, margin: float = 0.01) -> np.ndarray:
    """Uniform points in the domain box shrunk by ``margin`` of each side length."""
    rng = np.random.Generator(np.random.PCG64(seed))
    lo = np.array([a for a, _ in domain], dtype=float)
    hi = np.array([b for _, b in domain], dtype=float)
    pad = margin * (hi - lo)
    return rng.uniform(lo + pad, hi - pad, size=(n, len(domain)))


@dataclass
class FrameForm:
    """A differential form given by its (antisymmetric) frame components."""

    degree: int
    comps: Jet  # shape (b, n, ..., n)

    def __add__(self, other: "FrameForm") -> "FrameForm":
        return FrameForm(self.degree, self.comps + other.comps)

    def __sub__(self, other: "FrameForm") -> "FrameForm":
        return FrameForm(self.degree, self.comps - other.comps)

    def __neg__(self) -> "FrameForm":
        return FrameForm(self.degree, -self.comps)

    def __mul__(self, f) -> "FrameForm":
        if isinstance(f, Jet):
            f = f.reshape(f.shape + (1,) * self.degree)
        elif np.ndim(f):
            f = np.reshape(f, np.shape(f) + (1,) * self.degree)
        return FrameForm(self.degree, self.comps * f)

    __rmul__ = __mul__

    def wedge(self, other: "FrameForm") -> "FrameForm":
        return wedge(self, other)

    @property
    def values(self) -> np.ndarray:
        return self.comps.value


def wedge(a: FrameForm, b: FrameForm) -> FrameForm:
    p, q = a.degree, b.degree
    letters = "ijklmnop"[: p + q]
    outer = jets.einsum(f"b{letters[:p]},b{letters[p:]}->b{letters}", a.comps, b.comps)
    total = None
    for perm in itertools.permutations(range(p + q)):
        sign = _perm_sign(perm)
        term = permute(outer, f"b{letters}->b{''.join(letters[k] for k in perm)}")
        term = term * sign
        total = term if total is None else total + term
    return FrameForm(p + q, total * (1.0 / (math.factorial(p) * math.factorial(q))))


def _perm_sign(perm) -> int:
    sign, seen = 1, list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


class FrameGeometry:
    """All frame-level quantities of a :class:`FramePatch` at a batch of points."""

    def __init__(self, patch: FramePatch, points, order: int = 3):
        self.patch = patch
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.order = order
        self.env = patch.env(self.points, order)
        first = self.env[patch.chart[0]]
        self.E = jets.array(list(patch.legs(self.env)), like=first)
        n, m = self.E.shape[1:]
        if n != patch.frame_dim or m != patch.chart_dim:
            raise ValueError(f"leg matrix has shape {(n, m)}, expected "
                             f"{(patch.frame_dim, patch.chart_dim)}")
        self.n = n
        self._template = first

    # -- scalars and derivatives --------------------------------------------
    def scalar(self, value) -> Jet:
        if isinstance(value, Jet):
            return value
        return Jet.constant(np.broadcast_to(value, self._template.shape), self._template.dim,
                            self._template.order)

    def d_legs(self, f: Jet) -> Jet:
        """Leg derivatives ``E_i(f)``; the leg index is inserted right after the batch axis."""
        f = self.scalar(f)
        grad = jets.stack([f.diff(a) for a in range(f.dim)], axis=1)
        return jets.einsum("bia,ba...->bi...", self.E, grad)

    def coordinate_form(self, var: str | int) -> FrameForm:
        """Frame components of the coordinate 1-form ``dx^a`` (``dx^a(E_i) = E_i^a``)."""
        a = self.patch.chart.index(var) if isinstance(var, str) else var
        return FrameForm(1, self.E[:, :, a])

    def differential(self, f: Jet) -> FrameForm:
        return FrameForm(1, self.d_legs(f))

    def scalar_form(self, f) -> FrameForm:
        return FrameForm(0, self.scalar(f))

    # -- frame structure -------------------------------------------------------
    @cached_property
    def frame_condition(self) -> np.ndarray:
        if self.patch.kind == "abstract":
            return np.ones(len(self.points))
        return jets.condition_number(self.E)

    @cached_property
    def coframe(self) -> Jet:
        """Inverse frame matrix ``Einv[b, a, k]`` (coordinate-kind only)."""
        cond = self.frame_condition
        if not np.all(np.isfinite(cond)) or np.any(cond > 1e12):
            raise DegenerateFrameError(f"frame matrix singular (condition {np.max(cond):.3g})")
        return jets.inv(self.E)

    @cached_property
    def c(self) -> Jet:
        if self.patch.kind == "abstract":
            return jets.array(list(self.patch.structure(self.env)), like=self._template)
        D = self.d_legs(self.E)  # D[b, i, j, a] = E_i(E_j^a)
        bracket = D - permute(D, "bija->bjia")
        return jets.einsum("bija,bak->bijk", bracket, self.coframe)

    @cached_property
    def gamma(self) -> Jet:
        """Levi-Civita coefficients by the orthonormal Koszul formula."""
        c = self.c
        return (c - permute(c, "bjki->bijk") + permute(c, "bkij->bijk")) * 0.5

    def curvature(self, A: Jet) -> Jet:
        """``<R(E_i,E_j)E_k,E_l>`` for the metric connection with coefficients ``A``."""
        c = self.c
        term = jets.einsum("bijp,bpkm->bijkm", c, A)
        D = self.d_legs(A)
        DA = D - permute(D, "bjikm->bijkm")
        Q = jets.einsum("bjkl,bilm->bijkm", A, A)
        Qs = Q - permute(Q, "bjikm->bijkm")
        return term - DA - Qs

    @cached_property
    def riemann(self) -> Jet:
        return self.curvature(self.gamma)

    @cached_property
    def scalar_curvature(self) -> Jet:
        return _trace_ijij(self.riemann)

    def torsion(self, A: Jet) -> Jet:
        """Frame components of ``T(E_i,E_j) = nabla_i E_j - nabla_j E_i - [E_i,E_j]``."""
        return A - permute(A, "bjik->bijk") - self.c

    def bianchi_residual(self) -> np.ndarray:
        Rm = self.riemann
        cyc = Rm + permute(Rm, "bjkil->bijkl") + permute(Rm, "bkijl->bijkl")
        return _maxabs(cyc.value)

    def covariant_derivative(self, K: Jet, A: Jet | None = None) -> Jet:
        """``<nabla_{E_i} K, E_k>`` for frame components ``K[b, j]``."""
        A = self.gamma if A is None else A
        return self.d_legs(K) + jets.einsum("bj,bijk->bik", K, A)

    def lie_derivative_metric(self, K: Jet) -> Jet:
        """``(L_K g)(E_i, E_k) = <nabla_i K, E_k> + <nabla_k K, E_i>``."""
        DK = self.covariant_derivative(K)
        return DK + permute(DK, "bki->bik")

    def killing_residual(self, K: Jet) -> np.ndarray:
        return _maxabs(self.lie_derivative_metric(K).value, axes=(1, 2))

    def gradient(self, f: Jet) -> Jet:
        """Frame components of ``grad f`` (orthonormal frame: ``E_i(f)``)."""
        return self.d_legs(f)

    # -- exterior calculus -----------------------------------------------------
    def d(self, F: FrameForm) -> FrameForm:
        p = F.degree  # for p >= n the alternating sum below vanishes identically
        comps = self.scalar(F.comps) if p == 0 else F.comps
        D = self.d_legs(comps)  # D[b, i, rest...]
        total = None
        for i in range(p + 1):
            term = Jet(np.moveaxis(D.coeffs, 1, 1 + i), D.dim, D.order) * ((-1) ** i)
            total = term if total is None else total + term
        if p >= 1:
            G = jets.einsum("bijp,bp...->bij...", self.c, comps)  # F([E_i,E_j], rest)
            for i in range(p + 1):
                for j in range(i + 1, p + 1):
                    g = np.moveaxis(G.coeffs, (1, 2), (1 + i, 1 + j))
                    term = Jet(g, G.dim, G.order) * ((-1) ** (i + j))
                    total = total + term
        return FrameForm(p + 1, total)

    def metric_in_chart(self) -> np.ndarray:
        """Chart components ``g_ab`` of the metric declared by the frame."""
        inv = np.linalg.inv(self.E.value)  # (b, a, k)
        return np.einsum("bak,bck->bac", inv, inv)


def _trace_ijij(Rm: Jet) -> Jet:
    n = Rm.shape[1]
    out = None
    for i in range(n):
        for j in range(n):
            term = Rm[:, i, j, i, j]
            out = term if out is None else out + term
    return out


def _maxabs(x: np.ndarray, axes=None) -> np.ndarray:
    x = np.abs(np.asarray(x))
    if x.ndim <= 1:
        return x
    if axes is None:
        axes = tuple(range(1, x.ndim))
    return x.max(axis=axes)


# -- functional entry points -------------------------------------------------------

def structure_functions(patch: FramePatch, points, order: int = 2) -> np.ndarray:
    return patch.at(points, order).c.value


def levi_civita(patch: FramePatch, points, order: int = 2) -> np.ndarray:
    return patch.at(points, order).gamma.value


def riemann(patch: FramePatch, points, order: int = 3) -> np.ndarray:
    return patch.at(points, order).riemann.value


def scalar_curvature(patch: FramePatch, points, order: int = 3) -> np.ndarray:
    return patch.at(points, order).scalar_curvature.value


def killing_residual(patch: FramePatch, K: Callable[["FrameGeometry"], Jet], points,
                     order: int = 3) -> np.ndarray:
    geo = patch.at(points, order)
    return geo.killing_residual(K(geo))


def exterior_derivative(form: Callable[["FrameGeometry"], FrameForm], patch: FramePatch, points,
                        order: int = 3) -> np.ndarray:
    geo = patch.at(points, order)
    return geo.d(form(geo)).values
