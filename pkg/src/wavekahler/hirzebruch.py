"""Cohomogeneity-one second-Chern-Einstein family over the first Hirzebruch surface.

The base metric is ``g_M = h^2 (e1^2 + e2^2) + h^2 h'^2 e3^2 + dt^2`` with
orthonormal frame ``E1 = X/h, E2 = Y/h, E3 = V/(h h'), E4 = d_t`` where
``[X,Y] = 2V, [Y,V] = 2X, [V,X] = 2Y``.  Writing ``h' = sqrt(y(h))`` the
second-Chern-Einstein condition becomes a linear ODE in ``y`` with solution
``y = c1 h^4 + c2 h^-4 + 1``; the endpoint conditions fix ``h_l = 3^(1/4) h_0``.

Numerics avoid the square-root endpoint singularity with the substitution
``h = h0 + (hl - h0) sin^2(s/2)``, ``s in [0, pi]``.  In that variable ``dt/ds``
is smooth and positive on the closed interval, so ``t(h)`` is a regular
quadrature and ``s(t)`` solves a regular ODE, which also gives Taylor series
of ``h`` at any ``t``, endpoints included.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from . import jets
from .akcore import AKGeometry
from .jets import Jet
from .wavebuild import BaseAK, WaveStructure, build

ROOT = 3.0 ** 0.25
_GL_NODES, _GL_WEIGHTS = leggauss(48)


class ConditionViolatedError(ValueError):
    pass


class NumericError(RuntimeError):
    pass


@dataclass(frozen=True)
class HirzebruchProfile:
    h0: float

    def __post_init__(self):
        if not self.h0 > 0:
            raise ValueError(f"h0 must be positive, got {self.h0}")

    # closed-form data ---------------------------------------------------------
    @property
    def hl(self) -> float:
        return ROOT * self.h0

    @property
    def c1(self) -> float:
        return -1.0 / (self.h0 ** 4 + self.hl ** 4)

    @property
    def c2(self) -> float:
        return -self.h0 ** 4 * self.hl ** 4 / (self.h0 ** 4 + self.hl ** 4)

    def y(self, h):
        h = np.asarray(h, dtype=float)
        return self.c1 * h ** 4 + self.c2 * h ** -4 + 1.0

    def dy(self, h):
        h = np.asarray(h, dtype=float)
        return 4.0 * self.c1 * h ** 3 - 4.0 * self.c2 * h ** -5

    def d2y(self, h):
        h = np.asarray(h, dtype=float)
        return 12.0 * self.c1 * h ** 2 + 20.0 * self.c2 * h ** -6

    def y_printed(self, h):
        """The explicit display ``-h^4/(4 h0^4) - (3 h0^4 / 4) h^-4 + 1``."""
        h = np.asarray(h, dtype=float)
        return -h ** 4 / (4.0 * self.h0 ** 4) - 0.75 * self.h0 ** 4 * h ** -4 + 1.0

    # substitution variable ----------------------------------------------------------
    def h_of_s(self, s):
        return self.h0 + (self.hl - self.h0) * np.sin(np.asarray(s) / 2.0) ** 2

    def s_of_h(self, h):
        r = (np.asarray(h, dtype=float) - self.h0) / (self.hl - self.h0)
        return 2.0 * np.arcsin(np.sqrt(np.clip(r, 0.0, 1.0)))

    def _w_from_h(self, h):
        """``dt/ds`` as a function of ``h`` (works on arrays and jets)."""
        h0, hl = self.h0, self.hl
        S = h0 ** 4 + hl ** 4
        q = (h + h0) * (h * h + h0 ** 2) * (hl + h) * (hl ** 2 + h * h)
        if isinstance(q, Jet):
            return h * h * jets.sqrt(S * jets.reciprocal(q), "dt/ds")
        return h * h * np.sqrt(S / q)

    def dt_ds(self, s):
        return self._w_from_h(self.h_of_s(s))

    def t_of_s(self, s):
        s = np.asarray(s, dtype=float)
        half = s[..., None] / 2.0
        nodes = half * (_GL_NODES + 1.0)
        return (half[..., 0]) * (self.dt_ds(nodes) @ _GL_WEIGHTS)

    def t_of_h(self, h):
        return self.t_of_s(self.s_of_h(h))

    @cached_property
    def length(self) -> float:
        """``l = int_{h0}^{hl} dh / sqrt(y)`` by adaptive quadrature in ``s``."""
        val, err = quad(self.dt_ds, 0.0, np.pi, epsabs=1e-13, epsrel=1e-12, limit=200)
        if err > 1e-10:
            raise NumericError(f"quadrature for l did not converge (error estimate {err:.2e})")
        return float(val)

    def s_of_t(self, t, tol: float = 1e-15, maxiter: int = 50):
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12) or np.any(t > self.length + 1e-12):
            raise ValueError(f"t outside [0, l = {self.length:.6g}]")
        s = np.clip(np.pi * t / self.length, 0.0, np.pi)
        for _ in range(maxiter):
            step = (self.t_of_s(s) - t) / self.dt_ds(s)
            s = np.clip(s - step, 0.0, np.pi)
            if np.max(np.abs(step), initial=0.0) < tol:
                return s
        raise NumericError("inversion of t(h) did not converge")

    def h_of_t(self, t):
        return self.h_of_s(self.s_of_t(t))

    # derivatives through the y-representation ---------------------------------------------
    def derivatives(self, t) -> tuple[np.ndarray, ...]:
        """``(h, h', h'', h''')`` at ``t`` using ``h' = sqrt(y)``, ``h'' = y'/2``, ``h''' = y'' h'/2``."""
        s = self.s_of_t(t)
        h = self.h_of_s(s)
        # h' = (dh/ds) / (dt/ds) stays accurate where y vanishes
        hp = (self.hl - self.h0) * np.sin(s / 2) * np.cos(s / 2) / self.dt_ds(s)
        hpp = 0.5 * self.dy(h)
        hppp = 0.5 * self.d2y(h) * hp
        return h, hp, hpp, hppp

    def condition_terms(self, h) -> tuple[np.ndarray, np.ndarray]:
        """The two printed expressions for ``H'^2/8`` as functions of ``h``."""
        h = np.asarray(h, dtype=float)
        y, dy, d2y = self.y(h), self.dy(h), self.d2y(h)
        first = (4.0 - 4.0 * y - h * dy) / h ** 2
        # -(5 h' h'' + h h''') / (2 h h') with h'' = y'/2, h''' = y'' h'/2
        second = -(5.0 * dy + h * d2y) / (4.0 * h)
        return first, second

    def H_prime(self, t):
        h = self.h_of_t(t)
        first, _ = self.condition_terms(h)
        if np.any(first < -1e-12):
            raise ConditionViolatedError(f"H'^2/8 < 0 (min {np.min(first):.3g})")
        return np.sqrt(8.0 * np.clip(first, 0.0, None))

    def H(self, t):
        """``H(t) = int_0^t H'`` (gauge ``H(0) = 0``)."""
        t = np.asarray(t, dtype=float)
        half = t[..., None] / 2.0
        nodes = half * (_GL_NODES + 1.0)
        return half[..., 0] * (self.H_prime(nodes) @ _GL_WEIGHTS)

    # Taylor series ---------------------------------------------------------------
    def s_series(self, t0, order: int) -> np.ndarray:
        """Taylor coefficients of ``s(t)`` at ``t0`` from ``ds/dt = 1/w(s)`` (Picard)."""
        t0 = np.atleast_1d(np.asarray(t0, dtype=float))
        s0 = self.s_of_t(t0)
        s = Jet.constant(s0, 1, 0)
        for _ in range(order):  # each pass fixes one more coefficient
            h = self.h_of_s_jet(s)
            rate = jets.reciprocal(self._w_from_h(h), "dt/ds")
            s = rate.antiderivative(0, s0)
        return s.coeffs

    def h_of_s_jet(self, s: Jet) -> Jet:
        return self.h0 + (self.hl - self.h0) * jets.sin(s * 0.5) ** 2

    def series(self, t0, order: int) -> dict[str, np.ndarray]:
        """Taylor coefficients at ``t0`` of ``h, h', h'', H', H`` (each of length ``order + 1``)."""
        t0 = np.atleast_1d(np.asarray(t0, dtype=float))
        K = order + 3
        s = Jet(self.s_series(t0, K), 1, K)
        h = self.h_of_s_jet(s)
        hp, hpp = h.diff(0), h.diff(0).diff(0)
        hj, hpj, hppj = h.truncate(order), hp.truncate(order), hpp.truncate(order)
        cond = (4.0 - 4.0 * hpj * hpj - 2.0 * hj * hppj) * jets.reciprocal(hj * hj)
        if np.any(cond.value < -1e-12):
            raise ConditionViolatedError("H'^2/8 < 0")
        Hp = jets.sqrt(8.0 * cond, "H'")
        Hseries = Hp.antiderivative(0, self.H(t0))
        return {"h": hj.coeffs, "hp": hpj.coeffs, "hpp": hppj.coeffs,
                "hppp": hpp.diff(0).truncate(order).coeffs,
                "Hp": Hp.coeffs, "H": Hseries.truncate(order).coeffs}

    def jets_at(self, t: Jet) -> dict[str, Jet]:
        """Compose the Taylor series with a chart jet ``t``."""
        ser = self.series(t.value.ravel(), t.order)
        shape = t.shape
        return {k: jets.compose(v.reshape(shape + (v.shape[-1],)), t) for k, v in ser.items()}

    def table(self, n: int) -> dict[str, np.ndarray]:
        """Profile table on ``n`` equispaced ``t`` values including both ends."""
        t = np.linspace(0.0, self.length, n)
        h, hp, hpp, hppp = self.derivatives(t)
        Hp = self.H_prime(t)
        return {"t": t, "h": h, "hp": hp, "hpp": hpp, "Hp": Hp, "H": self.H(t),
                "lambda": Hp ** 2 / 8.0}


def solve_profile(h0: float) -> HirzebruchProfile:
    """Build and validate the profile for ``h(0) = h0``."""
    prof = HirzebruchProfile(float(h0))
    _ = prof.length
    return prof


# -- checks -----------------------------------------------------------------------------

def profile_invariants(p: HirzebruchProfile) -> dict[str, float]:
    h0, hl = p.h0, p.hl
    mid = np.linspace(h0, hl, 203)[1:-1]
    first, _ = p.condition_terms(np.linspace(h0, hl, 201))
    return {
        "ratio": abs(hl / h0 - ROOT),
        "root_P": abs(-(hl / h0) ** 4 + 3.0),
        "y(h0)": abs(p.y(h0)),
        "y(hl)": abs(p.y(hl)),
        "y'(h0)-2/h0": abs(p.dy(h0) - 2.0 / h0),
        "y'(hl)+2/hl": abs(p.dy(hl) + 2.0 / hl),
        "c-relation": abs((h0 ** 4 + hl ** 4) + 2.0 * (h0 ** 4 - hl ** 4)) / h0 ** 4,
        "printed_y": float(np.max(np.abs(p.y(mid) - p.y_printed(mid)))),
        "min_y_interior": float(np.min(p.y(mid))),
        "min_H'^2/8": float(np.min(first)),
    }


def interior_t(p: HirzebruchProfile, n: int = 50, margin: float = 0.01) -> np.ndarray:
    return np.linspace(margin * p.length, (1 - margin) * p.length, n)


def ode_residual(p: HirzebruchProfile, t) -> dict[str, float]:
    """Residuals of the third-order ODE in ``t`` and its ``y``-form."""
    t = np.asarray(t, dtype=float)
    ser = p.series(t, 3)
    # t-form from the Taylor series of h(t) (independent of the closed-form y)
    h, h1, h2, h3 = (ser["h"][:, k] * np.array([1, 1, 2, 6])[k] for k in range(4))
    t_form = -h3 / h1 - h2 / h + 8 * h1 ** 2 / h ** 2 - 8 / h ** 2
    hh = p.h_of_t(t)
    y_form = (-0.5 * p.d2y(hh) - p.dy(hh) / (2 * hh) + 8 * p.y(hh) / hh ** 2 - 8 / hh ** 2)
    return {"t_form": float(np.max(np.abs(t_form))), "y_form": float(np.max(np.abs(y_form)))}


def y_form_residual(c1: float, c2: float, h) -> np.ndarray:
    """``-y''/2 - y'/(2h) + 8y/h^2 - 8/h^2`` for ``y = c1 h^4 + c2 h^-4 + 1``."""
    h = np.asarray(h, dtype=float)
    y = c1 * h ** 4 + c2 * h ** -4 + 1
    dy = 4 * c1 * h ** 3 - 4 * c2 * h ** -5
    d2y = 12 * c1 * h ** 2 + 20 * c2 * h ** -6
    return -0.5 * d2y - dy / (2 * h) + 8 * y / h ** 2 - 8 / h ** 2


@dataclass
class HReconstruction:
    t: np.ndarray
    H_prime: np.ndarray
    H: np.ndarray
    condition_gap: float
    linear_identity: float  # max |H' - 4 h / h0^2|


def reconstruct_H(p: HirzebruchProfile, n: int = 50) -> HReconstruction:
    t = np.linspace(0.0, p.length, n)
    Hp = p.H_prime(t)
    first, second = p.condition_terms(p.h_of_t(interior_t(p, n)))
    return HReconstruction(t, Hp, p.H(t), float(np.max(np.abs(first - second))),
                           float(np.max(np.abs(Hp - 4.0 * p.h_of_t(t) / p.h0 ** 2))))


def printed_r_coefficients(p: HirzebruchProfile, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients of ``E1^E2``, ``E3^E4`` and ``dtheta^dphi`` in the printed 6-dim ``r``."""
    h = p.h_of_t(t)
    first, second = p.condition_terms(h)
    Hp2_8 = p.H_prime(t) ** 2 / 8.0
    # (5 h'h'' + h h''')/(h h') = -2 * second
    return first, 2.0 * second - Hp2_8, Hp2_8


@dataclass
class SCEReport:
    t: np.ndarray
    lam: np.ndarray
    coefficient_spread: np.ndarray
    generic_vs_printed: np.ndarray
    prop_residual: np.ndarray
    rho_vs_base: np.ndarray
    trace_residual: np.ndarray
    sce_residual: np.ndarray
    nijenhuis_norm: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(max(np.max(a) for a in (self.coefficient_spread, self.generic_vs_printed,
                                             self.prop_residual, self.rho_vs_base,
                                             self.trace_residual, self.sce_residual)))


def sce_check_dim6(p: HirzebruchProfile, t, order: int = 3) -> SCEReport:
    """Second-Chern-Einstein check: printed display plus the generic frame machinery."""
    t = np.asarray(t, dtype=float)
    a, b, c = printed_r_coefficients(p, t)
    lam = c
    spread = np.max(np.abs(np.stack([a - lam, b - lam, c - lam])), axis=0)
    W = wave(p)
    pts = np.column_stack([np.full_like(t, 1.0), np.full_like(t, 0.5), t])
    geo = W.at(pts, order)
    r = geo.r.value
    printed = np.zeros_like(r)
    for (i, j), v in (((0, 1), a), ((2, 3), b), ((4, 5), c)):
        printed[:, i, j], printed[:, j, i] = v, -v
    base_geo = W.base.at(t[:, None], order)
    rho_M = base_geo.rho.value
    Hp2_8 = p.H_prime(t) ** 2 / 8.0
    prop = np.zeros_like(r)
    prop[:, :4, :4] = rho_M
    prop[:, 2, 3] -= Hp2_8
    prop[:, 3, 2] += Hp2_8
    prop[:, 4, 5] += Hp2_8
    prop[:, 5, 4] -= Hp2_8
    rho_pad = np.zeros_like(r)
    rho_pad[:, :4, :4] = rho_M
    sH = geo.hermitian_scalar.value
    lam_g, sce = geo.sce()
    N2 = geo.nijenhuis_norm2().value
    return SCEReport(
        t=t, lam=lam, coefficient_spread=spread,
        generic_vs_printed=_maxabs(r - printed),
        prop_residual=_maxabs(r - prop),
        rho_vs_base=_maxabs(geo.rho.value - rho_pad),
        trace_residual=np.abs(sH - 6.0 * lam),
        sce_residual=sce,
        nijenhuis_norm=np.sqrt(N2))


def _maxabs(x) -> np.ndarray:
    x = np.abs(np.asarray(x))
    return x.reshape(len(x), -1).max(axis=1)


def boundary_smoothness_check(p: HirzebruchProfile) -> dict[str, float]:
    """Endpoint conditions through the ``y`` representation (one-sided limits)."""
    h0, hl = p.h0, p.hl
    hp0, hpl = np.sqrt(max(p.y(h0), 0.0)), np.sqrt(max(p.y(hl), 0.0))
    return {
        "h''(0)-1/h(0)": abs(0.5 * p.dy(h0) - 1.0 / h0),
        "h''(l)+1/h(l)": abs(0.5 * p.dy(hl) + 1.0 / hl),
        "h'(0)": float(hp0),
        "h'(l)": float(hpl),
        "h'''(0)": abs(0.5 * p.d2y(h0) * hp0),
        "h'''(l)": abs(0.5 * p.d2y(hl) * hpl),
    }


def scaling_residual(p: HirzebruchProfile, s: float, n: int = 40) -> float:
    """``max |h_{s h0}(t) - s h_{h0}(t/s)|`` over the scaled interval."""
    q = HirzebruchProfile(s * p.h0)
    t = np.linspace(0.0, q.length, n)
    return float(np.max(np.abs(q.h_of_t(t) - s * p.h_of_t(np.clip(t / s, 0.0, p.length)))))


# -- frames ----------------------------------------------------------------------------

def _quaternion_fields(env):
    """Left-invariant fields ``q i, q j, q k`` on S^3 in the chart ``(x1, x2, x3)``."""
    x1, x2, x3 = env["x1"], env["x2"], env["x3"]
    x0 = jets.sqrt(1.0 - x1 * x1 - x2 * x2 - x3 * x3, "x0")
    X = [x0, x3, -x2]
    Y = [-x3, x0, x1]
    V = [x2, -x1, x0]
    return X, Y, V


def hirzebruch_base(p: HirzebruchProfile, kind: str = "abstract") -> BaseAK:
    """The base frame ``{E1, E2, E3, E4}`` with ``J E1 = E2``, ``J E3 = E4``.

    ``abstract`` uses the chart ``(t,)`` and supplies brackets directly;
    ``coordinate`` realises ``X, Y, V`` as left-invariant fields on a
    quaternion chart ``(x1, x2, x3)`` of S^3.
    """
    domain_t = (0.0, p.length)

    def derived(env):
        return p.jets_at(env["t"])

    if kind == "abstract":
        def legs(env):
            return [[0.0], [0.0], [0.0], [1.0]]

        def structure(env):
            h, hp, hpp = env["h"], env["hp"], env["hpp"]
            ih = jets.reciprocal(h, "1/h")
            ihhp = jets.reciprocal(h * hp, "1/(h h')")
            c = [[[0.0] * 4 for _ in range(4)] for _ in range(4)]

            def put(i, j, k, v):
                c[i][j][k] = v
                c[j][i][k] = -v

            put(0, 1, 2, 2.0 * hp * ih)         # [E1,E2] = (2h'/h) E3
            put(1, 2, 0, 2.0 * ihhp)            # [E2,E3] = 2/(h h') E1
            put(2, 0, 1, 2.0 * ihhp)            # [E3,E1] = 2/(h h') E2
            put(3, 0, 0, -hp * ih)              # [E4,E1] = -(h'/h) E1
            put(3, 1, 1, -hp * ih)
            put(3, 2, 2, -(hp * hp + h * hpp) * ihhp)
            return c

        return BaseAK("hirzebruch", ("t",), 4, legs, (domain_t,), structure=structure,
                      derived=derived, derived_names=("h", "hp", "hpp", "H", "Hp"),
                      meta={"h0": p.h0})

    if kind == "coordinate":
        def legs(env):
            X, Y, V = _quaternion_fields(env)
            ih = jets.reciprocal(env["h"], "1/h")
            ihhp = jets.reciprocal(env["h"] * env["hp"], "1/(h h')")
            return [[a * ih for a in X] + [0.0], [a * ih for a in Y] + [0.0],
                    [a * ihhp for a in V] + [0.0], [0.0, 0.0, 0.0, 1.0]]

        box = (-0.4, 0.4)
        return BaseAK("hirzebruch-quaternion", ("x1", "x2", "x3", "t"), 4, legs,
                      (box, box, box, domain_t), derived=derived,
                      derived_names=("h", "hp", "hpp", "H", "Hp"), meta={"h0": p.h0})
    raise ValueError(f"unknown frame kind {kind!r}")


class ProfileField:
    """``H(t)`` of a profile as a wave-profile callable, with its exact ``t``-partial."""

    def __init__(self, profile: HirzebruchProfile):
        self.profile = profile
        self.source = f"H_hirzebruch(h0={profile.h0:g})"

    def __call__(self, env):
        return env["H"] if "H" in env else self.profile.jets_at(env["t"])["H"]

    def partials(self, env):
        return {"t": env["Hp"] if "Hp" in env else self.profile.jets_at(env["t"])["Hp"]}


def wave(p: HirzebruchProfile, kind: str = "abstract") -> WaveStructure:
    return build(hirzebruch_base(p, kind), ProfileField(p))


def frame_agreement(p: HirzebruchProfile, n: int = 10, seed: int = 0, order: int = 3) -> dict:
    """Compare structure functions and curvature of the abstract and quaternion frames."""
    qb = hirzebruch_base(p, "coordinate")
    pts = qb.patch.sample(n, seed)
    gq = AKGeometry(qb.patch, pts, order)
    ga = AKGeometry(hirzebruch_base(p, "abstract").patch, pts[:, 3:], order)
    return {
        "c": float(np.max(np.abs(gq.c.value - ga.c.value))),
        "rho": float(np.max(np.abs(gq.rho.value - ga.rho.value))),
        "r": float(np.max(np.abs(gq.r.value - ga.r.value))),
        "s_H": float(np.max(np.abs(gq.hermitian_scalar.value - ga.hermitian_scalar.value))),
    }
