"""Almost-Kähler structure on an orthonormal frame.

Frame legs are paired ``(e_0, e_1 = J e_0), (e_2, e_3 = J e_2), ...``.  The
Nijenhuis tensor is normalised by
``4 N(X,Y) = [JX,JY] - [X,Y] - J[JX,Y] - J[X,JY]`` and all curvature forms use
the ``R_{X,Y} = nabla_{[X,Y]} - [nabla_X, nabla_Y]`` sign.

Production quantities (``rho``, ``r``, ``rho_star``) come straight from the
curvature of the relevant connection; the structural identities are evaluated
separately as cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import jets
from .framegeo import FrameForm, FrameGeometry, FramePatch, permute
from .jets import Jet, OrderError


def complex_structure(n: int) -> np.ndarray:
    """Matrix ``Jm`` with ``J e_j = sum_i Jm[i, j] e_i``."""
    if n % 2:
        raise ValueError("frame dimension must be even")
    Jm = np.zeros((n, n))
    for k in range(0, n, 2):
        Jm[k + 1, k] = 1.0
        Jm[k, k + 1] = -1.0
    return Jm


@dataclass(frozen=True)
class AKFrame:
    """A frame patch whose legs are J-paired; omega(e_{2k}, e_{2k+1}) = 1."""

    patch: FramePatch

    @property
    def n(self) -> int:
        return self.patch.frame_dim

    @property
    def J(self) -> np.ndarray:
        return complex_structure(self.n)

    @property
    def omega(self) -> np.ndarray:
        # omega(A, B) = g(JA, B)  =>  omega[i, j] = Jm[j, i]
        return self.J.T.copy()

    def at(self, points, order: int = 3) -> "AKGeometry":
        return AKGeometry(self.patch, points, order)


class AKGeometry(FrameGeometry):
    """Frame geometry plus the almost-Kähler quantities built on top of it."""

    def __init__(self, patch: FramePatch, points, order: int = 3):
        super().__init__(patch, points, order)
        self.Jm = complex_structure(self.n)
        self.omega_comps = self.Jm.T.copy()

    # -- forms ----------------------------------------------------------------
    @property
    def omega(self) -> FrameForm:
        return FrameForm(2, self.scalar(1.0).reshape(-1, 1, 1) * self.omega_comps)

    def J_vector(self, v: Jet) -> Jet:
        return jets.einsum("ij,bj...->bi...", self.Jm, v)

    def J_form(self, a: FrameForm) -> FrameForm:
        """``(J alpha)(X) = -alpha(JX)`` on 1-forms."""
        if a.degree != 1:
            raise ValueError("J_form acts on 1-forms")
        return FrameForm(1, -jets.einsum("bi,ij->bj", a.comps, self.Jm))

    def J_invariant_part(self, a: Jet) -> Jet:
        """``A^{J,+}(X,Y) = (A(X,Y) + A(JX,JY)) / 2`` for a 2-tensor ``a[b, i, j]``."""
        aJJ = jets.einsum("bmn,mi->bin", a, self.Jm)
        aJJ = jets.einsum("bin,nj->bij", aJJ, self.Jm)
        return (a + aJJ) * 0.5

    def omega_trace(self, a: Jet) -> Jet:
        """``sum_i a(e_i, J e_i)``."""
        return jets.einsum("bim,mi->b", a, self.Jm)

    # -- first-order objects -----------------------------------------------------
    @cached_property
    def nijenhuis(self) -> Jet:
        """``N[b, i, j, k] = <N(E_i, E_j), E_k>`` from brackets only."""
        c, Jm = self.c, self.Jm
        cJJ = jets.einsum("bpqk,pi->biqk", c, Jm)
        cJJ = jets.einsum("biqk,qj->bijk", cJJ, Jm)  # [JE_i, JE_j]
        cJ1 = jets.einsum("bpjk,pi->bijk", c, Jm)  # [JE_i, E_j]
        cJ2 = jets.einsum("biqk,qj->bijk", c, Jm)  # [E_i, JE_j]
        J_of = jets.einsum("mk,bijk->bijm", Jm, cJ1 + cJ2)
        return (cJJ - c - J_of) * 0.25

    def nijenhuis_J_residual(self) -> np.ndarray:
        """``N(JA, B) + J N(A, B)`` and antisymmetry of ``N``."""
        N, Jm = self.nijenhuis.value, self.Jm
        NJ = np.einsum("bpjk,pi->bijk", N, Jm)
        JN = np.einsum("mk,bijk->bijm", Jm, N)
        return np.maximum(_maxabs(NJ + JN), _maxabs(N + np.swapaxes(N, 1, 2)))

    def nijenhuis_norm2(self) -> Jet:
        N = self.nijenhuis
        return jets.einsum("bijk,bijk->b", N, N)

    @cached_property
    def DJ(self) -> Jet:
        """``DJ[b, i, j, k] = <(D_{E_i} J) E_j, E_k>`` from the Levi-Civita connection."""
        G, Jm = self.gamma, self.Jm
        a = jets.einsum("mj,bimk->bijk", Jm, G)
        b = jets.einsum("bijl,kl->bijk", G, Jm)
        return a - b

    @cached_property
    def chern(self) -> Jet:
        """Canonical Hermitian connection ``nabla = D - J(DJ)/2``."""
        return self.gamma - jets.einsum("bijm,km->bijk", self.DJ, self.Jm) * 0.5

    @cached_property
    def chern_curvature(self) -> Jet:
        return self.curvature(self.chern)

    # -- Ricci-type forms ----------------------------------------------------------
    @cached_property
    def rho(self) -> Jet:
        """First-Chern-Ricci form ``rho(A,B) = 1/2 sum_i <R_{A,B} e_i, J e_i>``."""
        return jets.einsum("bijkm,mk->bij", self.chern_curvature, self.Jm) * 0.5

    @cached_property
    def r(self) -> Jet:
        """Second-Chern-Ricci form ``r(A,B) = 1/2 sum_i <R_{e_i,Je_i} A, B>``."""
        return jets.einsum("bimpq,mi->bpq", self.chern_curvature, self.Jm) * 0.5

    @cached_property
    def rho_star(self) -> Jet:
        return jets.einsum("bimpq,mi->bpq", self.riemann, self.Jm) * 0.5

    @cached_property
    def hermitian_scalar(self) -> Jet:
        return self.omega_trace(self.rho)

    @property
    def star_scalar(self) -> Jet:
        """``s*`` = twice the omega-trace of ``rho*`` in the pair-sum normalisation."""
        return self.omega_trace(self.rho_star)

    # -- identity residuals ----------------------------------------------------------
    def ak_relation_residual(self) -> np.ndarray:
        """``<(D_A J)B, C> - 2 <JA, N(B,C)>`` over all frame triples."""
        N = self.nijenhuis
        rhs = jets.einsum("ma,bkcm->bakc", self.Jm, N) * 2.0
        return _maxabs(self.DJ.value - rhs.value)

    def chern_torsion(self) -> Jet:
        return self.torsion(self.chern)

    def torsion_minus_nijenhuis(self) -> np.ndarray:
        return _maxabs(self.chern_torsion().value - self.nijenhuis.value)

    def chern_metricity_residual(self) -> np.ndarray:
        A = self.chern.value
        return _maxabs(A + np.swapaxes(A, 2, 3))

    def chern_J_residual(self) -> np.ndarray:
        """``<nabla_i (J E_j), E_k> - <J nabla_i E_j, E_k>``."""
        A, Jm = self.chern.value, self.Jm
        lhs = np.einsum("mj,bimk->bijk", Jm, A)
        rhs = np.einsum("bijl,kl->bijk", A, Jm)
        return _maxabs(lhs - rhs)

    def second_chern_formula_rhs(self) -> Jet:
        """``(rho)^{J,+} + sum <JX,N_ik><Y,N_ik> + sum <N(X,e_k),e_i><N(Y,e_k),Je_i>``."""
        N, Jm = self.nijenhuis, self.Jm
        JN = jets.einsum("ma,bikm->baik", Jm, N)  # <J e_a, N(e_i, e_k)>
        s1 = jets.einsum("baik,bikc->bac", JN, N)
        NJ = jets.einsum("bckm,mi->bcki", N, Jm)  # <N(e_c, e_k), J e_i>
        s2 = jets.einsum("baki,bcki->bac", N, NJ)
        return self.J_invariant_part(self.rho) + s1 + s2

    def second_chern_formula_residual(self) -> np.ndarray:
        return _maxabs(self.r.value - self.second_chern_formula_rhs().value)

    def r_J_invariance_residual(self) -> np.ndarray:
        r = self.r
        return _maxabs(r.value - self.J_invariant_part(r).value)

    def trace_residuals(self) -> dict[str, np.ndarray]:
        sH = self.hermitian_scalar.value
        return {"trace_rho_vs_trace_r": np.abs(sH - self.omega_trace(self.r).value)}

    def d_omega_residual(self) -> np.ndarray:
        return _maxabs(self.d(self.omega).values)

    def d_rho_residual(self) -> np.ndarray:
        if self.rho.order < 1:
            raise OrderError("d(rho) needs one more jet order")
        return _maxabs(self.d(FrameForm(2, self.rho)).values)

    def sce(self) -> tuple[np.ndarray, np.ndarray]:
        """Pointwise ``lambda = s^H / 2n`` and ``max |r - lambda omega|``."""
        lam = self.omega_trace(self.r).value / self.n
        res = self.r.value - lam[:, None, None] * self.omega_comps
        return lam, _maxabs(res)

    def omega_g_residual(self) -> np.ndarray:
        """``omega(A,B) - g(JA,B)`` with g the identity in the frame."""
        return np.full(len(self.points), np.abs(self.omega_comps - self.Jm.T).max())

    # -- extremality -----------------------------------------------------------------
    def symplectic_gradient(self, f: Jet) -> Jet:
        """``J grad f`` in frame components."""
        return self.J_vector(self.gradient(f))

    def extremality_residual(self) -> np.ndarray:
        sH = self.hermitian_scalar
        if sH.order < 2:
            raise OrderError(
                f"extremality needs s^H to second order; raise the jet order (now {self.order})")
        return self.killing_residual(self.symplectic_gradient(sH))


def _maxabs(x: np.ndarray) -> np.ndarray:
    x = np.abs(np.asarray(x))
    return x.reshape(len(x), -1).max(axis=1) if x.ndim > 1 else x


@dataclass
class CurvatureReport:
    point: np.ndarray
    rho: np.ndarray
    r: np.ndarray
    rho_star: np.ndarray
    s_H: float
    s_g: float
    s_star: float
    nijenhuis_norm2: float
    residuals: dict[str, float] = field(default_factory=dict)


def curvature_reports(geo: AKGeometry) -> list[CurvatureReport]:
    checks = {
        "ak_relation": geo.ak_relation_residual(),
        "torsion_minus_nijenhuis": geo.torsion_minus_nijenhuis(),
        "second_chern_formula": geo.second_chern_formula_residual(),
        "r_J_invariance": geo.r_J_invariance_residual(),
        "d_omega": geo.d_omega_residual(),
        **geo.trace_residuals(),
    }
    out = []
    for b, p in enumerate(geo.points):
        out.append(CurvatureReport(
            point=p, rho=geo.rho.value[b], r=geo.r.value[b], rho_star=geo.rho_star.value[b],
            s_H=float(geo.hermitian_scalar.value[b]), s_g=float(geo.scalar_curvature.value[b]),
            s_star=float(geo.star_scalar.value[b]),
            nijenhuis_norm2=float(geo.nijenhuis_norm2().value[b]),
            residuals={k: float(v[b]) for k, v in checks.items()}))
    return out


# -- functional entry points -----------------------------------------------------------

def nijenhuis(frame: AKFrame, points, order: int = 2) -> np.ndarray:
    return frame.at(points, order).nijenhuis.value


def ak_relation_residual(frame: AKFrame, points, order: int = 2) -> np.ndarray:
    return frame.at(points, order).ak_relation_residual()


def chern_connection(frame: AKFrame, points, order: int = 2) -> np.ndarray:
    return frame.at(points, order).chern.value


def first_chern_ricci(frame: AKFrame, points, order: int = 3) -> np.ndarray:
    return frame.at(points, order).rho.value


def second_chern_ricci(frame: AKFrame, points, order: int = 3) -> np.ndarray:
    return frame.at(points, order).r.value


def second_chern_formula_residual(frame: AKFrame, points, order: int = 3) -> np.ndarray:
    return frame.at(points, order).second_chern_formula_residual()


def star_ricci(frame: AKFrame, points, order: int = 3) -> np.ndarray:
    return frame.at(points, order).rho_star.value


def sce_residual(frame: AKFrame, points, order: int = 3) -> tuple[np.ndarray, np.ndarray]:
    return frame.at(points, order).sce()


def extremality_residual(frame: AKFrame, points, order: int = 4) -> np.ndarray:
    return frame.at(points, order).extremality_residual()
