"""Almost-Kähler duals of general plane-fronted wave metrics.

Given an almost-Kähler base ``(M, g_M, omega_M, J_M)`` and a function ``H`` on
``S^1 x M`` (no ``phi`` dependence), the total space ``S^1 x S^1 x M`` carries

* the Lorentzian wave metric ``h = 2 dphi dtheta + H dtheta^2 + g_M``,
* the unit timelike field ``T = (H+1)/2 d_phi - d_theta`` and
  ``JT = (H-1)/2 d_phi - d_theta``,
* the Riemannian dual ``g = h + 2 T_h (x) T_h`` for which
  ``{base frame, T, JT}`` is orthonormal, and ``omega = omega_M + dtheta ^ dphi``.

The total chart is ``(theta, phi, *base chart)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets
from .akcore import AKFrame, AKGeometry
from .fieldexpr import FieldExpr, parse_field
from .framegeo import FrameForm, FramePatch, sample_box
from .jets import Jet

TWO_PI = 2.0 * np.pi


class ConstructionError(ValueError):
    pass


class UnsupportedBaseError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class BaseAK:
    """An almost-Kähler base given by a J-paired orthonormal frame on a chart.

    ``omega_chart(env)`` optionally declares the chart components of ``omega_M``
    independently of the frame, so the frame can be checked against it.
    """

    name: str
    chart: tuple[str, ...]
    frame_dim: int
    legs: Callable[[dict], Sequence]
    domain: tuple[tuple[float, float], ...]
    structure: Callable[[dict], Sequence] | None = None
    derived: Callable[[dict], dict] | None = None
    derived_names: tuple[str, ...] = ()
    darboux: bool = False
    kahler: bool = True
    omega_chart: Callable[[dict], Sequence] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def patch(self) -> FramePatch:
        return FramePatch(self.name, self.chart, self.frame_dim, self.legs, self.domain,
                          self.structure, self.derived, meta=self.meta)

    @property
    def frame(self) -> AKFrame:
        return AKFrame(self.patch)

    def at(self, points, order: int = 3) -> AKGeometry:
        return AKGeometry(self.patch, points, order)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.chart + self.derived_names


# -- presets -------------------------------------------------------------------

def _canonical_omega(n_pairs: int):
    def omega(env):
        m = 2 * n_pairs
        w = [[0.0] * m for _ in range(m)]
        for k in range(n_pairs):
            w[2 * k][2 * k + 1], w[2 * k + 1][2 * k] = 1.0, -1.0
        return w
    return omega


def flat_torus(n_pairs: int) -> BaseAK:
    """Flat torus in Darboux coordinates ``(z_1, t_1, ...)`` with ``omega = sum dz_i ^ dt_i``."""
    if n_pairs == 1:
        chart = ("z", "t")
    else:
        chart = tuple(v for k in range(1, n_pairs + 1) for v in (f"z{k}", f"t{k}"))
    m = 2 * n_pairs
    legs = lambda env: np.eye(m).tolist()
    return BaseAK(f"torus{m}", chart, m, legs, ((0.0, TWO_PI),) * m, darboux=True,
                  omega_chart=_canonical_omega(n_pairs))


def isothermal_base(u: FieldExpr | str | Callable, name: str = "isothermal",
                    domain=((-1.0, 1.0), (-1.0, 1.0)), extra: Callable[[dict], dict] | None = None,
                    extra_names: tuple[str, ...] = ()) -> BaseAK:
    """Surface with ``g = e^{2u}(dx^2 + dy^2)`` and frame ``X = e^{-u} d_x``, ``JX = e^{-u} d_y``."""
    if isinstance(u, str):
        u = parse_field(u, allowed=("x", "y"))
    ufun = u.evaluate if isinstance(u, FieldExpr) else u

    def derived(env):
        out = {"u": _as_jet(ufun(env), env["x"])}
        if extra is not None:
            out.update(extra(env))
        return out

    def legs(env):
        a = jets.exp(-env["u"], "exp(-u)")
        return [[a, 0.0], [0.0, a]]

    def omega(env):
        w = jets.exp(2.0 * env["u"], "exp(2u)")
        return [[0.0, w], [-w, 0.0]]

    return BaseAK(name, ("x", "y"), 2, legs, tuple(domain), derived=derived,
                  derived_names=("u",) + tuple(extra_names), omega_chart=omega,
                  meta={"u": u})


def round_sphere(chart: str = "north") -> BaseAK:
    """Unit sphere in a stereographic chart, with the height ``z`` as a derived scalar.

    The ``north`` chart covers everything but the south pole (``z = (1-r^2)/(1+r^2)``);
    the ``south`` chart is the orientation-compatible chart around the south pole.
    """
    sign = 1.0 if chart == "north" else -1.0

    def u(env):
        return jets.log(2.0 / (1.0 + env["x"] ** 2 + env["y"] ** 2), "u")

    def extra(env):
        r2 = env["x"] ** 2 + env["y"] ** 2
        return {"z": sign * (1.0 - r2) / (1.0 + r2)}

    name = "sphere" if chart == "north" else "sphere-south"
    return isothermal_base(u, name, ((-1.5, 1.5), (-1.5, 1.5)), extra, ("z",))


def base_preset(name: str, **kw) -> BaseAK:
    if name == "torus2":
        return flat_torus(1)
    if name == "torus4":
        return flat_torus(2)
    if name in ("sphere", "sphere-north"):
        return round_sphere("north")
    if name == "sphere-south":
        return round_sphere("south")
    if name in ("hirzebruch", "hirzebruch-quaternion"):
        from .hirzebruch import hirzebruch_base, solve_profile
        prof = solve_profile(kw.get("h0", 1.0))
        kind = "coordinate" if name.endswith("quaternion") else "abstract"
        return hirzebruch_base(prof, kind)
    raise UnsupportedBaseError(f"unknown base preset {name!r}; known: {', '.join(BASE_PRESETS)}")


BASE_PRESETS = ("torus2", "torus4", "sphere", "sphere-south", "hirzebruch",
                "hirzebruch-quaternion")


def _as_jet(v, like: Jet) -> Jet:
    if isinstance(v, Jet):
        return v
    return Jet.constant(np.broadcast_to(v, like.shape), like.dim, like.order)


# -- the wave structure -------------------------------------------------------------

@dataclass(frozen=True)
class WaveStructure:
    base: BaseAK
    H: Callable[[dict], Jet]
    patch: FramePatch
    H_source: str = ""

    @property
    def frame(self) -> AKFrame:
        return AKFrame(self.patch)

    @property
    def n(self) -> int:
        return self.patch.frame_dim

    def at(self, points, order: int = 3) -> AKGeometry:
        return AKGeometry(self.patch, points, order)

    def sample(self, n: int, seed: int = 0, margin: float = 0.01) -> np.ndarray:
        return sample_box(self.patch.domain, n, seed, margin)

    def H_values(self, points) -> np.ndarray:
        env = self.patch.env(points, 0)
        return env["H"].value

    def project(self, points) -> np.ndarray:
        """Drop ``(theta, phi)``: base chart coordinates of total-space points."""
        return np.atleast_2d(points)[:, 2:]

    # chart-level tensors (theta, phi, base...) -----------------------------------
    def display_metric(self, points) -> np.ndarray:
        """``g_M + H(dphi dtheta + dtheta dphi) + (1+H^2)/2 dtheta^2 + 2 dphi^2``."""
        points = np.atleast_2d(points)
        H = self.H_values(points)
        m = len(self.patch.chart)
        g = np.zeros((len(points), m, m))
        g[:, 0, 0] = 0.5 * (1.0 + H ** 2)
        g[:, 0, 1] = g[:, 1, 0] = H
        g[:, 1, 1] = 2.0
        if self.patch.kind == "coordinate":
            g[:, 2:, 2:] = self.base.at(self.project(points), 0).metric_in_chart()
        return g

    def lorentz_h(self, points) -> np.ndarray:
        """Chart components of ``h = 2 dphi dtheta + H dtheta^2 + g_M``."""
        points = np.atleast_2d(points)
        H = self.H_values(points)
        m = len(self.patch.chart)
        h = np.zeros((len(points), m, m))
        h[:, 0, 0] = H
        h[:, 0, 1] = h[:, 1, 0] = 1.0
        if self.patch.kind == "coordinate":
            h[:, 2:, 2:] = self.base.at(self.project(points), 0).metric_in_chart()
        return h

    def T_vectors(self, points) -> tuple[np.ndarray, np.ndarray]:
        H = self.H_values(points)
        m = len(self.patch.chart)
        T = np.zeros((len(H), m))
        JT = np.zeros((len(H), m))
        T[:, 0], T[:, 1] = -1.0, 0.5 * (H + 1.0)
        JT[:, 0], JT[:, 1] = -1.0, 0.5 * (H - 1.0)
        return T, JT

    def T_flat(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Printed g-duals ``T_flat = (H-1)/2 dtheta + dphi``, ``JT_flat = -(H+1)/2 dtheta - dphi``."""
        H = self.H_values(points)
        m = len(self.patch.chart)
        a = np.zeros((len(H), m))
        b = np.zeros((len(H), m))
        a[:, 0], a[:, 1] = 0.5 * (H - 1.0), 1.0
        b[:, 0], b[:, 1] = -0.5 * (H + 1.0), -1.0
        return a, b

    def invariant_residuals(self, points) -> dict[str, np.ndarray]:
        """Pointwise residuals of every construction identity."""
        points = np.atleast_2d(points)
        g_disp = self.display_metric(points)
        h = self.lorentz_h(points)
        T, JT = self.T_vectors(points)
        Tf, JTf = self.T_flat(points)
        Th = np.einsum("bac,bc->ba", h, T)
        out = {}
        blk = slice(None) if self.patch.kind == "coordinate" else slice(0, 2)
        gd = g_disp[:, blk, blk]
        out["h_T_T_plus_one"] = np.abs(np.einsum("ba,bac,bc->b", T, h, T) + 1.0)
        dual = h + 2.0 * np.einsum("ba,bc->bac", Th, Th)
        out["duality"] = _maxabs(dual[:, blk, blk] - gd)
        out["T_flat"] = _maxabs(np.einsum("bac,bc->ba", g_disp, T) - Tf)
        out["JT_flat"] = _maxabs(np.einsum("bac,bc->ba", g_disp, JT) - JTf)
        minus_dtheta = np.zeros_like(Tf)
        minus_dtheta[:, 0] = -1.0
        out["minus_dtheta"] = _maxabs(Tf + JTf - minus_dtheta)
        split = np.einsum("ba,bc->bac", Tf, Tf) + np.einsum("ba,bc->bac", JTf, JTf)
        if self.patch.kind == "coordinate":
            split[:, 2:, 2:] += g_disp[:, 2:, 2:]
            geo = self.at(points, 0)
            out["display_metric"] = _maxabs(geo.metric_in_chart() - g_disp)
            out["omega"] = _maxabs(self.omega_chart_from_frame(geo) - self.omega_chart_declared(points))
        else:
            gf = np.einsum("bia,bja->bij", np.stack([T, JT], 1), np.einsum("bac,bjc->bja", g_disp,
                                                                             np.stack([T, JT], 1)))
            out["display_metric"] = _maxabs(gf - np.eye(2))
        out["g_split"] = _maxabs(split[:, blk, blk] - gd)
        shifted = points.copy()
        shifted[:, 0] += TWO_PI
        out["theta_periodicity"] = np.abs(self.H_values(shifted) - self.H_values(points))
        return out

    def omega_chart_from_frame(self, geo: AKGeometry) -> np.ndarray:
        inv = np.linalg.inv(geo.E.value)  # (b, a, k): dx^a components of the coframe
        return np.einsum("bai,ij,bcj->bac", inv, geo.omega_comps, inv)

    def omega_chart_declared(self, points) -> np.ndarray:
        """``omega_M + dtheta ^ dphi`` from the base's declared chart form."""
        points = np.atleast_2d(points)
        m = len(self.patch.chart)
        w = np.zeros((len(points), m, m))
        w[:, 0, 1], w[:, 1, 0] = 1.0, -1.0
        if self.base.omega_chart is not None:
            benv = self.base.patch.env(self.project(points), 0)
            w[:, 2:, 2:] = jets.array(list(self.base.omega_chart(benv)), like=benv[self.base.chart[0]]).value
        return w


def _maxabs(x) -> np.ndarray:
    x = np.abs(np.asarray(x))
    return x.reshape(len(x), -1).max(axis=1)


def _H_callable(base: BaseAK, H) -> tuple[Callable[[dict], Jet], str]:
    if callable(H) and not isinstance(H, FieldExpr):
        return H, getattr(H, "source", getattr(H, "__name__", "H"))
    if isinstance(H, (int, float)):
        c = float(H)
        return (lambda env: c), repr(c)
    if isinstance(H, str):
        H = parse_field(H, allowed=("theta",) + base.variables, forbid_phi=True)
    if "phi" in H.variables:
        raise ConstructionError(f"H = {H.source!r} depends on phi")
    return H.evaluate, H.source


def build(base: BaseAK | str, H) -> WaveStructure:
    """The dual almost-Kähler structure on ``S^1 x S^1 x M`` for the profile ``H``.

    ``H`` is an expression string, a parsed field, a number or a callable
    ``env -> Jet``.  A callable may carry a ``partials(env)`` method returning
    chart partials of ``H`` by variable name; abstract bases use it to avoid
    losing a jet order.
    """
    if isinstance(base, str):
        base = base_preset(base)
    try:
        Hfun, src = _H_callable(base, H)
    except Exception as exc:
        if isinstance(exc, (ConstructionError,)):
            raise
        from .fieldexpr import PhiDependenceError
        if isinstance(exc, PhiDependenceError):
            raise ConstructionError(str(exc)) from exc
        raise
    chart = ("theta", "phi") + base.chart
    nb, m = base.frame_dim, len(chart)

    def derived(env):
        out = {}
        benv = {k: env[k] for k in base.chart}
        if base.derived is not None:
            out.update(base.derived(benv))
        full = {**env, **out}
        out["H"] = _as_jet(Hfun(full), env["theta"])
        return out

    def legs(env):
        H = env["H"]
        bl = base.legs(env)
        rows = [[0.0, 0.0] + list(r) for r in bl]
        rows.append([-1.0, (H + 1.0) * 0.5] + [0.0] * (m - 2))
        rows.append([-1.0, (H - 1.0) * 0.5] + [0.0] * (m - 2))
        return rows

    structure = None
    if base.structure is not None:
        def structure(env):
            n = nb + 2
            bc = base.structure(env)
            c = [[[0.0] * n for _ in range(n)] for _ in range(n)]
            for i in range(nb):
                for j in range(nb):
                    for k in range(nb):
                        c[i][j][k] = bc[i][j][k]
            partials = getattr(Hfun, "partials", None)
            dH = partials(env) if partials is not None else {}
            bl = base.legs(env)
            for i in range(nb):
                XH = 0.0
                for a, var in enumerate(base.chart):
                    comp = bl[i][a]
                    if isinstance(comp, (int, float)) and comp == 0:
                        continue
                    d = dH[var] if var in dH else env["H"].diff(chart.index(var))
                    XH = XH + comp * d
                half = XH * 0.5
                # [X, T] = [X, JT] = X(H)/2 (T - JT)
                for j in (nb, nb + 1):
                    c[i][j][nb], c[i][j][nb + 1] = half, -half
                    c[j][i][nb], c[j][i][nb + 1] = -half, half
            return c

    domain = ((0.0, TWO_PI), (0.0, TWO_PI)) + tuple(base.domain)
    names = base.patch.leg_names or tuple(f"X{i + 1}" for i in range(nb))
    patch = FramePatch(f"wave[{base.name}]", chart, nb + 2, legs, domain, structure, derived,
                       leg_names=tuple(names) + ("T", "JT"), meta={"H": src, "base": base.name})
    return WaveStructure(base, Hfun, patch, src)


# -- checks ---------------------------------------------------------------------------

def chart_form_to_frame(geo, F) -> Jet | np.ndarray:
    """Frame components ``F(E_i, E_j)`` of a chart 2-form ``F[b, a, c]``."""
    if isinstance(F, Jet):
        return jets.einsum("bic,bjc->bij", jets.einsum("bia,bac->bic", geo.E, F), geo.E)
    Ev = geo.E.value
    return np.einsum("bia,bac,bjc->bij", Ev, F, Ev)


def darboux_rho_rhs(W: WaveStructure, geo: AKGeometry) -> np.ndarray:
    """``rho_M + 1/2 sum H_{theta z_i} dtheta^dz_i + 1/2 sum H_{theta t_i} dtheta^dt_i`` in the frame."""
    H = geo.env["H"]
    if H.order < 2:
        raise jets.OrderError("H needs second derivatives")
    m = len(W.patch.chart)
    F = np.zeros((len(geo.points), m, m))
    Htheta = H.diff(0)
    for a in range(2, m):
        v = 0.5 * Htheta.diff(a).value
        F[:, 0, a], F[:, a, 0] = v, -v
    out = chart_form_to_frame(geo, F)
    nb = W.base.frame_dim
    rho_M = W.base.at(W.project(geo.points), geo.order).rho.value
    out[:, :nb, :nb] += rho_M
    return out


def check_prop_darboux(W: WaveStructure, points, order: int = 3) -> np.ndarray:
    """Pointwise max deviation of the computed first-Chern-Ricci form from the Darboux formula."""
    if not W.base.darboux:
        raise UnsupportedBaseError(
            f"base {W.base.name!r} has no Darboux chart; use the isothermal formula instead")
    geo = W.at(points, order)
    return _maxabs(geo.rho.value - darboux_rho_rhs(W, geo))


def check_scalar_equality(W: WaveStructure, points, order: int = 3) -> np.ndarray:
    """``|s^H(total) - s^H_M(base)|`` at each point."""
    geo = W.at(points, order)
    sH = geo.hermitian_scalar.value
    sM = W.base.at(W.project(geo.points), order).hermitian_scalar.value
    return np.abs(sH - sM)


@dataclass
class MechanismReport:
    base_killing: np.ndarray
    total_killing: np.ndarray
    identities: dict[str, np.ndarray]
    cartan_step: np.ndarray
    g_K_T: np.ndarray
    g_K_JT: np.ndarray
    label: str = "mechanism verification"

    @property
    def max_residual(self) -> float:
        vals = [self.total_killing, self.cartan_step, self.g_K_T, self.g_K_JT,
                *self.identities.values()]
        return float(max(np.max(v) for v in vals))


def symplectic_gradient_field(geo: AKGeometry, H: Jet) -> Jet:
    return geo.symplectic_gradient(H)


def extremal_mechanism_check(W: WaveStructure, points, order: int = 3,
                             tol: float = 1e-10) -> MechanismReport:
    """If ``K = J grad H`` is Killing on the base, check it is Killing on the total space.

    Every identity used in the argument is reported separately.
    """
    points = np.atleast_2d(points)
    bgeo = W.base.at(W.project(points), order)
    benv_H = W.patch.env(points, order)["H"]
    if np.max(np.abs(benv_H.diff(0).value)) > 1e-12:
        raise PreconditionError("H depends on theta; the mechanism needs H on the base")
    # H as a function on the base chart
    bH = _as_jet(W.H({**bgeo.env, "theta": bgeo.scalar(points[:, 0])}), bgeo._template)
    base_res = bgeo.killing_residual(bgeo.symplectic_gradient(bH))
    if np.max(base_res) > tol:
        raise PreconditionError(
            f"J grad H is not Killing on the base (residual {np.max(base_res):.3g})")
    geo = W.at(points, order)
    H = geo.env["H"]
    K = geo.symplectic_gradient(H)
    L = geo.lie_derivative_metric(K).value
    n, nb = geo.n, W.base.frame_dim
    iT, iJT = n - 2, n - 1
    ids = {
        "L(T,T)": np.abs(L[:, iT, iT]),
        "L(JT,JT)": np.abs(L[:, iJT, iJT]),
        "L(T,JT)": np.abs(L[:, iT, iJT]),
        "L(T,X_i)": np.abs(L[:, iT, :nb]).max(axis=1),
        "L(JT,X_i)": np.abs(L[:, iJT, :nb]).max(axis=1),
        "L(X_i,X_j)": np.abs(L[:, :nb, :nb]).reshape(len(points), -1).max(axis=1),
    }
    # Cartan step: 2 dT_flat(K, T) = (dH ^ dtheta)(K, T)
    Tflat = np.zeros((len(points), n))
    Tflat[:, iT] = 1.0
    dT = geo.d(FrameForm(1, Jet.constant(Tflat, geo.E.dim, geo.order))).values
    dHdth = geo.differential(H).wedge(geo.coordinate_form("theta")).values
    Kv = K.value
    # as forms, and contracted with (K, T) as in the argument
    cartan = np.maximum(_maxabs(2.0 * dT - dHdth),
                        np.abs(np.einsum("bi,bi->b", Kv, 2.0 * dT[:, :, iT] - dHdth[:, :, iT])))
    # g(K, T), g(K, JT) through the chart metric
    if W.patch.kind == "coordinate":
        g = W.display_metric(points)
        Kc = np.einsum("bi,bia->ba", Kv, geo.E.value)
        T, JT = W.T_vectors(points)
        gKT = np.abs(np.einsum("ba,bac,bc->b", Kc, g, T))
        gKJT = np.abs(np.einsum("ba,bac,bc->b", Kc, g, JT))
    else:
        gKT, gKJT = np.abs(Kv[:, iT]), np.abs(Kv[:, iJT])
    return MechanismReport(base_res, geo.killing_residual(K), ids, cartan, gKT, gKJT)
