import itertools

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from wavekahler import jets, wavebuild
from wavekahler.dim4 import IsothermalSurface
from wavekahler.framegeo import FrameForm, sample_box


def coordinate_scalar_curvature(metric: sp.Matrix, coords, point: dict) -> float:
    """Scalar curvature from the coordinate Christoffel formulas.

    Metric derivatives are taken symbolically and evaluated at ``point``; the
    contractions are then done numerically.
    """
    m = len(coords)
    g = np.array(metric.subs(point).evalf(), dtype=float)
    dg = np.array([[[float(sp.diff(metric[a, b], coords[c]).subs(point)) for c in range(m)]
                    for b in range(m)] for a in range(m)])  # dg[a, b, c] = d_c g_ab
    ddg = np.zeros((m, m, m, m))
    for a, b, c, d in itertools.product(range(m), repeat=4):
        if a <= b and c <= d:
            v = float(sp.diff(metric[a, b], coords[c], coords[d]).subs(point))
            for aa, bb in ((a, b), (b, a)):
                for cc, dd in ((c, d), (d, c)):
                    ddg[aa, bb, cc, dd] = v
    gi = np.linalg.inv(g)
    # Gamma^k_ij and its derivative d_l Gamma^k_ij
    low = 0.5 * (np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg))
    Gam = np.einsum("kl,lij->kij", gi, low)
    dlow = 0.5 * (np.einsum("jlis->lijs", ddg) + np.einsum("iljs->lijs", ddg)
                  - np.einsum("ijls->lijs", ddg))
    dgi = -np.einsum("ka,abs,bl->kls", gi, dg, gi)
    dGam = np.einsum("kls,lij->kijs", dgi, low) + np.einsum("kl,lijs->kijs", gi, dlow)
    # R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik
    Ric = (np.einsum("kijk->ij", dGam) - np.einsum("kikj->ij", dGam)
           + np.einsum("kkl,lij->ij", Gam, Gam) - np.einsum("kjl,lik->ij", Gam, Gam))
    return float(np.einsum("ij,ij->", gi, Ric))


class TestCoordinateOracle:
    def test_round_sphere_scalar_curvature(self):
        geo = wavebuild.round_sphere().at(np.array([[0.3, -0.4], [1.1, 0.2]]), 2)
        assert np.allclose(geo.scalar_curvature.value, 2.0, atol=1e-13)

    def test_dim4_wave_scalar_curvature_matches_christoffel_formula(self):
        th, ph, x, y = sp.symbols("theta phi x y")
        u = sp.Rational(3, 10) * x + sp.sin(y) / 5
        H = sp.sin(th) * x + y ** 2
        g = sp.zeros(4, 4)
        g[0, 0] = (1 + H ** 2) / 2
        g[0, 1] = g[1, 0] = H
        g[1, 1] = 2
        g[2, 2] = g[3, 3] = sp.exp(2 * u)
        surf = IsothermalSurface.from_u("0.3*x + sin(y)/5")
        W = wavebuild.build(surf.base, "sin(theta)*x + y^2")
        pts = np.array([[0.7, 1.3, 0.2, -0.5], [2.0, 0.1, -0.6, 0.4]])
        s = W.at(pts, 2).scalar_curvature.value
        for k, p in enumerate(pts):
            ref = coordinate_scalar_curvature(g, [th, ph, x, y], dict(zip([th, ph, x, y], p)))
            assert s[k] == pytest.approx(ref, abs=1e-10)

    def test_display_metric_is_the_frame_metric(self):
        W = wavebuild.build("sphere", "z*sin(theta)")
        pts = W.sample(5, seed=3)
        geo = W.at(pts, 0)
        assert np.allclose(geo.metric_in_chart(), W.display_metric(pts), atol=1e-13)


class TestFlatAndKilling:
    def test_flat_torus_is_flat(self):
        geo = wavebuild.flat_torus(2).at(sample_box(((0, 6),) * 4, 4, seed=1), 2)
        assert np.all(geo.riemann.value == 0)

    def test_dilation_is_not_killing(self):
        geo = wavebuild.flat_torus(1).at(np.array([[0.5, 1.0], [2.0, 3.0]]), 2)
        K = jets.stack([geo.env["z"], 0.0], axis=1)
        assert np.allclose(geo.killing_residual(K), 2.0)

    def test_rotation_is_killing(self):
        geo = wavebuild.flat_torus(1).at(np.array([[0.5, 1.0], [2.0, 3.0]]), 2)
        K = jets.stack([-geo.env["t"], geo.env["z"]], axis=1)
        assert np.allclose(geo.killing_residual(K), 0.0)

    def test_sphere_rotation_is_killing(self):
        # -y d_x + x d_y in frame components e^u (-y, x)
        geo = wavebuild.round_sphere().at(np.array([[0.3, 0.2], [-0.9, 0.5]]), 2)
        eu = jets.exp(geo.env["u"])
        K = jets.stack([-geo.env["y"] * eu, geo.env["x"] * eu], axis=1)
        assert np.max(geo.killing_residual(K)) < 1e-13


@pytest.fixture(scope="module")
def geo():
    W = wavebuild.build(IsothermalSurface.from_u("0.2*x*y + cos(x)/3").base,
                        "cos(theta)*x*y + exp(y/2)")
    return W.at(W.sample(6, seed=11), 3)


@pytest.fixture(scope="module")
def setup():
    W = wavebuild.build("sphere", "z*cos(theta) + z^2")
    return W, W.sample(4, seed=5)


class TestConnection:
    def test_levi_civita_is_torsion_free(self, geo):
        assert np.max(np.abs(geo.torsion(geo.gamma).value)) < 1e-13

    def test_levi_civita_is_metric(self, geo):
        A = geo.gamma.value
        assert np.max(np.abs(A + np.swapaxes(A, 2, 3))) < 1e-13

    def test_first_bianchi(self, geo):
        assert np.max(geo.bianchi_residual()) < 1e-11

    def test_curvature_pair_symmetry(self, geo):
        R = geo.riemann.value
        assert np.max(np.abs(R - np.transpose(R, (0, 3, 4, 1, 2)))) < 1e-11


class TestExteriorDerivative:
    def test_d_squared_of_function(self, setup):
        W, pts = setup
        geo = W.at(pts, 3)
        f = jets.sin(geo.env["x"] * geo.env["theta"]) + geo.env["y"] ** 3
        dd = geo.d(geo.d(FrameForm(0, f)))
        assert np.max(np.abs(dd.values)) < 1e-12

    def test_d_squared_of_one_form(self, setup):
        W, pts = setup
        geo = W.at(pts, 3)
        a = geo.coordinate_form("x") * jets.exp(geo.env["y"]) + geo.coordinate_form("theta") * geo.env["x"]
        assert np.max(np.abs(geo.d(geo.d(a)).values)) < 1e-11

    def test_d_of_one_form_against_finite_differences(self, setup):
        W, pts = setup
        # alpha = x*y dtheta + sin(x) dy in chart components
        def alpha(p):
            out = np.zeros(4)
            out[0] = p[2] * p[3]
            out[3] = np.sin(p[2])
            return out

        geo = W.at(pts, 2)
        a = geo.coordinate_form("theta") * (geo.env["x"] * geo.env["y"]) \
            + geo.coordinate_form("y") * jets.sin(geo.env["x"])
        da = geo.d(a).values
        E = geo.E.value
        h = 1e-5
        for k, p in enumerate(pts):
            D = np.zeros((4, 4))  # D[c, b] = d_c alpha_b
            for c in range(4):
                e = np.zeros(4)
                e[c] = h
                D[c] = (alpha(p + e) - alpha(p - e)) / (2 * h)
            chart = D - D.T
            frame = E[k] @ chart @ E[k].T
            assert np.allclose(da[k], frame, atol=1e-8)

    @given(st.integers(0, 2 ** 32 - 1))
    def test_wedge_is_graded_antisymmetric(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        a = FrameForm(1, jets.Jet.constant(rng.normal(size=(2, 6)), 6, 1))
        b = FrameForm(1, jets.Jet.constant(rng.normal(size=(2, 6)), 6, 1))
        assert np.allclose(a.wedge(b).values, -b.wedge(a).values)


class TestSampling:
    def test_deterministic_and_inside_margin(self):
        dom = ((0.0, 1.0), (-2.0, 2.0))
        p = sample_box(dom, 200, seed=42, margin=0.01)
        assert np.array_equal(p, sample_box(dom, 200, seed=42, margin=0.01))
        assert np.all(p[:, 0] >= 0.01) and np.all(p[:, 0] <= 0.99)
        assert np.all(p[:, 1] >= -1.96) and np.all(p[:, 1] <= 1.96)

    def test_different_seeds_differ(self):
        dom = ((0.0, 1.0),)
        assert not np.array_equal(sample_box(dom, 5, 1), sample_box(dom, 5, 2))
