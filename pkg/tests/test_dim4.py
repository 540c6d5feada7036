import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from wavekahler import dim4, wavebuild
from wavekahler.dim4 import (AxisymmetricField, DegenerateInputError, IsothermalSurface,
                             closed_form_r, closed_form_rho, nijenhuis_checks, random_wave,
                             reference_f, solve_conformal_factor, sphere_pipeline, tau_forms)


@pytest.fixture(scope="module")
def solution():
    return solve_conformal_factor("sqrt(6)*z", 400)


class TestSurfaces:
    def test_round_sphere_curvature(self):
        K1, K2 = IsothermalSurface.round_sphere().gaussian_curvature(np.array([[0.2, 0.7]]))
        assert K1 == pytest.approx(1.0) and K2 == pytest.approx(1.0)

    @given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
    def test_frame_curvature_matches_laplacian_formula(self, x, y):
        S = IsothermalSurface.from_u("0.4*x*y + 0.2*sin(x) - 0.1*y^2")
        K1, K2 = S.gaussian_curvature(np.array([[x, y]]))
        assert K1 == pytest.approx(K2, abs=1e-12)

    def test_hermitian_scalar_is_twice_gauss(self):
        S = IsothermalSurface.from_u("0.3*x^2 - 0.5*y")
        p = np.array([[0.1, 0.4]])
        assert S.hermitian_scalar(p) == pytest.approx(2 * S.gaussian_curvature(p)[0])

    def test_chart_overlap(self):
        out = dim4.sphere_overlap(40, seed=2)
        assert out["z"] < 1e-13 and out["metric"] < 1e-12


class TestClosedForms:
    @pytest.mark.parametrize("seed", range(6))
    def test_first_chern_ricci(self, seed):
        W = random_wave(seed)
        geo = W.at(W.sample(10, seed=seed), 3)
        assert np.max(np.abs(closed_form_rho(geo) - geo.rho.value)) < 1e-12

    @pytest.mark.parametrize("seed", range(6))
    def test_second_chern_ricci(self, seed):
        W = random_wave(seed)
        geo = W.at(W.sample(10, seed=seed), 3)
        assert np.max(np.abs(closed_form_r(geo) - geo.r.value)) < 1e-12

    def test_printed_dtheta_dy_sign_differs(self):
        # the printed variant is off by H*H_xtheta/2 on dtheta^dy
        W = random_wave(0)
        geo = W.at(W.sample(10, seed=0), 3)
        assert np.max(np.abs(closed_form_r(geo, "printed") - geo.r.value)) > 1e-2

    def test_variants_agree_when_H_xtheta_vanishes(self):
        S = IsothermalSurface.from_u("0.2*x*y")
        W = wavebuild.build(S.base, "sin(theta)*y + x^2")
        geo = W.at(W.sample(6, seed=1), 3)
        assert np.allclose(closed_form_r(geo, "printed"), closed_form_r(geo), atol=1e-13)

    def test_unknown_variant(self):
        W = random_wave(0)
        with pytest.raises(ValueError):
            closed_form_r(W.at(W.sample(1), 3), "typo")


class TestNijenhuisAndTau:
    @pytest.mark.parametrize("seed", [0, 4])
    def test_nijenhuis_identities(self, seed):
        W = random_wave(seed)
        geo = W.at(W.sample(10, seed=seed), 2)
        for v in nijenhuis_checks(geo).values():
            assert np.max(v) < 1e-12

    def test_tau_forms(self):
        W = random_wave(2)
        geo = W.at(W.sample(8, seed=3), 3)
        out = tau_forms(geo)
        for key in ("dphi", "dJphi", "rho"):
            assert np.max(out[key]) < 1e-12
        assert np.allclose(out["phi_norm2"], 2.0)


class TestConstraint:
    def test_round_sphere_residual_closed_form(self):
        base = wavebuild.round_sphere()
        pts = base.patch.sample(20, seed=0)
        res = dim4.sce_constraint_residual(base, "sqrt(6)*z", pts)
        z = base.patch.env(pts, 0)["z"].value
        assert np.allclose(res, 6 * (1 - z ** 2) - 4, atol=1e-12)

    def test_wave_is_sce_iff_constraint_holds(self):
        # on the round sphere the constraint fails, so r is not proportional to omega
        W = wavebuild.build("sphere", "sqrt(6)*z")
        _, res = W.at(W.sample(5, seed=1), 3).sce()
        assert np.max(res) > 1e-2


class TestField:
    def test_energy_matches_sympy(self):
        z = sp.symbols("z")
        H = sp.sin(2 * z) + z ** 3
        exact = float(2 * sp.pi * sp.integrate((1 - z ** 2) * sp.diff(H, z) ** 2, (z, -1, 1)))
        F = AxisymmetricField.from_expression("sin(2*z) + z^3")
        assert F.energy() == pytest.approx(exact, rel=1e-13)

    def test_energy_of_height(self):
        assert AxisymmetricField.from_expression("z").energy() == pytest.approx(8 * np.pi / 3)

    def test_non_axisymmetric_rejected(self):
        with pytest.raises(ValueError):
            AxisymmetricField.from_expression("x*z")

    def test_from_csv(self, tmp_path):
        z = np.linspace(-1, 1, 81)
        path = tmp_path / "h.csv"
        path.write_text("zeta,H\n" + "".join(f"{float(a)!r},{float(np.sqrt(6) * a)!r}\n" for a in z))
        F = AxisymmetricField.from_csv(str(path))
        assert F.energy() == pytest.approx(16 * np.pi, rel=1e-12)


class TestSolver:
    def test_normalisation(self, solution):
        assert solution.scale == pytest.approx(1.0, abs=1e-14)
        assert solution.energy == pytest.approx(16 * np.pi, rel=1e-12)

    def test_scale_for_height_function(self):
        sol = solve_conformal_factor("z", 100)
        assert sol.scale ** 2 == pytest.approx(6.0)

    def test_matches_exact_solution(self, solution):
        err = np.max(np.abs(solution.f - reference_f(solution.zeta)))
        assert err < 1e-6

    def test_mean_zero_gauge(self, solution):
        assert abs(np.mean(solution.f)) < 1e-15

    def test_second_order_convergence(self):
        _, ratios = dim4.convergence("sqrt(6)*z", (50, 100, 200, 400))
        assert np.all(ratios > 3.5)

    def test_constant_H_is_degenerate(self):
        with pytest.raises(DegenerateInputError):
            solve_conformal_factor("2.0", 50)

    def test_legendre_fit_and_jet_evaluation(self, solution):
        from wavekahler import jets
        z = np.array([-0.4, 0.1, 0.8])
        assert np.allclose(solution.f_of(z), reference_f(z), atol=1e-6)
        zj, = jets.seed(z[:, None], 2)
        fj = solution.f_jet(zj)
        assert np.allclose(fj.partial((1,)), -z / 2, atol=1e-5)


class TestPipeline:
    def test_solved_metric_is_second_chern_einstein(self, solution):
        rep = sphere_pipeline(solution, n=60)
        assert np.max(np.abs(rep.surface_residual)) < 1e-6
        assert np.max(rep.sce_residual) < 1e-6
        assert np.max(rep.lam_vs_sH) < 1e-10
        assert np.max(rep.sH_vs_grad) < 1e-10
        assert np.max(rep.s_star_chain) < 1e-10
        assert np.max(rep.rho_star_vs_omega) < 1e-10
        # int s^H = int 2K over the sphere
        assert rep.gauss_bonnet_positive == pytest.approx(8 * np.pi, rel=1e-6)

    def test_gauss_bonnet_round_sphere(self):
        assert dim4.gauss_bonnet() == pytest.approx(4 * np.pi, rel=1e-10)
