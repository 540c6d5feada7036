import numpy as np
import pytest
import sympy as sp
from scipy.integrate import quad

from wavekahler import hirzebruch
from wavekahler.hirzebruch import (ROOT, HirzebruchProfile, boundary_smoothness_check,
                                   frame_agreement, ode_residual, profile_invariants,
                                   reconstruct_H, scaling_residual, sce_check_dim6, solve_profile)

H0S = [0.5, 1.0, 2.0]


@pytest.fixture(scope="module", params=H0S)
def prof(request):
    return solve_profile(request.param)


class TestClosedForm:
    def test_general_solution_of_the_y_equation(self):
        h, c1, c2 = sp.symbols("h c1 c2", positive=True)
        y = c1 * h ** 4 + c2 * h ** -4 + 1
        ode = -sp.diff(y, h, 2) / 2 - sp.diff(y, h) / (2 * h) + 8 * y / h ** 2 - 8 / h ** 2
        assert sp.simplify(ode) == 0
        assert np.max(np.abs(hirzebruch.y_form_residual(-0.3, -0.7, np.linspace(0.5, 2, 9)))) < 1e-13

    def test_endpoint_ratio(self, prof):
        assert abs(prof.hl / prof.h0 - ROOT) < 1e-15
        assert ROOT ** 4 == pytest.approx(3.0, abs=1e-14)

    def test_boundary_conditions(self, prof):
        inv = profile_invariants(prof)
        for key in ("ratio", "root_P", "y(h0)", "y(hl)", "y'(h0)-2/h0", "y'(hl)+2/hl", "c-relation"):
            assert inv[key] < 1e-12, key
        assert inv["min_y_interior"] > 0

    def test_printed_y_is_the_same_function(self, prof):
        assert profile_invariants(prof)["printed_y"] < 1e-13

    def test_invalid_h0(self):
        with pytest.raises(ValueError):
            HirzebruchProfile(0.0)


class TestQuadrature:
    def test_length_against_direct_integral(self, prof):
        direct, _ = quad(lambda h: 1.0 / np.sqrt(prof.y(h)), prof.h0, prof.hl, limit=200)
        assert prof.length == pytest.approx(direct, rel=1e-7)

    def test_t_of_h_against_direct_integral(self, prof):
        for hh in np.linspace(prof.h0, prof.hl, 5)[1:-1]:
            direct, _ = quad(lambda h: 1.0 / np.sqrt(prof.y(h)), prof.h0, hh, limit=200)
            assert prof.t_of_h(hh) == pytest.approx(direct, rel=1e-7)

    def test_inversion_roundtrip(self, prof):
        t = np.linspace(0, prof.length, 23)
        assert np.max(np.abs(prof.t_of_h(prof.h_of_t(t)) - t)) < 1e-13

    def test_t_outside_interval(self, prof):
        with pytest.raises(ValueError):
            prof.h_of_t(prof.length * 1.5)


class TestDerivativesAndODE:
    def test_derivatives_against_finite_differences(self, prof):
        t = np.linspace(0.2, 0.8, 4) * prof.length
        h, h1, h2, _ = prof.derivatives(t)
        eps = 1e-5
        fd1 = (prof.h_of_t(t + eps) - prof.h_of_t(t - eps)) / (2 * eps)
        fd2 = (prof.h_of_t(t + eps) - 2 * h + prof.h_of_t(t - eps)) / eps ** 2
        assert np.allclose(h1, fd1, atol=1e-8)
        assert np.allclose(h2, fd2, atol=1e-4)

    def test_series_matches_derivatives(self, prof):
        t = hirzebruch.interior_t(prof, 7)
        ser = prof.series(t, 3)
        h, h1, h2, h3 = prof.derivatives(t)
        assert np.allclose(ser["h"][:, 0], h, atol=1e-14)
        assert np.allclose(ser["h"][:, 1], h1, atol=1e-12)
        assert np.allclose(2 * ser["h"][:, 2], h2, atol=1e-12)
        assert np.allclose(6 * ser["h"][:, 3], h3, atol=1e-11)

    def test_third_order_ode(self, prof):
        res = ode_residual(prof, hirzebruch.interior_t(prof, 50))
        assert res["t_form"] < 1e-10 and res["y_form"] < 1e-10

    def test_endpoint_smoothness(self, prof):
        for key, v in boundary_smoothness_check(prof).items():
            assert v < 1e-12, key

    def test_scaling_symmetry(self):
        p = solve_profile(1.0)
        assert scaling_residual(p, 2.0) < 1e-12
        assert solve_profile(2.0).length == pytest.approx(2.0 * p.length, rel=1e-13)


class TestWaveProfile:
    def test_condition_expressions_agree(self, prof):
        assert reconstruct_H(prof).condition_gap < 1e-10

    def test_H_prime_is_linear_in_h(self, prof):
        # H'^2/8 = 2 h^2 / h0^4 follows from the closed form of y
        assert reconstruct_H(prof).linear_identity < 1e-12

    def test_lambda_at_zero(self, prof):
        lam0 = prof.table(5)["lambda"][0]
        assert lam0 == pytest.approx(2.0 / prof.h0 ** 2, rel=1e-12)

    def test_H_gauge_and_monotone(self, prof):
        t = np.linspace(0, prof.length, 11)
        Hv = prof.H(t)
        assert Hv[0] == 0.0
        assert np.all(np.diff(Hv) > 0)

    def test_H_against_quadrature(self, prof):
        ref, _ = quad(prof.H_prime, 0.0, prof.length / 2)
        assert prof.H(prof.length / 2) == pytest.approx(ref, rel=1e-12)


class TestSecondChernEinstein:
    def test_printed_display_and_generic_machinery(self, prof):
        rep = sce_check_dim6(prof, hirzebruch.interior_t(prof, 12))
        assert np.max(rep.coefficient_spread) < 1e-8
        assert np.max(rep.generic_vs_printed) < 1e-8
        assert np.max(rep.prop_residual) < 1e-8
        assert np.max(rep.rho_vs_base) < 1e-10
        assert np.max(rep.trace_residual) < 1e-8
        assert np.max(rep.sce_residual) < 1e-8
        assert np.min(rep.nijenhuis_norm) > 0

    def test_quaternion_frame_agrees_with_abstract(self):
        out = frame_agreement(solve_profile(1.0), n=6, seed=1)
        assert max(out.values()) < 1e-9

    def test_base_is_kahler(self):
        B = hirzebruch.hirzebruch_base(solve_profile(1.0))
        geo = B.at(np.array([[0.3], [0.9]]), 3)
        assert np.max(np.abs(geo.nijenhuis.value)) < 1e-13
        assert np.max(np.abs(geo.rho.value - geo.r.value)) < 1e-10

    def test_positive_hermitian_scalar(self, prof):
        W = hirzebruch.wave(prof)
        t = hirzebruch.interior_t(prof, 8)
        pts = np.column_stack([np.zeros_like(t), np.zeros_like(t), t])
        assert np.all(W.at(pts, 3).hermitian_scalar.value > 0)
