import numpy as np
import pytest

from conftest import TWO_PI, full_spec
from vaisflow.convergence import fitted_order
from vaisflow.exceptions import GridError, NonPositiveScale, PositivityLost
from vaisflow.forms import CoefficientForm
from vaisflow.grid import GridSpec, ScalarField
from vaisflow.transverse import HermitianField, ddbar
from vaisflow.vaisman import (
    adapted_frame,
    build_chart,
    chart_metric_tensor,
    complex_structure,
    deform,
    frame_metric_block,
    fundamental_form,
    lee_forms,
    q_homothety,
    verify_vaisman,
)


def bump_chart(res=64, amplitude=-0.4, leaf=8):
    spec = full_spec(res=res, leaf=leaf)
    h = ScalarField.from_function(spec, lambda x, y: amplitude * np.cos(x), basic=True)
    return spec, build_chart(spec, h)


@pytest.fixture(scope="module")
def flat_chart():
    spec = full_spec(res=32, leaf=8)
    return spec, build_chart(spec, ScalarField.zeros(spec))


class TestComplexStructure:
    def test_flat_reduces_to_standard_plus_seed(self, flat_chart):
        spec, chart = flat_chart
        # at the origin the seed gradient vanishes and J = J_0
        j0 = chart.jmat[0, 0]
        expected = np.zeros((4, 4))
        expected[1, 0] = 1.0
        expected[0, 1] = -1.0
        expected[3, 2] = 1.0
        expected[2, 3] = -1.0
        assert np.array_equal(j0, expected)

    def test_j_squared_everywhere(self):
        spec, chart = bump_chart(res=32)
        jj = np.einsum("...ab,...bc->...ac", chart.jmat, chart.jmat)
        assert np.max(np.abs(jj + np.eye(4))) < 1e-10

    def test_j_maps_u_to_v_exactly(self):
        spec, chart = bump_chart(res=32)
        u = np.array([0.0, 0.0, 1.0, 0.0])
        ju = np.einsum("...ab,b->...a", chart.jmat, u)
        assert np.all(ju[..., 3] == 1.0)
        assert np.max(np.abs(ju[..., :3])) == 0.0

    def test_frame_eigenvectors(self):
        spec, chart = bump_chart(res=32)
        jx = np.einsum("...ab,...jb->...ja", chart.jmat, chart.frame)
        assert np.max(np.abs(jx - 1j * chart.frame)) < 1e-10
        jxbar = np.einsum("...ab,...jb->...ja", chart.jmat, np.conj(chart.frame))
        assert np.max(np.abs(jxbar + 1j * np.conj(chart.frame))) < 1e-10

    def test_standalone_entry_point(self):
        spec = full_spec(res=16, leaf=8)
        h = ScalarField.from_function(spec, lambda x, y: -0.1 * np.cos(x), basic=True)
        jmat = complex_structure(h)
        assert jmat.shape == (16, 16, 4, 4)


class TestLeeForms:
    def test_flat_theta_c_is_dy_plus_seed(self, flat_chart):
        spec, chart = flat_chart
        # leaf components: theta = dx exactly, theta_c has dy component 1
        assert np.all(chart.theta.component_values((2,)) == 1.0)
        assert np.all(chart.theta_c.component_values((3,)) == 1.0)
        # transverse components carry the seed: -dcP = y dx^1 - x dy^1 here
        x = spec.coordinate_mesh(0)
        y = spec.coordinate_mesh(1)
        assert np.max(np.abs(chart.theta_c.component_values((0,)) - y)) < 1e-12
        assert np.max(np.abs(chart.theta_c.component_values((1,)) + x)) < 1e-12

    def test_normalizations(self):
        spec, chart = bump_chart(res=32)
        u = np.array([0.0, 0.0, 1.0, 0.0])
        v = np.array([0.0, 0.0, 0.0, 1.0])
        assert np.max(np.abs(chart.theta.contract_vector(u) - 1.0)) == 0.0
        assert np.max(np.abs(chart.theta.contract_vector(v))) == 0.0
        assert np.max(np.abs(chart.theta_c.contract_vector(v) - 1.0)) < 1e-10
        assert np.max(np.abs(chart.theta_c.contract_vector(u))) < 1e-10

    def test_bump_pattern(self):
        # theta_c = dy + (i h_z dz - i h_zbar dzbar pattern): for the real
        # potential the dx^1 component is -P_y/2 and the dy^1 component
        # +P_x/2, so with h = A cos(x) the periodic part sits on dy^1.
        spec, chart = bump_chart(res=64)
        x = spec.coordinate_mesh(0)
        y = spec.coordinate_mesh(1)
        expected_dy1 = x + 0.5 * (-0.4) * (-np.sin(x))
        assert np.max(np.abs(chart.theta_c.component_values((1,)) + expected_dy1)) < 1e-5

    def test_frame_duality(self):
        spec, chart = bump_chart(res=32)
        # dz^j(X_k) = delta at every point
        for j in range(1):
            dz = np.zeros(4, dtype=complex)
            dz[0], dz[1] = 1.0, 1.0j
            pairing = np.einsum("a,...ja->...j", dz, chart.frame)
            assert np.max(np.abs(pairing - 1.0)) == 0.0


class TestFundamentalForm:
    def test_flat_values(self, flat_chart):
        spec, chart = flat_chart
        w = chart.omega.as_matrix()
        assert np.all(w[..., 2, 3] == -1.0)  # omega(U, V) = -theta^theta_c(U,V)
        assert np.all(w[..., 0, 1] == -2.0)  # transverse block -i dz^dzbar

    def test_transverse_block_matches_metric(self):
        spec, chart = bump_chart(res=64)
        block = frame_metric_block(chart, -chart.omega.as_matrix() @ chart.jmat)
        # equivalently read i omega(X_1, X_1bar)
        w = chart.omega.as_matrix()
        val = 1j * np.einsum("...ja,...ab,...kb->...jk", chart.frame, w, np.conj(chart.frame))
        assert np.max(np.abs(val - chart.metric.matrices)) < 1e-10

    def test_d_theta_zero(self):
        spec, chart = bump_chart(res=32)
        assert chart.theta.exterior_derivative().sup_norm() == 0.0


class TestVerifyVaisman:
    def test_flat_chart_exact(self, flat_chart):
        spec, chart = flat_chart
        r1, r2 = verify_vaisman(chart.omega, chart.theta)
        assert r1 < 1e-12
        assert r2 < 1e-12

    def test_bump_residual_and_order(self):
        residuals = []
        for res in (32, 64, 128):
            spec, chart = bump_chart(res=res)
            r1, r2 = verify_vaisman(chart.omega, chart.theta)
            residuals.append(r1)
            assert r2 < 1e-12
        assert residuals[-1] < 1e-5
        assert fitted_order((32, 64, 128), residuals) >= 3.5

    def test_detects_injected_defect(self, flat_chart):
        spec, chart = flat_chart
        bad_comp = ScalarField.from_function(
            spec, lambda x1, y1, lx, ly: 0.01 * np.sin(lx) + 0.0 * x1, basic=False
        )
        corrupted = chart.omega + CoefficientForm(spec, 2, {(0, 1): bad_comp})
        r1, _ = verify_vaisman(corrupted, chart.theta)
        assert r1 > 1e-3


class TestMetric:
    def test_leafwise_block(self, flat_chart):
        spec, chart = flat_chart
        g = chart_metric_tensor(chart)
        assert np.max(np.abs(g[..., 2, 2] - 1.0)) < 1e-12
        assert np.max(np.abs(g[..., 3, 3] - 1.0)) < 1e-12
        assert np.max(np.abs(g[..., 2, 3])) < 1e-12

    def test_compatibility(self):
        spec, chart = bump_chart(res=32)
        g = chart_metric_tensor(chart)
        jgj = np.einsum("...ca,...cd,...db->...ab", chart.jmat, g, chart.jmat)
        assert np.max(np.abs(jgj - g)) < 1e-10 * max(1.0, np.max(np.abs(g)))

    def test_frame_block_equals_hermitian_coefficients(self):
        spec, chart = bump_chart(res=64)
        g = chart_metric_tensor(chart)
        block = frame_metric_block(chart, g)
        assert np.max(np.abs(block - chart.metric.matrices)) < 1e-10


class TestDeform:
    def test_zero_is_bitwise_identity(self):
        spec, chart = bump_chart(res=32)
        deformed = deform(chart, ScalarField.zeros(spec))
        assert np.array_equal(deformed.metric.matrices, chart.metric.matrices)
        assert np.array_equal(deformed.jmat, chart.jmat)

    def test_constant_is_invisible(self):
        spec, chart = bump_chart(res=32)
        deformed = deform(chart, ScalarField.constant(spec, 3.25))
        assert np.max(np.abs(deformed.metric.matrices - chart.metric.matrices)) < 1e-12
        assert np.max(np.abs(deformed.jmat - chart.jmat)) < 1e-12

    def test_cos_deformation(self, flat_chart):
        spec, chart = flat_chart
        phi = ScalarField.from_function(spec, lambda x, y: -0.2 * np.cos(x), basic=True)
        deformed = deform(chart, phi)
        x = spec.coordinate_mesh(0)
        assert np.max(np.abs(deformed.metric.matrices[..., 0, 0] - (1 + 0.05 * np.cos(x)))) < 1e-6
        jj = np.einsum("...ab,...bc->...ac", deformed.jmat, deformed.jmat)
        assert np.max(np.abs(jj + np.eye(4))) < 1e-10

    def test_transverse_block_shift_is_ddbar(self):
        spec, chart = bump_chart(res=32)
        phi = ScalarField.from_function(spec, lambda x, y: 0.1 * np.cos(x + y), basic=True)
        deformed = deform(chart, phi)
        shift = deformed.metric.matrices - chart.metric.matrices
        assert np.max(np.abs(shift - ddbar(phi).matrices)) < 1e-10

    def test_additivity(self):
        spec, chart = bump_chart(res=32)
        p1 = ScalarField.from_function(spec, lambda x, y: 0.05 * np.cos(x), basic=True)
        p2 = ScalarField.from_function(spec, lambda x, y: 0.05 * np.cos(y), basic=True)
        once = deform(chart, p1 + p2)
        twice = deform(deform(chart, p1), p2)
        assert np.max(np.abs(once.metric.matrices - twice.metric.matrices)) < 1e-10

    def test_inadmissible_deformation(self, flat_chart):
        spec, chart = flat_chart
        phi = ScalarField.from_function(spec, lambda x, y: -8.0 * np.cos(x), basic=True)
        with pytest.raises(PositivityLost):
            deform(chart, phi)

    def test_non_basic_rejected(self, flat_chart):
        spec, chart = flat_chart
        with pytest.raises(GridError):
            deform(chart, ScalarField.zeros(spec, basic=False))


class TestQHomothety:
    def test_identity_scale(self, flat_chart):
        spec, chart = flat_chart
        g = chart_metric_tensor(chart)
        assert np.array_equal(q_homothety(chart, 1.0), g)

    def test_scale_two_values(self, flat_chart):
        spec, chart = flat_chart
        gt = q_homothety(chart, 2.0)
        # leafwise block scales by a^2 = 4, transverse frame block by a = 2
        assert np.max(np.abs(gt[..., 2, 2] - 4.0)) < 1e-12
        assert np.max(np.abs(gt[..., 2, 3])) < 1e-12
        block = frame_metric_block(chart, gt)
        assert np.max(np.abs(block - 2.0 * chart.metric.matrices)) < 1e-10

    def test_composition(self):
        spec, chart = bump_chart(res=32)
        a, b = 1.7, 0.6
        g_ab = frame_metric_block(chart, q_homothety(chart, a * b))
        step1 = q_homothety(chart, a)
        # second application acts on the same chart forms
        tc = chart.theta_c
        gt2 = b * step1
        D = spec.num_axes
        th_vals = np.zeros(spec.transverse_shape + (D,))
        tc_vals = np.zeros(spec.transverse_shape + (D,))
        for ax in range(D):
            if (ax,) in chart.theta.components:
                th_vals[..., ax] = chart.theta.component_values((ax,))
            if (ax,) in tc.components or (ax,) in tc.linear:
                tc_vals[..., ax] = tc.component_values((ax,))
        rank1 = np.einsum("...a,...b->...ab", tc_vals, tc_vals) + np.einsum(
            "...a,...b->...ab", th_vals, th_vals
        )
        gt2 = gt2 + (b * b - b) * rank1
        block2 = frame_metric_block(chart, gt2)
        assert np.max(np.abs(block2 - g_ab)) < 1e-12

    def test_rejects_nonpositive_scale(self, flat_chart):
        spec, chart = flat_chart
        with pytest.raises(NonPositiveScale):
            q_homothety(chart, 0.0)
        with pytest.raises(NonPositiveScale):
            q_homothety(chart, -1.0)
