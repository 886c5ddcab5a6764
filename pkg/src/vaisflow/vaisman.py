"""Vaisman structure tensors on a foliated chart, and their deformations.

Chart conventions
-----------------
Coordinates are ordered (x^1, y^1, ..., x^n, y^n, x, y) with U = d/dx and
V = d/dy spanning the leaves.  Writing P = h_B + h for the full transverse
potential (h the stored periodic potential, h_B the quadratic seed of the
constant base metric, handled as exact affine data) and
d^c f = (i/2)(delbar f - del f), the structure tensors are

    J       = J_0 + U (x) d^c P + V (x) (d^c P o J_0),
    theta   = dx,
    theta_c = -theta o J = dy - d^c P,
    X_j     = d/dz^j - theta_c(d/dz^j) V,
    omega   = [transverse block -i g_{j kbar} dz^j ^ dzbar^k] - theta ^ theta_c,

with g = base + ddbar(h).  These satisfy, exactly at every grid point:
J^2 = -1, J(U) = V, J(X_j) = i X_j, the coframe duality of
{dz^j, dzbar^j, theta, theta_c} against {X_j, Xbar_j, U, V}, and
d theta_c = (transverse block of omega) in the continuum, so that
d omega = theta ^ omega up to the stencil-route discretization gap measured
by :func:`verify_vaisman`.

The metric is recovered as g(X, Y) = -omega(X, JY); it is symmetric,
positive, and J-compatible by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import GridError, IdentityViolation, NonPositiveScale
from .forms import CoefficientForm, hermitian_to_real_two_form, wedge_one_form
from .grid import GridSpec, ScalarField, diff1
from .transverse import HermitianField, ddbar, metric_from_potential

__all__ = [
    "VaismanChart",
    "build_chart",
    "complex_structure",
    "adapted_frame",
    "lee_forms",
    "fundamental_form",
    "verify_vaisman",
    "deform",
    "q_homothety",
    "chart_metric_tensor",
    "frame_metric_block",
]

_IDENTITY_TOL = 1e-10


def _require_full(spec: GridSpec):
    if not spec.has_leaf:
        raise GridError("a Vaisman chart needs leaf axes (full spec)")


def _base_matrix(spec: GridSpec, base: HermitianField | None) -> np.ndarray:
    if base is None:
        return np.eye(spec.n, dtype=np.complex128)
    mats = base.matrices.reshape(-1, spec.n, spec.n)
    if not np.all(mats == mats[0]):
        raise GridError("the chart base metric must have constant coefficients")
    return np.array(mats[0])


def _dc_full_potential(spec: GridSpec, h: ScalarField, B: np.ndarray) -> CoefficientForm:
    """d^c of the full potential P = h_B + h as a 1-form with affine parts.

    Real components: (d^c P)_{x^j} = -P_{y^j}/2, (d^c P)_{y^j} = +P_{x^j}/2.
    The seed gradient is linear, (h_B)_{z^j} = sum_k B[j,k] zbar^k.
    """
    if not h.basic or h.is_complex:
        raise GridError("the chart potential must be basic and real")
    n = spec.n
    hs = spec.spacings
    comps: dict[tuple[int, ...], ScalarField] = {}
    lins: dict[tuple[int, ...], np.ndarray] = {}
    D = spec.num_axes
    for j in range(n):
        ax, ay = 2 * j, 2 * j + 1
        hx = diff1(h.values, ax, hs[ax])
        hy = diff1(h.values, ay, hs[ay])
        comps[(ax,)] = ScalarField(spec, -0.5 * hy, basic=True)
        comps[(ay,)] = ScalarField(spec, 0.5 * hx, basic=True)
        lin_x = np.zeros(D)
        lin_y = np.zeros(D)
        for k in range(n):
            re, im = B[j, k].real, B[j, k].imag
            # -(h_B)_{y^j}/2 and +(h_B)_{x^j}/2 expanded in coordinates
            lin_x[2 * k] += im
            lin_x[2 * k + 1] += -re
            lin_y[2 * k] += re
            lin_y[2 * k + 1] += im
        lins[(ax,)] = lin_x
        lins[(ay,)] = lin_y
    return CoefficientForm(spec, 1, comps, lins)


def _j0_matrix(D: int) -> np.ndarray:
    j0 = np.zeros((D, D))
    for p in range(D // 2):
        a, b = 2 * p, 2 * p + 1
        j0[b, a] = 1.0
        j0[a, b] = -1.0
    return j0


def _dc_values(spec: GridSpec, dc: CoefficientForm) -> np.ndarray:
    """Evaluate the d^c 1-form as per-point component vectors."""
    D = spec.num_axes
    out = np.zeros(spec.transverse_shape + (D,))
    for a in range(2 * spec.n):
        out[..., a] = dc.component_values((a,))
    return out


def complex_structure(
    h: ScalarField, base: HermitianField | None = None, spec: GridSpec | None = None
) -> np.ndarray:
    """Per-point matrices of J = J_0 + U (x) d^c P + V (x) (d^c P o J_0).

    Checks J^2 = -id at every grid point (an orientation or derivative
    inconsistency in the attachment forms would break it).
    """
    spec = h.spec if spec is None else spec
    _require_full(spec)
    B = _base_matrix(spec, base)
    dc = _dc_full_potential(spec, h, B)
    return _assemble_j(spec, _dc_values(spec, dc))


def _assemble_j(spec: GridSpec, dc_vals: np.ndarray) -> np.ndarray:
    D = spec.num_axes
    u_axis, v_axis = 2 * spec.n, 2 * spec.n + 1
    jmat = np.broadcast_to(_j0_matrix(D), spec.transverse_shape + (D, D)).copy()
    rotated = np.zeros_like(dc_vals)
    for p in range(spec.n):
        a, b = 2 * p, 2 * p + 1
        rotated[..., a] = dc_vals[..., b]
        rotated[..., b] = -dc_vals[..., a]
    jmat[..., u_axis, :] += dc_vals
    jmat[..., v_axis, :] += rotated
    jj = np.einsum("...ab,...bc->...ac", jmat, jmat)
    defect = float(np.max(np.abs(jj + np.eye(D))))
    if defect > _IDENTITY_TOL:
        raise IdentityViolation(f"J^2 = -id fails with defect {defect:.3e}")
    return jmat


def lee_forms(
    h: ScalarField, base: HermitianField | None = None
) -> tuple[CoefficientForm, CoefficientForm]:
    """The Lee form theta = dx and the anti-Lee form theta_c = -theta o J.

    theta_c is assembled as dy - d^c P (which is what the contraction
    -theta o J evaluates to) and then verified against the pointwise
    contraction and the normalizations theta_c(V) = 1, theta_c(U) = 0.
    """
    spec = h.spec
    _require_full(spec)
    B = _base_matrix(spec, base)
    u_axis, v_axis = 2 * spec.n, 2 * spec.n + 1
    theta = CoefficientForm(spec, 1, {(u_axis,): ScalarField.constant(spec, 1.0)})
    dc = _dc_full_potential(spec, h, B)
    minus_dc = dc.scaled(-1.0)
    comps = dict(minus_dc.components)
    comps[(v_axis,)] = ScalarField.constant(spec, 1.0)
    theta_c = CoefficientForm(spec, 1, comps, minus_dc.linear)

    dc_vals = _dc_values(spec, dc)
    jmat = _assemble_j(spec, dc_vals)
    contraction = -jmat[..., u_axis, :]
    for a in range(spec.num_axes):
        diff = float(np.max(np.abs(theta_c.component_values((a,)) - contraction[..., a])))
        if diff > _IDENTITY_TOL:
            raise IdentityViolation(f"theta_c disagrees with -theta o J on axis {a}")
    if float(np.max(np.abs(theta_c.contract_vector(_unit(spec, v_axis)) - 1.0))) > _IDENTITY_TOL:
        raise IdentityViolation("theta_c(V) = 1 fails")
    if float(np.max(np.abs(theta_c.contract_vector(_unit(spec, u_axis))))) > _IDENTITY_TOL:
        raise IdentityViolation("theta_c(U) = 0 fails")
    return theta, theta_c


def _unit(spec: GridSpec, axis: int) -> np.ndarray:
    e = np.zeros(spec.num_axes)
    e[axis] = 1.0
    return e


def adapted_frame(h: ScalarField, base: HermitianField | None = None) -> np.ndarray:
    """Frame X_j = d/dz^j - theta_c(d/dz^j) V spanning Q, shape grid + (n, D).

    Dual to {dz^j, theta, theta_c}: dz^j(X_k) = delta_jk and
    theta(X_j) = theta_c(X_j) = 0 hold exactly, and J(X_j) = i X_j.
    """
    spec = h.spec
    _, theta_c = lee_forms(h, base)
    return _frame_from_theta_c(spec, theta_c)


def _frame_from_theta_c(spec: GridSpec, theta_c: CoefficientForm) -> np.ndarray:
    n = spec.n
    D = spec.num_axes
    v_axis = 2 * n + 1
    frame = np.zeros(spec.transverse_shape + (n, D), dtype=np.complex128)
    for j in range(n):
        ax, ay = 2 * j, 2 * j + 1
        tc_x = theta_c.component_values((ax,))
        tc_y = theta_c.component_values((ay,))
        frame[..., j, ax] = 0.5
        frame[..., j, ay] = -0.5j
        frame[..., j, v_axis] = -0.5 * (tc_x - 1j * tc_y)
    return frame


def fundamental_form(
    theta: CoefficientForm, theta_c: CoefficientForm, metric: HermitianField
) -> CoefficientForm:
    """omega = d theta_c - theta ^ theta_c, with the transverse block taken
    from the metric coefficients.

    In the continuum the transverse block of d theta_c equals
    -i g_{j kbar} dz^j ^ dzbar^k exactly; using the metric coefficients here
    keeps the two discretization routes (metric assembly vs exterior
    derivative) distinct, so :func:`verify_vaisman` measures a genuine
    O(h^4) residual instead of reproducing identical arithmetic.
    """
    return hermitian_to_real_two_form(metric) - wedge_one_form(theta, theta_c)


def verify_vaisman(omega: CoefficientForm, theta: CoefficientForm) -> tuple[float, float]:
    """Residuals (sup ||d omega - theta ^ omega||, sup ||d theta||)."""
    d_omega = omega.exterior_derivative()
    t_omega = wedge_one_form(theta, omega)
    resid = d_omega - t_omega
    for idx, lin in resid.linear.items():
        if float(np.max(np.abs(lin))) > 1e-12:
            raise IdentityViolation("affine parts fail to cancel in the structure residual")
    r1 = resid.sup_norm()
    r2 = theta.exterior_derivative().sup_norm()
    return r1, r2


@dataclass(frozen=True)
class VaismanChart:
    """A foliated chart carrying the full set of Vaisman structure tensors."""

    spec: GridSpec
    h: ScalarField
    base: np.ndarray
    metric: HermitianField
    theta: CoefficientForm
    theta_c: CoefficientForm
    jmat: np.ndarray
    omega: CoefficientForm
    frame: np.ndarray

    @property
    def n(self) -> int:
        return self.spec.n


def build_chart(
    spec: GridSpec, h: ScalarField, base: HermitianField | None = None
) -> VaismanChart:
    """Construct a chart from a basic potential and run its invariant suite.

    Construction is fallible by design: PositivityLost if the transverse
    metric degenerates, IdentityViolation if any structural identity breaks.
    """
    _require_full(spec)
    if h.spec != spec:
        raise GridError("potential and chart specs differ")
    B = _base_matrix(spec, base)
    base_field = HermitianField.constant(spec, B)
    metric = metric_from_potential(h, base_field)
    theta, theta_c = lee_forms(h, base_field)
    dc = _dc_full_potential(spec, h, B)
    jmat = _assemble_j(spec, _dc_values(spec, dc))
    omega = fundamental_form(theta, theta_c, metric)
    frame = _frame_from_theta_c(spec, theta_c)
    chart = VaismanChart(spec, h, B, metric, theta, theta_c, jmat, omega, frame)
    _check_chart(chart)
    return chart


def _check_chart(chart: VaismanChart):
    spec = chart.spec
    # J(X_j) = i X_j pointwise
    jx = np.einsum("...ab,...jb->...ja", chart.jmat, chart.frame)
    defect = float(np.max(np.abs(jx - 1j * chart.frame)))
    if defect > _IDENTITY_TOL:
        raise IdentityViolation(f"J(X_j) = i X_j fails with defect {defect:.3e}")
    # coframe duality on the frame
    tc_on_frame = _pair_form_frame(chart.theta_c, chart.frame)
    if float(np.max(np.abs(tc_on_frame))) > _IDENTITY_TOL:
        raise IdentityViolation("theta_c(X_j) = 0 fails")
    th_on_frame = _pair_form_frame(chart.theta, chart.frame)
    if float(np.max(np.abs(th_on_frame))) > _IDENTITY_TOL:
        raise IdentityViolation("theta(X_j) = 0 fails")
    # metric compatibility g(J., J.) = g
    g = chart_metric_tensor(chart)
    jtgj = np.einsum("...ca,...cd,...db->...ab", chart.jmat, g, chart.jmat)
    if float(np.max(np.abs(jtgj - g))) > _IDENTITY_TOL * max(1.0, float(np.max(np.abs(g)))):
        raise IdentityViolation("metric is not J-compatible")
    if float(np.max(np.abs(g - np.swapaxes(g, -1, -2)))) > _IDENTITY_TOL:
        raise IdentityViolation("assembled metric is not symmetric")


def _pair_form_frame(form: CoefficientForm, frame: np.ndarray) -> np.ndarray:
    spec = form.spec
    D = spec.num_axes
    comps = np.zeros(spec.transverse_shape + (D,))
    for a in range(D):
        if (a,) in form.components or (a,) in form.linear:
            comps[..., a] = form.component_values((a,))
    return np.einsum("...a,...ja->...j", comps, frame)


def chart_metric_tensor(chart: VaismanChart) -> np.ndarray:
    """Coordinate components g_ab = -omega(d_a, J d_b), shape grid + (D, D)."""
    w = chart.omega.as_matrix()
    return -np.einsum("...ac,...cb->...ab", w, chart.jmat)


def frame_metric_block(chart: VaismanChart, tensor: np.ndarray) -> np.ndarray:
    """g(X_j, Xbar_k) for a coordinate tensor, shape grid + (n, n)."""
    return np.einsum("...ja,...ab,...kb->...jk", chart.frame, tensor, np.conj(chart.frame))


def deform(chart: VaismanChart, phi: ScalarField) -> VaismanChart:
    """Deformation by a basic function: potential h -> h + phi.

    The transverse metric gains the Hesse coefficients of phi, theta_c gains
    d^c phi, and J gains the matching attachment terms; all chart invariants
    are re-verified on the result.
    """
    if not phi.basic or phi.is_complex:
        raise GridError("the deformation function must be basic and real")
    base_field = HermitianField.constant(chart.spec, chart.base)
    return build_chart(chart.spec, chart.h + phi, base_field)


def q_homothety(chart: VaismanChart, a: float) -> np.ndarray:
    """Homothetic deformation g~ = a g + (a^2 - a)(theta_c (x) theta_c + theta (x) theta).

    Scales the transverse block by a and the leafwise block by a^2; returns
    the coordinate tensor of g~.
    """
    if not a > 0:
        raise NonPositiveScale(f"homothety scale must be positive, got {a}")
    spec = chart.spec
    D = spec.num_axes
    g = chart_metric_tensor(chart)
    th = np.zeros(spec.transverse_shape + (D,))
    tc = np.zeros(spec.transverse_shape + (D,))
    for ax in range(D):
        if (ax,) in chart.theta.components or (ax,) in chart.theta.linear:
            th[..., ax] = chart.theta.component_values((ax,))
        if (ax,) in chart.theta_c.components or (ax,) in chart.theta_c.linear:
            tc[..., ax] = chart.theta_c.component_values((ax,))
    rank1 = np.einsum("...a,...b->...ab", tc, tc) + np.einsum("...a,...b->...ab", th, th)
    return a * g + (a * a - a) * rank1
