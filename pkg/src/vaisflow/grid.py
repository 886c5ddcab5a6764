"""Periodic sampled fields over a foliated chart and the calculus on them.

A chart has 2n transverse real axes (x^1, y^1, ..., x^n, y^n), pairing into
the complex coordinates z^j = x^j + i y^j, and optionally two leafwise axes
(x, y).  Fields are sampled on a uniform periodic grid, stored row-major in
the axis order above.  A field is *basic* when it carries no leaf axes; basic
fields are stored on the transverse grid only and broadcast on demand, which
makes leaf-constancy structural rather than numerical.

All derivative stencils are fourth-order central differences with periodic
wraparound, written in difference form (weighted sums of f(i+k) - f(i)) so
that constant fields are annihilated exactly in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .exceptions import GridError

__all__ = [
    "GridSpec",
    "ScalarField",
    "FieldNorms",
    "fd_derivative",
    "wirtinger",
    "integrate",
    "norms",
    "diff1",
    "diff2",
]

_MIN_RESOLUTION = 8


@dataclass(frozen=True)
class GridSpec:
    """Discretization of one foliated chart.

    Parameters
    ----------
    n : int
        Complex transverse dimension (n >= 1).
    transverse_resolution : tuple of int
        Point counts for the 2n transverse axes; each >= 8 and even.
    transverse_periods : tuple of float
        Period lengths for the transverse axes; each > 0.
    leaf_resolution, leaf_periods : optional pairs
        Present together for a "full" spec with the two leaf axes (x, y);
        absent for a basic-only spec.
    """

    n: int
    transverse_resolution: tuple[int, ...]
    transverse_periods: tuple[float, ...]
    leaf_resolution: tuple[int, int] | None = None
    leaf_periods: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "transverse_resolution", tuple(int(r) for r in self.transverse_resolution))
        object.__setattr__(self, "transverse_periods", tuple(float(p) for p in self.transverse_periods))
        if self.leaf_resolution is not None:
            object.__setattr__(self, "leaf_resolution", tuple(int(r) for r in self.leaf_resolution))
        if self.leaf_periods is not None:
            object.__setattr__(self, "leaf_periods", tuple(float(p) for p in self.leaf_periods))
        if self.n < 1:
            raise GridError(f"transverse complex dimension must be >= 1, got n={self.n}")
        if len(self.transverse_resolution) != 2 * self.n:
            raise GridError(
                f"expected {2 * self.n} transverse resolutions, got {len(self.transverse_resolution)}"
            )
        if len(self.transverse_periods) != 2 * self.n:
            raise GridError(
                f"expected {2 * self.n} transverse periods, got {len(self.transverse_periods)}"
            )
        if (self.leaf_resolution is None) != (self.leaf_periods is None):
            raise GridError("leaf_resolution and leaf_periods must be given together")
        if self.leaf_resolution is not None and (
            len(self.leaf_resolution) != 2 or len(self.leaf_periods) != 2
        ):
            raise GridError("leaf axes come as an (x, y) pair")
        for r in self.resolutions:
            if r < _MIN_RESOLUTION or r % 2 != 0:
                raise GridError(f"every resolution must be even and >= {_MIN_RESOLUTION}, got {r}")
        for p in self.periods:
            if not p > 0:
                raise GridError(f"every period must be positive, got {p}")

    @property
    def has_leaf(self) -> bool:
        return self.leaf_resolution is not None

    @property
    def num_axes(self) -> int:
        """Number of axes when leaf axes are counted (2n or 2n + 2)."""
        return 2 * self.n + (2 if self.has_leaf else 0)

    @property
    def num_transverse_axes(self) -> int:
        return 2 * self.n

    @property
    def resolutions(self) -> tuple[int, ...]:
        if self.has_leaf:
            return self.transverse_resolution + self.leaf_resolution
        return self.transverse_resolution

    @property
    def periods(self) -> tuple[float, ...]:
        if self.has_leaf:
            return self.transverse_periods + self.leaf_periods
        return self.transverse_periods

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(p / r for p, r in zip(self.periods, self.resolutions))

    @property
    def transverse_shape(self) -> tuple[int, ...]:
        return self.transverse_resolution

    @property
    def full_shape(self) -> tuple[int, ...]:
        return self.resolutions

    def shape(self, basic: bool) -> tuple[int, ...]:
        if basic:
            return self.transverse_shape
        if not self.has_leaf:
            raise GridError("spec has no leaf axes; only basic fields exist on it")
        return self.full_shape

    def is_leaf_axis(self, axis: int) -> bool:
        if not 0 <= axis < self.num_axes:
            raise GridError(f"axis {axis} out of range for a spec with {self.num_axes} axes")
        return axis >= 2 * self.n

    def coordinate(self, axis: int) -> np.ndarray:
        """1-D array of sample coordinates along ``axis`` (0, h, ..., L - h)."""
        if not 0 <= axis < self.num_axes:
            raise GridError(f"axis {axis} out of range for a spec with {self.num_axes} axes")
        r = self.resolutions[axis]
        return np.arange(r) * (self.periods[axis] / r)

    def coordinate_mesh(self, axis: int, basic: bool = True) -> np.ndarray:
        """Coordinate of ``axis`` broadcast against the basic or full shape."""
        if basic and self.is_leaf_axis(axis):
            raise GridError("a basic field has no leaf coordinates")
        naxes = self.num_transverse_axes if basic else self.num_axes
        shape = [1] * naxes
        shape[axis] = self.resolutions[axis]
        return self.coordinate(axis).reshape(shape)

    def cell_volume(self, basic: bool) -> float:
        hs = self.spacings
        if basic:
            hs = hs[: 2 * self.n]
        return float(np.prod(hs))

    def basic_only(self) -> "GridSpec":
        """The same transverse discretization without leaf axes."""
        return GridSpec(self.n, self.transverse_resolution, self.transverse_periods)


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.asarray(values)
    if out.dtype not in (np.float64, np.complex128):
        out = out.astype(np.complex128 if np.iscomplexobj(out) else np.float64)
    out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ScalarField:
    """Real- or complex-valued sampled function over the grid.

    ``basic`` fields are stored without leaf axes; querying them at any leaf
    coordinate returns the same value by construction.  Values are frozen
    (read-only) after construction; all operations return new fields.
    """

    spec: GridSpec
    values: np.ndarray
    basic: bool = True

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        expected = self.spec.shape(self.basic)
        if self.values.shape != expected:
            raise GridError(
                f"field shape {self.values.shape} does not match spec shape {expected}"
            )

    @classmethod
    def constant(cls, spec: GridSpec, value: float | complex, basic: bool = True) -> "ScalarField":
        dtype = np.complex128 if isinstance(value, complex) else np.float64
        return cls(spec, np.full(spec.shape(basic), value, dtype=dtype), basic)

    @classmethod
    def zeros(cls, spec: GridSpec, basic: bool = True) -> "ScalarField":
        return cls(spec, np.zeros(spec.shape(basic)), basic)

    @classmethod
    def from_function(
        cls, spec: GridSpec, fn: Callable[..., np.ndarray], basic: bool = True
    ) -> "ScalarField":
        """Sample ``fn(*coords)`` where coords are broadcastable axis meshes."""
        naxes = spec.num_transverse_axes if basic else spec.num_axes
        coords = [spec.coordinate_mesh(a, basic) for a in range(naxes)]
        vals = np.broadcast_to(fn(*coords), spec.shape(basic))
        return cls(spec, np.array(vals), basic)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def as_full_values(self) -> np.ndarray:
        """Values broadcast over the leaf axes (read-only view for basic fields)."""
        if not self.basic:
            return self.values
        if not self.spec.has_leaf:
            return self.values
        target = self.spec.full_shape
        return np.broadcast_to(self.values.reshape(self.values.shape + (1, 1)), target)

    def with_values(self, values: np.ndarray, basic: bool | None = None) -> "ScalarField":
        return ScalarField(self.spec, values, self.basic if basic is None else basic)

    def __add__(self, other):
        if isinstance(other, ScalarField):
            _check_same_layout(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            _check_same_layout(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            _check_same_layout(self, other)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def conj(self) -> "ScalarField":
        return self.with_values(np.conj(self.values))


def _check_same_layout(a: ScalarField, b: ScalarField):
    if a.spec is not b.spec and a.spec != b.spec:
        raise GridError("fields live on different grids")
    if a.basic != b.basic:
        raise GridError("cannot combine basic and full fields directly; broadcast first")


# ---------------------------------------------------------------------------
# Stencils.  Difference form: constants drop out exactly, not just to O(eps).
# ---------------------------------------------------------------------------

_C1_NEAR = 2.0 / 3.0   # first derivative, +-1 neighbours
_C1_FAR = -1.0 / 12.0  # first derivative, +-2 neighbours
_C2_NEAR = 4.0 / 3.0   # second derivative, +-1 neighbours
_C2_FAR = -1.0 / 12.0  # second derivative, +-2 neighbours


def diff1(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Fourth-order periodic first derivative along an array axis."""
    near = np.roll(values, -1, axis=axis)
    np.subtract(near, np.roll(values, 1, axis=axis), out=near)
    far = np.roll(values, -2, axis=axis)
    np.subtract(far, np.roll(values, 2, axis=axis), out=far)
    near *= _C1_NEAR
    far *= _C1_FAR
    np.add(near, far, out=near)
    near /= h
    return near


def diff2(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Fourth-order periodic second derivative along an array axis."""
    near = np.roll(values, -1, axis=axis)
    np.subtract(near, values, out=near)
    tmp = np.roll(values, 1, axis=axis)
    np.subtract(tmp, values, out=tmp)
    np.add(near, tmp, out=near)
    far = np.roll(values, -2, axis=axis)
    np.subtract(far, values, out=far)
    tmp2 = np.roll(values, 2, axis=axis)
    np.subtract(tmp2, values, out=tmp2)
    np.add(far, tmp2, out=far)
    near *= _C2_NEAR
    far *= _C2_FAR
    np.add(near, far, out=near)
    near /= h * h
    return near


def fd_derivative(f: ScalarField, axis: int, order: int = 1) -> ScalarField:
    """Periodic central-difference derivative of ``f`` along a chart axis.

    ``axis`` indexes the chart axis order (x^1, y^1, ..., x^n, y^n, x, y).
    Leaf-axis derivatives of basic fields are exactly zero (the field has no
    leaf dependence by construction).

    Parameters
    ----------
    f : ScalarField
    axis : int
        Chart axis, 0-based.
    order : {1, 2}
        Derivative order.
    """
    spec = f.spec
    if not 0 <= axis < spec.num_axes:
        raise GridError(f"axis {axis} out of range for a spec with {spec.num_axes} axes")
    if order not in (1, 2):
        raise GridError(f"derivative order must be 1 or 2, got {order}")
    if f.basic and spec.is_leaf_axis(axis):
        zeros = np.zeros(spec.transverse_shape, dtype=f.values.dtype)
        return ScalarField(spec, zeros, basic=True)
    h = spec.spacings[axis]
    out = (diff1 if order == 1 else diff2)(f.values, axis, h)
    return ScalarField(spec, out, basic=f.basic)


def wirtinger(f: ScalarField, j: int, conjugate: bool = False) -> ScalarField:
    """Wirtinger derivative d/dz^j (or d/dzbar^j) of ``f``.

    Implements d/dz^j = (d/dx^j - i d/dy^j)/2 and its conjugate counterpart,
    with ``j`` 1-based to match the coordinate labels z^1 ... z^n.
    """
    n = f.spec.n
    if not 1 <= j <= n:
        raise GridError(f"complex index j={j} out of range 1..{n}")
    ax = 2 * (j - 1)
    ay = ax + 1
    hx = f.spec.spacings[ax]
    hy = f.spec.spacings[ay]
    dx = diff1(f.values, ax, hx)
    dy = diff1(f.values, ay, hy)
    sign = 1.0 if conjugate else -1.0
    return ScalarField(f.spec, 0.5 * (dx + sign * 1j * dy), basic=f.basic)


class FieldNorms(NamedTuple):
    sup_norm: float
    l2_norm: float
    mean: float


def integrate(f: ScalarField) -> float:
    """Integral of a real field over its own axes (periodic midpoint rule)."""
    if f.is_complex:
        raise GridError("integrate expects a real-valued field")
    return float(np.sum(f.values)) * f.spec.cell_volume(f.basic)


def norms(f: ScalarField) -> FieldNorms:
    """Sup norm over grid points, integral L2 norm, and mean value."""
    sup = float(np.max(np.abs(f.values))) if f.values.size else 0.0
    vol = f.spec.cell_volume(f.basic)
    l2 = float(np.sqrt(np.sum(np.abs(f.values) ** 2) * vol))
    mean = complex(np.mean(f.values))
    return FieldNorms(sup, l2, mean.real if not f.is_complex else mean)
