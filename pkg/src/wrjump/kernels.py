"""Radial kernel families, periodic grids and grid convolution.

Three families are supported (``tophat``, ``gaussian``, ``exponential``),
each parameterised by an amplitude ``A`` and a length scale ``range``.
All functionals used elsewhere (mass, sup, Fourier transform, exact
samplers) have closed forms for these families in d = 1 and d = 2.

Fourier convention: ``fhat(p) = int f(x) exp(+i p.x) dx``.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit
from scipy.special import j1

FAMILIES = ("tophat", "gaussian", "exponential")
FAMILY_CODE = {name: code for code, name in enumerate(FAMILIES)}

TOPHAT, GAUSSIAN, EXPONENTIAL = 0, 1, 2


def _check_dimension(d: int) -> None:
    if d not in (1, 2):
        raise ValueError(f"unsupported dimension {d!r}; expected 1 or 2")


@dataclass(frozen=True)
class KernelSpec:
    family: str
    amplitude: float
    range: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ValueError(f"amplitude must be finite and >= 0, got {self.amplitude}")
        if not (math.isfinite(self.range) and self.range > 0):
            raise ValueError(f"range must be finite and > 0, got {self.range}")
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "range", float(self.range))

    @property
    def code(self) -> int:
        return FAMILY_CODE[self.family]

    def scaled(self, factor: float) -> "KernelSpec":
        return KernelSpec(self.family, self.amplitude * factor, self.range)

    def to_dict(self) -> dict:
        return {"family": self.family, "amplitude": self.amplitude, "range": self.range}

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        return cls(data["family"], float(data["amplitude"]), float(data["range"]))

    @classmethod
    def zero(cls, family: str = "tophat", range: float = 1.0) -> "KernelSpec":
        return cls(family, 0.0, range)

    @classmethod
    def with_mass(cls, family: str, mass: float, range: float, d: int) -> "KernelSpec":
        """Kernel of the given family whose integral over R^d equals ``mass``."""
        unit = kernel_mass(cls(family, 1.0, range), d)
        return cls(family, mass / unit, range)


@njit(cache=True, nogil=True)
def kernel_value(code, amplitude, length, r):
    """Scalar radial kernel value; shared by the grid and particle code."""
    if code == TOPHAT:
        return amplitude if r <= length else 0.0
    elif code == GAUSSIAN:
        return amplitude * math.exp(-(r * r) / (2.0 * length * length))
    else:
        return amplitude * math.exp(-r / length)


def kernel_eval(spec: KernelSpec, r):
    """Evaluate the kernel at radial distance ``r`` (scalar or array)."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("radial distance must be nonnegative")
    A, R = spec.amplitude, spec.range
    if spec.code == TOPHAT:
        out = np.where(r_arr <= R, A, 0.0)
    elif spec.code == GAUSSIAN:
        out = A * np.exp(-(r_arr**2) / (2.0 * R * R))
    else:
        out = A * np.exp(-r_arr / R)
    return float(out) if np.ndim(out) == 0 else out


def kernel_mass(spec: KernelSpec, d: int) -> float:
    """Integral of the kernel over R^d."""
    _check_dimension(d)
    A, R = spec.amplitude, spec.range
    if spec.code == TOPHAT:
        return 2.0 * A * R if d == 1 else A * math.pi * R * R
    if spec.code == GAUSSIAN:
        return A * R * math.sqrt(2.0 * math.pi) if d == 1 else 2.0 * math.pi * A * R * R
    return 2.0 * A * R if d == 1 else 2.0 * math.pi * A * R * R


def kernel_sup(spec: KernelSpec) -> float:
    return spec.amplitude


def kernel_fourier(spec: KernelSpec, p, d: int):
    """Radial Fourier transform at wavenumber ``|p|`` (scalar or array)."""
    _check_dimension(d)
    p_arr = np.abs(np.asarray(p, dtype=float))
    A, R = spec.amplitude, spec.range
    mass = kernel_mass(spec, d)
    if spec.code == GAUSSIAN:
        out = mass * np.exp(-0.5 * (R * p_arr) ** 2)
    elif spec.code == EXPONENTIAL:
        q = 1.0 + (R * p_arr) ** 2
        out = mass / q if d == 1 else mass / q**1.5
    else:
        x = R * p_arr
        small = x < 1e-8
        xs = np.where(small, 1.0, x)
        if d == 1:
            shape = np.where(small, 1.0 - x * x / 6.0, np.sin(xs) / xs)
        else:
            shape = np.where(small, 1.0 - x * x / 8.0, 2.0 * j1(xs) / xs)
        out = mass * shape
    return float(out) if np.ndim(out) == 0 else out


def cutoff_radius(spec: KernelSpec, tol: float = 1e-12) -> float:
    """Radius beyond which the kernel is below ``tol`` (exact for tophat)."""
    A, R = spec.amplitude, spec.range
    if A <= tol:
        return 0.0
    if spec.code == TOPHAT:
        return R
    if spec.code == GAUSSIAN:
        return R * math.sqrt(2.0 * math.log(A / tol))
    return R * math.log(A / tol)


@njit(cache=True, nogil=True)
def displacement_from_uniforms(code, length, d, u0, u1, u2, out):
    """Map three uniforms in [0, 1) to a displacement with density ~ kernel.

    Writes ``d`` coordinates into ``out``.
    """
    if code == TOPHAT:
        if d == 1:
            out[0] = length * (2.0 * u0 - 1.0)
        else:
            r = length * math.sqrt(u0)
            ang = 2.0 * math.pi * u1
            out[0] = r * math.cos(ang)
            out[1] = r * math.sin(ang)
    elif code == GAUSSIAN:
        # Box-Muller
        rad = math.sqrt(-2.0 * math.log(1.0 - u0))
        ang = 2.0 * math.pi * u1
        out[0] = length * rad * math.cos(ang)
        if d == 2:
            out[1] = length * rad * math.sin(ang)
    else:
        if d == 1:
            r = -length * math.log(1.0 - u0)
            out[0] = r if u1 < 0.5 else -r
        else:
            # radial density ~ r exp(-r/length): Gamma(2, length)
            r = -length * (math.log(1.0 - u0) + math.log(1.0 - u1))
            ang = 2.0 * math.pi * u2
            out[0] = r * math.cos(ang)
            out[1] = r * math.sin(ang)


@njit(cache=True, nogil=True)
def _displacements(code, length, d, uniforms):
    n = uniforms.shape[0]
    out = np.empty((n, d))
    for k in range(n):
        displacement_from_uniforms(
            code, length, d, uniforms[k, 0], uniforms[k, 1], uniforms[k, 2], out[k]
        )
    return out


def sample_displacement(spec: KernelSpec, d: int, rng: np.random.Generator, size: int | None = None):
    """Draw displacement(s) with density ``kernel / mass`` in R^d.

    Returns shape ``(d,)`` when ``size`` is None, else ``(size, d)``.
    """
    _check_dimension(d)
    if kernel_mass(spec, d) <= 0:
        raise ValueError("cannot sample from a zero-mass kernel")
    n = 1 if size is None else int(size)
    u = rng.random((n, 3))
    out = _displacements(spec.code, spec.range, d, u)
    return out[0] if size is None else out


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on the torus ``prod [0, L_k)``."""

    dimension: int
    box_length: tuple
    points: tuple

    def __post_init__(self):
        _check_dimension(self.dimension)
        L = self.box_length
        n = self.points
        L = (float(L),) * self.dimension if np.isscalar(L) else tuple(float(v) for v in L)
        n = (int(n),) * self.dimension if np.isscalar(n) else tuple(int(v) for v in n)
        if len(L) != self.dimension or len(n) != self.dimension:
            raise ValueError("box_length/points must have one entry per axis")
        if any(not (math.isfinite(v) and v > 0) for v in L):
            raise ValueError("box_length must be positive")
        if any(v <= 0 for v in n):
            raise ValueError("points must be positive")
        object.__setattr__(self, "box_length", L)
        object.__setattr__(self, "points", n)

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def spacing(self) -> tuple:
        return tuple(L / n for L, n in zip(self.box_length, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.points))

    @property
    def volume(self) -> float:
        return float(np.prod(self.box_length))

    def axes(self) -> list:
        return [np.arange(n) * h for n, h in zip(self.points, self.spacing)]

    def coordinates(self) -> list:
        """Cell coordinates ``i * h`` as a list of ``d`` arrays of grid shape."""
        return np.meshgrid(*self.axes(), indexing="ij")

    @cached_property
    def radial_offsets(self) -> np.ndarray:
        """Minimum-image distance from the origin cell to every cell."""
        sq = np.zeros(self.shape)
        for axis, (n, h) in enumerate(zip(self.points, self.spacing)):
            j = np.arange(n)
            delta = h * np.minimum(j, n - j)
            sq = sq + np.expand_dims(delta**2, tuple(k for k in range(self.dimension) if k != axis))
        return np.sqrt(sq)

    def wavenumbers(self, mode) -> float:
        """Radial wavenumber of the integer Fourier mode ``mode`` (per axis)."""
        mode = np.atleast_1d(mode)
        return float(np.sqrt(sum((2 * math.pi * m / L) ** 2 for m, L in zip(mode, self.box_length))))

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "box_length": list(self.box_length), "points": list(self.points)}

    @classmethod
    def from_dict(cls, data: dict, dimension: int | None = None) -> "GridSpec":
        d = data.get("dimension", dimension)
        return cls(d, data["box_length"], data["points"])


@dataclass(frozen=True, eq=False)
class Field:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            vals = vals.reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self.grid, other.grid)
        return Field(self.grid, self.values + other.values)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def total(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def to_csv(self) -> str:
        return field_to_csv(self)


def _same_grid(g1: GridSpec, g2: GridSpec) -> None:
    if g1 != g2:
        raise ValueError(f"grid mismatch: {g1} vs {g2}")


def field_to_csv(f: Field) -> str:
    g = f.grid
    d = g.dimension
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"i{k}" for k in range(d)] + [f"x{k}" for k in range(d)] + ["value"])
    for idx in np.ndindex(*g.shape):
        coords = [i * h for i, h in zip(idx, g.spacing)]
        w.writerow(list(idx) + [repr(c) for c in coords] + [repr(float(f.values[idx]))])
    return buf.getvalue()


def field_from_csv(text: str, grid: GridSpec) -> Field:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    d = grid.dimension
    if len(header) != 2 * d + 1:
        raise ValueError("CSV column count does not match grid dimension")
    vals = np.zeros(grid.shape)
    for row in body:
        idx = tuple(int(v) for v in row[:d])
        vals[idx] = float(row[-1])
    return Field(grid, vals)


class GridKernel:
    """A kernel sampled on a periodic grid, with its cached transform.

    ``convolve`` applies ``(k * f)(x_j) = h^d sum_m k(x_j - x_m) f(x_m)``.
    """

    def __init__(self, spec: KernelSpec, grid: GridSpec):
        self.spec = spec
        self.grid = grid
        if spec.amplitude > 0 and any(spec.range > L / 4 for L in grid.box_length):
            warnings.warn(
                f"kernel range {spec.range} exceeds a quarter of the box; wrap-around is not negligible",
                stacklevel=3,
            )
        self.samples = np.asarray(kernel_eval(spec, grid.radial_offsets), dtype=float).reshape(grid.shape)
        # Real and even, so the transform is real up to roundoff.
        self.transform = np.fft.rfftn(self.samples) * grid.cell_volume

    @cached_property
    def discrete_mass(self) -> float:
        return float(self.samples.sum() * self.grid.cell_volume)

    def discrete_fourier(self, mode) -> float:
        """Transform of the sampled kernel at an integer grid mode."""
        mode = np.atleast_1d(mode)
        phase = np.zeros(self.grid.shape)
        for axis, (m, n) in enumerate(zip(mode, self.grid.points)):
            j = np.arange(n)
            phase = phase + np.expand_dims(
                2 * math.pi * m * j / n, tuple(k for k in range(self.grid.dimension) if k != axis)
            )
        return float((self.samples * np.cos(phase)).sum() * self.grid.cell_volume)

    def convolve(self, values: np.ndarray) -> np.ndarray:
        if self.spec.amplitude == 0:
            return np.zeros(self.grid.shape)
        axes = tuple(range(self.grid.dimension))
        return np.fft.irfftn(np.fft.rfftn(values) * self.transform, s=self.grid.shape, axes=axes)

    def convolve_direct(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros(self.grid.shape)
        h = self.grid.cell_volume
        for shift in np.ndindex(*self.grid.shape):
            w = self.samples[shift]
            if w != 0.0:
                out += w * np.roll(values, shift, axis=tuple(range(self.grid.dimension)))
        return out * h


def periodic_convolve(f: Field, spec: KernelSpec, method: str = "fft") -> Field:
    """Return ``spec * f`` on the torus of ``f.grid``."""
    gk = GridKernel(spec, f.grid)
    if method == "fft":
        return Field(f.grid, gk.convolve(f.values))
    if method == "direct":
        return Field(f.grid, gk.convolve_direct(f.values))
    raise ValueError(f"unknown convolution method {method!r}")


def constant_field(grid: GridSpec, value: float) -> Field:
    return Field(grid, np.full(grid.shape, float(value)))
