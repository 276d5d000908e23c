"""Torus grids, frequency lattices and the discrete Fourier transform between them.

Conventions
-----------
Nodes on each axis are ``x_m = -pi + 2 pi m / N`` for ``m = 0..N-1`` so every
node is a representative in ``[-pi, pi)``.  Integration uses the normalized
measure, i.e. each node carries the weight ``N**-n``; with this weight the
Fourier coefficient of ``f == 1`` at ``k = 0`` is exactly one.

Frequencies live on an l-infinity cube ``|k|_inf <= Kmax``.  A lattice and a
grid can only be paired when ``N >= 2 Kmax + 1``; every transform checks this
before doing anything else.

Arrays are laid out with the ``n`` spatial (or frequency) axes first and the
fiber axis of length ``d`` last.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "DimensionMismatch",
    "NyquistError",
    "TorusGrid",
    "FrequencyLattice",
    "GridFunction",
    "SpectralCoeffs",
    "check_nyquist",
    "forward_transform",
    "inverse_transform",
    "spectral_decay_report",
    "random_coeffs",
    "bracket",
]


class DimensionMismatch(ValueError):
    """Raised when torus dimensions or fiber dimensions disagree."""


class NyquistError(ValueError):
    """Raised when a grid is too coarse for a lattice (``N < 2 Kmax + 1``)."""


def bracket(k):
    """Japanese bracket ``<k> = (1 + |k|^2)^(1/2)`` over the last axis."""
    k = np.asarray(k, dtype=float)
    return np.sqrt(1.0 + np.sum(k * k, axis=-1))


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid with ``N`` nodes per axis on the n-torus."""

    n: int
    N: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension n must be a positive integer, got {self.n!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"points per axis N must be a positive integer, got {self.N!r}")

    @property
    def shape(self):
        return (self.N,) * self.n

    @property
    def size(self):
        return self.N**self.n

    @property
    def weight(self):
        """Quadrature weight of a single node."""
        return float(self.N) ** (-self.n)

    @cached_property
    def axis_nodes(self):
        return -np.pi + 2.0 * np.pi * np.arange(self.N) / self.N

    @cached_property
    def points(self):
        """Node coordinates, shape ``shape + (n,)``."""
        mesh = np.meshgrid(*([self.axis_nodes] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def flat_points(self):
        return self.points.reshape(self.size, self.n)

    @cached_property
    def axis_lags(self):
        """Representatives in ``[-pi, pi)`` of the lags ``2 pi l / N``, FFT order."""
        half = self.N // 2
        ell = (np.arange(self.N) + half) % self.N - half
        return 2.0 * np.pi * ell / self.N

    @cached_property
    def lag_points(self):
        """Lag coordinates ``y_l``, shape ``shape + (n,)``.

        Node ``x_m`` minus lag ``y_l`` is node ``x_{m-l}`` (indices mod N), which
        is what makes the convolution quadrature close on the grid.
        """
        mesh = np.meshgrid(*([self.axis_lags] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1)

    def full_lattice(self):
        """Largest lattice the grid can carry without aliasing."""
        return FrequencyLattice(self.n, max((self.N - 1) // 2, 0))

    def refine(self, factor=2):
        return TorusGrid(self.n, self.N * factor)


@dataclass(frozen=True)
class FrequencyLattice:
    """All ``k`` in ``Z^n`` with ``|k|_inf <= Kmax``, in lexicographic order."""

    n: int
    Kmax: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension n must be a positive integer, got {self.n!r}")
        if int(self.Kmax) != self.Kmax or self.Kmax < 0:
            raise ValueError(f"Kmax must be a nonnegative integer, got {self.Kmax!r}")

    @property
    def side(self):
        return 2 * self.Kmax + 1

    @property
    def shape(self):
        return (self.side,) * self.n

    @property
    def size(self):
        return self.side**self.n

    @cached_property
    def axis_values(self):
        return np.arange(-self.Kmax, self.Kmax + 1)

    @cached_property
    def members(self):
        """Lattice points, shape ``(size, n)``; row order matches ``shape``."""
        return np.array(list(itertools.product(self.axis_values, repeat=self.n)), dtype=np.int64).reshape(
            self.size, self.n
        )

    @cached_property
    def cube(self):
        """Lattice points, shape ``shape + (n,)``."""
        return self.members.reshape(self.shape + (self.n,))

    @cached_property
    def norms(self):
        """Euclidean ``|k|`` on the cube."""
        return np.sqrt(np.sum(self.cube.astype(float) ** 2, axis=-1))

    @cached_property
    def brackets(self):
        return bracket(self.cube)

    @cached_property
    def parity(self):
        """``(-1)^(k_1 + ... + k_n)``, the phase of ``e^{i k . pi}``."""
        return np.where(np.sum(self.cube, axis=-1) % 2 == 0, 1.0, -1.0)

    def index_of(self, k):
        k = tuple(int(v) for v in np.atleast_1d(k))
        if len(k) != self.n:
            raise DimensionMismatch(f"expected a {self.n}-vector, got {k}")
        if max(abs(v) for v in k) > self.Kmax:
            raise KeyError(f"{k} outside lattice with Kmax={self.Kmax}")
        return tuple(v + self.Kmax for v in k)

    def contains(self, other):
        return self.n == other.n and self.Kmax >= other.Kmax

    def embed(self, values, other):
        """Zero-pad an array on ``other`` (a sublattice) into this lattice."""
        if not self.contains(other):
            raise DimensionMismatch("cannot embed a larger lattice into a smaller one")
        off = self.Kmax - other.Kmax
        out = np.zeros(self.shape + values.shape[self.n:], dtype=values.dtype)
        out[(slice(off, off + other.side),) * self.n] = values
        return out

    def restrict(self, values, other):
        """Cut an array on this lattice down to a sublattice ``other``."""
        if not self.contains(other):
            raise DimensionMismatch("cannot restrict to a larger lattice")
        off = self.Kmax - other.Kmax
        return values[(slice(off, off + other.side),) * self.n]


def check_nyquist(lattice, grid):
    if lattice.n != grid.n:
        raise DimensionMismatch(f"lattice dimension {lattice.n} != grid dimension {grid.n}")
    if grid.N < 2 * lattice.Kmax + 1:
        raise NyquistError(
            f"grid with N={grid.N} cannot resolve Kmax={lattice.Kmax}; need N >= {2 * lattice.Kmax + 1}"
        )


@dataclass(frozen=True)
class GridFunction:
    """C^d-valued samples on a torus grid, values of shape ``grid.shape + (d,)``."""

    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim == self.grid.n:
            values = values[..., None]
        if values.shape[: self.grid.n] != self.grid.shape or values.ndim != self.grid.n + 1:
            raise DimensionMismatch(
                f"values of shape {values.shape} do not match grid {self.grid.shape} x d"
            )
        values = values.astype(complex, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self):
        return self.values.shape[-1]

    @classmethod
    def from_callable(cls, grid, func):
        """Sample ``func(points) -> (..., d)`` (or scalar ``(...)``) on the grid."""
        return cls(grid, np.asarray(func(grid.points)))

    @classmethod
    def zeros(cls, grid, d):
        return cls(grid, np.zeros(grid.shape + (d,), dtype=complex))

    @property
    def flat(self):
        return self.values.reshape(self.grid.size, self.dim)

    def _check(self, other):
        if other.grid != self.grid or other.dim != self.dim:
            raise DimensionMismatch("grid functions live on different grids or fibers")

    def __add__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        return GridFunction(self.grid, c * self.values)

    __rmul__ = __mul__

    def sup_distance(self, other):
        self._check(other)
        diff = self.values - other.values
        return float(np.max(np.sqrt(np.sum(np.abs(diff) ** 2, axis=-1)))) if diff.size else 0.0


@dataclass(frozen=True)
class SpectralCoeffs:
    """Fourier coefficients ``f^(k)`` on a lattice, shape ``lattice.shape + (d,)``."""

    lattice: FrequencyLattice
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs)
        if coeffs.ndim == self.lattice.n:
            coeffs = coeffs[..., None]
        if coeffs.shape[: self.lattice.n] != self.lattice.shape or coeffs.ndim != self.lattice.n + 1:
            raise DimensionMismatch(
                f"coefficients of shape {coeffs.shape} do not match lattice {self.lattice.shape} x d"
            )
        coeffs = coeffs.astype(complex, copy=True)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def dim(self):
        return self.coeffs.shape[-1]

    @classmethod
    def zeros(cls, lattice, d):
        return cls(lattice, np.zeros(lattice.shape + (d,), dtype=complex))

    @classmethod
    def single(cls, lattice, k0, v):
        v = np.atleast_1d(np.asarray(v, dtype=complex))
        out = np.zeros(lattice.shape + (v.size,), dtype=complex)
        out[lattice.index_of(k0)] = v
        return cls(lattice, out)

    @property
    def flat(self):
        return self.coeffs.reshape(self.lattice.size, self.dim)

    def at(self, k):
        return self.coeffs[self.lattice.index_of(k)]

    def on(self, lattice):
        """The same coefficients on a larger lattice (zero padded) or a smaller one (cut)."""
        if lattice == self.lattice:
            return self
        if lattice.contains(self.lattice):
            return SpectralCoeffs(lattice, lattice.embed(self.coeffs, self.lattice))
        return SpectralCoeffs(lattice, self.lattice.restrict(self.coeffs, lattice))

    def __add__(self, other):
        if other.lattice != self.lattice or other.dim != self.dim:
            raise DimensionMismatch("coefficient arrays live on different lattices or fibers")
        return SpectralCoeffs(self.lattice, self.coeffs + other.coeffs)

    def __mul__(self, c):
        return SpectralCoeffs(self.lattice, c * self.coeffs)

    __rmul__ = __mul__

    def conjugate_symmetric(self):
        """Project onto coefficients of a componentwise real function."""
        flipped = np.conj(self.coeffs[(slice(None, None, -1),) * self.lattice.n])
        return SpectralCoeffs(self.lattice, 0.5 * (self.coeffs + flipped))


def _bins(lattice, N):
    return np.mod(lattice.axis_values, N)


def forward_transform(f, lattice):
    """Quadrature Fourier coefficients ``N^-n sum_m e^{-i k.x_m} f(x_m)`` on ``lattice``.

    Exact for trigonometric polynomials of l-infinity degree at most ``Kmax``.
    """
    grid = f.grid
    check_nyquist(lattice, grid)
    axes = tuple(range(grid.n))
    spectrum = np.fft.fftn(f.values, axes=axes)
    idx = _bins(lattice, grid.N)
    picked = spectrum[np.ix_(*([idx] * grid.n))]
    picked = picked * (lattice.parity * grid.weight)[..., None]
    return SpectralCoeffs(lattice, picked)


def inverse_transform(F, grid):
    """Evaluate ``sum_k e^{i k.x} F(k)`` at the grid nodes."""
    lattice = F.lattice
    check_nyquist(lattice, grid)
    axes = tuple(range(grid.n))
    bins = np.zeros(grid.shape + (F.dim,), dtype=complex)
    idx = _bins(lattice, grid.N)
    bins[np.ix_(*([idx] * grid.n))] = F.coeffs * lattice.parity[..., None]
    values = np.fft.ifftn(bins, axes=axes) * grid.size
    return GridFunction(grid, values)


def spectral_decay_report(F, orders):
    """``{N: max_k <k>^N |F(k)|}`` for each requested order."""
    mags = np.sqrt(np.sum(np.abs(F.coeffs) ** 2, axis=-1))
    br = F.lattice.brackets
    return {int(order): float(np.max(br**order * mags)) for order in orders}


def random_coeffs(lattice, d, rng, envelope=None, real=False):
    """Complex Gaussian coefficients times an optional envelope on the cube."""
    shape = lattice.shape + (d,)
    coeffs = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    if envelope is not None:
        coeffs = coeffs * np.asarray(envelope)[..., None]
    out = SpectralCoeffs(lattice, coeffs)
    return out.conjugate_symmetric() if real else out
