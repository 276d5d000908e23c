"""Applying ``op[a]`` and its kernel representations.

Two independent routes are implemented for every dyadic piece of ``op[a]``:

* the frequency route evaluates ``sum_k e^{ik.x} a(x, k) w(k) f^(k)`` directly;
* the kernel route tabulates ``K_j(x, y) = sum_k e^{ik.y} a(x, k) phi_j(k)`` and
  evaluates ``N^-n sum_l K_j(x_m, y_l) f(x_m - y_l)`` as a plain quadrature sum.

Kernel sums run over ``supp phi_j`` intersected with the largest lattice the
grid carries.  The quadrature is then exact for every grid function whose
spectrum fits on that lattice, so the two routes agree to rounding.

Cost model: an x-dependent symbol is sampled on grid x (lattice or block
support), i.e. ``O(N^n * |support| * d^2)`` work per application, processed in
chunks of x; Fourier multipliers go through the FFT.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    DimensionMismatch,
    GridFunction,
    SpectralCoeffs,
    check_nyquist,
    forward_transform,
    inverse_transform,
)
from .symbol import identity

__all__ = [
    "MemoryGuardError",
    "KernelBlock",
    "apply_op",
    "apply_block",
    "apply_multiplier",
    "localize",
    "kernel_block",
    "tilde_kernel",
    "apply_via_kernel",
    "double_kernel_apply",
    "commutator_block",
    "required_points",
    "DEFAULT_MEMORY_LIMIT",
]

DEFAULT_MEMORY_LIMIT = 2 * 1024**3
_CHUNK_BUDGET = 2**22


class MemoryGuardError(MemoryError):
    """A table would exceed the configured memory limit."""


def required_points(lattice, a=None):
    """Grid size that represents ``op[a] f`` exactly for ``f`` on ``lattice``.

    Returns ``None`` when the symbol's x-bandwidth is unknown.
    """
    band = 0 if a is None else a.x_bandwidth
    if band is None:
        return None
    return 2 * (lattice.Kmax + band) + 1


def _warn_if_aliased(a, lattice, grid):
    need = required_points(lattice, a)
    if need is not None and grid.N < need:
        warnings.warn(
            f"grid N={grid.N} aliases op[{a.name}] f for Kmax={lattice.Kmax}; need N >= {need}",
            RuntimeWarning,
            stacklevel=3,
        )


def _as_coeffs(f, lattice):
    if isinstance(f, SpectralCoeffs):
        return f if lattice is None else f.on(lattice)
    if lattice is None:
        lattice = f.grid.full_lattice()
    return forward_transform(f, lattice)


def _check_dims(a, F):
    if a.n != F.lattice.n or a.d != F.dim:
        raise DimensionMismatch(
            f"symbol acts on n={a.n}, d={a.d} but data has n={F.lattice.n}, d={F.dim}"
        )


def apply_multiplier(a, F, weights=None):
    """``a(k) w(k) F(k)`` for a Fourier multiplier, kept in spectral form."""
    if not a.x_independent:
        raise ValueError(f"{a.name} depends on x; use apply_op")
    _check_dims(a, F)
    L = F.lattice
    A = a.evaluate(np.zeros((1, L.n)), L.members)[0]
    G = F.flat if weights is None else F.flat * np.asarray(weights).reshape(-1, 1)
    return SpectralCoeffs(L, np.einsum("qij,qj->qi", A, G).reshape(L.shape + (a.d,)))


def _apply_dense(a, F, grid, weights=None):
    L = F.lattice
    coeffs = F.flat if weights is None else F.flat * np.asarray(weights).reshape(-1, 1)
    keep = np.any(coeffs != 0, axis=1)
    out = np.zeros((grid.size, a.d), dtype=complex)
    if not np.any(keep):
        return GridFunction(grid, out.reshape(grid.shape + (a.d,)))
    ks, cs = L.members[keep], coeffs[keep]
    xs = grid.flat_points
    per_x = ks.shape[0] * a.d * a.d
    step = max(1, _CHUNK_BUDGET // per_x)
    for lo in range(0, grid.size, step):
        hi = min(grid.size, lo + step)
        A = a.evaluate(xs[lo:hi], ks)
        phase = np.exp(1j * (xs[lo:hi] @ ks.T.astype(float)))
        out[lo:hi] = np.einsum("pq,pqij,qj->pi", phase, A, cs)
    return GridFunction(grid, out.reshape(grid.shape + (a.d,)))


def _apply(a, F, grid, weights=None):
    _check_dims(a, F)
    check_nyquist(F.lattice, grid)
    if a.x_independent:
        return inverse_transform(apply_multiplier(a, F, weights), grid)
    return _apply_dense(a, F, grid, weights)


def apply_op(a, f, lattice=None, D=None, grid=None):
    """``(op[a] f)(x) = sum_k e^{ik.x} a(x, k) f^(k)`` at the grid nodes.

    ``f`` is a :class:`GridFunction` (transformed on ``lattice``, default the
    grid's full lattice) or :class:`SpectralCoeffs` (then ``grid`` is
    required).  With a dyadic decomposition ``D`` the result is assembled as
    ``sum_j op[a] op[phi_j] f``.
    """
    grid = f.grid if grid is None else grid
    if D is not None:
        lattice = D.lattice if lattice is None else lattice
    F = _as_coeffs(f, lattice)
    _check_dims(a, F)
    _warn_if_aliased(a, F.lattice, grid)
    if D is None:
        return _apply(a, F, grid)
    out = GridFunction.zeros(grid, a.d)
    for j in range(D.block_index_max(F.lattice) + 1):
        out = out + _apply(a, F, grid, D.multiplier(j, F.lattice))
    return out


def apply_block(a, f, D, j, grid=None):
    """``op[a] op[phi_j] f`` evaluated in frequency space."""
    if not 0 <= j <= D.j_max:
        raise ValueError(f"block index {j} outside 0..{D.j_max}")
    grid = f.grid if grid is None else grid
    F = _as_coeffs(f, D.lattice)
    return _apply(a, F, grid, D.multiplier(j, F.lattice))


def localize(g, D, j, chi=False):
    """``op[phi_j] g`` (or ``op[chi_j] g``) for a grid function with any spectrum the grid carries."""
    L = g.grid.full_lattice()
    G = forward_transform(g, L)
    w = D.chi_multiplier(j, L) if chi else D.multiplier(j, L)
    return inverse_transform(SpectralCoeffs(L, G.coeffs * w[..., None]), g.grid)


@dataclass(frozen=True)
class KernelBlock:
    """``K_j(x_m, y_l)`` on grid nodes x lag nodes.

    ``values`` has shape ``(P, N, ..., N, d, d)``: one row per grid node in
    flat order (a single row when the kernel does not depend on x), then the
    lag axes in FFT order (``y_l = 2 pi l / N`` reduced to ``[-pi, pi)``).
    """

    j: int
    grid: object
    values: np.ndarray = field(repr=False)
    x_independent: bool
    truncated: bool

    @property
    def d(self):
        return self.values.shape[-1]

    def at_x(self, m):
        return self.values[0 if self.x_independent else m]

    def y_profile(self, norm):
        """``y -> max_x norm(K(x, y))`` with the given matrix-norm function."""
        return np.max(norm(self.values), axis=0)


def _kernel_from_coeffs(coeff_fn, support, grid, d, rows, memory_limit):
    """Fold ``c_k(x)`` into FFT bins and return ``sum_k e^{ik.y_l} c_k(x)`` per row."""
    n, N = grid.n, grid.N
    nbytes = rows * grid.size * d * d * 16
    if nbytes > memory_limit:
        raise MemoryGuardError(
            f"kernel table needs ~{nbytes / 1024**3:.2f} GiB, limit is {memory_limit / 1024**3:.2f} GiB"
        )
    out = np.empty((rows,) + grid.shape + (d, d), dtype=complex)
    bins_idx = tuple(np.mod(support[:, i], N) for i in range(n))
    per_row = grid.size * d * d + support.shape[0] * d * d
    step = max(1, _CHUNK_BUDGET // per_row)
    for lo in range(0, rows, step):
        hi = min(rows, lo + step)
        c = coeff_fn(lo, hi)
        bins = np.zeros((hi - lo,) + grid.shape + (d, d), dtype=complex)
        bins[(slice(None),) + bins_idx] = c
        out[lo:hi] = np.fft.ifftn(bins, axes=tuple(range(1, n + 1))) * grid.size
    return out


def kernel_block(a, D, j, grid, memory_limit=DEFAULT_MEMORY_LIMIT):
    """Tabulate ``K_j(x, y) = sum_k e^{ik.y} a(x, k) phi_j(k)``.

    The sum is finite; it runs over ``supp phi_j`` within the grid's full
    lattice.  ``truncated`` flags blocks whose support does not fit.
    """
    if not 0 <= j <= D.block_index_max(grid.full_lattice()) and not 0 <= j <= D.j_max:
        raise ValueError(f"block index {j} is out of range")
    if a.n != grid.n:
        raise DimensionMismatch("symbol and grid dimensions differ")
    Lg = grid.full_lattice()
    w = D.multiplier(j, Lg).reshape(-1)
    mask = w != 0.0
    support, weights = Lg.members[mask], w[mask]
    radius = math.ceil(D.support_radius(j)) - 1
    truncated = radius > Lg.Kmax
    xs = np.zeros((1, grid.n)) if a.x_independent else grid.flat_points

    def coeffs(lo, hi):
        return a.evaluate(xs[lo:hi], support) * weights[None, :, None, None]

    values = _kernel_from_coeffs(coeffs, support, grid, a.d, xs.shape[0], memory_limit)
    return KernelBlock(j, grid, values, a.x_independent, truncated)


def tilde_kernel(D, j, grid, d=1):
    """``sum_l e^{il.y} phi_j(l) id``, the kernel of ``op[phi_j]``."""
    return kernel_block(identity(grid.n, d), D, j, grid)


def _lag_gather_index(grid, lo, hi):
    """Flat node index of ``x_m - y_l`` for nodes ``lo..hi`` and all lags."""
    n, N = grid.n, grid.N
    m = np.array(np.unravel_index(np.arange(lo, hi), grid.shape)).T
    ell = np.array(np.unravel_index(np.arange(grid.size), grid.shape)).T
    diff = np.mod(m[:, None, :] - ell[None, :, :], N)
    return np.ravel_multi_index(tuple(diff[..., i] for i in range(n)), grid.shape)


def apply_via_kernel(K, f):
    """Quadrature convolution ``F(x_m) = N^-n sum_l K(x_m, y_l) f(x_m - y_l)``."""
    grid = f.grid
    if K.grid != grid:
        raise DimensionMismatch("kernel and function live on different grids")
    if K.d != f.dim:
        raise DimensionMismatch("kernel and function have different fiber dimensions")
    d = f.dim
    fv = f.flat
    kv = K.values.reshape(K.values.shape[0], grid.size, d, d)
    out = np.empty((grid.size, d), dtype=complex)
    step = max(1, _CHUNK_BUDGET // (grid.size * d * d))
    for lo in range(0, grid.size, step):
        hi = min(grid.size, lo + step)
        idx = _lag_gather_index(grid, lo, hi)
        kern = kv[0][None] if K.x_independent else kv[lo:hi]
        out[lo:hi] = np.einsum("plij,plj->pi", np.broadcast_to(kern, (hi - lo,) + kv.shape[1:]), fv[idx])
    return GridFunction(grid, out.reshape(grid.shape + (d,)) * grid.weight)


def double_kernel_apply(a, f, D, j, kind, grid=None, memory_limit=DEFAULT_MEMORY_LIMIT):
    """Evaluate the kappa-sum of double kernel convolutions in factored form.

    ``kind=1`` reproduces ``op[a] op[phi_j] f`` through
    ``K_kappa(x, z) Ktilde_j(y)``; ``kind=2`` reproduces ``op[phi_j] op[a] f``
    through ``Ktilde_j(y) K_kappa(x - y, z)``.  No three-argument table is
    ever formed: kind 1 convolves with ``Ktilde_j`` first and then with
    ``K_kappa``; kind 2 sums the ``K_kappa`` convolutions (a function of
    ``x - y``) and finishes with one ``Ktilde_j`` convolution.
    """
    if kind not in (1, 2):
        raise ValueError(f"kind must be 1 or 2, got {kind}")
    if not 0 <= j <= D.j_max:
        raise ValueError(f"block index {j} outside 0..{D.j_max}")
    grid = f.grid if grid is None else grid
    F = _as_coeffs(f, D.lattice)
    L = F.lattice
    Kt = kernel_block(identity(grid.n, a.d), D, j, grid, memory_limit)
    if kind == 2:
        _warn_if_aliased(a, L, grid)
    total = GridFunction.zeros(grid, a.d)
    for kappa in range(D.j_max + 1):
        chi_f = inverse_transform(SpectralCoeffs(L, F.coeffs * D.chi_multiplier(kappa, L)[..., None]), grid)
        Kk = kernel_block(a, D, kappa, grid, memory_limit)
        if kind == 1:
            total = total + apply_via_kernel(Kk, apply_via_kernel(Kt, chi_f))
        else:
            total = total + apply_via_kernel(Kk, chi_f)
    return total if kind == 1 else apply_via_kernel(Kt, total)


def commutator_block(a, f, D, j, grid=None):
    """``(op[phi_j] op[a] - op[a] op[phi_j]) f`` computed in frequency space.

    Fourier multipliers commute with ``op[phi_j]``; for them the exact zero is
    returned without computing both orderings.
    """
    if not 0 <= j <= D.j_max:
        raise ValueError(f"block index {j} outside 0..{D.j_max}")
    grid = f.grid if grid is None else grid
    if a.x_independent:
        return GridFunction.zeros(grid, a.d)
    F = _as_coeffs(f, D.lattice)
    _warn_if_aliased(a, F.lattice, grid)
    left = localize(_apply(a, F, grid), D, j)
    right = _apply(a, F, grid, D.multiplier(j, F.lattice))
    return left - right
