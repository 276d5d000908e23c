"""Operator-valued symbols ``a(x, k)`` on ``T^n x Z^n`` with values in ``C^(d x d)``.

A :class:`Symbol` wraps a vectorized evaluator.  The evaluator is called as
``func(x, k, beta)`` with ``x`` of shape ``(P, 1, n)``, ``k`` of shape
``(1, Q, n)`` and a multi-index ``beta``; it must return ``d_x^beta a`` with a
shape broadcastable to ``(P, Q, d, d)``.  Derivatives in ``x`` are supplied in
closed form by every constructor, never by numerical differentiation.

The symbol norm is evaluated on a finite grid and a truncated lattice, so the
value reported by :func:`symbol_norm` is a lower bound for the true supremum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import forward_difference, multi_indices
from .grid import DimensionMismatch, bracket

__all__ = [
    "Symbol",
    "SymbolNormReport",
    "LatticeTable",
    "operator_norm",
    "discrete_difference",
    "discrete_leibniz_check",
    "symbol_norm",
    "zoo",
    "make_symbol",
    "identity",
    "zero",
    "bracket_power",
    "derivative",
    "multiplication",
    "cosine",
    "weierstrass",
    "weierstrass_function",
    "rotation_matrix",
]


def operator_norm(A):
    """Spectral norm over the last two axes."""
    A = np.asarray(A)
    d = A.shape[-1]
    if d == 1:
        return np.abs(A[..., 0, 0])
    if d == 2:
        fro = np.sum(np.abs(A) ** 2, axis=(-2, -1))
        det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
        disc = np.sqrt(np.maximum(fro * fro - 4.0 * np.abs(det) ** 2, 0.0))
        return np.sqrt(0.5 * (fro + disc))
    return np.linalg.svd(A, compute_uv=False)[..., 0]


class Symbol:
    """A symbol of order ``m`` with ``rho`` difference estimates and ``C^r`` regularity in x.

    Parameters
    ----------
    n, d : int
        Torus dimension and fiber dimension.
    m : float
        Order.
    r : float
        Regularity in ``x``; derivatives up to ``floor(r)`` must be available.
    func : callable
        ``func(x, k, beta)`` as described in the module docstring.
    rho : int, optional
        Number of difference estimates, default ``n + 1``.
    x_independent : bool
        Marks Fourier multipliers; lets operators skip the x loop.
    x_bandwidth : int or None
        Largest x-frequency of ``a(., k)`` if it is a trigonometric polynomial
        in ``x`` (0 for multipliers), ``None`` when unknown.
    """

    def __init__(self, n, d, m, r, func, rho=None, x_independent=False, x_bandwidth=None,
                 name="symbol", params=None):
        if r < 0:
            raise ValueError(f"regularity r must be nonnegative, got {r}")
        rho = n + 1 if rho is None else int(rho)
        if rho < n + 1:
            raise ValueError(f"need rho >= n + 1 = {n + 1}, got {rho}")
        self.n, self.d = int(n), int(d)
        self.m, self.r, self.rho = float(m), float(r), rho
        self.func = func
        self.x_independent = bool(x_independent)
        self.x_bandwidth = 0 if x_independent else x_bandwidth
        self.name = name
        self.params = dict(params or {})

    def __repr__(self):
        return f"Symbol({self.name}, n={self.n}, d={self.d}, m={self.m}, r={self.r}, rho={self.rho})"

    @property
    def max_derivative(self):
        return math.floor(self.r) if math.isfinite(self.r) else 0

    def evaluate(self, x, k, beta=None):
        """``d_x^beta a(x, k)`` for ``x`` of shape ``(P, n)`` and ``k`` of shape ``(Q, n)``.

        Returns an array of shape ``(P, Q, d, d)``.
        """
        x = np.asarray(x, dtype=float).reshape(-1, self.n)
        k = np.asarray(k).reshape(-1, self.n)
        beta = tuple([0] * self.n) if beta is None else tuple(beta)
        if len(beta) != self.n:
            raise DimensionMismatch(f"derivative multi-index {beta} has wrong length")
        if sum(beta) > self.max_derivative and not self.x_independent:
            raise ValueError(f"{self.name} provides x-derivatives up to order {self.max_derivative}")
        shape = (x.shape[0], k.shape[0], self.d, self.d)
        if self.x_independent and any(beta):
            return np.zeros(shape, dtype=complex)
        out = self.func(x[:, None, :], k[None, :, :], beta)
        return np.broadcast_to(np.asarray(out, dtype=complex), shape)

    def __add__(self, other):
        if (self.n, self.d) != (other.n, other.d):
            raise DimensionMismatch("symbols of different shapes cannot be added")
        f, g = self.func, other.func

        def func(x, k, beta):
            return np.asarray(f(x, k, beta), dtype=complex) + np.asarray(g(x, k, beta), dtype=complex)

        bands = (self.x_bandwidth, other.x_bandwidth)
        return Symbol(
            self.n, self.d, max(self.m, other.m), min(self.r, other.r), func,
            rho=min(self.rho, other.rho),
            x_independent=self.x_independent and other.x_independent,
            x_bandwidth=None if None in bands else max(bands),
            name=f"({self.name} + {other.name})",
        )

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        f = self.func

        def func(x, k, beta):
            return c * np.asarray(f(x, k, beta), dtype=complex)

        return Symbol(self.n, self.d, self.m, self.r, func, rho=self.rho,
                      x_independent=self.x_independent, x_bandwidth=self.x_bandwidth,
                      name=f"{c}*{self.name}", params=self.params)

    __rmul__ = __mul__

    def with_order(self, m):
        """Same evaluator, declared order ``m``."""
        return Symbol(self.n, self.d, m, self.r, self.func, rho=self.rho,
                      x_independent=self.x_independent, x_bandwidth=self.x_bandwidth,
                      name=self.name, params=self.params)


@dataclass(frozen=True)
class LatticeTable:
    """Values of a map on the box ``origin + [0, shape)`` of ``Z^n``.

    ``values`` carries the ``n`` lattice axes first; any trailing axes (e.g. a
    ``d x d`` matrix) are carried along.
    """

    values: np.ndarray = field(repr=False)
    origin: tuple

    @property
    def n(self):
        return len(self.origin)

    @property
    def box_shape(self):
        return self.values.shape[: self.n]

    @classmethod
    def from_function(cls, func, lower, upper):
        """Tabulate ``func(k)`` (``k`` of shape ``(..., n)``) on ``lower <= k <= upper``."""
        axes = [np.arange(lo, hi + 1) for lo, hi in zip(lower, upper)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(np.asarray(func(pts)), tuple(int(v) for v in lower))

    def at(self, k):
        return self.values[tuple(int(a) - o for a, o in zip(k, self.origin))]


def discrete_difference(table, alpha):
    """Forward differences ``Delta^alpha``; the box keeps its origin and shrinks by ``alpha``."""
    if len(alpha) != table.n:
        raise DimensionMismatch(f"multi-index {alpha} does not match table dimension {table.n}")
    for axis, (size, order) in enumerate(zip(table.box_shape, alpha)):
        if order >= size:
            raise ValueError(f"table margin too small along axis {axis}: need more than {order} points")
    return LatticeTable(forward_difference(table.values, alpha), table.origin)


def _product(f, g, n):
    if f.ndim >= n + 2 and g.ndim >= n + 2:
        return f @ g
    return f * g


def discrete_leibniz_check(f, g, alpha):
    """Largest deviation between ``Delta^alpha (f g)`` and its discrete Leibniz expansion.

    The expansion is ``sum_{beta <= alpha} C(alpha, beta) (Delta^beta f)(k) (Delta^(alpha-beta) g)(k + beta)``
    with the factor order kept, so it also holds for matrix-valued tables.
    """
    n = f.n
    if f.box_shape != g.box_shape or f.origin != g.origin:
        raise DimensionMismatch("tables must live on the same box")
    lhs = discrete_difference(LatticeTable(_product(f.values, g.values, n), f.origin), alpha).values
    out_shape = lhs.shape[:n]
    rhs = np.zeros_like(lhs, dtype=complex)
    for beta in np.ndindex(*[a + 1 for a in alpha]):
        coeff = math.prod(math.comb(a, b) for a, b in zip(alpha, beta))
        rest = tuple(a - b for a, b in zip(alpha, beta))
        df = discrete_difference(f, beta).values[tuple(slice(0, s) for s in out_shape)]
        dg = discrete_difference(g, rest).values[tuple(slice(b, b + s) for b, s in zip(beta, out_shape))]
        rhs = rhs + coeff * _product(df, dg, n)
    return float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0


@dataclass
class SymbolNormReport:
    """Result of :func:`symbol_norm`; ``value`` is a lower bound of the true norm."""

    value: float
    smooth_part: float
    holder_part: float
    argmax: dict
    per_alpha: dict
    holder_per_alpha: dict
    lower_bound: bool = True


def _chunks(total, per_item, budget):
    step = max(1, int(budget // max(per_item, 1)))
    for start in range(0, total, step):
        yield start, min(total, start + step)


def _box_points(lattice, margin):
    axis = np.arange(-lattice.Kmax, lattice.Kmax + margin + 1)
    pts = np.stack(np.meshgrid(*([axis] * lattice.n), indexing="ij"), axis=-1)
    return pts.reshape(-1, lattice.n), (axis.size,) * lattice.n


def symbol_norm(a, lattice, grid, m=None, rho=None, r=None, budget=2**22):
    """Evaluate ``||a||_m^(rho, r)`` over grid nodes ``x`` and lattice points ``k``.

    The ``k``-differences use values on ``[-Kmax, Kmax + rho]^n``.  For
    fractional ``r`` the Hölder term takes the supremum over distinct grid
    pairs with the torus distance; pairs are visited by increasing distance
    and the scan stops once ``2 max||T|| / dist^(r - floor r)`` cannot beat the
    current maximum.
    """
    if lattice.n != a.n or grid.n != a.n:
        raise DimensionMismatch("symbol, lattice and grid dimensions differ")
    m = a.m if m is None else float(m)
    rho = a.rho if rho is None else int(rho)
    r = a.r if r is None else float(r)
    if r < 0:
        raise ValueError(f"regularity r must be nonnegative, got {r}")
    n, d = a.n, a.d
    floor_r = math.floor(r) if math.isfinite(r) else a.max_derivative
    kpts, box = _box_points(lattice, rho)
    side = lattice.side
    inner = (slice(None),) + (slice(0, side),) * n
    xs = np.zeros((1, n)) if a.x_independent else grid.flat_points
    alphas = multi_indices(n, rho)
    betas = [b for b in multi_indices(n, floor_r) if not (a.x_independent and any(b))]
    weights = {alpha: lattice.brackets ** (sum(alpha) - m) for alpha in alphas}
    per_alpha = {alpha: 0.0 for alpha in alphas}
    best, argmax = 0.0, {}

    for beta in betas:
        for lo, hi in _chunks(xs.shape[0], kpts.shape[0] * d * d, budget):
            table = a.evaluate(xs[lo:hi], kpts, beta).reshape((hi - lo,) + box + (d, d))
            for alpha in alphas:
                diff = table
                for axis, order in enumerate(alpha):
                    if order:
                        diff = np.diff(diff, n=order, axis=1 + axis)
                vals = operator_norm(diff[inner]) * weights[alpha]
                idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
                v = float(vals[idx])
                per_alpha[alpha] = max(per_alpha[alpha], v)
                if v > best:
                    best = v
                    argmax = {
                        "alpha": alpha,
                        "beta": tuple(beta),
                        "x": xs[lo + idx[0]].tolist(),
                        "k": lattice.cube[idx[1:]].tolist(),
                    }

    holder, holder_per_alpha = 0.0, {}
    frac = r - floor_r
    if frac > 0 and not a.x_independent:
        holder, holder_per_alpha, harg = _holder_part(a, lattice, grid, m, alphas, floor_r, frac, kpts, box)
        if harg:
            argmax = dict(argmax, holder=harg)
    return SymbolNormReport(
        value=best + holder,
        smooth_part=best,
        holder_part=holder,
        argmax=argmax,
        per_alpha=per_alpha,
        holder_per_alpha=holder_per_alpha,
    )


def _holder_part(a, lattice, grid, m, alphas, floor_r, frac, kpts, box):
    n, d = a.n, a.d
    side = lattice.side
    lag_norms = np.sqrt(np.sum(grid.lag_points**2, axis=-1))
    shifts = [s for s in np.ndindex(*grid.shape) if any(s)]
    # s and -s describe the same unordered pairs
    seen, unique = set(), []
    for s in shifts:
        neg = tuple((-v) % grid.N for v in s)
        if neg in seen:
            continue
        seen.add(s)
        unique.append(s)
    unique.sort(key=lambda s: lag_norms[s])
    best, per_alpha, arg = 0.0, {}, {}
    xs = grid.flat_points
    for beta in multi_indices(n, floor_r):
        if sum(beta) != floor_r:
            continue
        table = a.evaluate(xs, kpts, beta).reshape(grid.shape + box + (d, d))
        for alpha in alphas:
            diff = table
            for axis, order in enumerate(alpha):
                if order:
                    diff = np.diff(diff, n=order, axis=n + axis)
            diff = diff[(slice(None),) * n + (slice(0, side),) * n]
            w = lattice.brackets ** (sum(alpha) - m)
            bound = 2.0 * float(np.max(operator_norm(diff) * w))
            local = 0.0
            for s in unique:
                dist = lag_norms[s]
                if bound / dist**frac <= max(local, best):
                    break
                delta = diff - np.roll(diff, shift=tuple(-v for v in s), axis=tuple(range(n)))
                vals = operator_norm(delta) * w / dist**frac
                flat = int(np.argmax(vals))
                v = float(vals.reshape(-1)[flat])
                if v > local:
                    local = v
                    if v > best:
                        idx = np.unravel_index(flat, vals.shape)
                        arg = {"alpha": alpha, "beta": tuple(beta),
                               "x": grid.points[idx[:n]].tolist(),
                               "y_minus_x": grid.lag_points[s].tolist(),
                               "k": lattice.cube[idx[n:]].tolist()}
            per_alpha[alpha] = max(per_alpha.get(alpha, 0.0), local)
            best = max(best, local)
    return best, per_alpha, arg


# --- symbol zoo -------------------------------------------------------------


def _eye(d):
    return np.eye(d, dtype=complex)


def _brackets(k, m):
    return bracket(k) ** m


def identity(n=1, d=1, r=1.0):
    """``a(x, k) = id``."""

    def func(x, k, beta):
        return _eye(d)[None, None]

    return Symbol(n, d, 0.0, r, func, x_independent=True, name="identity", params={"r": r})


def zero(n=1, d=1, m=0.0, r=1.0):
    def func(x, k, beta):
        return np.zeros((1, 1, d, d), dtype=complex)

    return Symbol(n, d, m, r, func, x_independent=True, name="zero", params={"m": m, "r": r})


def bracket_power(n=1, d=1, m=1.0, r=1.0):
    """``a(k) = <k>^m id``."""

    def func(x, k, beta):
        return _brackets(k, m)[..., None, None] * _eye(d)

    return Symbol(n, d, m, r, func, x_independent=True, name="bracket", params={"m": m, "r": r})


def derivative(n=1, d=1, axis=0, r=1.0):
    """``a(k) = i k_axis id``, the symbol of ``d/dx_axis``."""

    def func(x, k, beta):
        return (1j * k[..., axis])[..., None, None] * _eye(d)

    return Symbol(n, d, 1.0, r, func, x_independent=True, name="derivative", params={"axis": axis})


def multiplication(b, n=1, d=1, r=0.0, m=0.0, derivatives=None, x_bandwidth=None, name="multiplication"):
    """``a(x, k) = b(x) <k>^m`` for a user function ``b``.

    ``b(x)`` receives points of shape ``(..., n)`` and returns a scalar field or
    ``(..., d, d)`` matrices.  ``derivatives`` maps multi-indices ``beta`` with
    ``0 < |beta| <= floor(r)`` to callables of the same form.
    """
    derivatives = dict(derivatives or {})

    def func(x, k, beta):
        g = b if not any(beta) else derivatives.get(tuple(beta))
        if g is None:
            raise ValueError(f"no derivative {beta} supplied for {name}")
        vals = np.asarray(g(x[:, 0, :]), dtype=complex)
        vals = vals[..., None, None] * _eye(d) if vals.ndim == 1 else vals
        factor = _brackets(k[0], m) if m != 0 else np.ones(k.shape[1])
        return vals[:, None] * factor[None, :, None, None]

    return Symbol(n, d, m, r, func, x_bandwidth=x_bandwidth, name=name, params={"m": m, "r": r})


def _cos_derivative(order):
    # d^q/dt^q cos t = cos(t + q pi / 2)
    return lambda x: np.cos(x[..., 0] + order * np.pi / 2)


def cosine(n=1, d=1, r=1.0, m=0.0):
    """``a(x, k) = cos(x_1) <k>^m id``."""
    derivs = {}
    for beta in multi_indices(n, max(math.floor(r), 0)):
        if any(beta) and not any(beta[1:]):
            derivs[beta] = _cos_derivative(beta[0])
        elif any(beta):
            derivs[beta] = lambda x: np.zeros(x.shape[:-1])
    sym = multiplication(_cos_derivative(0), n=n, d=d, r=r, m=m, derivatives=derivs,
                         x_bandwidth=1, name="cosine")
    sym.params = {"r": r, "m": m}
    return sym


def weierstrass_function(x, r, J):
    """``sum_{j=0}^{J} 2^(-j r) cos(2^j x_1)`` at points of shape ``(..., n)``."""
    t = np.asarray(x, dtype=float)[..., 0]
    return sum(2.0 ** (-j * r) * np.cos(2.0**j * t) for j in range(J + 1))


def weierstrass(n=1, d=1, r=0.5, J=8, m=0.0):
    """Hölder-rough multiplication symbol ``b_r(x) <k>^m id`` with ``b_r`` of exponent ``r``."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"Weierstrass exponent must lie in (0, 1), got {r}")
    if int(J) != J or J < 0:
        raise ValueError(f"J must be a nonnegative integer, got {J}")
    sym = multiplication(lambda x: weierstrass_function(x, r, J), n=n, d=d, r=r, m=m,
                         x_bandwidth=2**J, name="weierstrass")
    sym.params = {"r": r, "J": J, "m": m}
    return sym


def rotation_matrix(n=1, m=1.0, r=1.0):
    """``R(x_1) diag(<k>^m, <k>^(m-1)) R(x_1)^-1`` with ``R`` the planar rotation, ``d = 2``.

    Writing ``lam = <k>^m`` and ``mu = <k>^(m-1)`` the value is
    ``(lam + mu)/2 I + (lam - mu)/2 [[cos 2t, sin 2t], [sin 2t, -cos 2t]]`` with
    ``t = x_1``, which gives every x-derivative in closed form.
    """

    def func(x, k, beta):
        lam, mu = _brackets(k, m), _brackets(k, m - 1)
        t = x[..., 0]
        q = beta[0]
        if any(beta[1:]):
            return np.zeros((1, 1, 2, 2), dtype=complex)
        c = (2.0**q) * np.cos(2 * t + q * np.pi / 2)
        s = (2.0**q) * np.sin(2 * t + q * np.pi / 2)
        half_diff = 0.5 * (lam - mu)
        out = np.empty(np.broadcast_shapes(t.shape, lam.shape) + (2, 2), dtype=complex)
        out[..., 0, 0] = half_diff * c
        out[..., 0, 1] = half_diff * s
        out[..., 1, 0] = half_diff * s
        out[..., 1, 1] = -half_diff * c
        if q == 0:
            mean = 0.5 * (lam + mu)
            out[..., 0, 0] += mean
            out[..., 1, 1] += mean
        return out

    return Symbol(n, 2, m, r, func, x_bandwidth=2, name="rotation", params={"m": m, "r": r})


_ZOO = {
    "identity": identity,
    "zero": zero,
    "bracket": bracket_power,
    "derivative": derivative,
    "cosine": cosine,
    "weierstrass": weierstrass,
    "rotation": rotation_matrix,
}


def zoo():
    """Named symbol constructors."""
    return dict(_ZOO)


def make_symbol(name, n=1, d=1, **params):
    """Build a zoo symbol by name; ``rotation`` always has ``d = 2``."""
    try:
        ctor = _ZOO[name]
    except KeyError:
        raise ValueError(f"unknown symbol {name!r}; choose from {sorted(_ZOO)}") from None
    rho = params.pop("rho", None)
    sym = ctor(n=n, **params) if name == "rotation" else ctor(n=n, d=d, **params)
    if rho is not None:
        if rho < n + 1:
            raise ValueError(f"need rho >= n + 1 = {n + 1}, got {rho}")
        sym.rho = int(rho)
    return sym
