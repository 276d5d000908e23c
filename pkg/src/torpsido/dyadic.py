"""Dyadic decompositions of Z^n obtained by restricting a smooth radial partition.

The generator is the cutoff ``psi`` with ``psi = 1`` on ``[0, inner]``,
``psi = 0`` on ``[outer, inf)`` and the exponential-mollifier transition in
between.  Blocks are ``phi_0(k) = psi(|k|)`` and
``phi_j(k) = psi(2^-j |k|) - psi(2^(-j+1) |k|)``; they telescope, so the
partial sum up to ``J`` is ``psi(2^-J |k|)``.

``inner`` and ``outer`` are restricted to ``1 <= inner < outer <= 2`` which is
exactly what keeps ``supp phi_j`` inside ``2^(j-1) <= |k| <= 2^(j+1)``.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np

from .grid import FrequencyLattice

__all__ = [
    "BumpParams",
    "DyadicDecomposition",
    "ChiBlock",
    "DyadicReport",
    "cutoff",
    "build_dyadic",
    "verify_dyadic",
    "chi",
    "multi_indices",
    "forward_difference",
    "two_window_ratio",
]


@dataclass(frozen=True)
class BumpParams:
    """Transition interval ``[inner, outer]`` of the radial cutoff."""

    inner: float = 1.0
    outer: float = 2.0

    def __post_init__(self):
        if not (1.0 <= self.inner < self.outer <= 2.0):
            raise ValueError(
                "bump parameters must satisfy 1 <= inner < outer <= 2 "
                f"(got inner={self.inner}, outer={self.outer}); otherwise the block "
                "supports leave the dyadic annuli"
            )


def _mollifier(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def cutoff(t, bump=BumpParams()):
    """Smooth monotone cutoff: 1 up to ``bump.inner``, 0 from ``bump.outer`` on."""
    t = np.asarray(t, dtype=float)
    u = (t - bump.inner) / (bump.outer - bump.inner)
    left, right = _mollifier(1.0 - u), _mollifier(u)
    with np.errstate(invalid="ignore", divide="ignore"):
        mid = left / (left + right)
    return np.where(u <= 0.0, 1.0, np.where(u >= 1.0, 0.0, mid))


def _block_from_norms(j, norms, bump):
    if j < 0:
        return np.zeros_like(norms, dtype=float)
    if j == 0:
        return cutoff(norms, bump)
    return cutoff(norms * 2.0 ** (-j), bump) - cutoff(norms * 2.0 ** (-j + 1), bump)


def _chi_from_norms(j, norms, bump):
    # telescoped phi_{j-1} + phi_j + phi_{j+1}; equals 1 exactly on supp phi_j
    upper = cutoff(norms * 2.0 ** (-j - 1), bump)
    if j <= 1:
        return upper
    return upper - cutoff(norms * 2.0 ** (-j + 2), bump)


def multi_indices(n, order):
    """All ``alpha`` in ``N_0^n`` with ``|alpha| <= order``, sorted by ``|alpha|``."""
    out = [a for a in itertools.product(range(order + 1), repeat=n) if sum(a) <= order]
    return sorted(out, key=lambda a: (sum(a), tuple(-v for v in a)))


def forward_difference(values, alpha):
    """``Delta^alpha`` along the leading ``len(alpha)`` axes; each axis shrinks by ``alpha_i``."""
    out = np.asarray(values)
    for axis, order in enumerate(alpha):
        if order and out.shape[axis] <= order:
            raise ValueError(f"table too small along axis {axis} for a difference of order {order}")
        if order:
            out = np.diff(out, n=order, axis=axis)
    return out


def two_window_ratio(values):
    """``max(upper half) / max(lower half)`` of a sequence (0 when both vanish)."""
    values = np.asarray(values, dtype=float)
    half = len(values) // 2
    if half == 0:
        return 0.0
    lower, upper = np.max(values[:half]), np.max(values[len(values) - half:])
    if lower == 0.0:
        return 0.0 if upper == 0.0 else np.inf
    return float(upper / lower)


@dataclass(frozen=True)
class DyadicDecomposition:
    """Tabulated blocks ``phi_j`` on a lattice, ``j = 0..j_max``.

    ``phi`` has shape ``(j_max + 1,) + lattice.shape``.  Blocks can also be
    evaluated at arbitrary integer points with :meth:`evaluate`, which is how
    operators are localized on spectra wider than the tabulation lattice.
    """

    lattice: FrequencyLattice
    j_max: int
    phi: np.ndarray = field(repr=False)
    bump: BumpParams = BumpParams()

    @property
    def n(self):
        return self.lattice.n

    @property
    def covered_radius(self):
        """Every ``|k|`` up to this radius has ``sum_{j <= j_max} phi_j(k) = 1``."""
        return 2.0**self.j_max * self.bump.inner

    def evaluate(self, j, k):
        """Closed-form ``phi_j`` at integer points ``k`` of shape ``(..., n)``."""
        norms = np.sqrt(np.sum(np.asarray(k, dtype=float) ** 2, axis=-1))
        return _block_from_norms(j, norms, self.bump)

    def block(self, j):
        """``phi_j`` on the tabulation lattice (zero for ``j < 0``)."""
        if 0 <= j <= self.j_max:
            return self.phi[j]
        return _block_from_norms(j, self.lattice.norms, self.bump)

    def multiplier(self, j, lattice):
        """``phi_j`` tabulated on another lattice."""
        if lattice == self.lattice:
            return self.block(j)
        return _block_from_norms(j, lattice.norms, self.bump)

    def chi_multiplier(self, j, lattice):
        return _chi_from_norms(j, lattice.norms, self.bump)

    def support_radius(self, j):
        """Open radius bounding ``supp phi_j``."""
        return 2.0**j * self.bump.outer

    def on(self, lattice):
        """Same generator, tabulated on a different lattice."""
        return build_dyadic(lattice, self.bump)

    def block_index_max(self, lattice):
        return _j_max(lattice, self.bump)

    def to_csv(self, path, nonzero_only=False):
        """Write rows ``j, k_1..k_n, value``."""
        members = self.lattice.members
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["j"] + [f"k_{i + 1}" for i in range(self.n)] + ["value"])
            for j in range(self.j_max + 1):
                flat = self.phi[j].reshape(-1)
                for k, value in zip(members, flat):
                    if nonzero_only and value == 0.0:
                        continue
                    writer.writerow([j, *k.tolist(), repr(float(value))])


def _j_max(lattice, bump):
    radius = np.sqrt(lattice.n) * lattice.Kmax
    j = 0
    while 2.0**j * bump.inner < radius:
        j += 1
    return j


def build_dyadic(lattice, bump=None):
    """Tabulate the dyadic blocks generated by ``bump`` on ``lattice``."""
    bump = BumpParams() if bump is None else bump
    if isinstance(bump, dict):
        bump = BumpParams(**bump)
    j_max = _j_max(lattice, bump)
    phi = np.stack([_block_from_norms(j, lattice.norms, bump) for j in range(j_max + 1)])
    phi.setflags(write=False)
    return DyadicDecomposition(lattice, j_max, phi, bump)


@dataclass(frozen=True)
class ChiBlock:
    j: int
    values: np.ndarray = field(repr=False)


def chi(D, j):
    """``chi_j = phi_{j-1} + phi_j + phi_{j+1}`` with ``phi_{-1} = 0``."""
    if not 0 <= j <= D.j_max:
        raise ValueError(f"block index {j} outside 0..{D.j_max}")
    return ChiBlock(j, _chi_from_norms(j, D.lattice.norms, D.bump))


@dataclass
class DyadicReport:
    support_ok: bool
    range_ok: bool
    partition_ok: bool
    partition_error: float
    overlap_ok: bool
    rho_check: int
    c_alpha: dict
    c_alpha_per_j: dict
    c_alpha_j0: dict
    window_ratio: dict
    window_factor: float

    @property
    def uniform_ok(self):
        return all(r <= self.window_factor for r in self.window_ratio.values())

    @property
    def passed(self):
        return self.support_ok and self.range_ok and self.partition_ok and self.uniform_ok

    def summary(self):
        return {
            "support": self.support_ok,
            "range": self.range_ok,
            "partition": self.partition_ok,
            "partition_error": self.partition_error,
            "overlap_at_most_three": self.overlap_ok,
            "uniform_differences": self.uniform_ok,
        }


def _support_violations(D):
    sq = np.sum(D.lattice.cube.astype(np.int64) ** 2, axis=-1)
    bad = []
    for j in range(D.j_max + 1):
        nonzero = D.phi[j] != 0.0
        if j == 0:
            allowed = sq <= 4
        else:
            allowed = (4.0 ** (j - 1) <= sq) & (sq <= 4.0 ** (j + 1))
        if np.any(nonzero & ~allowed):
            bad.append(j)
    return bad


def _enlarged_block(D, j, margin):
    """``phi_j`` on ``[-K, K + margin]^n`` with the tabulated part taken from ``D.phi``."""
    K, n = D.lattice.Kmax, D.n
    axis = np.arange(-K, K + margin + 1)
    pts = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1)
    table = D.evaluate(j, pts)
    table[(slice(0, 2 * K + 1),) * n] = D.phi[j]
    return table


def verify_dyadic(D, rho_check=None, window_factor=2.0, tol=1e-12):
    """Check the three defining conditions on the tabulation lattice.

    Support is checked exactly with integer ``|k|^2``; the partition sum to
    ``tol``; difference bounds by measuring
    ``c_alpha = max_{j, k} <k>^|alpha| |Delta^alpha phi_j(k)|`` for all
    ``|alpha| <= rho_check`` (default ``n + 1``).  Uniformity in ``j`` is the
    two-window ratio over ``j = 1..j_max``; ``j = 0`` is reported separately.
    """
    n = D.n
    rho_check = n + 1 if rho_check is None else rho_check
    phi = D.phi

    support_ok = not _support_violations(D)
    range_ok = bool(np.all((phi >= 0.0) & (phi <= 1.0)))
    total = np.sum(phi, axis=0)
    inside = D.lattice.norms <= D.covered_radius
    partition_error = float(np.max(np.abs(total[inside] - 1.0))) if np.any(inside) else 0.0
    partition_ok = partition_error <= tol

    active = phi != 0.0
    counts = np.sum(active, axis=0)
    idx = np.arange(D.j_max + 1).reshape((-1,) + (1,) * n)
    lo = np.min(np.where(active, idx, D.j_max + 1), axis=0)
    hi = np.max(np.where(active, idx, -1), axis=0)
    overlap_ok = bool(np.all(counts <= 3) and np.all((counts == 0) | (hi - lo + 1 == counts)))

    side = D.lattice.side
    br = D.lattice.brackets
    c_alpha, per_j, j0, ratios = {}, {}, {}, {}
    tables = [_enlarged_block(D, j, rho_check) for j in range(D.j_max + 1)]
    for alpha in multi_indices(n, rho_check):
        weight = br ** sum(alpha)
        vals = []
        for table in tables:
            diff = forward_difference(table, alpha)
            diff = diff[(slice(0, side),) * n]
            vals.append(float(np.max(weight * np.abs(diff))))
        j0[alpha] = vals[0]
        per_j[alpha] = vals[1:]
        c_alpha[alpha] = max(vals)
        ratios[alpha] = two_window_ratio(vals[1:])

    return DyadicReport(
        support_ok=support_ok,
        range_ok=range_ok,
        partition_ok=partition_ok,
        partition_error=partition_error,
        overlap_ok=overlap_ok,
        rho_check=rho_check,
        c_alpha=c_alpha,
        c_alpha_per_j=per_j,
        c_alpha_j0=j0,
        window_ratio=ratios,
        window_factor=window_factor,
    )
