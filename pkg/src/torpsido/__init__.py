"""Pseudodifferential operators on the torus with matrix-valued symbols.

Modules
-------
grid     torus grids, frequency lattices, discrete Fourier transform
dyadic   dyadic decompositions of Z^n and the fattened blocks chi_j
symbol   symbols, discrete differences, symbol norms, a zoo of examples
psido    op[a], dyadic blocks of op[a], kernel representations
besov    L^p and Besov norms on the grid
verify   numerical experiments for the kernel, block and commutator estimates
cli      JSON-configured experiment runner
"""
from .grid import (
    FrequencyLattice,
    GridFunction,
    SpectralCoeffs,
    TorusGrid,
    forward_transform,
    inverse_transform,
)
from .dyadic import BumpParams, build_dyadic, chi, verify_dyadic
from .symbol import Symbol, make_symbol, symbol_norm
from .psido import apply_block, apply_op, apply_via_kernel, double_kernel_apply, kernel_block
from .besov import BesovParams, besov_norm, lp_norm
from .verify import EstimateReport

__version__ = "0.1.0"
