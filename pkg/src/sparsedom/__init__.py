"""Sparse domination of singular integral forms on finite dyadic grids."""

from .dyadic import Box, Cube, StoppingCollection, validate_stopping, whitney_maximal
from .forms import lambda_Q, lambda_stop, lambda_trunc, psf
from .grid import GridFunction, average, lp_norm, maximal_function
from .kernels import KernelFamily, SphericalFunction, br_family, dini_kernel, preset_family, rough_family
from .sparsifier import SparseCollection, sparsify, verify_sparsity

__version__ = "0.1.0"

__all__ = [
    "Box",
    "Cube",
    "GridFunction",
    "KernelFamily",
    "SparseCollection",
    "SphericalFunction",
    "StoppingCollection",
    "average",
    "br_family",
    "dini_kernel",
    "lambda_Q",
    "lambda_stop",
    "lambda_trunc",
    "lp_norm",
    "maximal_function",
    "preset_family",
    "psf",
    "rough_family",
    "sparsify",
    "validate_stopping",
    "verify_sparsity",
    "whitney_maximal",
]
