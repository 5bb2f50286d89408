"""Laplacian eigenmode transforms shared by the diffusion and Schrodinger steppers.

Periodic axes use the FFT, dirichlet-zero axes the orthonormal DST-II, whose
basis functions ``sin(pi*j*(x + L/2)/L)`` vanish on both end faces of a
cell-centred grid. Radial grids act on ``u = r*f``.

Operators diagonal in this basis are applied as ``g(k)`` multipliers; any
``g`` that is a product of per-axis factors (the heat and Schrodinger
propagators, and via linearity the kinetic operator) is handled axis by axis.
"""

import numpy as np
import scipy.fft as sfft

from .domain import PERIODIC


def _along(vec, axis, ndim):
    shape = [1] * ndim
    shape[axis] = vec.size
    return vec.reshape(shape)


def apply_axis_factors(values, grid, factor, radial_scale=True):
    """Apply ``prod_axis factor(k_axis)`` in the eigenbasis of the grid Laplacian.

    ``values`` has the grid axes first; any trailing axes are a batch.
    With ``radial_scale=False`` the input is taken to be ``u`` already.
    """
    tables = [factor(grid.wavenumbers(ax)) for ax in range(grid.ndim)]
    return apply_mode_tables(values, grid, tables, radial_scale)


def apply_mode_tables(values, grid, tables, radial_scale=True):
    """As :func:`apply_axis_factors` with the per-axis multipliers precomputed."""
    out = np.asarray(values)
    for ax in range(grid.ndim):
        # radial grids have one axis, so the r-scaling is applied once
        out = _apply_one_axis(out, grid, ax, tables[ax], radial_scale)
    return out


def apply_kinetic(values, grid, mass=1.0, radial_scale=True):
    """``-(1/2m) Laplacian`` applied spectrally, one axis term at a time."""
    values = np.asarray(values)
    out = 0
    for ax in range(grid.ndim):
        table = grid.wavenumbers(ax) ** 2 / (2 * mass)
        out = out + _apply_one_axis(values, grid, ax, table, radial_scale)
    return out


def _apply_one_axis(values, grid, ax, table, radial_scale):
    one = values
    if grid.radial and radial_scale:
        one = one * _along(grid.axes[0], 0, one.ndim)
    g = _along(table, ax, one.ndim)
    if grid.boundaries[ax] == PERIODIC:
        t = sfft.ifft(sfft.fft(one, axis=ax) * g, axis=ax)
    else:
        t = sfft.idst(sfft.dst(one, type=2, norm="ortho", axis=ax) * g,
                      type=2, norm="ortho", axis=ax)
    if not np.iscomplexobj(values):
        t = t.real
    if grid.radial and radial_scale:
        t = t / _along(grid.axes[0], 0, t.ndim)
    return t


def dense_operator(grid, factor):
    """Dense symmetric matrix of a mode multiplier in the orthonormal basis.

    Acts on ``v = sqrt(weights) * f``, in which the operator is symmetric for
    every grid kind. One-axis grids only.
    """
    if grid.ndim != 1:
        raise ValueError("dense operators are built for one-axis grids only")
    mat = apply_axis_factors(np.eye(grid.size), grid, factor, radial_scale=False)
    return 0.5 * (mat + mat.T)


def kinetic_matrix(grid, mass=1.0):
    return dense_operator(grid, lambda k: k**2 / (2 * mass))
