"""Dense reference implementation for small instances.

Everything here is written directly from the stencil definitions, entry by
entry, on purpose sharing no construction code with `assembly`: a
transcription slip in either implementation shows up as a mismatch when the
two evolutions are compared.  Size is capped so the dense matrices stay
trivially cheap.
"""

import numpy as np
import scipy.linalg

from . import model
from .state import StateVector

MAX_DENSE_DIM = 2048


def _check_size(num_channels, num_points):
    if num_channels * num_points > MAX_DENSE_DIM:
        raise ValueError(
            f"dense oracle capped at dimension {MAX_DENSE_DIM}, "
            f"got {num_channels} x {num_points} = {num_channels * num_points}"
        )


def dense_hamiltonian(params, grid, layout, boundary_mode="ghost"):
    """Dense Hamiltonian built entry by entry from the stencil definitions."""
    n = layout.num_spins
    m = 2**n
    nx = grid.num_points
    _check_size(m, nx)
    dx = grid.dx
    hb2m = params.hbar**2 / (2.0 * params.mass)

    h = np.zeros((m * nx, m * nx), dtype=np.complex128)
    for mask in range(m):
        base = mask * nx
        sigma_total = sum(1 if (mask >> j) & 1 else -1 for j in range(n))
        for i in range(nx):
            h[base + i, base + i] = 2.0 * hb2m / dx**2 + params.alpha * sigma_total
            if i > 0:
                h[base + i, base + i - 1] = -hb2m / dx**2
            if i < nx - 1:
                h[base + i, base + i + 1] = -hb2m / dx**2
        if boundary_mode == "ghost":
            h[base, base + 1] = -2.0 * hb2m / dx**2
            h[base + nx - 1, base + nx - 2] = -2.0 * hb2m / dx**2
        elif boundary_mode != "symmetrized":
            raise ValueError(f"unknown boundary mode {boundary_mode!r}")
        for j in range(n):
            ij = int(layout.grid_indices[j])
            h[base + ij, base + ij] += hb2m * params.beta / dx
            sigma_j = 1.0 if (mask >> j) & 1 else -1.0
            partner = mask ^ (1 << j)
            h[base + ij, partner * nx + ij] = (
                -1j * sigma_j * params.coupling_factor * params.rho * hb2m / dx
            )
    return h


def dense_run(params, grid, layout, time_grid, initial=None, boundary_mode="ghost"):
    """Crank-Nicolson evolution with dense LU, factored once.

    Returns the final StateVector.  `initial` defaults to the standard
    decoupled initial state.
    """
    n = layout.num_spins
    m = 2**n
    _check_size(m, grid.num_points)
    h = dense_hamiltonian(params, grid, layout, boundary_mode=boundary_mode)
    factor = 1j * time_grid.dt / (2.0 * params.hbar)
    eye = np.eye(h.shape[0], dtype=np.complex128)
    a = eye + factor * h
    b = eye - factor * h
    lu, piv = scipy.linalg.lu_factor(a)
    if initial is None:
        initial = model.initial_state(params, grid, m)
    v = initial.values.ravel().copy()
    for _ in range(time_grid.num_steps):
        v = scipy.linalg.lu_solve((lu, piv), b @ v)
    return StateVector(v.reshape(m, grid.num_points), grid.dx)


def compare(a, b):
    """(max componentwise |a - b|, |norm(a) - norm(b)|) for two states."""
    if a.values.shape != b.values.shape:
        raise ValueError(f"shape mismatch: {a.values.shape} vs {b.values.shape}")
    max_abs = float(np.max(np.abs(a.values - b.values))) if a.values.size else 0.0
    norm_diff = abs(np.sqrt(a.norm2()) - np.sqrt(b.norm2()))
    return max_abs, norm_diff
