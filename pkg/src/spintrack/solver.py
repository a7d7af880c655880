"""Time integration: one sparse linear solve per Crank-Nicolson step.

The implicit operator A is constant in time, so the direct strategy factors
it once (SuperLU) and reuses the factorization for every step.  The
iterative strategy runs GMRES preconditioned by the decoupled per-channel
tridiagonal solves, which is the natural fallback when the channel count
makes the direct factorization too heavy.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as sparse_linalg

from . import observables
from .state import StateVector

SOLVE_METHODS = ("direct", "iterative")


class SolverError(RuntimeError):
    """Linear solve failed or produced non-finite values."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SolveConfig:
    """Linear-solve strategy and tolerances.

    `rtol` bounds the relative residual of every step; the default keeps the
    per-step norm drift far below the run-level conservation guarantees.
    For the iterative method `max_iter` counts restart cycles.
    """

    method: str = "direct"
    rtol: float = 1e-12
    max_iter: int = 200
    restart: int = 30

    def __post_init__(self):
        if self.method not in SOLVE_METHODS:
            raise ValueError(f"method must be one of {SOLVE_METHODS}, got {self.method!r}")
        if not 0.0 < self.rtol <= 1e-6:
            raise ValueError(f"rtol must be in (0, 1e-6], got {self.rtol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.restart < 1:
            raise ValueError(f"restart must be >= 1, got {self.restart}")


class DirectSolver:
    """LU factorization of A, computed once, reused for every right-hand side."""

    def __init__(self, a_matrix):
        self._lu = sparse_linalg.splu(a_matrix.tocsc())

    def solve(self, rhs, x0=None):
        return self._lu.solve(rhs)


class BlockPreconditionedSolver:
    """GMRES on A, preconditioned by the channel-decoupled tridiagonal solves.

    The preconditioner drops the cross-channel couplings, leaving one complex
    tridiagonal system per channel; channels sharing the same diagonal energy
    share one banded solve.
    """

    def __init__(self, system, config):
        self._a = system.a.tocsr()
        self._config = config
        h = system.h
        factor = 1j * system.dt / (2.0 * system.hbar)
        nx = h.num_points
        base_diag = 1.0 + factor * h.kin_diag
        self._shape = (h.num_channels, nx)
        self._groups = []
        values, inverse = np.unique(h.channel_shift, return_inverse=True)
        for g, shift in enumerate(values):
            band = np.zeros((3, nx), dtype=np.complex128)
            band[0, 1:] = factor * h.upper
            band[1, :] = base_diag + factor * shift
            band[2, :-1] = factor * h.lower
            self._groups.append((np.nonzero(inverse == g)[0], band))

    def _precondition(self, rhs):
        r = rhs.reshape(self._shape)
        out = np.empty_like(r)
        for channels, band in self._groups:
            out[channels] = scipy.linalg.solve_banded((1, 1), band, r[channels].T).T
        return out.ravel()

    def solve(self, rhs, x0=None):
        op = sparse_linalg.LinearOperator(
            self._a.shape, matvec=self._precondition, dtype=np.complex128
        )
        x, info = sparse_linalg.gmres(
            self._a,
            rhs,
            x0=x0,
            rtol=self._config.rtol,
            atol=0.0,
            restart=self._config.restart,
            maxiter=self._config.max_iter,
            M=op,
        )
        if info != 0:
            residual = np.linalg.norm(self._a @ x - rhs) / np.linalg.norm(rhs)
            raise SolverError(
                f"GMRES did not converge within {self._config.max_iter} restarts "
                f"(relative residual {residual:.3e})",
                residual=residual,
            )
        return x


def make_linear_solver(system, config):
    if config.method == "direct":
        return DirectSolver(system.a)
    return BlockPreconditionedSolver(system, config)


def solve_linear(a_matrix, rhs, config):
    """One-shot solve of A x = rhs honoring the configured residual tolerance."""
    if config.method == "direct":
        x = DirectSolver(a_matrix).solve(rhs)
    else:
        x, info = sparse_linalg.gmres(
            a_matrix.tocsr(),
            rhs,
            rtol=config.rtol,
            atol=0.0,
            restart=config.restart,
            maxiter=config.max_iter,
        )
        if info != 0:
            raise SolverError("GMRES did not converge")
    _check_residual(a_matrix, x, rhs, config.rtol)
    return x


def _check_residual(a_matrix, x, rhs, rtol):
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return 0.0
    residual = np.linalg.norm(a_matrix @ x - rhs) / rhs_norm
    if residual > rtol:
        raise SolverError(
            f"solve residual {residual:.3e} exceeds tolerance {rtol:.3e}",
            residual=residual,
        )
    return residual


def step(system, state, config=None, linear_solver=None):
    """Advance one Crank-Nicolson step: solve A psi_next = B psi.

    Passing `linear_solver` (from make_linear_solver) reuses a factorization;
    otherwise one is built for this call.
    """
    config = config or SolveConfig()
    if state.values.shape != (system.h.num_channels, system.h.num_points):
        raise ValueError(
            f"state shape {state.values.shape} does not match system "
            f"({system.h.num_channels}, {system.h.num_points})"
        )
    solver = linear_solver or make_linear_solver(system, config)
    flat = state.values.ravel()
    rhs = system.b @ flat
    x = solver.solve(rhs, x0=flat)
    if not np.all(np.isfinite(x)):
        raise SolverError("non-finite values in solution")
    _check_residual(system.a, x, rhs, config.rtol)
    return StateVector(x.reshape(state.values.shape), state.dx)


@dataclass(eq=False)
class RunRecord:
    """Per-step diagnostic series plus the final state.

    All series have length num_steps + 1 and include t = 0.  The class
    probability series are None when the run was not given side labels.
    """

    times: np.ndarray
    norm2: np.ndarray
    energy: np.ndarray
    unchanged: np.ndarray | None
    one_spin: np.ndarray | None
    left_track: np.ndarray | None
    right_track: np.ndarray | None
    multi_track: np.ndarray | None
    final_state: StateVector
    snapshots: list = field(default_factory=list)

    @property
    def num_steps(self):
        return len(self.times) - 1


def run(
    system,
    initial,
    num_steps,
    config=None,
    sides=None,
    observers=(),
    snapshot_stride=None,
):
    """Advance `num_steps` Crank-Nicolson steps, recording diagnostics.

    Parameters
    ----------
    system : CNSystem
    initial : StateVector
    num_steps : int, >= 1
    config : SolveConfig, optional
    sides : SideAssignment, optional
        When given, the configuration-class probability series are recorded.
    observers : iterable of callables
        Each is invoked after every step as observer(k, t_k, state) with a
        read-only state view.
    snapshot_stride : int, optional
        Store a full state copy every `snapshot_stride` steps, in addition to
        the initial snapshot that is always kept.

    Returns
    -------
    RunRecord
    """
    if num_steps < 1:
        raise ValueError(f"num_steps must be >= 1, got {num_steps}")
    config = config or SolveConfig()
    # Accuracy (not stability) guard: compare dt against the phase period of
    # the occupied modes, 2 hbar / |<H>|.  The operator norm would be the grid
    # cutoff energy and would flag every well-resolved run.
    initial_energy = observables.energy(initial, system.h)
    if initial_energy != 0.0 and system.dt > 2.0 * system.hbar / abs(initial_energy):
        warnings.warn(
            f"dt={system.dt:g} exceeds 2*hbar/|<H>|~{2.0 * system.hbar / abs(initial_energy):g}; "
            "the scheme stays stable but phases will be inaccurate"
        )
    solver = make_linear_solver(system, config)
    times = system.dt * np.arange(num_steps + 1)
    norm2 = np.empty(num_steps + 1)
    energy = np.empty(num_steps + 1)
    classes = np.empty((num_steps + 1, 5)) if sides is not None else None

    def record(k, state):
        probs = observables.channel_probs(state, t=times[k])
        norm2[k] = probs.total
        energy[k] = observables.energy(state, system.h)
        if classes is not None:
            cls = observables.class_probs(probs, sides)
            classes[k] = (
                cls.unchanged,
                cls.one_spin,
                cls.left_track,
                cls.right_track,
                cls.multi_track,
            )

    state = initial.copy()
    record(0, state)
    snapshots = [(0, initial.copy())]
    for k in range(1, num_steps + 1):
        try:
            state = step(system, state, config, solver)
        except SolverError as err:
            raise SolverError(f"step {k}: {err}", residual=err.residual) from err
        view = state.readonly()
        for observer in observers:
            observer(k, times[k], view)
        record(k, state)
        if snapshot_stride and k % snapshot_stride == 0 and k != num_steps:
            snapshots.append((k, state.copy()))
    return RunRecord(
        times=times,
        norm2=norm2,
        energy=energy,
        unchanged=classes[:, 0] if classes is not None else None,
        one_spin=classes[:, 1] if classes is not None else None,
        left_track=classes[:, 2] if classes is not None else None,
        right_track=classes[:, 3] if classes is not None else None,
        multi_track=classes[:, 4] if classes is not None else None,
        final_state=state,
        snapshots=snapshots,
    )
