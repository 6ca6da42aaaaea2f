"""Markovian master-equation dynamics for the isochoric strokes.

Two dissipator constructions are offered.  ``BARE`` uses the transition
operators |i><j| between the undriven levels with one bath occupation for all
of them.  ``DRESSED`` uses lowering operators between eigenstates of the
driven Hamiltonian with a Bose occupation per transition frequency, which
makes the Gibbs state of that Hamiltonian stationary.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from .spectral import DEGENERACY_TOL, DriveParameters, build_hamiltonian, eigensystem, Spectrum
from .thermo import BathSpec, check_density_matrix, fidelity, gibbs_state

logger = logging.getLogger(__name__)

CONVERGENCE_EPS = 1e-4
DEFAULT_DT = 1e-3
TRACE_DRIFT_LIMIT = 1e-9
POSITIVITY_ABORT = -1e-6
DEFAULT_STORED_POINTS = 1000

_I3 = np.eye(3, dtype=complex)


class BasisMode(str, enum.Enum):
    BARE = "bare"
    DRESSED = "dressed"


class DegenerateSpectrumError(ValueError):
    pass


class OccupationError(ValueError):
    """Bose occupation diverges (beta * omega <= 0)."""


class IntegrationError(RuntimeError):
    pass


class JumpOperator(NamedTuple):
    """Lowering operator with its emission and absorption rates.

    The absorption channel uses the adjoint of ``op``.
    """

    op: np.ndarray
    down: float
    up: float


@dataclass(frozen=True)
class JumpOperatorSet:
    operators: Tuple[JumpOperator, ...]
    basis: BasisMode


def bose_occupation(beta: float, omega: float) -> float:
    x = beta * omega
    if x <= 0:
        raise OccupationError(f"Bose occupation diverges for beta*omega = {x!r}")
    return 1.0 / math.expm1(x)


def build_jump_operators(spec: Spectrum, bath: BathSpec, mode: BasisMode = BasisMode.DRESSED) -> JumpOperatorSet:
    mode = BasisMode(mode)
    ops = []
    if mode is BasisMode.BARE:
        if bath.nbar is None:
            raise ValueError("bare-basis dissipation needs an explicit bath occupation nbar")
        for i in range(3):
            for j in range(i + 1, 3):
                sigma = np.zeros((3, 3), dtype=complex)
                sigma[i, j] = 1.0
                ops.append(JumpOperator(sigma, bath.kappa * (bath.nbar + 1), bath.kappa * bath.nbar))
        return JumpOperatorSet(tuple(ops), mode)

    if np.any(spec.gaps <= DEGENERACY_TOL):
        raise DegenerateSpectrumError(
            f"dressed jump operators need a nondegenerate spectrum, got {spec.values!r}"
        )
    v = spec.vectors
    for m in range(3):
        for n in range(m + 1, 3):
            omega = spec.values[n] - spec.values[m]
            nbar = bose_occupation(bath.beta, omega) if bath.nbar is None else bath.nbar
            op = np.outer(v[:, m], v[:, n].conj())
            ops.append(JumpOperator(op, bath.kappa * (nbar + 1), bath.kappa * nbar))
    return JumpOperatorSet(tuple(ops), mode)


def _dissipator(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    ud = u.conj().T
    udu = ud @ u
    return u @ rho @ ud - 0.5 * (udu @ rho + rho @ udu)


def lindblad_rhs(rho: np.ndarray, h: np.ndarray, jumps: JumpOperatorSet) -> np.ndarray:
    """Time derivative of ``rho`` under the master equation."""
    out = -1j * (h @ rho - rho @ h)
    for j in jumps.operators:
        if j.down:
            out += j.down * _dissipator(j.op, rho)
        if j.up:
            out += j.up * _dissipator(j.op.conj().T, rho)
    return out


def liouvillian(h: np.ndarray, jumps: JumpOperatorSet) -> np.ndarray:
    """9x9 generator acting on row-major flattened density matrices.

    Uses vec(A X B) = (A kron B^T) vec(X) for C-order flattening.
    """
    gen = -1j * (np.kron(h, _I3) - np.kron(_I3, h.T))
    for j in jumps.operators:
        for rate, u in ((j.down, j.op), (j.up, j.op.conj().T)):
            if not rate:
                continue
            udu = u.conj().T @ u
            gen += rate * (np.kron(u, u.conj()) - 0.5 * np.kron(udu, _I3) - 0.5 * np.kron(_I3, udu.T))
    return gen


def rk4_step(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_propagator(gen: np.ndarray, dt: float) -> np.ndarray:
    """One classic RK4 step for the linear system dy/dt = gen @ y, as a matrix."""
    eye = np.eye(gen.shape[0], dtype=complex)
    return np.stack([rk4_step(lambda y: gen @ y, eye[:, k], dt) for k in range(gen.shape[0])], axis=1)


class Trajectory(NamedTuple):
    times: np.ndarray
    states: np.ndarray  # (n_stored, 3, 3)
    renormalizations: int
    max_trace_drift: float


def evolve(
    rho0: np.ndarray,
    h: np.ndarray,
    jumps: JumpOperatorSet,
    t_end: float,
    dt: float = DEFAULT_DT,
    store_every: Optional[int] = None,
) -> Trajectory:
    """Fixed-step RK4 integration of the master equation.

    The state is renormalized to unit trace after every step; a per-step drift
    above ``TRACE_DRIFT_LIMIT`` aborts.  Every ``store_every``-th state (and
    the last one) is stored and validated.  The number of steps is
    ``round(t_end / dt)``.
    """
    if not (dt > 0 and t_end >= dt):
        raise ValueError(f"need dt > 0 and t_end >= dt, got dt={dt!r}, t_end={t_end!r}")
    check_density_matrix(rho0)
    n_steps = int(round(t_end / dt))
    if store_every is None:
        store_every = max(1, n_steps // DEFAULT_STORED_POINTS)
    step = rk4_propagator(liouvillian(np.asarray(h, dtype=complex), jumps), dt)

    y = np.asarray(rho0, dtype=complex).reshape(9).copy()
    times = [0.0]
    states = [y.reshape(3, 3).copy()]
    renorms = 0
    max_drift = 0.0
    for k in range(1, n_steps + 1):
        y = step @ y
        tr = y[0] + y[4] + y[8]
        drift = abs(tr - 1.0)
        if drift:
            if drift > TRACE_DRIFT_LIMIT:
                raise IntegrationError(f"trace drift {drift:.3g} at step {k} exceeds {TRACE_DRIFT_LIMIT}")
            max_drift = max(max_drift, drift)
            y = y / tr
            renorms += 1
        if k % store_every == 0 or k == n_steps:
            rho = y.reshape(3, 3).copy()
            lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
            if lowest < POSITIVITY_ABORT:
                raise IntegrationError(
                    f"state lost positivity (eigenvalue {lowest:.3g}) at t={k * dt:.6g}; reduce dt={dt!r}"
                )
            times.append(k * dt)
            states.append(rho)
    if renorms:
        logger.debug("trace renormalized on %d of %d steps, max drift %.3g", renorms, n_steps, max_drift)
    return Trajectory(np.array(times), np.array(states), renorms, max_drift)


@dataclass(frozen=True)
class ThermalizationTrace:
    times: np.ndarray
    epsilon: np.ndarray
    fidelity: np.ndarray
    terminal_fidelity: float
    converged: bool
    mode: BasisMode


def thermalization_trace(
    p: DriveParameters,
    bath: BathSpec,
    rho0: np.ndarray,
    t_end: Optional[float] = None,
    dt: float = DEFAULT_DT,
    mode: BasisMode = BasisMode.DRESSED,
    store_every: Optional[int] = None,
) -> ThermalizationTrace:
    """Distance from the bath's Gibbs state while relaxing at fixed drives.

    ``t_end`` defaults to 50 / kappa.
    """
    if t_end is None:
        if bath.kappa <= 0:
            raise ValueError("default t_end = 50/kappa needs kappa > 0")
        t_end = 50.0 / bath.kappa
    h = build_hamiltonian(p)
    spec = eigensystem(h)
    target = gibbs_state(spec, bath.beta)
    jumps = build_jump_operators(spec, bath, mode)
    traj = evolve(rho0, h, jumps, t_end, dt, store_every)
    fid = np.array([fidelity(rho, target) for rho in traj.states])
    eps = np.clip(1.0 - fid, 0.0, 1.0)
    return ThermalizationTrace(
        times=traj.times,
        epsilon=eps,
        fidelity=fid,
        terminal_fidelity=float(fid[-1]),
        converged=bool(eps[-1] < CONVERGENCE_EPS),
        mode=BasisMode(mode),
    )
