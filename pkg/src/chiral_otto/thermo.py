"""Gibbs-state thermodynamics of the working medium.

Sign convention for the cycle quantities: heat absorbed by the medium is
positive, heat rejected is negative, and extracted work is negative.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .spectral import Spectrum

#: magnitudes at or below this count as zero when classifying a regime
TIE_TOL = 1e-12
#: state eigenvalues between this and 0 are clamped to 0 before square roots;
#: anything lower is rejected (same bound as the density-matrix check)
CLAMP_TOL = -1e-8


class UndefinedEfficiencyError(ValueError):
    """Raised when efficiency is requested for a cycle absorbing no hot heat."""


@dataclass(frozen=True)
class BathSpec:
    """Thermal reservoir.

    Parameters
    ----------
    beta : float
        Inverse temperature in 1/E0; 0 means infinite temperature.
    kappa : float
        System-bath coupling rate in 1/tau0.
    nbar : float or None
        Fixed mean bath occupation.  ``None`` selects a Bose occupation
        evaluated separately at every transition frequency.
    """

    beta: float
    kappa: float = 0.05
    nbar: Optional[float] = None

    def __post_init__(self):
        for name in ("beta", "kappa"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if self.nbar is not None and (not math.isfinite(self.nbar) or self.nbar < 0):
            raise ValueError(f"nbar must be finite and >= 0, got {self.nbar!r}")

    @property
    def per_gap_bose(self) -> bool:
        return self.nbar is None


class Regime(str, enum.Enum):
    ENGINE = "Engine"
    REFRIGERATOR = "Refrigerator"
    HEATER = "Heater"
    THERMAL_ACCELERATOR = "ThermalAccelerator"
    DEGENERATE = "Degenerate"
    # sign patterns outside the four-machine table
    UNCLASSIFIED = "Unclassified"


def _energies(spec: Union[Spectrum, np.ndarray]) -> np.ndarray:
    return np.asarray(spec.values if isinstance(spec, Spectrum) else spec, dtype=float)


def gibbs_populations(spec: Union[Spectrum, np.ndarray], beta: float) -> np.ndarray:
    """Boltzmann weights of the levels of ``spec`` at inverse temperature ``beta``."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta!r}")
    e = _energies(spec)
    w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


def gibbs_state(spec: Spectrum, beta: float) -> np.ndarray:
    """Thermal density matrix sum_n p_n |v_n><v_n|."""
    p = gibbs_populations(spec, beta)
    v = spec.vectors
    rho = (v * p) @ v.conj().T
    return 0.5 * (rho + rho.conj().T)


def _sqrtm_psd(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    if w.min() < CLAMP_TOL:
        raise ValueError(f"state is not positive semidefinite (eigenvalue {w.min():.3g})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Uhlmann root fidelity Tr sqrt(sqrt(a) b sqrt(a)), clipped into [0, 1].

    Evaluated as the sum of singular values of sqrt(a) sqrt(b), which equals
    the trace form and is symmetric in its arguments by construction.
    """
    sa = _sqrtm_psd(np.asarray(a, dtype=complex))
    sb = _sqrtm_psd(np.asarray(b, dtype=complex))
    f = np.linalg.svd(sa @ sb, compute_uv=False).sum()
    return float(min(max(f, 0.0), 1.0))


def heat_hot(spec_a, pops_hot, pops_cold) -> float:
    """Heat absorbed from the hot bath at the hot-isochore control point."""
    return float(np.dot(_energies(spec_a), np.asarray(pops_hot) - np.asarray(pops_cold)))


def heat_cold(spec_b, pops_cold, pops_hot) -> float:
    """Heat exchanged with the cold bath at the cold-isochore control point."""
    return float(np.dot(_energies(spec_b), np.asarray(pops_cold) - np.asarray(pops_hot)))


def work_net(q_hot: float, q_cold: float) -> float:
    return q_hot + q_cold


def work_from_spectra(spec_a, spec_b, pops_hot, pops_cold) -> float:
    """Net work from the two endpoint spectra directly, without the heats."""
    de = _energies(spec_a) - _energies(spec_b)
    return float(np.dot(de, np.asarray(pops_hot) - np.asarray(pops_cold)))


def efficiency(work: float, q_hot: float) -> float:
    """Efficiency in percent, 100 |W| / Q_h."""
    if q_hot <= TIE_TOL:
        raise UndefinedEfficiencyError(f"efficiency undefined for Q_h = {q_hot!r}")
    return 100.0 * abs(work) / q_hot


def classify_regime(work: float, q_hot: float, q_cold: float, tol: float = TIE_TOL) -> Regime:
    if min(abs(work), abs(q_hot), abs(q_cold)) <= tol:
        return Regime.DEGENERATE
    signs = (work > 0, q_hot > 0, q_cold > 0)
    return {
        (False, True, False): Regime.ENGINE,
        (True, False, True): Regime.REFRIGERATOR,
        (True, False, False): Regime.HEATER,
        (True, True, False): Regime.THERMAL_ACCELERATOR,
    }.get(signs, Regime.UNCLASSIFIED)


def check_populations(p: np.ndarray) -> None:
    p = np.asarray(p)
    if p.shape != (3,) or np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1) > 1e-12:
        raise ValueError(f"invalid populations {p!r}")


def check_density_matrix(rho: np.ndarray, psd_tol: float = -1e-8) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho)
    if rho.shape != (3, 3):
        raise ValueError(f"density matrix must be 3x3, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=1e-10, rtol=0):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-9:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.12g} != 1")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < psd_tol:
        raise ValueError(f"density matrix has negative eigenvalue {w.min():.3g}")
