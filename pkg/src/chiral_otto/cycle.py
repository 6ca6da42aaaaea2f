"""Four-stroke quantum Otto cycle with a chiral three-level working medium.

Stroke order: hot isochore at control point A, adiabatic expansion A -> B,
cold isochore at B, adiabatic compression B -> A.  The adiabatic strokes are
quasi-static, so populations are carried unchanged between the endpoints and
no time propagation is involved.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, List, NamedTuple, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .spectral import (
    DEFAULT_GAP_THRESHOLD,
    DEFAULT_PATH_SAMPLES,
    TWO_PI,
    Chirality,
    ControlParameter,
    ControlPath,
    DriveParameters,
    PairingMode,
    Spectrum,
    build_hamiltonian,
    eigensystem,
    min_gap_along_path,
    pair_endpoint_states,
)
from .thermo import (
    Regime,
    classify_regime,
    efficiency,
    gibbs_populations,
    heat_cold,
    heat_hot,
    work_net,
)

THREADS_ENV = "CHIRAL_OTTO_THREADS"
WORK_TOL = 1e-3
ETA_TOL = 0.1
DEFAULT_BETA_HOT = 0.01
DEFAULT_BETA_COLD = 1.0
SWEEP_OFFSET = 1e-3
SWEEP_POINTS = 201

T = TypeVar("T")
R = TypeVar("R")


class PopulationReference(str, enum.Enum):
    """Which spectrum the Gibbs populations of each bath are computed on.

    ``HOT_POINT``: both the hot and the cold populations are Boltzmann weights
    of the control-point-A levels, so P_n depends on the bath temperature only.
    This reproduces the published work and efficiency values.

    ``ISOCHORE``: each bath thermalizes the Hamiltonian it is in contact with,
    hot populations on the A levels and cold populations on the B levels.
    """

    HOT_POINT = "hot-point"
    ISOCHORE = "isochore"


class ConfigMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class CycleConfig:
    drives: DriveParameters = field(default_factory=DriveParameters)
    control: Optional[ControlPath] = None
    beta_hot: float = DEFAULT_BETA_HOT
    beta_cold: float = DEFAULT_BETA_COLD
    pairing: PairingMode = PairingMode.SORTED
    gap_threshold: float = DEFAULT_GAP_THRESHOLD
    population_reference: PopulationReference = PopulationReference.HOT_POINT

    def __post_init__(self):
        object.__setattr__(self, "pairing", PairingMode(self.pairing))
        object.__setattr__(self, "population_reference", PopulationReference(self.population_reference))
        for name in ("beta_hot", "beta_cold", "gap_threshold"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if self.beta_hot > self.beta_cold:
            raise ValueError(
                f"hot bath must not be colder than the cold bath (beta_hot={self.beta_hot}, beta_cold={self.beta_cold})"
            )

    @property
    def chirality(self) -> Chirality:
        return self.drives.chirality

    def with_chirality(self, chirality: Chirality) -> "CycleConfig":
        return replace(self, drives=self.drives.with_chirality(chirality))

    def with_control(self, control: ControlPath) -> "CycleConfig":
        return replace(self, control=control)


@dataclass(frozen=True)
class CycleRecord:
    """Outcome of one cycle.

    Populations are indexed by the levels of ``spectrum_a``; ``pairing`` gives
    the level of ``spectrum_b`` each of them rides on after the expansion.
    """

    config: CycleConfig
    spectrum_a: Spectrum
    spectrum_b: Spectrum
    pops_hot: np.ndarray
    pops_cold: np.ndarray
    pairing: Tuple[int, ...]
    q_hot: float
    q_cold: float
    work: float
    eta_percent: Optional[float]
    regime: Regime
    min_gap: float
    min_gap_at: float
    warnings: Tuple[str, ...] = ()

    @property
    def chirality(self) -> Chirality:
        return self.config.chirality

    @property
    def param(self) -> float:
        """Control value at the cold-isochore point."""
        return self.config.control.end


def _cycle_quantities(spec_a, spec_b, perm, cfg):
    e_b = spec_b.values[list(perm)]
    pops_hot = gibbs_populations(spec_a, cfg.beta_hot)
    if cfg.population_reference is PopulationReference.HOT_POINT:
        pops_cold = gibbs_populations(spec_a, cfg.beta_cold)
    else:
        pops_cold = gibbs_populations(spec_b, cfg.beta_cold)[list(perm)]
    q_h = heat_hot(spec_a, pops_hot, pops_cold)
    q_c = heat_cold(e_b, pops_cold, pops_hot)
    return pops_hot, pops_cold, q_h, q_c, work_net(q_h, q_c)


def run_cycle(cfg: CycleConfig) -> CycleRecord:
    if cfg.control is None:
        raise ValueError("cycle config has no control path")
    path = cfg.control
    spec_a = eigensystem(build_hamiltonian(path.point(cfg.drives, path.start)))
    spec_b = eigensystem(build_hamiltonian(path.point(cfg.drives, path.end)))
    warnings: List[str] = []

    gap, gap_at = min_gap_along_path(cfg.drives, path)
    if gap < cfg.gap_threshold:
        warnings.append(f"level gap {gap:.3g} E0 at {path.parameter.value}={gap_at:.6g} below threshold {cfg.gap_threshold:.3g}")

    continuity = pair_endpoint_states(spec_a, spec_b, PairingMode.CONTINUITY, cfg.drives, path)
    warnings.extend(continuity.diagnostics[:1])
    if len(continuity.diagnostics) > 1:
        warnings.append(f"{len(continuity.diagnostics) - 1} further ambiguous continuity steps")
    perm = continuity.permutation if cfg.pairing is PairingMode.CONTINUITY else (0, 1, 2)

    pops_hot, pops_cold, q_h, q_c, w = _cycle_quantities(spec_a, spec_b, perm, cfg)
    if cfg.pairing is PairingMode.SORTED and not continuity.is_identity:
        w_alt = _cycle_quantities(spec_a, spec_b, continuity.permutation, cfg)[-1]
        warnings.append(
            f"sorted and continuity pairings disagree {continuity.permutation}: "
            f"W_sorted={w:.12g}, W_continuity={w_alt:.12g}"
        )

    regime = classify_regime(w, q_h, q_c)
    eta = efficiency(w, q_h) if regime is Regime.ENGINE else None
    return CycleRecord(
        config=cfg,
        spectrum_a=spec_a,
        spectrum_b=spec_b,
        pops_hot=pops_hot,
        pops_cold=pops_cold,
        pairing=tuple(perm),
        q_hot=q_h,
        q_cold=q_c,
        work=w,
        eta_percent=eta,
        regime=regime,
        min_gap=gap,
        min_gap_at=gap_at,
        warnings=tuple(warnings),
    )


def worker_count(workers: Optional[int] = None) -> int:
    """Resolve sweep parallelism: explicit value, else the env cap, else 1.

    0 means one worker per core.
    """
    if workers is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        workers = int(raw) if raw else 1
    if workers < 0:
        raise ValueError(f"worker count must be >= 0, got {workers}")
    return workers or (os.cpu_count() or 1)


def _ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: Optional[int]) -> List[R]:
    n = worker_count(workers)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


class EnantiomerPair(NamedTuple):
    param: float
    left: CycleRecord
    right: CycleRecord


def _run_pair(cfg: CycleConfig) -> EnantiomerPair:
    left = run_cycle(cfg.with_chirality(Chirality.LEFT))
    right = run_cycle(cfg.with_chirality(Chirality.RIGHT))
    return EnantiomerPair(cfg.control.end, left, right)


def default_phase_grid(points: int = SWEEP_POINTS) -> np.ndarray:
    return np.linspace(SWEEP_OFFSET, TWO_PI - SWEEP_OFFSET, points)


def default_detuning_grid(points: int = SWEEP_POINTS, end: float = 1.0) -> np.ndarray:
    return np.linspace(0.0, end, points + 1)[1:]


def sweep_phase(
    cfg: CycleConfig,
    phi2_grid: Optional[Iterable[float]] = None,
    phi1: float = math.pi / 2,
    delta: float = 0.1,
    samples: int = DEFAULT_PATH_SAMPLES,
    workers: Optional[int] = None,
) -> List[EnantiomerPair]:
    """Phase-controlled cycles phi1 -> phi2 at fixed detuning, both enantiomers."""
    grid = default_phase_grid() if phi2_grid is None else np.asarray(list(phi2_grid), dtype=float)
    cfgs = [
        cfg.with_control(ControlPath(ControlParameter.PHASE, phi1, float(x), delta, samples))
        for x in grid
    ]
    return _ordered_map(_run_pair, cfgs, workers)


def sweep_detuning(
    cfg: CycleConfig,
    phi: float,
    delta2_grid: Optional[Iterable[float]] = None,
    delta1: float = 0.0,
    samples: int = DEFAULT_PATH_SAMPLES,
    workers: Optional[int] = None,
) -> List[EnantiomerPair]:
    """Detuning-controlled cycles delta1 -> delta2 at fixed phase, both enantiomers."""
    grid = default_detuning_grid() if delta2_grid is None else np.asarray(list(delta2_grid), dtype=float)
    cfgs = [
        cfg.with_control(ControlPath(ControlParameter.DETUNING, delta1, float(x), phi, samples))
        for x in grid
    ]
    return _ordered_map(_run_pair, cfgs, workers)


class EfficiencyPoint(NamedTuple):
    phi: float
    eta_left: Optional[float]
    eta_right: Optional[float]
    left: CycleRecord
    right: CycleRecord


def efficiency_vs_phase(
    cfg: CycleConfig,
    phi_grid: Optional[Iterable[float]] = None,
    delta_start: float = 0.0,
    delta_end: float = 1.0,
    samples: int = DEFAULT_PATH_SAMPLES,
    workers: Optional[int] = None,
) -> List[EfficiencyPoint]:
    """Engine efficiency of both enantiomers for a fixed detuning stroke, per phase.

    A missing efficiency (``None``) marks an enantiomer that is not an engine
    at that phase.
    """
    grid = default_phase_grid() if phi_grid is None else np.asarray(list(phi_grid), dtype=float)
    cfgs = [
        cfg.with_control(ControlPath(ControlParameter.DETUNING, delta_start, delta_end, float(x), samples))
        for x in grid
    ]
    pairs = _ordered_map(_run_pair, cfgs, workers)
    return [
        EfficiencyPoint(float(x), p.left.eta_percent, p.right.eta_percent, p.left, p.right)
        for x, p in zip(grid, pairs)
    ]


@dataclass(frozen=True)
class DiscriminationReport:
    regimes: Tuple[Regime, Regime]
    delta_work: float
    delta_eta: Optional[float]
    distinguishable: bool
    reasons: Tuple[str, ...]


def discriminate(
    left: CycleRecord,
    right: CycleRecord,
    work_tol: float = WORK_TOL,
    eta_tol: float = ETA_TOL,
) -> DiscriminationReport:
    """Compare two cycle records that differ only in the enantiomer.

    Differences are reported as left minus right.
    """
    if left.config.with_chirality(Chirality.LEFT) != right.config.with_chirality(Chirality.LEFT):
        raise ConfigMismatchError("records come from configs that differ beyond chirality")
    reasons = []
    if left.regime is not right.regime:
        reasons.append("regime")
    dw = left.work - right.work
    if abs(dw) > work_tol:
        reasons.append("work gap")
    d_eta = None
    if left.eta_percent is not None and right.eta_percent is not None:
        d_eta = left.eta_percent - right.eta_percent
        if abs(d_eta) > eta_tol:
            reasons.append("efficiency gap")
    return DiscriminationReport(
        regimes=(left.regime, right.regime),
        delta_work=dw,
        delta_eta=d_eta,
        distinguishable=bool(reasons),
        reasons=tuple(reasons),
    )
