"""Driven three-level Hamiltonian of a chiral molecule and its spectra.

Everything here is expressed in scaled units: energies in E0, times in
tau0 = hbar / E0, with hbar = 1.  The Hamiltonian is the time-independent
interaction-picture form obtained with the constrained detunings
delta_12 = delta_23 = delta_13 / 2 = delta, so its diagonal is (2 delta, delta, 0).
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi

#: eigenvalues closer than this are treated as one degenerate cluster
DEGENERACY_TOL = 1e-10
#: two overlaps this close make a continuity assignment ambiguous
AMBIGUITY_TOL = 1e-6
DEFAULT_PATH_SAMPLES = 2001
DEFAULT_GAP_THRESHOLD = 1e-3


class Chirality(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def sign(self) -> int:
        """Sign multiplying the 2-3 Rabi amplitude."""
        return 1 if self is Chirality.LEFT else -1

    @property
    def mirror(self) -> "Chirality":
        return Chirality.RIGHT if self is Chirality.LEFT else Chirality.LEFT


class ControlParameter(str, enum.Enum):
    PHASE = "phase"
    DETUNING = "detuning"


class PairingMode(str, enum.Enum):
    SORTED = "sorted"
    CONTINUITY = "continuity"


def normalize_phase(phi: float) -> float:
    """Map an angle into [0, 2 pi)."""
    out = math.fmod(float(phi), TWO_PI)
    if out < 0.0:
        out += TWO_PI
    if out >= TWO_PI:
        out = 0.0
    return out


@dataclass(frozen=True)
class DriveParameters:
    """Optical drive settings that fully determine the Hamiltonian.

    The enantiomer is carried only by ``chirality``; ``omega23`` is always the
    nonnegative magnitude.  ``phi`` is normalized into [0, 2 pi) on construction.
    """

    omega12: float = 1.0
    omega13: float = 1.0
    omega23: float = 1.0
    chirality: Chirality = Chirality.LEFT
    phi: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        for name in ("omega12", "omega13", "omega23", "phi", "delta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        for name in ("omega12", "omega13", "omega23"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)!r}")
        object.__setattr__(self, "chirality", Chirality(self.chirality))
        object.__setattr__(self, "phi", normalize_phase(self.phi))
        object.__setattr__(self, "delta", float(self.delta))

    def with_chirality(self, chirality: Chirality) -> "DriveParameters":
        return replace(self, chirality=Chirality(chirality))


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with column-paired orthonormal eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray = field(repr=False)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.values)

    @property
    def min_gap(self) -> float:
        return float(self.gaps.min())


@dataclass(frozen=True)
class ControlPath:
    """Uniform grid for one control parameter, endpoints inclusive.

    ``fixed_other`` pins the parameter that is not swept: the detuning for a
    phase path, the phase for a detuning path.
    """

    parameter: ControlParameter
    start: float
    end: float
    fixed_other: float
    samples: int = DEFAULT_PATH_SAMPLES

    def __post_init__(self):
        object.__setattr__(self, "parameter", ControlParameter(self.parameter))
        if int(self.samples) != self.samples or self.samples < 2:
            raise ValueError(f"samples must be an integer >= 2, got {self.samples!r}")
        object.__setattr__(self, "samples", int(self.samples))
        if not all(math.isfinite(x) for x in (self.start, self.end, self.fixed_other)):
            raise ValueError("path endpoints must be finite")
        if self.start == self.end:
            raise ValueError("path start and end must differ")

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.samples)

    def point(self, p0: DriveParameters, value: float) -> DriveParameters:
        """Drive parameters at one control value along this path."""
        if self.parameter is ControlParameter.PHASE:
            return replace(p0, phi=value, delta=self.fixed_other)
        return replace(p0, phi=self.fixed_other, delta=value)


def build_hamiltonian(p: DriveParameters) -> np.ndarray:
    """Interaction-picture Hamiltonian of one enantiomer as a 3x3 complex array.

    Diagonal (2 delta, delta, 0); H[0,1] = omega12 exp(i phi), H[0,2] = omega13,
    H[1,2] = +-omega23 for left/right.  The lower triangle is the exact conjugate.
    """
    h12 = p.omega12 * complex(math.cos(p.phi), math.sin(p.phi))
    h13 = complex(p.omega13)
    h23 = complex(p.chirality.sign * p.omega23)
    return np.array(
        [
            [2.0 * p.delta, h12, h13],
            [h12.conjugate(), p.delta, h23],
            [h13.conjugate(), h23.conjugate(), 0.0],
        ],
        dtype=complex,
    )


def path_hamiltonians(p0: DriveParameters, path: ControlPath) -> Tuple[np.ndarray, np.ndarray]:
    """Stack of Hamiltonians along ``path``, shape (samples, 3, 3), plus the grid."""
    grid = path.grid()
    n = grid.size
    if path.parameter is ControlParameter.PHASE:
        phis = np.array([normalize_phase(x) for x in grid])
        deltas = np.full(n, float(path.fixed_other))
    else:
        phis = np.full(n, normalize_phase(path.fixed_other))
        deltas = grid.astype(float)
    h = np.zeros((n, 3, 3), dtype=complex)
    h12 = p0.omega12 * (np.cos(phis) + 1j * np.sin(phis))
    h23 = p0.chirality.sign * p0.omega23
    h[:, 0, 0] = 2.0 * deltas
    h[:, 1, 1] = deltas
    h[:, 0, 1] = h12
    h[:, 1, 0] = h12.conj()
    h[:, 0, 2] = h[:, 2, 0] = p0.omega13
    h[:, 1, 2] = h[:, 2, 1] = h23
    return h, grid


def _canonicalize(values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    # Degenerate clusters get a basis-independent orthonormal frame built from
    # the cluster projector; then every column's largest entry is made real > 0.
    vecs = np.array(vectors, dtype=complex, copy=True)
    dim = values.size
    i = 0
    while i < dim:
        j = i + 1
        while j < dim and values[j] - values[j - 1] < DEGENERACY_TOL:
            j += 1
        if j - i > 1:
            sub = vecs[:, i:j]
            proj = sub @ sub.conj().T
            norms = np.linalg.norm(proj, axis=0)
            order = sorted(range(dim), key=lambda k: (-round(norms[k], 12), k))
            basis: List[np.ndarray] = []
            for k in order:
                v = proj[:, k].copy()
                for b in basis:
                    v -= b * (b.conj() @ v)
                nv = np.linalg.norm(v)
                if nv > 1e-8:
                    basis.append(v / nv)
                if len(basis) == j - i:
                    break
            vecs[:, i:j] = np.stack(basis, axis=1)
        i = j
    for n in range(dim):
        v = vecs[:, n]
        k = int(np.argmax(np.abs(v)))
        vecs[:, n] = v * (abs(v[k]) / v[k])
    return vecs


def eigensystem(h: np.ndarray) -> Spectrum:
    """Diagonalize a Hermitian 3x3 matrix with a deterministic eigenvector gauge."""
    h = np.asarray(h, dtype=complex)
    values, vectors = np.linalg.eigh(h)
    return Spectrum(values=values, vectors=_canonicalize(values, vectors))


def spectrum_along_path(p0: DriveParameters, path: ControlPath) -> List[Tuple[float, Spectrum]]:
    hs, grid = path_hamiltonians(p0, path)
    return [(float(x), eigensystem(h)) for x, h in zip(grid, hs)]


def min_gap_along_path(p0: DriveParameters, path: ControlPath) -> Tuple[float, float]:
    """Smallest adjacent level spacing on the sampled grid and where it occurs."""
    hs, grid = path_hamiltonians(p0, path)
    values = np.linalg.eigvalsh(hs)
    gaps = np.diff(values, axis=1).min(axis=1)
    k = int(np.argmin(gaps))
    return float(max(gaps[k], 0.0)), float(grid[k])


class Pairing(NamedTuple):
    """Level map between endpoint spectra.

    ``permutation[n]`` is the endpoint-B index of the branch that starts on
    level n at endpoint A.  ``diagnostics`` lists ambiguous tracking steps.
    """

    permutation: Tuple[int, ...]
    diagnostics: Tuple[str, ...] = ()

    @property
    def is_identity(self) -> bool:
        return self.permutation == tuple(range(len(self.permutation)))


_PERMS = np.array(list(itertools.permutations(range(3))))


def _track_branches(values: np.ndarray, vectors: np.ndarray, grid: np.ndarray) -> Pairing:
    # vectors: (samples, 3, 3), column n of each slice is eigenvector n
    degenerate = np.flatnonzero(np.diff(values, axis=1).min(axis=1) < DEGENERACY_TOL)
    overlaps = np.abs(np.einsum("kin,kim->knm", vectors[:-1].conj(), vectors[1:])) ** 2
    ranked = np.sort(overlaps, axis=2)
    ambiguous = np.flatnonzero((ranked[:, :, -1] - ranked[:, :, -2] < AMBIGUITY_TOL).any(axis=1))
    notes = [f"degenerate levels at parameter {grid[k]:.6g}, eigenvectors not unique" for k in degenerate]
    notes += [
        f"ambiguous eigenvector overlap between samples {k} and {k + 1} "
        f"(parameter {grid[k]:.6g} -> {grid[k + 1]:.6g})"
        for k in ambiguous
    ]
    scores = overlaps[:, np.arange(3), _PERMS].sum(axis=2)  # (steps, 6)
    best = np.argmax(scores, axis=1)
    branch = np.arange(3)
    for k in np.flatnonzero(best):
        branch = _PERMS[best[k]][branch]
    return Pairing(tuple(int(b) for b in branch), tuple(notes))


def pair_endpoint_states(
    spec_a: Spectrum,
    spec_b: Spectrum,
    mode: PairingMode = PairingMode.SORTED,
    p0: Optional[DriveParameters] = None,
    path: Optional[ControlPath] = None,
) -> Pairing:
    """Decide which endpoint-B level each endpoint-A population rides on.

    ``SORTED`` keeps sorted indices.  ``CONTINUITY`` follows eigenvector overlap
    step by step along ``path`` (which must start at ``spec_a`` and end at
    ``spec_b``) and returns the resulting branch permutation.
    """
    mode = PairingMode(mode)
    if mode is PairingMode.SORTED:
        return Pairing((0, 1, 2))
    if p0 is None or path is None:
        raise ValueError("continuity pairing needs the drive template and control path")
    hs, grid = path_hamiltonians(p0, path)
    values, vectors = np.linalg.eigh(hs)
    if not (
        np.allclose(values[0], spec_a.values, atol=1e-8)
        and np.allclose(values[-1], spec_b.values, atol=1e-8)
    ):
        raise ValueError("endpoint spectra do not match the ends of the control path")
    return _track_branches(values, vectors, grid)


def check_spectrum(h: np.ndarray, spec: Spectrum, tol: float = 1e-9) -> None:
    """Raise ``AssertionError`` if ``spec`` violates its invariants for ``h``."""
    v, vec = spec.values, spec.vectors
    assert np.all(np.diff(v) >= 0), "eigenvalues not ascending"
    assert np.allclose(vec.conj().T @ vec, np.eye(3), atol=1e-10), "vectors not orthonormal"
    resid = np.linalg.norm(h @ vec - vec * v, axis=0)
    assert resid.max() <= tol, f"eigen-residual {resid.max():.3g}"
    assert abs(v.sum() - np.trace(h).real) <= 1e-10, "trace identity violated"

