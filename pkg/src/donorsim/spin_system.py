"""Donor hyperfine level structure, optical transition catalog, and population arithmetic.

The neutral donor binds one electron (spin 1/2) to the spin-1/2 nucleus through an
isotropic contact coupling A, giving four hyperfine states.  The two parallel-spin
states are field-exact; the two anti-parallel states mix, with closed-form
(square-root) eigenvalues.  Optical transitions to the bound-exciton states form
six doublets (twelve lines); the exciton side is modeled as six configurable
doublet centers, linear in field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .constants import H_OVER_KB_K_PER_MHZ, MU_B_MHZ_PER_MT, MU_N_MHZ_PER_MT
from .errors import CatalogOrderError, InvariantError


class HyperfineState(Enum):
    """The four neutral-donor hyperfine states, in canonical order ↑⇑, ↑⇓, ↓⇓, ↓⇑.

    Single arrow = electron spin, double arrow = nuclear spin.
    """

    UP_UP = ("up", "up")
    UP_DOWN = ("up", "down")
    DOWN_DOWN = ("down", "down")
    DOWN_UP = ("down", "up")

    @property
    def electron(self) -> str:
        return self.value[0]

    @property
    def nuclear(self) -> str:
        return self.value[1]

    @property
    def ket(self) -> str:
        e = "↑" if self.electron == "up" else "↓"
        n = "⇑" if self.nuclear == "up" else "⇓"
        return f"|{e}{n}>"

    @property
    def index(self) -> int:
        return STATE_ORDER.index(self)

    @property
    def is_parallel(self) -> bool:
        return self.electron == self.nuclear

    def flip_electron(self) -> "HyperfineState":
        e = "down" if self.electron == "up" else "up"
        return HyperfineState((e, self.nuclear))

    def flip_nuclear(self) -> "HyperfineState":
        n = "down" if self.nuclear == "up" else "up"
        return HyperfineState((self.electron, n))


STATE_ORDER: tuple[HyperfineState, ...] = (
    HyperfineState.UP_UP,
    HyperfineState.UP_DOWN,
    HyperfineState.DOWN_DOWN,
    HyperfineState.DOWN_UP,
)


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise InvariantError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class DonorParams:
    """Donor spin-system parameters.

    hyperfine_A:   zero-field singlet-triplet splitting, MHz (> 0).
    g_electron:    electron g-factor (dimensionless).
    g_nuclear:     nuclear g-factor (dimensionless).
    field_B:       static magnetic field, mT (>= 0).
    temperature_T: lattice temperature, K (> 0; math.inf allowed).

    The default field/temperature pair (42 mT, 1.4 K) is derived, not measured:
    it is the pair at which the thermal electron polarization is ~2%.  The
    g-factors are literature constants for phosphorus donors in silicon.
    """

    hyperfine_A: float = 117.53
    g_electron: float = 1.9985
    g_nuclear: float = 2.263
    field_B: float = 42.0
    temperature_T: float = 1.4

    def __post_init__(self) -> None:
        _require_finite("hyperfine_A", self.hyperfine_A)
        _require_finite("field_B", self.field_B)
        if not (self.hyperfine_A > 0):
            raise InvariantError(f"hyperfine_A must be > 0, got {self.hyperfine_A}")
        if self.field_B < 0:
            raise InvariantError(f"field_B must be >= 0, got {self.field_B}")
        if not (self.temperature_T > 0):
            raise InvariantError(
                f"temperature_T must be > 0, got {self.temperature_T}"
            )

    @property
    def electron_zeeman(self) -> float:
        """Electron Zeeman splitting g_e * muB * B, MHz."""
        return self.g_electron * MU_B_MHZ_PER_MT * self.field_B

    @property
    def nuclear_zeeman(self) -> float:
        """Nuclear Zeeman splitting g_n * muN * B, MHz."""
        return self.g_nuclear * MU_N_MHZ_PER_MT * self.field_B


@dataclass(frozen=True)
class DonorEigensystem:
    """Eigenenergies (MHz, relative to the four-level centroid) and mixing angle.

    The parallel states ↑⇑ and ↓⇓ are exact eigenstates; ↑⇓ and ↓⇑ are mixed by
    the contact coupling with mixing angle in [0, pi/4] (pi/4 at zero field).
    """

    energies: dict[HyperfineState, float]
    mixing_angle: float

    def as_array(self) -> np.ndarray:
        return np.array([self.energies[s] for s in STATE_ORDER])

    def energy(self, state: HyperfineState) -> float:
        return self.energies[state]


def donor_eigensystem(params: DonorParams) -> DonorEigensystem:
    """Closed-form eigenvalues of the two-spin-1/2 contact + Zeeman Hamiltonian.

    In the product basis the parallel states are diagonal; the anti-parallel
    block has gap sqrt(A^2 + (omega_e + omega_n)^2), the square-root expression
    for a coupled electron-nuclear pair in a field.
    """
    a = params.hyperfine_A
    omega_e = params.electron_zeeman
    omega_n = params.nuclear_zeeman
    delta = omega_e + omega_n
    root = math.hypot(a, delta)
    energies = {
        HyperfineState.UP_UP: a / 4 + (omega_e - omega_n) / 2,
        HyperfineState.UP_DOWN: -a / 4 + root / 2,
        HyperfineState.DOWN_DOWN: a / 4 - (omega_e - omega_n) / 2,
        HyperfineState.DOWN_UP: -a / 4 - root / 2,
    }
    mixing = 0.5 * math.atan2(a, delta)
    return DonorEigensystem(energies=energies, mixing_angle=mixing)


def zero_field_splitting(eig: DonorEigensystem) -> float:
    """Singlet-triplet gap: distance from the lowest (singlet-like) level to the
    anti-parallel triplet-like level."""
    return eig.energies[HyperfineState.UP_DOWN] - eig.energies[HyperfineState.DOWN_UP]


# --- transition catalog ------------------------------------------------------

# Electron-spin character of the six doublets, low to high energy.  Doublets
# alternate between the two electron-spin manifolds, which is what interleaves
# the line families across the spectrum.
DOUBLET_ELECTRON: tuple[str, ...] = ("up", "down", "up", "down", "up", "down")

# Default exciton-side Zeeman slopes (MHz/mT), one per doublet center, equally
# spaced and antisymmetric about zero.  Spacing exceeds the donor electron
# Zeeman slope so the 1..12 energy order is field-independent.
DEFAULT_DOUBLET_SLOPES: tuple[float, ...] = (-100.0, -60.0, -20.0, 20.0, 60.0, 100.0)


@dataclass(frozen=True)
class DoubletConfig:
    """Exciton-side configuration: six doublet centers plus per-line strengths.

    Centers may be given explicitly (MHz offsets from the band center) or
    derived as slopes * field_B.  Strengths are the twelve per-line weights,
    the hook for making line intensity depend on the exciton (hole) state.
    """

    centers: tuple[float, ...] | None = None
    slopes: tuple[float, ...] = DEFAULT_DOUBLET_SLOPES
    strengths: tuple[float, ...] = field(default=tuple([1.0] * 12))

    def __post_init__(self) -> None:
        if self.centers is not None and len(self.centers) != 6:
            raise InvariantError("centers must have exactly 6 entries")
        if len(self.slopes) != 6:
            raise InvariantError("slopes must have exactly 6 entries")
        if len(self.strengths) != 12:
            raise InvariantError("strengths must have exactly 12 entries")
        if any(s < 0 for s in self.strengths):
            raise InvariantError("line strengths must be >= 0")

    def centers_at(self, field_B: float) -> tuple[float, ...]:
        if self.centers is not None:
            centers = self.centers
        else:
            centers = tuple(s * field_B for s in self.slopes)
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise InvariantError(
                f"doublet centers must increase monotonically, got {centers}"
            )
        return centers


@dataclass(frozen=True)
class TransitionLine:
    """One optical line: 1-based index, initial donor state, 1-based doublet,
    energy offset from the band center (MHz), and strength weight."""

    index: int
    initial_state: HyperfineState
    doublet: int
    energy: float
    strength: float


def transition_catalog(
    params: DonorParams, dx_config: DoubletConfig | None = None
) -> list[TransitionLine]:
    """Build the twelve-line catalog, indexed 1..12 in order of increasing energy.

    Line energy = doublet center - initial-state energy, so within each doublet
    the higher line originates from the anti-parallel (mixed) state.  Raises
    CatalogOrderError if the configured centers are close enough that doublets
    interleave (index order would disagree with energy order).
    """
    cfg = dx_config or DoubletConfig()
    centers = cfg.centers_at(params.field_B)
    eig = donor_eigensystem(params)

    lines: list[TransitionLine] = []
    for d, (center, espin) in enumerate(zip(centers, DOUBLET_ELECTRON)):
        if espin == "up":
            parallel, anti = HyperfineState.UP_UP, HyperfineState.UP_DOWN
        else:
            parallel, anti = HyperfineState.DOWN_DOWN, HyperfineState.DOWN_UP
        e_par = center - eig.energies[parallel]
        e_anti = center - eig.energies[anti]
        if not e_par < e_anti:
            raise CatalogOrderError(
                f"doublet {d + 1}: parallel-state line ({e_par:.6g} MHz) must lie "
                f"below the anti-parallel line ({e_anti:.6g} MHz); "
                "increase field_B to lift the degeneracy"
            )
        idx = 2 * d + 1
        lines.append(TransitionLine(idx, parallel, d + 1, e_par, cfg.strengths[idx - 1]))
        lines.append(
            TransitionLine(idx + 1, anti, d + 1, e_anti, cfg.strengths[idx])
        )

    energies = [ln.energy for ln in lines]
    if any(b <= a for a, b in zip(energies, energies[1:])):
        raise CatalogOrderError(
            "doublet centers interleave: line energies are not strictly increasing "
            f"in index order ({energies})"
        )
    return lines


def line_by_index(catalog: list[TransitionLine], index: int) -> TransitionLine:
    for ln in catalog:
        if ln.index == index:
            return ln
    raise InvariantError(f"no line with index {index} in catalog")


# --- populations and polarizations ------------------------------------------


@dataclass(frozen=True)
class PopulationVector:
    """Fractional populations of the four donor states plus an ionized fraction.

    values follows the canonical state order; values and ionized sum to 1.
    """

    values: tuple[float, float, float, float]
    ionized: float = 0.0

    def __post_init__(self) -> None:
        if len(self.values) != 4:
            raise InvariantError("values must have exactly 4 entries")
        if any(v < -1e-12 for v in self.values) or self.ionized < -1e-12:
            raise InvariantError("populations must be >= 0")
        total = sum(self.values) + self.ionized
        if abs(total - 1.0) > 1e-9:
            raise InvariantError(f"populations must sum to 1, got {total!r}")

    def percent(self) -> tuple[float, float, float, float]:
        """Populations renormalized over the four donor states, in percent."""
        d0 = sum(self.values)
        if d0 <= 0:
            raise InvariantError("no neutral-donor population to normalize")
        return tuple(100.0 * v / d0 for v in self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


def equilibrium_populations(params: DonorParams) -> PopulationVector:
    """Boltzmann distribution over the four donor eigenenergies at temperature_T."""
    eig = donor_eigensystem(params)
    energies = eig.as_array()
    if math.isinf(params.temperature_T):
        weights = np.ones(4)
    else:
        x = -energies * (H_OVER_KB_K_PER_MHZ / params.temperature_T)
        weights = np.exp(x - x.max())
    p = weights / weights.sum()
    return PopulationVector(values=tuple(p.tolist()))


def polarizations(p) -> tuple[float, float]:
    """Net electron and nuclear polarizations (percent) from percent populations.

    Accepts a PopulationVector (renormalized over the donor states) or a
    4-sequence of percentages in canonical state order summing to 100 +- 0.5.
    Electron polarization counts electron-up minus electron-down; nuclear
    polarization counts nuclear-up minus nuclear-down.
    """
    if isinstance(p, PopulationVector):
        vals = p.percent()
    else:
        vals = tuple(float(v) for v in p)
        if len(vals) != 4:
            raise InvariantError("expected 4 populations")
    total = sum(vals)
    if abs(total - 100.0) > 0.5:
        raise InvariantError(
            f"populations must sum to 100% within 0.5, got {total!r}"
        )
    n_uu, n_ud, n_dd, n_du = vals
    p_e = (n_uu + n_ud) - (n_dd + n_du)
    p_n = (n_uu + n_du) - (n_ud + n_dd)
    return p_e, p_n
