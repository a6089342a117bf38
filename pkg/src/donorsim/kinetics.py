"""Linear rate-equation kinetics of selective optical pumping.

State space: the four neutral-donor hyperfine states plus the two nuclear
states of the ionized donor, ordered (↑⇑, ↑⇓, ↓⇓, ↓⇑, D+⇑, D+⇓).  The bound
exciton is adiabatically eliminated: an excitation event either ionizes the
donor (probability eta, the Auger branch) or returns it unchanged (1 - eta).

Processes encoded in the generator:
  * selective ionization at the per-state excitation rate times eta,
    preserving nuclear spin;
  * nonselective continuum photoionization of all four donor states, scaled
    by the total incident optical factor;
  * electron capture by ionized donors at gamma_c, nuclear-preserving and
    electron-unpolarized (50/50);
  * electron spin relaxation W within same-nuclear-spin pairs and cross
    relaxation R between the anti-parallel pair, both detailed-balanced at
    the lattice temperature;
  * above-gap equalization G (relax donor states toward their mean, neutralize
    ionized donors with an equal four-way split);
  * nuclear flips between same-electron-spin pairs and between the ionized
    nuclear states, at 1/(2 T1n) per direction so a free nuclear-difference
    observable decays at exactly 1/T1n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .constants import H_OVER_KB_K_PER_MHZ
from .errors import InvariantError, NonUniqueSteadyStateError, SolverError
from .lineshape import EnsembleClass, LineshapeModel, homogeneous_profile
from .spin_system import DonorEigensystem, TransitionLine

N_STATES = 6
ION_UP, ION_DOWN = 4, 5
# ionization target (same nuclear spin) for each donor state, canonical order
_ION_OF = (ION_UP, ION_DOWN, ION_DOWN, ION_UP)
# (index pairs) connected by W: electron flip at fixed nuclear spin
_W_PAIRS = ((0, 3), (1, 2))
# pair connected by R: the mixed anti-parallel states
_R_PAIR = (1, 3)
# nuclear-flip pairs at fixed electron spin, plus the ionized pair
_T1N_PAIRS = ((0, 1), (2, 3), (ION_UP, ION_DOWN))


@dataclass(frozen=True)
class RateConfig:
    """Rates of the kinetic model, all 1/s unless noted.

    pump_peak_rate_P0:    on-resonance excitation rate of a pumped donor state.
    W:                    electron spin relaxation (same nuclear spin); the
                          directional rates are W * exp(+-dE/2kT).
    R:                    cross relaxation between the anti-parallel states.
    auger_fraction_eta:   probability an excitation event ionizes the donor.
    capture_rate_gamma_c: neutralization rate of ionized donors.
    continuum_beta:       nonselective photoionization per unit optical factor
                          (factor 1 = nominal full pump intensity).
    above_gap_G:          equalization rate from above-gap excitation.
    nuclear_T1:           free nuclear-polarization decay time, s.
    detailed_balance_T:   temperature for the W/R Boltzmann asymmetry, K;
                          math.inf makes the rates symmetric.
    """

    pump_peak_rate_P0: float
    W: float
    R: float
    auger_fraction_eta: float = 0.95
    capture_rate_gamma_c: float = 2.0e6
    continuum_beta: float = 0.0
    above_gap_G: float = 0.0
    nuclear_T1: float = 2100.0
    detailed_balance_T: float = 1.4

    def __post_init__(self) -> None:
        for name in (
            "pump_peak_rate_P0",
            "W",
            "R",
            "capture_rate_gamma_c",
            "continuum_beta",
            "above_gap_G",
        ):
            v = getattr(self, name)
            if v < 0 or not math.isfinite(v):
                raise InvariantError(f"{name} must be a finite rate >= 0, got {v}")
        if not 0.0 <= self.auger_fraction_eta <= 1.0:
            raise InvariantError(
                f"auger_fraction_eta must be in [0, 1], got {self.auger_fraction_eta}"
            )
        if not self.nuclear_T1 > 0:
            raise InvariantError(f"nuclear_T1 must be > 0, got {self.nuclear_T1}")
        if not self.detailed_balance_T > 0:
            raise InvariantError(
                f"detailed_balance_T must be > 0, got {self.detailed_balance_T}"
            )


@dataclass(frozen=True)
class KineticState:
    """Normalized populations of the six kinetic states."""

    populations: tuple[float, float, float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.populations) != 6:
            raise InvariantError("KineticState needs exactly 6 populations")
        if any(p < -1e-9 for p in self.populations):
            raise InvariantError(f"negative population in {self.populations}")
        total = sum(self.populations)
        if abs(total - 1.0) > 1e-9:
            raise InvariantError(f"populations must sum to 1, got {total!r}")

    @classmethod
    def equalized(cls) -> "KineticState":
        return cls((0.25, 0.25, 0.25, 0.25, 0.0, 0.0))

    @classmethod
    def from_array(cls, arr) -> "KineticState":
        return cls(tuple(float(v) for v in arr))

    def as_array(self) -> np.ndarray:
        return np.array(self.populations)

    def d0_percent(self) -> tuple[float, float, float, float]:
        """Populations renormalized over the four donor states, percent."""
        d0 = self.populations[:4]
        total = sum(d0)
        if total <= 0:
            raise InvariantError("no neutral-donor population to normalize")
        return tuple(100.0 * v / total for v in d0)

    def ionized_fraction(self) -> float:
        return self.populations[ION_UP] + self.populations[ION_DOWN]


@dataclass(frozen=True)
class RateGenerator:
    """Markov generator of the six-state kinetics: ndot = matrix @ n.

    Off-diagonals are >= 0 and every column sums to zero (probability
    conservation by construction)."""

    matrix: np.ndarray
    metadata: dict

    def __post_init__(self) -> None:
        m = self.matrix
        if m.shape != (N_STATES, N_STATES):
            raise InvariantError(f"generator must be 6x6, got {m.shape}")
        off = m - np.diag(np.diag(m))
        if off.min() < 0:
            raise InvariantError("generator off-diagonal entries must be >= 0")
        scale = max(np.abs(m).max(), 1.0)
        colsums = np.abs(m.sum(axis=0))
        if colsums.max() > 1e-9 * scale:
            raise InvariantError(f"generator columns must sum to 0, got {colsums}")


def pump_rates(
    laser_energy: float,
    laser_peak_rate: float,
    ens_class: EnsembleClass,
    catalog: list[TransitionLine],
    model: LineshapeModel,
) -> np.ndarray:
    """Per-donor-state excitation rates (4-vector, 1/s) for one laser and one class.

    Each line contributes peak_rate * strength * Lorentzian(detuning) to its
    initial state, where the detuning is measured from the class-shifted line.
    """
    if laser_peak_rate < 0 or not math.isfinite(laser_peak_rate):
        raise InvariantError(f"laser peak rate must be finite >= 0, got {laser_peak_rate}")
    rates = np.zeros(4)
    for ln in catalog:
        det = laser_energy - (ln.energy + ens_class.detuning_offset)
        rates[ln.initial_state.index] += (
            laser_peak_rate * ln.strength * homogeneous_profile(det, model)
        )
    return rates


def _boltzmann_x(e_from: float, e_to: float, temperature: float) -> float:
    """Detailed-balance exponent for a transition from e_from to e_to (MHz)."""
    if math.isinf(temperature):
        return 0.0
    return (e_from - e_to) * H_OVER_KB_K_PER_MHZ / temperature


def relaxation_matrix(cfg: RateConfig, eigensystem: DonorEigensystem) -> np.ndarray:
    """Generator of all non-excitation processes (capture, W, R, G, nuclear flips).

    The continuum term is excluded here; build_generator adds it scaled by the
    optical factor."""
    m = np.zeros((N_STATES, N_STATES))
    energies = eigensystem.as_array()
    temp = cfg.detailed_balance_T

    for rate, pairs in ((cfg.W, _W_PAIRS), (cfg.R, (_R_PAIR,))):
        for a, b in pairs:
            x = _boltzmann_x(energies[a], energies[b], temp)
            m[b, a] += rate * math.exp(0.5 * x)
            m[a, b] += rate * math.exp(-0.5 * x)

    half_capture = 0.5 * cfg.capture_rate_gamma_c
    m[0, ION_UP] += half_capture
    m[3, ION_UP] += half_capture
    m[1, ION_DOWN] += half_capture
    m[2, ION_DOWN] += half_capture

    if cfg.above_gap_G > 0:
        g = cfg.above_gap_G
        for j in range(4):
            for i in range(4):
                if i != j:
                    m[i, j] += g / 4.0
        for j in (ION_UP, ION_DOWN):
            for i in range(4):
                m[i, j] += g / 4.0

    nu = 0.5 / cfg.nuclear_T1
    for a, b in _T1N_PAIRS:
        m[b, a] += nu
        m[a, b] += nu

    np.fill_diagonal(m, 0.0)
    np.fill_diagonal(m, -m.sum(axis=0))
    return m


def build_generator(
    excitation,
    cfg: RateConfig,
    eigensystem: DonorEigensystem,
    optical_factor: float = 1.0,
) -> RateGenerator:
    """Assemble the full generator from per-state excitation rates and the config.

    excitation is the 4-vector of optical excitation rates of the donor states.
    optical_factor scales the nonselective continuum term (1 = full nominal
    intensity; 0 = dark).  Radiative return (1 - eta) produces no net flow and
    is therefore not represented in the generator.
    """
    exc = np.asarray(excitation, dtype=float)
    if exc.shape != (4,):
        raise InvariantError(f"excitation must be a 4-vector, got shape {exc.shape}")
    if exc.min() < 0 or not np.isfinite(exc).all():
        raise InvariantError("excitation rates must be finite and >= 0")
    if optical_factor < 0 or not math.isfinite(optical_factor):
        raise InvariantError(f"optical_factor must be finite >= 0, got {optical_factor}")

    m = relaxation_matrix(cfg, eigensystem)
    beta = cfg.continuum_beta * optical_factor
    for i in range(4):
        q = exc[i] * cfg.auger_fraction_eta + beta
        m[_ION_OF[i], i] += q
        m[i, i] -= q

    meta = {
        "excitation": tuple(exc.tolist()),
        "continuum_rate": beta,
        "optical_factor": optical_factor,
        "W": cfg.W,
        "R": cfg.R,
        "capture_rate_gamma_c": cfg.capture_rate_gamma_c,
        "above_gap_G": cfg.above_gap_G,
        "nuclear_T1": cfg.nuclear_T1,
    }
    return RateGenerator(matrix=m, metadata=meta)


_NULL_SPACE_RTOL = 1e-10


def steady_state(gen: RateGenerator) -> KineticState:
    """Unique probability vector in the generator's null space.

    Solved as a constrained linear system (the first row replaced by the
    normalization row).  Raises NonUniqueSteadyStateError when the generator is
    reducible (null space dimension > 1), e.g. with all rates zero.
    """
    m = gen.matrix
    svals = np.linalg.svd(m, compute_uv=False)
    if svals[0] == 0.0 or svals[-2] <= _NULL_SPACE_RTOL * svals[0]:
        raise NonUniqueSteadyStateError(
            "steady state is not unique: the rate generator is reducible "
            f"(singular values {svals})"
        )
    a = m.copy()
    a[0, :] = 1.0
    b = np.zeros(N_STATES)
    b[0] = 1.0
    try:
        n = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by SVD check
        raise SolverError(f"steady-state solve failed: {exc}") from exc
    if n.min() < -1e-9:
        raise SolverError(f"steady-state solve produced negative populations: {n}")
    n = np.clip(n, 0.0, None)
    n /= n.sum()
    return KineticState.from_array(n)


def _propagators(matrix: np.ndarray, times: np.ndarray) -> list[np.ndarray]:
    """Matrix exponentials for the successive gaps of the time grid; identical
    gaps share one exponential so uniform grids cost a single expm."""
    gaps = np.diff(np.concatenate([[0.0], times]))
    props: list[np.ndarray] = []
    cache: dict[float, np.ndarray] = {}
    for dt in gaps:
        key = float(dt)
        if key not in cache:
            cache[key] = expm(matrix * key) if key > 0 else np.eye(N_STATES)
        props.append(cache[key])
    return props


def integrate(gen: RateGenerator, start: KineticState, times) -> np.ndarray:
    """Propagate ndot = G n from t = 0 and return populations at the given times.

    Uses matrix-exponential stepping, which is unconditionally stable and
    conservative regardless of how many decades the rates span.  Returns an
    array of shape (len(times), 6).
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise InvariantError("times must be a non-empty 1-D grid")
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise InvariantError("times must be strictly increasing and >= 0")
    n = start.as_array()
    out = np.empty((t.size, N_STATES))
    for k, prop in enumerate(_propagators(gen.matrix, t)):
        n = prop @ n
        out[k] = n
    return out


def evolve(gen: RateGenerator, start: KineticState, duration: float) -> KineticState:
    """Single matrix-exponential step of the given duration."""
    if duration < 0:
        raise InvariantError(f"duration must be >= 0, got {duration}")
    if duration == 0:
        return start
    n = np.clip(expm(gen.matrix * duration) @ start.as_array(), 0.0, None)
    return KineticState.from_array(n / n.sum())


def ensemble_steady_state(
    classes: list[EnsembleClass], generators: list[RateGenerator]
) -> tuple[KineticState, list[KineticState]]:
    """Weighted steady-state aggregate over the ensemble plus per-class states.

    The weighted sum is accumulated in class-index order so results are
    bitwise reproducible."""
    if len(classes) != len(generators):
        raise InvariantError("one generator per ensemble class is required")
    weights = np.array([c.weight for c in classes])
    if abs(weights.sum() - 1.0) > 1e-9:
        raise InvariantError(f"class weights must sum to 1, got {weights.sum()!r}")
    per_class = [steady_state(g) for g in generators]
    agg = np.zeros(N_STATES)
    for w, st in zip(weights, per_class):
        agg += w * st.as_array()
    return KineticState.from_array(agg), per_class


def electron_nuclear_polarizations(state: KineticState) -> tuple[float, float]:
    """Donor-state electron/nuclear polarizations in percent (Table-style)."""
    from .spin_system import polarizations

    return polarizations(state.d0_percent())
