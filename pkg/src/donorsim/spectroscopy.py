"""Pump-probe PLE spectral synthesis, hole-burning metric, transients, and
dark relaxation over the inhomogeneous ensemble.

Every probe position gets its own steady state (slow-scan limit, no
hysteresis), with the probe included in the kinetics rather than treated
perturbatively, so probe self-polarization emerges when nothing equalizes the
populations.  The detected signal counts probe-induced excitation events
weighted by (1 - eta + r*eta), where r is the detected fraction of Auger
cycles (r = 1 by default: detection proportional to total excitation events).
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvariantError, NonUniqueSteadyStateError, SolverError
from .kinetics import (
    _ION_OF,
    N_STATES,
    KineticState,
    RateConfig,
    build_generator,
    integrate,
    evolve,
    pump_rates,
    steady_state,
)
from .lineshape import (
    EnsembleClass,
    LineshapeModel,
    composite_fwhm,
    homogeneous_profile,
    sample_classes,
)
from .spin_system import (
    DonorEigensystem,
    DonorParams,
    DoubletConfig,
    TransitionLine,
    donor_eigensystem,
    line_by_index,
    transition_catalog,
)


@dataclass(frozen=True)
class LaserConfig:
    """A laser: energy offset from the band center (MHz), peak excitation rate
    (1/s), and its role."""

    energy: float
    peak_rate: float
    role: str = "pump"

    def __post_init__(self) -> None:
        if self.peak_rate < 0 or not math.isfinite(self.peak_rate):
            raise InvariantError(f"peak_rate must be finite >= 0, got {self.peak_rate}")
        if self.role not in ("pump", "probe"):
            raise InvariantError(f"role must be 'pump' or 'probe', got {self.role!r}")


@dataclass(frozen=True)
class Spectrum:
    """Ordered (probe energy MHz, PLE signal) samples with run metadata."""

    energies: np.ndarray
    signals: np.ndarray
    metadata: dict

    def __post_init__(self) -> None:
        e = np.asarray(self.energies, dtype=float)
        s = np.asarray(self.signals, dtype=float)
        if e.ndim != 1 or e.shape != s.shape:
            raise InvariantError("energies and signals must be matching 1-D arrays")
        if np.any(np.diff(e) <= 0):
            raise InvariantError("spectrum energies must be strictly increasing")
        if s.min() < -1e-12:
            raise InvariantError("spectrum signals must be >= 0")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "signals", np.clip(s, 0.0, None))

    def total_area(self) -> float:
        return float(np.trapezoid(self.signals, self.energies))


@dataclass(frozen=True)
class Scene:
    """Everything the synthesis needs: donor parameters, derived eigensystem
    and catalog, lineshape, rates, the discretized ensemble, and detection."""

    params: DonorParams
    lineshape: LineshapeModel
    rates: RateConfig
    catalog: list[TransitionLine]
    classes: list[EnsembleClass]
    eigensystem: DonorEigensystem
    auger_detected_fraction: float = 1.0

    @property
    def detection_factor(self) -> float:
        eta = self.rates.auger_fraction_eta
        return 1.0 - eta + self.auger_detected_fraction * eta


def make_scene(
    params: DonorParams,
    lineshape: LineshapeModel,
    rates: RateConfig,
    n_classes: int = 64,
    dx_config: DoubletConfig | None = None,
    auger_detected_fraction: float = 1.0,
) -> Scene:
    """Assemble a Scene, discretizing the inhomogeneous ensemble."""
    return Scene(
        params=params,
        lineshape=lineshape,
        rates=rates,
        catalog=transition_catalog(params, dx_config),
        classes=sample_classes(n_classes, lineshape),
        eigensystem=donor_eigensystem(params),
        auger_detected_fraction=auger_detected_fraction,
    )


def pump_at_line(scene: Scene, line_index: int, offset: float = 0.0) -> LaserConfig:
    """Pump laser at a catalog line peak, optionally detuned by offset (MHz)."""
    energy = line_by_index(scene.catalog, line_index).energy + offset
    return LaserConfig(energy=energy, peak_rate=scene.rates.pump_peak_rate_P0, role="pump")


def probe_at_line(scene: Scene, line_index: int, peak_rate: float) -> LaserConfig:
    energy = line_by_index(scene.catalog, line_index).energy
    return LaserConfig(energy=energy, peak_rate=peak_rate, role="probe")


def default_probe_grid(
    catalog: list[TransitionLine], points: int = 600, margin: float = 250.0
) -> np.ndarray:
    """Uniform scan grid covering the catalog with a baseline margin."""
    energies = [ln.energy for ln in catalog]
    return np.linspace(min(energies) - margin, max(energies) + margin, points)


def grid_including_lines(
    catalog: list[TransitionLine], points: int = 600, margin: float = 250.0
) -> np.ndarray:
    """Scan grid that contains every line-peak energy exactly."""
    base = default_probe_grid(catalog, points, margin)
    peaks = np.array([ln.energy for ln in catalog])
    return np.unique(np.concatenate([base, peaks]))


def optical_factor(cfg: RateConfig, *peak_rates: float) -> float:
    """Total incident optical intensity in units of the nominal pump rate.

    Scales the nonselective continuum term; zero when no laser is on."""
    total = float(sum(peak_rates))
    if total == 0.0:
        return 0.0
    if cfg.continuum_beta > 0 and cfg.pump_peak_rate_P0 <= 0:
        raise InvariantError(
            "pump_peak_rate_P0 must be > 0 to scale continuum_beta by intensity"
        )
    if cfg.pump_peak_rate_P0 <= 0:
        return 0.0
    return total / cfg.pump_peak_rate_P0


def _line_arrays(catalog: list[TransitionLine]) -> tuple[np.ndarray, np.ndarray]:
    """Line positions (12,) and the strength-weighted state map (12, 4)."""
    pos = np.array([ln.energy for ln in catalog])
    smap = np.zeros((len(catalog), 4))
    for k, ln in enumerate(catalog):
        smap[k, ln.initial_state.index] = ln.strength
    return pos, smap


def _steady_states_stacked(
    base: np.ndarray, probe_exc: np.ndarray, eta: float
) -> np.ndarray:
    """Steady states for one class at every probe position (vectorized).

    base is the class generator without the probe; probe_exc is (n_points, 4).
    """
    n_pts = probe_exc.shape[0]
    g = np.broadcast_to(base, (n_pts, N_STATES, N_STATES)).copy()
    q = eta * probe_exc
    for i in range(4):
        g[:, _ION_OF[i], i] += q[:, i]
        g[:, i, i] -= q[:, i]
    sv = np.linalg.svd(g, compute_uv=False)
    ok = (sv[:, 0] > 0) & (sv[:, -2] > 1e-10 * sv[:, 0])
    if not ok.all():
        raise NonUniqueSteadyStateError(
            "steady state not unique at scan indices "
            f"{np.flatnonzero(~ok).tolist()[:8]} (all connecting rates vanish?)"
        )
    g[:, 0, :] = 1.0
    b = np.zeros((n_pts, N_STATES, 1))
    b[:, 0, 0] = 1.0
    n = np.linalg.solve(g, b)[..., 0]
    if n.min() < -1e-9:
        raise SolverError("stacked steady-state solve produced negative populations")
    n = np.clip(n, 0.0, None)
    return n / n.sum(axis=1, keepdims=True)


def _check_grid_coverage(grid: np.ndarray, catalog: list[TransitionLine]) -> None:
    energies = [ln.energy for ln in catalog]
    if grid[-1] < min(energies) or grid[0] > max(energies):
        raise InvariantError("probe grid does not overlap the transition catalog")
    if grid[0] > min(energies) or grid[-1] < max(energies):
        warnings.warn(
            "probe grid does not cover the full catalog span; spectrum is partial",
            RuntimeWarning,
            stacklevel=3,
        )


def ple_spectrum(
    scene: Scene,
    probe_energies,
    probe_peak_rate: float,
    pump: LaserConfig | None = None,
    threads: int = 1,
) -> Spectrum:
    """Synthesize a PLE spectrum: per probe position and ensemble class, solve
    the pump+probe steady state and accumulate probe-induced excitation events.

    Scan points and classes are independent; class contributions are summed in
    class-index order so the result does not depend on the thread schedule.
    """
    grid = np.asarray(probe_energies, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise InvariantError("probe_energies must be a strictly increasing grid")
    _check_grid_coverage(grid, scene.catalog)

    cfg, eig = scene.rates, scene.eigensystem
    pump_peak = pump.peak_rate if pump is not None else 0.0
    factor = optical_factor(cfg, pump_peak, probe_peak_rate)
    pos, smap = _line_arrays(scene.catalog)
    detect = scene.detection_factor

    def class_signal(c: EnsembleClass) -> np.ndarray:
        if pump is not None:
            pump_exc = pump_rates(pump.energy, pump.peak_rate, c, scene.catalog, scene.lineshape)
        else:
            pump_exc = np.zeros(4)
        base = build_generator(pump_exc, cfg, eig, optical_factor=factor).matrix
        amp = homogeneous_profile(
            grid[:, None] - (pos + c.detuning_offset)[None, :], scene.lineshape
        )
        probe_exc = probe_peak_rate * (amp @ smap)
        states = _steady_states_stacked(base, probe_exc, cfg.auger_fraction_eta)
        return detect * np.einsum("ij,ij->i", probe_exc, states[:, :4])

    per_class = _map_classes(class_signal, scene.classes, threads)
    signal = np.zeros(grid.size)
    for c, sig in zip(scene.classes, per_class):
        signal += c.weight * sig

    meta = {
        "pump": None if pump is None else {"energy": pump.energy, "peak_rate": pump.peak_rate},
        "probe_peak_rate": probe_peak_rate,
        "field_B_mT": scene.params.field_B,
        "n_classes": len(scene.classes),
        "composite_fwhm": composite_fwhm(scene.lineshape),
        "units": "MHz",
    }
    return Spectrum(energies=grid, signals=signal, metadata=meta)


def _map_classes(fn, classes: list[EnsembleClass], threads: int) -> list:
    if threads is None or threads <= 1 or len(classes) == 1:
        return [fn(c) for c in classes]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, classes))


@dataclass(frozen=True)
class HoleBurningResult:
    """Spectral hole depth at the pump energy; degenerate marks spectra with no
    usable local envelope (e.g. a single-class ensemble where the whole line is
    gone rather than hole-burnt)."""

    depth: float
    degenerate: bool


def hole_burning_metric(
    spec: Spectrum, pump_energy: float, max_window: float | None = None
) -> HoleBurningResult:
    """Hole depth = 1 - signal(pump energy) / local envelope, clipped to [0, 1].

    The envelope interpolates between the nearest local maxima flanking the
    pump energy.  If either flank is missing, the envelope is degenerate, or
    the flanks are farther apart than max_window (default: twice the composite
    width from the spectrum metadata), the result is 0 with the degenerate flag.
    """
    e, s = spec.energies, spec.signals
    if not (e[0] <= pump_energy <= e[-1]):
        raise InvariantError("pump energy must lie within the scanned range")
    if max_window is None:
        cf = spec.metadata.get("composite_fwhm")
        max_window = 2.0 * cf if cf else None

    s_pump = float(np.interp(pump_energy, e, s))
    interior = np.flatnonzero((s[1:-1] > s[:-2]) & (s[1:-1] >= s[2:])) + 1
    left = [i for i in interior if e[i] < pump_energy]
    right = [i for i in interior if e[i] > pump_energy]
    if not left or not right:
        return HoleBurningResult(0.0, True)
    il, ir = left[-1], right[0]
    if max_window is not None and (e[ir] - e[il]) > max_window:
        return HoleBurningResult(0.0, True)
    envelope = float(np.interp(pump_energy, [e[il], e[ir]], [s[il], s[ir]]))
    if envelope <= 1e-30:
        return HoleBurningResult(0.0, True)
    depth = min(max(1.0 - s_pump / envelope, 0.0), 1.0)
    return HoleBurningResult(depth, False)


@dataclass(frozen=True)
class Transient:
    """Time-resolved ensemble response: aggregate populations (len(times), 6)
    and the probe-detected signal per time point."""

    times: np.ndarray
    populations: np.ndarray
    signal: np.ndarray
    metadata: dict


def transient_signal(
    scene: Scene,
    pump: LaserConfig | None,
    probe: LaserConfig,
    times,
    start: str = "equalized",
) -> Transient:
    """Integrate the ensemble kinetics with both lasers on from t = 0.

    start = 'equalized' begins from uniform donor populations; 'polarized'
    begins each class at its own steady state (the already-pumped sample), in
    which case the trajectory is flat.
    """
    if start not in ("equalized", "polarized"):
        raise InvariantError(f"start must be 'equalized' or 'polarized', got {start!r}")
    t = np.asarray(times, dtype=float)
    cfg, eig = scene.rates, scene.eigensystem
    pump_peak = pump.peak_rate if pump is not None else 0.0
    factor = optical_factor(cfg, pump_peak, probe.peak_rate)
    detect = scene.detection_factor

    agg = np.zeros((t.size, N_STATES))
    signal = np.zeros(t.size)
    for c in scene.classes:
        exc = pump_rates(probe.energy, probe.peak_rate, c, scene.catalog, scene.lineshape)
        probe_exc = exc.copy()
        if pump is not None:
            exc = exc + pump_rates(pump.energy, pump.peak_rate, c, scene.catalog, scene.lineshape)
        gen = build_generator(exc, cfg, eig, optical_factor=factor)
        n0 = KineticState.equalized() if start == "equalized" else steady_state(gen)
        traj = integrate(gen, n0, t)
        agg += c.weight * traj
        signal += c.weight * detect * (traj[:, :4] @ probe_exc)

    meta = {
        "start": start,
        "pump": None if pump is None else {"energy": pump.energy, "peak_rate": pump.peak_rate},
        "probe": {"energy": probe.energy, "peak_rate": probe.peak_rate},
    }
    return Transient(times=t, populations=agg, signal=signal, metadata=meta)


def dark_relaxation(
    start: KineticState,
    duration: float,
    cfg: RateConfig,
    eigensystem: DonorEigensystem,
) -> KineticState:
    """Evolve with every optical rate off: no excitation, no continuum, no
    above-gap term.  Only W, R, capture, and nuclear flips remain; pass the
    thermal (dark) W and R values, not optically enhanced ones."""
    if duration < 0:
        raise InvariantError(f"duration must be >= 0, got {duration}")
    dark_cfg = replace(cfg, above_gap_G=0.0)
    gen = build_generator(np.zeros(4), dark_cfg, eigensystem, optical_factor=0.0)
    return evolve(gen, start, duration)


def nuclear_polarization(state: KineticState) -> float:
    """Nuclear-up minus nuclear-down over all six states (fraction).

    Includes the ionized donors, so with optical rates off this observable
    relaxes as a single exponential at 1/nuclear_T1 (capture preserves nuclear
    spin and W only flips electrons)."""
    n = state.populations
    return (n[0] + n[3] + n[4]) - (n[1] + n[2] + n[5])


def probe_response_spectrum(
    scene: Scene,
    populations,
    probe_energies,
    probe_peak_rate: float,
) -> Spectrum:
    """Perturbative spectrum for frozen donor populations (no kinetics).

    The fast opt-in approximation: signal is the probe excitation rate of each
    state weighted by the given populations, summed over the ensemble.
    populations is a 4-sequence (fractions or percent; normalized internally).
    """
    grid = np.asarray(probe_energies, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise InvariantError("probe_energies must be a strictly increasing grid")
    pops = np.asarray(populations, dtype=float)
    if pops.shape != (4,) or pops.min() < 0 or pops.sum() <= 0:
        raise InvariantError("populations must be 4 nonnegative values")
    pops = pops / pops.sum()

    pos, smap = _line_arrays(scene.catalog)
    detect = scene.detection_factor
    signal = np.zeros(grid.size)
    for c in scene.classes:
        amp = homogeneous_profile(
            grid[:, None] - (pos + c.detuning_offset)[None, :], scene.lineshape
        )
        signal += c.weight * detect * probe_peak_rate * ((amp @ smap) @ pops)

    meta = {
        "pump": None,
        "probe_peak_rate": probe_peak_rate,
        "frozen_populations": tuple(pops.tolist()),
        "n_classes": len(scene.classes),
        "composite_fwhm": composite_fwhm(scene.lineshape),
        "units": "MHz",
    }
    return Spectrum(energies=grid, signals=signal, metadata=meta)


# --- CSV I/O ------------------------------------------------------------------

SPECTRUM_CSV_HEADER = ["energy_MHz", "signal"]


def spectrum_to_csv(spec: Spectrum, path) -> None:
    """Write the spectrum as `energy_MHz,signal` with LF line endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SPECTRUM_CSV_HEADER)
        for e, s in zip(spec.energies, spec.signals):
            writer.writerow([repr(float(e)), repr(float(s))])


def spectrum_from_csv(path) -> Spectrum:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != SPECTRUM_CSV_HEADER:
            raise InvariantError(
                f"unexpected spectrum CSV header {header!r}, want {SPECTRUM_CSV_HEADER}"
            )
        rows = [(float(a), float(b)) for a, b in reader]
    if not rows:
        raise InvariantError("spectrum CSV has no data rows")
    e = np.array([r[0] for r in rows])
    s = np.array([r[1] for r in rows])
    return Spectrum(energies=e, signals=s, metadata={"source": str(path)})
