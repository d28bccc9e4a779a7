"""Wavefunction-level cross-check on a periodic grid.

The moment engine computes epsilon and eta from closed-form symplectic
maps.  This module recomputes them with none of that machinery: the joint
wavefunction psi(x, y) lives on a periodic square grid, the coupling
window is applied as a sequence of shear unitaries (each one exact up to
rounding, implemented as an FFT phase ramp), and the error fields

    noise field        y * (U psi) - U (x * psi)
    disturbance field  p_x (U psi) - U (p_x psi)

are integrated directly.  Agreement between the two routes is the
acceptance evidence that the symplectic bookkeeping means what it claims.

Everything here works in hbar = 1 units; rescale momenta on the way in
(``unit_hbar_spec``) and multiply eta by hbar on the way out.

Axis convention: ``amplitudes[i, j]`` is psi(x[i], y[j]); x is the object
coordinate, y the pointer.  Periodicity makes large shears wrap around, so
every public shear guards the box: mass in the outer 5 percent shell above
``boundary_threshold`` aborts the run rather than silently aliasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.fft

from .states import GaussianSpec

DEFAULT_BOUNDARY_THRESHOLD = 1e-8

# Fraction of each axis, per side, treated as the guard shell.
BOUNDARY_SHELL = 0.05

# A shear displacing mass across this fraction of the box height has
# wrapped no matter what the shell says afterwards; refuse up front.
_WRAP_FRACTION = 0.9

_NORM_TOL = 1e-9

# Pure single packets force sigma_x sigma_p sqrt(1 - rho^2) = 1/2 exactly.
_PURITY_TOL = 1e-9


class BoundaryMassError(RuntimeError):
    """Wavefunction mass reached the periodic boundary guard shell."""


class ShearStep(NamedTuple):
    """One elementary shear: kind is 'x_py' or 'px_y', theta its strength.

    'x_py' with strength theta maps psi(x, y) -> psi(x, y - theta x), the
    unit-window stretch coupling when theta = 1.  'px_y' maps
    psi(x, y) -> psi(x + theta y, y), the back-action-evading partner.
    """

    kind: str
    theta: float


VON_NEUMANN_STEPS = (ShearStep("x_py", 1.0),)

# Back-action-evading shear first, stretch shear second: the order the
# factoring identity demands.
NOISELESS_STEPS = (ShearStep("px_y", 1.0), ShearStep("x_py", 1.0))

MODEL_STEPS = {
    "von_neumann": VON_NEUMANN_STEPS,
    "noiseless": NOISELESS_STEPS,
}


@dataclass(frozen=True, eq=False)
class GridState:
    """Normalized two-mode wavefunction on a periodic box."""

    nx: int
    ny: int
    lx: float
    ly: float
    amplitudes: np.ndarray

    def __post_init__(self):
        for n, name in ((self.nx, "nx"), (self.ny, "ny")):
            if not isinstance(n, int) or n < 16 or n & (n - 1):
                raise ValueError(f"{name} must be a power of two >= 16, got {n!r}")
        for l, name in ((self.lx, "lx"), (self.ly, "ly")):
            if not (math.isfinite(l) and l > 0):
                raise ValueError(f"{name} must be positive, got {l!r}")
        arr = np.array(self.amplitudes, dtype=complex)
        if arr.shape != (self.nx, self.ny):
            raise ValueError(
                f"amplitudes must have shape ({self.nx}, {self.ny}), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("amplitudes contain non-finite entries")
        norm = math.sqrt(float(np.sum(np.abs(arr) ** 2)) * self.cell_area)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"amplitudes must be normalized, got norm {norm!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @property
    def dx(self):
        return 2.0 * self.lx / self.nx

    @property
    def dy(self):
        return 2.0 * self.ly / self.ny

    @property
    def cell_area(self):
        return self.dx * self.dy

    @property
    def x(self):
        return -self.lx + self.dx * np.arange(self.nx)

    @property
    def y(self):
        return -self.ly + self.dy * np.arange(self.ny)

    @property
    def kx(self):
        return 2.0 * math.pi * scipy.fft.fftfreq(self.nx, d=self.dx)

    @property
    def ky(self):
        return 2.0 * math.pi * scipy.fft.fftfreq(self.ny, d=self.dy)


def unit_hbar_spec(spec, hbar):
    """Rescale a Gaussian spec into the grid's hbar = 1 units (p -> p/hbar)."""
    return GaussianSpec(
        sigma_x=spec.sigma_x,
        sigma_p=spec.sigma_p / hbar,
        mean_x=spec.mean_x,
        mean_p=spec.mean_p / hbar,
        correlation=spec.correlation)


def _pure_packet(coords, spec):
    """Minimum-uncertainty 1-D packet with x-p correlation, hbar = 1."""
    if abs(spec.uncertainty_product() - 0.5) > _PURITY_TOL:
        raise ValueError(
            "grid packets are pure states: need sigma_x * sigma_p * "
            f"sqrt(1 - rho^2) = 1/2, got {spec.uncertainty_product():.6g}")
    alpha = (1.0 / (4.0 * spec.sigma_x ** 2)
             - 0.5j * spec.correlation * spec.sigma_p / spec.sigma_x)
    shifted = coords - spec.mean_x
    return np.exp(-alpha * shifted ** 2 + 1j * spec.mean_p * shifted)


def _boundary_mask(n):
    shell = max(1, int(round(BOUNDARY_SHELL * n)))
    mask = np.zeros(n, dtype=bool)
    mask[:shell] = True
    mask[-shell:] = True
    return mask


def boundary_mass(state):
    """Probability mass inside the guard shell along either axis."""
    return _raw_boundary_mass(state.amplitudes, state)


def _raw_boundary_mass(raw, grid):
    density = np.abs(raw) ** 2 * grid.cell_area
    in_x = _boundary_mask(grid.nx)
    in_y = _boundary_mask(grid.ny)
    shell = in_x[:, None] | in_y[None, :]
    return float(np.sum(density[shell]))


def auto_half_width(object_specs, probe_spec, n, floor=10.0):
    """Box half-width covering both packets and their sheared images.

    The window maps each coordinate into a sum of the two input
    coordinates, so the needed position extent is bounded by the summed
    centers plus summed 8-sigma tails, padded by a quarter.  The same
    budget applies in momentum: n grid points over a box of half-width L
    resolve wavenumbers up to pi n / (2 L), and that ceiling must clear
    the summed momentum content or the shears alias.  When no L satisfies
    both, the grid is too coarse and this raises rather than silently
    degrading.
    """
    reach_x = max(abs(s.mean_x) for s in object_specs) + abs(probe_spec.mean_x)
    spread_x = max(s.sigma_x for s in object_specs) + probe_spec.sigma_x
    half_width = max(floor, 1.25 * (reach_x + 8.0 * spread_x))
    reach_k = max(abs(s.mean_p) for s in object_specs) + abs(probe_spec.mean_p)
    spread_k = max(s.sigma_p for s in object_specs) + probe_spec.sigma_p
    k_ceiling = math.pi * n / (2.0 * half_width)
    k_needed = reach_k + 8.0 * spread_k
    if k_needed > k_ceiling:
        raise ValueError(
            f"grid of {n} points cannot hold both a box of half-width "
            f"{half_width:.3g} and momentum content up to {k_needed:.3g} "
            f"(ceiling {k_ceiling:.3g}); increase the resolution")
    return half_width


def init_grid(object_components, probe_spec, nx=512, ny=512, half_width=None,
              boundary_threshold=DEFAULT_BOUNDARY_THRESHOLD):
    """Build psi(x, y) = object(x) * probe(y) on a square periodic box.

    Parameters
    ----------
    object_components : sequence of (weight, GaussianSpec)
        Superposition of pure packets along x.  A single entry is the
        plain Gaussian case; several entries give multi-peaked states.
    probe_spec : GaussianSpec
        Pure packet along y.
    half_width : float, optional
        Box half-width (shared by both axes); computed from the specs when
        omitted.

    All specs are interpreted in hbar = 1 units; see ``unit_hbar_spec``.
    """
    components = [(float(w), spec) for w, spec in object_components]
    if not components:
        raise ValueError("need at least one object component")
    if any(w <= 0 for w, _ in components):
        raise ValueError("component weights must be positive")
    if half_width is None:
        half_width = auto_half_width(
            [s for _, s in components], probe_spec, min(nx, ny))
    half_width = float(half_width)
    xs = -half_width + (2.0 * half_width / nx) * np.arange(nx)
    ys = -half_width + (2.0 * half_width / ny) * np.arange(ny)

    object_wave = np.zeros(nx, dtype=complex)
    for weight, spec in components:
        object_wave += weight * _pure_packet(xs, spec)
    probe_wave = _pure_packet(ys, probe_spec)
    amplitudes = np.outer(object_wave, probe_wave)
    norm = math.sqrt(float(np.sum(np.abs(amplitudes) ** 2))
                     * (2.0 * half_width / nx) * (2.0 * half_width / ny))
    if norm == 0.0:
        raise ValueError("wavefunction vanished on the grid")
    state = GridState(nx, ny, half_width, half_width, amplitudes / norm)
    mass = boundary_mass(state)
    if mass > boundary_threshold:
        raise BoundaryMassError(
            f"initial state already puts mass {mass:.3e} in the guard shell; "
            "enlarge half_width")
    return state


def init_gaussian_grid(object_spec, probe_spec, **kwargs):
    """Single-packet convenience wrapper around ``init_grid``."""
    return init_grid([(1.0, object_spec)], probe_spec, **kwargs)


def _raw_shear(raw, grid, step):
    """Apply one shear to a bare amplitude array, no guards."""
    if step.kind == "x_py":
        # psi(x, y) -> psi(x, y - theta x): translate along y by theta * x.
        phase = np.exp(-1j * step.theta * np.outer(grid.x, grid.ky))
        return scipy.fft.ifft(phase * scipy.fft.fft(raw, axis=1), axis=1)
    if step.kind == "px_y":
        # psi(x, y) -> psi(x + theta y, y): translate along x by -theta * y.
        phase = np.exp(1j * step.theta * np.outer(grid.kx, grid.y))
        return scipy.fft.ifft(phase * scipy.fft.fft(raw, axis=0), axis=0)
    raise ValueError(f"unknown shear kind {step.kind!r}")


def _wrap_guard(raw, grid, step):
    """Refuse shears that translate occupied columns across the box."""
    density = np.abs(raw) ** 2 * grid.cell_area
    if step.kind == "x_py":
        occupied = density.sum(axis=1) > 1e-14
        reach = float(np.max(np.abs(grid.x[occupied]), initial=0.0))
        span = 2.0 * grid.ly
    else:
        occupied = density.sum(axis=0) > 1e-14
        reach = float(np.max(np.abs(grid.y[occupied]), initial=0.0))
        span = 2.0 * grid.lx
    if abs(step.theta) * reach >= _WRAP_FRACTION * span:
        raise BoundaryMassError(
            f"shear {step.kind} theta={step.theta} would translate mass "
            f"{abs(step.theta) * reach:.3g} across a box of span {span:.3g}")


def apply_steps(state, steps, boundary_threshold=DEFAULT_BOUNDARY_THRESHOLD):
    """Apply a shear sequence with wrap and boundary guards at every step."""
    raw = state.amplitudes
    for step in steps:
        _wrap_guard(raw, state, step)
        raw = _raw_shear(raw, state, step)
        mass = _raw_boundary_mass(raw, state)
        if mass > boundary_threshold:
            raise BoundaryMassError(
                f"after shear {step.kind} theta={step.theta}: boundary mass "
                f"{mass:.3e} exceeds {boundary_threshold:.3e}")
    return GridState(state.nx, state.ny, state.lx, state.ly, raw)


def apply_shear_x_py(state, theta, **kwargs):
    """Stretch-coupling window of strength theta, guarded."""
    return apply_steps(state, (ShearStep("x_py", float(theta)),), **kwargs)


def apply_shear_px_y(state, theta, **kwargs):
    """Back-action-evading window of strength theta, guarded."""
    return apply_steps(state, (ShearStep("px_y", float(theta)),), **kwargs)


def von_neumann_unitary(state, **kwargs):
    return apply_steps(state, VON_NEUMANN_STEPS, **kwargs)


def noiseless_unitary(state, **kwargs):
    return apply_steps(state, NOISELESS_STEPS, **kwargs)


def _spectral_px(raw, grid):
    return scipy.fft.ifft(grid.kx[:, None] * scipy.fft.fft(raw, axis=0), axis=0)


def _spectral_py(raw, grid):
    return scipy.fft.ifft(grid.ky[None, :] * scipy.fft.fft(raw, axis=1), axis=1)


def grid_noise_disturbance(state, steps,
                           boundary_threshold=DEFAULT_BOUNDARY_THRESHOLD):
    """(epsilon, eta) straight from wavefunctions, hbar = 1.

    epsilon^2 integrates |y U psi - U x psi|^2: the pointer readout after
    the window against the position it was meant to record.  eta^2
    integrates |p_x U psi - U p_x psi|^2.  The auxiliary fields x psi and
    p_x psi ride through the same shears as psi itself.
    """
    final = apply_steps(state, steps, boundary_threshold)
    u_psi = final.amplitudes

    raw = state.amplitudes
    x_psi = state.x[:, None] * raw
    px_psi = _spectral_px(raw, state)
    u_x_psi = x_psi
    u_px_psi = px_psi
    for step in steps:
        u_x_psi = _raw_shear(u_x_psi, state, step)
        u_px_psi = _raw_shear(u_px_psi, state, step)

    noise_field = state.y[None, :] * u_psi - u_x_psi
    dist_field = _spectral_px(u_psi, state) - u_px_psi
    area = state.cell_area
    epsilon = math.sqrt(float(np.sum(np.abs(noise_field) ** 2)) * area)
    eta = math.sqrt(float(np.sum(np.abs(dist_field) ** 2)) * area)
    return epsilon, eta


def grid_noise(state, steps, **kwargs):
    return grid_noise_disturbance(state, steps, **kwargs)[0]


def grid_disturbance(state, steps, **kwargs):
    return grid_noise_disturbance(state, steps, **kwargs)[1]


def grid_moments(state):
    """Mean vector and covariance over (x, p_x, y, p_y), hbar = 1.

    Second moments come from the Gram matrix of the four centered fields,
    whose real part is exactly the symmetrized covariance.
    """
    raw = state.amplitudes
    area = state.cell_area
    fields = [
        state.x[:, None] * raw,
        _spectral_px(raw, state),
        state.y[None, :] * raw,
        _spectral_py(raw, state),
    ]
    mean = np.array([float(np.real(np.vdot(raw, f))) * area for f in fields])
    centered = [f - m * raw for f, m in zip(fields, mean)]
    cov = np.empty((4, 4))
    for i in range(4):
        for j in range(i, 4):
            val = float(np.real(np.vdot(centered[i], centered[j]))) * area
            cov[i, j] = val
            cov[j, i] = val
    return mean, cov


def position_marginal(state, axis=0):
    """(coordinates, probability masses) along x (axis 0) or y (axis 1)."""
    if axis not in (0, 1):
        raise ValueError("axis must be 0 (x) or 1 (y)")
    density = np.abs(state.amplitudes) ** 2 * state.cell_area
    masses = density.sum(axis=1 - axis)
    coords = state.x if axis == 0 else state.y
    return coords, masses


def output_histogram(state, steps, edges,
                     boundary_threshold=DEFAULT_BOUNDARY_THRESHOLD):
    """Pointer-readout histogram after the window, on given bin edges."""
    final = apply_steps(state, steps, boundary_threshold)
    coords, masses = position_marginal(final, axis=1)
    hist, _ = np.histogram(coords, bins=edges, weights=masses)
    return hist


def total_variation(p, q):
    """Total variation distance between two histograms on shared bins."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"histogram shapes differ: {p.shape} vs {q.shape}")
    return 0.5 * float(np.sum(np.abs(p - q)))
