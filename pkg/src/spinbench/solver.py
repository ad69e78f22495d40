"""Two-component spinor dynamics on a 1-D periodic grid.

The wave packet crosses an idealized Stern-Gerlach device reduced to the axis
of the field gradient: each spin component sees the potential +/- mu*B(x)
with B(x) = b0 + gradient*x inside the interaction window [t_on, t_off] and
zero outside. Evolution uses Strang-split spectral steps, which are unitary
up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridTooSmallError, InternalConsistencyError, InvalidInputError
from .quantum import Direction, SpinCoefficients

BOUNDARY_FRACTION = 1e-10
_BOUNDARY_CELLS = 8
NODE_FLOOR = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid; n_points must be a power of two and >= 256."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.x_max <= self.x_min:
            raise InvalidInputError("x_max must exceed x_min")
        n = self.n_points
        if n < 256 or (n & (n - 1)) != 0:
            raise InvalidInputError(f"n_points must be a power of two >= 256, got {n}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)


@dataclass(frozen=True)
class SpinorField:
    """Immutable snapshot of the two-component wave function at time t."""

    grid: Grid1D
    psi_up: np.ndarray
    psi_down: np.ndarray
    t: float

    def norm(self) -> float:
        return float(
            np.sum(np.abs(self.psi_up) ** 2 + np.abs(self.psi_down) ** 2)
            * self.grid.dx
        )

    def rho(self) -> np.ndarray:
        return np.abs(self.psi_up) ** 2 + np.abs(self.psi_down) ** 2

    def component_norms(self) -> tuple[float, float]:
        dx = self.grid.dx
        return (
            float(np.sum(np.abs(self.psi_up) ** 2) * dx),
            float(np.sum(np.abs(self.psi_down) ** 2) * dx),
        )


@dataclass(frozen=True)
class FieldProfile:
    """Stern-Gerlach field model: B(x) = b0 + gradient*x during [t_on, t_off].

    The device axis only selects the spin basis in which the components are
    expressed; the 1-D dynamics are diagonal in that basis.
    """

    mu: float
    b0: float
    gradient: float
    t_on: float
    t_off: float
    device_axis: Direction = Direction(0.0)

    def __post_init__(self):
        if self.t_off < self.t_on:
            raise InvalidInputError("t_off must be >= t_on")

    def window_overlap(self, t0: float, t1: float) -> float:
        """Duration of [t0, t1] inside the interaction window."""
        return max(0.0, min(t1, self.t_off) - max(t0, self.t_on))

    def potential(self, x: np.ndarray) -> np.ndarray:
        """mu * B(x) acting as +V on psi_up and -V on psi_down."""
        return self.mu * (self.b0 + self.gradient * x)


FREE_PROFILE = FieldProfile(mu=0.0, b0=0.0, gradient=0.0, t_on=0.0, t_off=0.0)


@dataclass(frozen=True)
class DensityCurrent:
    """Probability density, current, and the guidance velocity v = J/rho."""

    rho: np.ndarray
    j: np.ndarray
    v: np.ndarray


def init_gaussian_packet(
    grid: Grid1D,
    center: float,
    width: float,
    momentum: float,
    coeffs: SpinCoefficients,
) -> SpinorField:
    """Spin-factorized Gaussian packet psi_s = c_s * g(x).

    g(x) = (2 pi w^2)^(-1/4) exp(-(x-center)^2/(4 w^2) + i k x), renormalized
    on the grid so the total discrete norm is exactly 1.
    """
    if width < 4.0 * grid.dx:
        raise InvalidInputError(
            f"packet width {width} below 4*dx = {4 * grid.dx:.4g}"
        )
    if center - 6.0 * width < grid.x_min or center + 6.0 * width > grid.x_max:
        raise InvalidInputError("packet support touches the grid boundary")
    x = grid.x
    g = (2.0 * np.pi * width**2) ** -0.25 * np.exp(
        -((x - center) ** 2) / (4.0 * width**2) + 1j * momentum * x
    )
    g = g / np.sqrt(np.sum(np.abs(g) ** 2) * grid.dx)
    return SpinorField(grid, coeffs.c_up * g, coeffs.c_down * g, 0.0)


def step(field: SpinorField, profile: FieldProfile, dt: float) -> SpinorField:
    """One Strang-split step: half potential, full kinetic, half potential.

    The potential is piecewise constant in time, so the window is handled
    exactly by scaling the phase with the overlap of [t, t+dt] and the window.
    """
    if dt <= 0:
        raise InvalidInputError("dt must be positive")
    grid = field.grid
    dt_eff = profile.window_overlap(field.t, field.t + dt)
    if dt_eff > 0.0:
        half = np.exp(-0.5j * profile.potential(grid.x) * dt_eff)
    else:
        half = None
    kin = np.exp(-0.5j * grid.k**2 * dt)

    up, down = field.psi_up, field.psi_down
    if half is not None:
        up = up * half
        down = down * half.conj()
    up = np.fft.ifft(kin * np.fft.fft(up))
    down = np.fft.ifft(kin * np.fft.fft(down))
    if half is not None:
        up = up * half
        down = down * half.conj()
    return SpinorField(grid, up, down, field.t + dt)


def check_boundary(field: SpinorField) -> None:
    rho = field.rho()
    peak = rho.max()
    edge = max(rho[:_BOUNDARY_CELLS].max(), rho[-_BOUNDARY_CELLS:].max())
    if peak > 0 and edge > BOUNDARY_FRACTION * peak:
        raise GridTooSmallError(field.t, float(edge / peak))


def evolve(
    field: SpinorField,
    profile: FieldProfile,
    t_final: float,
    dt: float,
    snapshot_every: int = 0,
    boundary_guard: bool = True,
) -> list[SpinorField]:
    """Drive `step` to t_final, returning snapshots at the requested cadence.

    The last snapshot is always at t_final (final partial step if needed).
    Norm drift beyond 1e-8 raises InternalConsistencyError; density reaching
    the periodic boundary raises GridTooSmallError naming the offending time.
    """
    if t_final < field.t:
        raise InvalidInputError("t_final must be >= field.t")
    snapshots = [field]
    if t_final == field.t:
        return snapshots
    norm0 = field.norm()
    n_steps = int(np.ceil((t_final - field.t) / dt - 1e-12))
    current = field
    for i in range(n_steps):
        h = min(dt, t_final - current.t)
        current = step(current, profile, h)
        if boundary_guard and (i % 25 == 0 or i == n_steps - 1):
            check_boundary(current)
        if snapshot_every and (i + 1) % snapshot_every == 0 and i != n_steps - 1:
            snapshots.append(current)
    if abs(current.norm() - norm0) > 1e-8:
        raise InternalConsistencyError(
            f"norm drift {abs(current.norm() - norm0):.3e} exceeds 1e-8"
        )
    snapshots.append(current)
    return snapshots


def _spectral_derivative(grid: Grid1D, psi: np.ndarray) -> np.ndarray:
    return np.fft.ifft(1j * grid.k * np.fft.fft(psi))


def _fill_nodes(v: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Replace node-region values with the nearest well-defined neighbor."""
    if valid.all():
        return v
    idx = np.arange(v.size)
    good = idx[valid]
    if good.size == 0:
        return np.zeros_like(v)
    nearest = good[np.clip(np.searchsorted(good, idx), 0, good.size - 1)]
    prev = good[np.clip(np.searchsorted(good, idx) - 1, 0, good.size - 1)]
    pick = np.where(np.abs(nearest - idx) <= np.abs(idx - prev), nearest, prev)
    out = v.copy()
    out[~valid] = v[pick[~valid]]
    return out


def density_current(field: SpinorField) -> DensityCurrent:
    """rho, J, and v = J/rho with nearest-neighbor fill at density nodes.

    J = Im(psi_up* d_x psi_up + psi_down* d_x psi_down) with hbar = M = 1;
    this equals the phase-gradient form away from nodes and satisfies the
    continuity equation for the split Hamiltonian.
    """
    grid = field.grid
    rho = field.rho()
    j = np.imag(
        field.psi_up.conj() * _spectral_derivative(grid, field.psi_up)
        + field.psi_down.conj() * _spectral_derivative(grid, field.psi_down)
    )
    valid = rho >= NODE_FLOOR * rho.max()
    v = np.zeros_like(j)
    np.divide(j, rho, out=v, where=valid)
    v = _fill_nodes(v, valid)
    return DensityCurrent(rho=rho, j=np.asarray(j), v=v)


def component_overlap_mass(field: SpinorField) -> float:
    """Mass shared by the two component densities, integral of min(rho_up, rho_down).

    Zero once the two Stern-Gerlach lobes are fully disjoint; used as the
    quantitative stand-in for the t -> infinity separation limit.
    """
    up2 = np.abs(field.psi_up) ** 2
    down2 = np.abs(field.psi_down) ** 2
    return float(np.sum(np.minimum(up2, down2)) * field.grid.dx)


def component_centers(field: SpinorField) -> tuple[float | None, float | None]:
    """Density-weighted mean position of each spin component (None if empty)."""
    x = field.grid.x
    out = []
    for comp in (field.psi_up, field.psi_down):
        w = np.abs(comp) ** 2
        total = w.sum()
        out.append(float(np.sum(x * w) / total) if total > 1e-300 else None)
    return out[0], out[1]


def split_point(field: SpinorField) -> float | None:
    """Density minimum between the two component lobes, None if not two-lobed."""
    cu, cd = component_centers(field)
    nu, nd = field.component_norms()
    if cu is None or cd is None or min(nu, nd) < 1e-12:
        return None
    x = field.grid.x
    lo, hi = sorted((cu, cd))
    mask = (x > lo) & (x < hi)
    if not mask.any():
        return None
    rho = field.rho()
    i = np.argmin(rho[mask])
    return float(x[mask][i])
