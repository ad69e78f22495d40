"""Bohmian trajectories guided by v = J/rho, and the two statistical readings.

A trajectory's initial position x0 is the hidden variable. The flow map sends
x0 to x(t); outcomes A(x0) = +/-1 are read off once the two spin lobes have
separated. Expectations can then be computed either from the initial-time
density over x0 ("description A", the Bell reading) or from the final-time
density and local spin projection ("description B"); the two agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NodeEvaluationError, UnresolvedRunError
from .quantum import OutcomeValue
from .solver import (
    FieldProfile,
    NODE_FLOOR,
    SpinorField,
    check_boundary,
    component_overlap_mass,
    component_centers,
    density_current,
    step,
)


@dataclass
class Trajectory:
    """One hidden-variable history: x0 -> sampled path -> outcome."""

    x0: float
    t0: float
    times: np.ndarray
    positions: np.ndarray
    outcome: OutcomeValue = OutcomeValue.UNRESOLVED
    escaped: bool = False
    final_sigma: float = np.nan

    @property
    def x_final(self) -> float:
        return float(self.positions[-1])


@dataclass
class IntegrationResult:
    trajectories: list[Trajectory]
    final_field: SpinorField
    record_times: np.ndarray
    record_positions: np.ndarray  # shape (n_records, n_trajectories)
    escaped: np.ndarray


def _rk4_advance(
    x: np.ndarray,
    grid_x: np.ndarray,
    v0: np.ndarray,
    v1: np.ndarray,
    dt: float,
) -> np.ndarray:
    """One RK4 step with v interpolated linearly in x and in t."""
    vmid = 0.5 * (v0 + v1)
    k1 = np.interp(x, grid_x, v0)
    k2 = np.interp(x + 0.5 * dt * k1, grid_x, vmid)
    k3 = np.interp(x + 0.5 * dt * k2, grid_x, vmid)
    k4 = np.interp(x + dt * k3, grid_x, v1)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_trajectories(
    x0s: np.ndarray,
    field: SpinorField,
    profile: FieldProfile,
    t_final: float,
    dt: float,
    record_every: int = 0,
    boundary_guard: bool = True,
    stop_when=None,
    check_every: int = 25,
) -> IntegrationResult:
    """Co-integrate the field and all trajectories to t_final.

    The field advances by Strang steps; trajectories advance by one RK4 step
    per field step, using the velocity fields at the two bracketing times.
    If `stop_when(field)` is supplied it is checked every `check_every` steps
    and ends the run early (t_final then acts as a hard cap). Trajectories
    that leave the grid interior are frozen and flagged escaped.
    """
    x0s = np.asarray(x0s, dtype=float)
    grid = field.grid
    rho0 = field.rho()
    threshold = 1e-10 * rho0.max()
    rho_at_x0 = np.interp(x0s, grid.x, rho0)
    if (rho_at_x0 <= threshold).any():
        raise InvalidInputError("some x0 lie where the initial density vanishes")

    margin = 2.0 * grid.dx
    lo, hi = grid.x_min + margin, grid.x_max - margin
    x = x0s.copy()
    escaped = np.zeros(x.size, dtype=bool)
    frozen = np.empty(x.size)

    rec_t = [field.t]
    rec_x = [x.copy()]

    current = field
    v0 = density_current(current).v
    n_steps = int(np.ceil((t_final - field.t) / dt - 1e-12))
    for i in range(n_steps):
        h = min(dt, t_final - current.t)
        nxt = step(current, profile, h)
        v1 = density_current(nxt).v
        x_new = _rk4_advance(x, grid.x, v0, v1, h)
        newly_out = (~escaped) & ((x_new < lo) | (x_new > hi))
        if newly_out.any():
            frozen[newly_out] = x[newly_out]
            escaped |= newly_out
        if escaped.any():
            x_new[escaped] = frozen[escaped]
        x = x_new
        current, v0 = nxt, v1
        done = i == n_steps - 1
        if record_every and (i + 1) % record_every == 0 and not done:
            rec_t.append(current.t)
            rec_x.append(x.copy())
        if boundary_guard and (i % check_every == 0 or done):
            check_boundary(current)
        if stop_when is not None and (i + 1) % check_every == 0:
            if stop_when(current):
                break
    if rec_t[-1] != current.t:
        rec_t.append(current.t)
        rec_x.append(x.copy())

    times = np.array(rec_t)
    positions = np.array(rec_x)
    trajectories = [
        Trajectory(
            x0=float(x0s[j]),
            t0=field.t,
            times=times,
            positions=positions[:, j],
            escaped=bool(escaped[j]),
        )
        for j in range(x0s.size)
    ]
    return IntegrationResult(trajectories, current, times, positions, escaped)


def spin_projection(field: SpinorField, x: float | np.ndarray) -> float | np.ndarray:
    """Local spin projection Sigma(x) = (rho_up - rho_down)/rho in [-1, 1]."""
    gx = field.grid.x
    up2 = np.interp(x, gx, np.abs(field.psi_up) ** 2)
    down2 = np.interp(x, gx, np.abs(field.psi_down) ** 2)
    rho = up2 + down2
    floor = NODE_FLOOR * field.rho().max()
    if np.isscalar(rho) or rho.ndim == 0:
        if rho < floor:
            raise NodeEvaluationError(f"density node at x = {x}")
        return float((up2 - down2) / rho)
    if (rho < floor).any():
        raise NodeEvaluationError("density node inside requested positions")
    return (up2 - down2) / rho


def lobes_separated(
    field: SpinorField, overlap_epsilon: float, min_separation: float = 0.0
) -> bool:
    """Separation criterion standing in for the t -> infinity limit.

    True when the spin-component densities share less than overlap_epsilon
    mass and (when both components are populated) their centers are at least
    min_separation apart. An eigenstate (single populated component) counts
    as separated: its outcome is already sharp.
    """
    nu, nd = field.component_norms()
    if min(nu, nd) < overlap_epsilon:
        return True
    if component_overlap_mass(field) >= overlap_epsilon:
        return False
    cu, cd = component_centers(field)
    return abs(cu - cd) >= min_separation


def classify_outcome(
    traj: Trajectory, final_field: SpinorField, overlap_epsilon: float = 1e-4
) -> OutcomeValue:
    """Read the measurement outcome off a finished trajectory.

    Resolved only once the lobes are disjoint (component overlap mass below
    overlap_epsilon); the outcome is the sign of the local spin projection at
    the final position. Sigma crosses zero exactly once, at the separatrix
    between the lobes, so its sign identifies the exit beam even for the rare
    trajectory still inside the low-density gap.
    """
    if traj.escaped:
        return OutcomeValue.UNRESOLVED
    if not lobes_separated(final_field, overlap_epsilon):
        return OutcomeValue.UNRESOLVED
    try:
        sigma = spin_projection(final_field, traj.x_final)
    except NodeEvaluationError:
        return OutcomeValue.UNRESOLVED
    traj.final_sigma = float(sigma)
    if sigma > 0.0:
        return OutcomeValue.PLUS
    if sigma < 0.0:
        return OutcomeValue.MINUS
    return OutcomeValue.UNRESOLVED


def classify_all(
    trajectories: list[Trajectory],
    final_field: SpinorField,
    overlap_epsilon: float = 1e-4,
) -> np.ndarray:
    """Classify every trajectory in place; returns the array of outcome ints."""
    out = np.empty(len(trajectories), dtype=int)
    for i, traj in enumerate(trajectories):
        traj.outcome = classify_outcome(traj, final_field, overlap_epsilon)
        out[i] = int(traj.outcome)
    return out


def expectation_description_B(field: SpinorField) -> float:
    """Final-time reading: integral of Sigma * rho = |c_up|^2 - |c_down|^2.

    Exact at any time because the device-basis evolution conserves each
    component norm separately.
    """
    nu, nd = field.component_norms()
    return nu - nd


def expectation_description_A(
    trajectories: list[Trajectory],
    weights: np.ndarray | None = None,
) -> tuple[float, float]:
    """Initial-coordinate reading: average of A(x0) = +/-1 over rho(x0, t0).

    With `weights` (stratified-grid quadrature weights summing to 1) the
    average is deterministic and the returned error is 0; otherwise the
    trajectories are assumed sampled from rho(., t0) and the Monte Carlo
    standard error is returned.
    """
    outcomes = np.array([int(t.outcome) for t in trajectories], dtype=float)
    unresolved = int(np.sum(outcomes == 0))
    if unresolved:
        raise UnresolvedRunError(unresolved, 0, len(trajectories))
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.size != outcomes.size:
            raise InvalidInputError("weights length mismatch")
        w = weights / weights.sum()
        return float(np.sum(w * outcomes)), 0.0
    mean = float(outcomes.mean())
    stderr = float(outcomes.std(ddof=1) / np.sqrt(outcomes.size))
    return mean, stderr


def density_cdf(field: SpinorField) -> tuple[np.ndarray, np.ndarray]:
    """Grid positions and the cumulative distribution of rho(., t)."""
    rho = field.rho()
    cdf = np.cumsum(rho) * field.grid.dx
    cdf /= cdf[-1]
    return field.grid.x, cdf


def check_equivariance(positions: np.ndarray, field: SpinorField) -> float:
    """Kolmogorov-Smirnov distance between evolved positions and rho(., t)."""
    positions = np.asarray(positions, dtype=float)
    if positions.size < 2:
        raise InvalidInputError("need at least two positions")
    gx, cdf = density_cdf(field)
    xs = np.sort(positions)
    f = np.interp(xs, gx, cdf)
    n = xs.size
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    return float(max(np.abs(ecdf_hi - f).max(), np.abs(f - ecdf_lo).max()))
