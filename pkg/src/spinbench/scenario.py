"""Scenario configuration and the single-device measurement pipeline.

A scenario fixes the grid, the Gaussian packet, the spin preparation axis,
the field profile, the run controls, and the ensemble. `run_measurement`
executes one full Stern-Gerlach measurement for a given device setting:
prepare, co-integrate field and trajectories until the lobes separate,
classify, and collect statistics.
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import InvalidInputError, UnresolvedRunError
from .guidance import (
    IntegrationResult,
    check_equivariance,
    classify_all,
    expectation_description_A,
    expectation_description_B,
    integrate_trajectories,
    lobes_separated,
)
from .quantum import Direction, SpinCoefficients, born_probability, rotate_basis
from .sampling import sample_positions
from .solver import FieldProfile, Grid1D, SpinorField, init_gaussian_packet, split_point


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one Stern-Gerlach run; every field has a default."""

    # grid
    x_min: float = -40.0
    x_max: float = 40.0
    n_points: int = 4096
    # packet
    center: float = 0.0
    width: float = 1.0
    momentum: float = 0.0
    # spin preparation axis (spin-up along this direction), radians
    spin_theta: float = 0.0
    spin_phi: float = 0.0
    # field profile
    mu: float = 1.0
    b0: float = 0.0
    gradient: float = 5.0
    t_on: float = 0.0
    t_off: float = 0.8
    # run controls
    dt: float = 1e-3
    t_max: float = 12.0
    snapshot_every: int = 0
    # ensemble
    n_samples: int = 10_000
    seed: int = 42
    # thresholds
    overlap_epsilon: float = 1e-6
    unresolved_max_fraction: float = 1e-3
    min_separation_widths: float = 8.0

    def validate(self) -> None:
        self.grid()  # grid invariants
        if self.width < 4.0 * self.grid().dx:
            raise InvalidInputError("packet width below 4*dx")
        if self.dt <= 0 or self.t_max <= self.t_off:
            raise InvalidInputError("need dt > 0 and t_max > t_off")
        if self.n_samples < 1:
            raise InvalidInputError("n_samples must be >= 1")
        if not (0.0 < self.overlap_epsilon < 1.0):
            raise InvalidInputError("overlap_epsilon must be in (0, 1)")
        if abs(self.mu * self.gradient) * (self.t_off - self.t_on) <= 0.0:
            raise InvalidInputError("field profile does not separate the beam")

    def grid(self) -> Grid1D:
        return Grid1D(self.x_min, self.x_max, self.n_points)

    def preparation_axis(self) -> Direction:
        return Direction(self.spin_theta, self.spin_phi)

    def profile(self, device: Direction) -> FieldProfile:
        return FieldProfile(
            mu=self.mu,
            b0=self.b0,
            gradient=self.gradient,
            t_on=self.t_on,
            t_off=self.t_off,
            device_axis=device,
        )

    def device_coefficients(self, device: Direction) -> SpinCoefficients:
        """Amplitudes of the prepared spin-up state in the device basis."""
        return rotate_basis(SpinCoefficients.up(), self.preparation_axis(), device)

    def initial_field(
        self, device: Direction, coeffs: SpinCoefficients | None = None
    ) -> SpinorField:
        if coeffs is None:
            coeffs = self.device_coefficients(device)
        return init_gaussian_packet(
            self.grid(), self.center, self.width, self.momentum, coeffs
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "ScenarioConfig":
        known = {f for f in ScenarioConfig.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise InvalidInputError(f"unknown config keys: {sorted(extra)}")
        return ScenarioConfig(**data)

    @staticmethod
    def from_toml(path: str) -> "ScenarioConfig":
        with open(path, "rb") as fh:
            return ScenarioConfig.from_dict(tomllib.load(fh))


@dataclass
class MeasurementResult:
    """Outcome statistics of one simulated Stern-Gerlach measurement."""

    device: Direction
    coeffs: SpinCoefficients
    integration: IntegrationResult
    outcomes: np.ndarray  # +1/-1 per sample (0 only if allow_unresolved)
    t_final: float
    x_split: float | None
    unresolved: int
    escaped: int
    p_plus: float
    p_minus: float
    p_stderr: float
    expectation_initial: float
    expectation_initial_err: float
    expectation_final: float
    ks_distance: float
    quantum_p_plus: float
    quantum_expectation: float

    @property
    def final_field(self) -> SpinorField:
        return self.integration.final_field


def run_measurement(
    config: ScenarioConfig,
    device: Direction,
    x0s: np.ndarray | None = None,
    weights: np.ndarray | None = None,
    coeffs: SpinCoefficients | None = None,
    record_every: int = 0,
) -> MeasurementResult:
    """Run one device on an ensemble of hidden initial positions.

    x0s defaults to an inverse-CDF sample of size config.n_samples from the
    initial density using config.seed. The run stops once the interaction
    window has closed and the lobe-separation criterion holds, or fails at
    t_max. Unresolved or escaped trajectories above the configured fraction
    abort the run.
    """
    config.validate()
    field = config.initial_field(device, coeffs)
    if x0s is None:
        x0s = sample_positions(field, config.n_samples, config.seed)
    x0s = np.asarray(x0s, dtype=float)

    min_sep = config.min_separation_widths * config.width

    def stop_when(f):
        return f.t >= config.t_off and lobes_separated(
            f, config.overlap_epsilon, min_sep
        )

    result = integrate_trajectories(
        x0s,
        field,
        config.profile(device),
        t_final=config.t_max,
        dt=config.dt,
        record_every=record_every,
        stop_when=stop_when,
    )
    final = result.final_field
    if not stop_when(final):
        raise UnresolvedRunError(len(x0s), int(result.escaped.sum()), len(x0s))

    outcomes = classify_all(
        result.trajectories, final, config.overlap_epsilon
    )
    unresolved = int(np.sum(outcomes == 0)) - int(result.escaped.sum())
    escaped = int(result.escaped.sum())
    bad = unresolved + escaped
    if bad > config.unresolved_max_fraction * len(x0s):
        raise UnresolvedRunError(unresolved, escaped, len(x0s))

    resolved = outcomes != 0
    kept = [t for t, ok in zip(result.trajectories, resolved) if ok]
    vals = outcomes[resolved].astype(float)
    n = vals.size
    if weights is not None:
        w = np.asarray(weights, dtype=float)[resolved]
        w = w / w.sum()
        p_plus = float(np.sum(w * (vals == 1.0)))
        p_stderr = 0.0
    else:
        p_plus = float(np.mean(vals == 1.0))
        p_stderr = math.sqrt(max(p_plus * (1.0 - p_plus), 0.0) / n)
    p_minus = 1.0 - p_plus
    e_a, e_a_err = expectation_description_A(
        kept, None if weights is None else np.asarray(weights)[resolved]
    )
    e_b = expectation_description_B(final)
    finals = np.array([t.x_final for t in kept])
    ks = check_equivariance(finals, final) if n >= 2 else float("nan")

    qp, _ = born_probability(config.device_coefficients(device) if coeffs is None else coeffs)
    return MeasurementResult(
        device=device,
        coeffs=coeffs if coeffs is not None else config.device_coefficients(device),
        integration=result,
        outcomes=outcomes,
        t_final=final.t,
        x_split=split_point(final),
        unresolved=unresolved,
        escaped=escaped,
        p_plus=p_plus,
        p_minus=p_minus,
        p_stderr=p_stderr,
        expectation_initial=e_a,
        expectation_initial_err=e_a_err,
        expectation_final=e_b,
        ks_distance=ks,
        quantum_p_plus=qp,
        quantum_expectation=2.0 * qp - 1.0,
    )
