"""Hidden-variable ensemble calculus for the single-particle experiments.

A HiddenSample is a setting-independent draw of initial positions (the
sampler has no access to any device direction, so locality holds by
construction). Each device setting partitions the same sample into the
sub-ensembles that exit +1 and -1. Intersecting two partitions yields the
purely mathematical 2x2 intersection measure: well defined, but not an
observable, and every serialized output labels it so. Sequential
measurements, by contrast, are observable and order-dependent; the two
tables must not be identified with each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidPairingError, UnresolvedRunError
from .quantum import Direction, SpinCoefficients, rotate_basis
from .sampling import gaussian_quantile, sample_positions, stratified_positions
from .scenario import MeasurementResult, ScenarioConfig, run_measurement


@dataclass
class HiddenSample:
    """Initial positions drawn from rho(., t0); independent of all settings."""

    seed: int | None  # None marks a stratified (deterministic) grid
    x0s: np.ndarray
    t0: float
    weights: np.ndarray | None = None  # quadrature weights, None = 1/n each

    @property
    def n(self) -> int:
        return self.x0s.size

    def effective_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.n, 1.0 / self.n)
        return self.weights / self.weights.sum()


def sample_hidden(initial_field, n: int, seed: int) -> HiddenSample:
    """Draw n hidden positions from the initial density (inverse CDF, seeded)."""
    return HiddenSample(seed=seed, x0s=sample_positions(initial_field, n, seed), t0=initial_field.t)


def stratified_hidden(initial_field, n: int) -> HiddenSample:
    """Deterministic quantile-midpoint sample (brute-force oracle grids)."""
    x0s, w = stratified_positions(initial_field, n)
    return HiddenSample(seed=None, x0s=x0s, t0=initial_field.t, weights=w)


@dataclass
class EnsemblePartition:
    """Outcome partition of one HiddenSample under one device setting."""

    sample: HiddenSample
    setting: Direction
    outcomes: np.ndarray  # int per sample: +1, -1 (0 never survives run checks)
    measurement: MeasurementResult

    @property
    def e_plus(self) -> np.ndarray:
        return np.flatnonzero(self.outcomes == 1)

    @property
    def e_minus(self) -> np.ndarray:
        return np.flatnonzero(self.outcomes == -1)


def build_partition(
    sample: HiddenSample, setting: Direction, config: ScenarioConfig
) -> EnsemblePartition:
    """Run the full pilot-wave pipeline on every hidden position."""
    result = run_measurement(
        config, setting, x0s=sample.x0s, weights=sample.weights
    )
    return EnsemblePartition(sample, setting, result.outcomes, result)


def single_probability(
    partition: EnsemblePartition, alpha: int
) -> tuple[float, float]:
    """P1(alpha, a) on the sample, with its binomial standard error."""
    if alpha not in (1, -1):
        raise InvalidInputError("alpha must be +1 or -1")
    w = partition.sample.effective_weights()
    p = float(np.sum(w[partition.outcomes == alpha]))
    if partition.sample.seed is None:
        return p, 0.0
    n = partition.sample.n
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / n)


@dataclass
class HiddenJointTable:
    """Intersection measure over a shared sample. Mathematical, NOT observable."""

    setting_a: Direction
    setting_b: Direction
    table: np.ndarray  # [i, j] with i, j in {0: +1, 1: -1}
    n: int
    observable: bool = False

    def entry(self, alpha: int, beta: int) -> float:
        return float(self.table[0 if alpha == 1 else 1, 0 if beta == 1 else 1])

    def row_marginals(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def col_marginals(self) -> np.ndarray:
        return self.table.sum(axis=0)


def intersect_partitions(
    pa: EnsemblePartition, pb: EnsemblePartition
) -> HiddenJointTable:
    """Measure of the intersections E_{alpha,a} and E_{beta,b} on one sample.

    Only meaningful on the identical sample; pairing partitions built from
    different samples raises. The result carries observable = False: no
    single experiment realizes these numbers.
    """
    sa, sb = pa.sample, pb.sample
    if sa is not sb and (
        sa.seed is None
        or sb.seed is None
        or sa.seed != sb.seed
        or sa.n != sb.n
        or not np.array_equal(sa.x0s, sb.x0s)
    ):
        raise InvalidPairingError("partitions were built from different samples")
    w = sa.effective_weights()
    table = np.zeros((2, 2))
    for i, alpha in enumerate((1, -1)):
        for j, beta in enumerate((1, -1)):
            table[i, j] = np.sum(w[(pa.outcomes == alpha) & (pb.outcomes == beta)])
    return HiddenJointTable(pa.setting, pb.setting, table, sa.n)


def frechet_bounds_ok(joint: HiddenJointTable, atol: float = 1e-12) -> bool:
    """max(0, P(a)+P(b)-1) <= entry <= min(P(a), P(b)) for every cell."""
    rows = joint.row_marginals()
    cols = joint.col_marginals()
    for i in range(2):
        for j in range(2):
            lo = max(0.0, rows[i] + cols[j] - 1.0)
            hi = min(rows[i], cols[j])
            if not (lo - atol <= joint.table[i, j] <= hi + atol):
                return False
    return True


@dataclass
class SequentialResult:
    """Statistics of two successive measurements on the same ensemble."""

    first: Direction
    second: Direction
    table: np.ndarray  # [i, j] = P(alpha_prime_i on first, alpha_j on second)
    n: int
    unresolved: int
    first_stage: MeasurementResult
    second_stage: dict  # per-branch MeasurementResult keyed by +1/-1

    def entry(self, alpha_prime: int, alpha: int) -> float:
        return float(self.table[0 if alpha_prime == 1 else 1, 0 if alpha == 1 else 1])

    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(self.table * (1.0 - self.table), 0.0, None) / self.n)


def _branch_repreparation(
    config: ScenarioConfig,
    first_result: MeasurementResult,
    branch: int,
    members: np.ndarray,
) -> np.ndarray:
    """Map branch members' final positions into a fresh packet, by quantile.

    The members' final positions are distributed like the branch lobe density
    (equivariance), so the quantile map sends them to packet-density
    distributed positions, deterministically per hidden variable.
    """
    final = first_result.final_field
    comp = final.psi_up if branch == 1 else final.psi_down
    rho_b = np.abs(comp) ** 2
    cdf = np.cumsum(rho_b) * final.grid.dx
    cdf /= cdf[-1]
    x_f = np.array([first_result.integration.trajectories[i].x_final for i in members])
    u = np.interp(x_f, final.grid.x, cdf)
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    x0 = gaussian_quantile(config.center, config.width, u)
    return np.clip(x0, config.center - 6.0 * config.width, config.center + 6.0 * config.width)


def sequential_measurement(
    sample: HiddenSample,
    first: Direction,
    second: Direction,
    config: ScenarioConfig,
) -> SequentialResult:
    """Two successive devices: run `first`, re-prepare each branch, run `second`.

    The second stage uses effective re-preparation: the branch spin eigenstate
    of the first device (rotated into the second device basis) on a recentred
    Gaussian lobe of the original width, with each trajectory's position
    carried over through the branch quantile map.
    """
    stage1 = run_measurement(config, first, x0s=sample.x0s, weights=sample.weights)
    w = sample.effective_weights()
    table = np.zeros((2, 2))
    second_stage = {}
    unresolved = stage1.unresolved + stage1.escaped
    for i, branch in enumerate((1, -1)):
        members = np.flatnonzero(stage1.outcomes == branch)
        if members.size == 0:
            continue
        x0_2 = _branch_repreparation(config, stage1, branch, members)
        coeffs2 = rotate_basis(SpinCoefficients.eigenstate(branch), first, second)
        stage2 = run_measurement(config, second, x0s=x0_2, coeffs=coeffs2)
        second_stage[branch] = stage2
        unresolved += stage2.unresolved + stage2.escaped
        wm = w[members]
        for j, alpha in enumerate((1, -1)):
            table[i, j] = np.sum(wm[stage2.outcomes == alpha])
    if unresolved > config.unresolved_max_fraction * sample.n:
        raise UnresolvedRunError(unresolved, 0, sample.n)
    return SequentialResult(
        first=first,
        second=second,
        table=table,
        n=sample.n,
        unresolved=unresolved,
        first_stage=stage1,
        second_stage=second_stage,
    )


@dataclass
class HiddenVsSequentialReport:
    """Element-wise comparison of the hidden intersection and sequential tables."""

    hidden: HiddenJointTable
    sequential: SequentialResult
    difference: np.ndarray  # hidden - sequential
    z_scores: np.ndarray
    max_abs_z: float


def compare_hidden_vs_sequential(
    joint: HiddenJointTable, seq: SequentialResult
) -> HiddenVsSequentialReport:
    """Exhibit that the intersection measure is not the sequential probability.

    Requires the same settings pair, with the hidden table's first index on
    the device measured first. The z-scores use the combined Monte Carlo
    errors of both tables.
    """
    table_h = joint.table
    if (joint.setting_a, joint.setting_b) == (seq.first, seq.second):
        pass
    elif (joint.setting_a, joint.setting_b) == (seq.second, seq.first):
        table_h = joint.table.T
    else:
        raise InvalidInputError("tables refer to different settings pairs")
    diff = table_h - seq.table
    err_h = np.sqrt(np.clip(table_h * (1.0 - table_h), 0.0, None) / joint.n)
    err_s = seq.stderr()
    sigma = np.sqrt(err_h**2 + err_s**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, diff / sigma, np.where(diff == 0.0, 0.0, np.inf))
    return HiddenVsSequentialReport(
        hidden=joint,
        sequential=seq,
        difference=diff,
        z_scores=z,
        max_abs_z=float(np.nanmax(np.abs(z))),
    )
