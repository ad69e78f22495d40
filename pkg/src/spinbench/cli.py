"""Scenario runner: every experiment in the workbench as a subcommand.

Angles on the command line are degrees; all internal math is radians.
Reports are JSON on stdout (and --out), deterministic under a fixed seed;
--emit-plots renders matplotlib figures and CSV data alongside.

Exit codes: 0 success, 2 invalid config/input, 3 unresolved fraction
exceeded, 4 internal invariant violation.
"""

from __future__ import annotations

import functools
import math
import json
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .bell import (
    ALL_STRATEGIES,
    IntegrationSpec,
    behavior_from_model,
    bell_toy_model,
    chsh_all,
    coincidence,
    correlation,
    deterministic_bound,
    fine_feasibility,
    singlet_behavior,
    strategy_correlations,
)
from .ensembles import (
    build_partition,
    frechet_bounds_ok,
    intersect_partitions,
    sample_hidden,
    sequential_measurement,
)
from .errors import (
    GridTooSmallError,
    InternalConsistencyError,
    InvalidInputError,
    UnresolvedRunError,
)
from .quantum import Direction, sequential_chain_probability, singlet_correlation
from .reports import (
    base_report,
    behavior_from_json,
    behavior_to_json,
    dump_json,
    hidden_joint_section,
    measurement_section,
    sequential_section,
    table_2x2,
    write_partition_samples_csv,
    write_snapshot_csv,
    write_trajectories_csv,
    write_trajectory_summary,
)
from .scenario import ScenarioConfig, run_measurement


def _threads_cap() -> int:
    raw = os.environ.get("WORKBENCH_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInputError(f"WORKBENCH_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise InvalidInputError("WORKBENCH_THREADS must be >= 1")
    return n


def handle_errors(func):
    """Map workbench errors to the documented exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except InvalidInputError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except UnresolvedRunError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
        except (InternalConsistencyError, GridTooSmallError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(4)

    return wrapper


def scenario_options(func):
    func = click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="TOML scenario config")(func)
    func = click.option("--seed", type=int, default=None, help="override the ensemble seed")(func)
    func = click.option("--samples", type=int, default=None, help="override the ensemble size")(func)
    func = click.option("--out", type=click.Path(), default=None, help="write the JSON report here")(func)
    func = click.option("--emit-plots", "plots_dir", type=click.Path(), default=None, help="render figures and CSV data into this directory")(func)
    func = click.option("--timing", is_flag=True, help="embed wall-clock runtime (breaks byte-identical reports)")(func)
    return func


def _load_config(config_path, seed, samples, **overrides) -> ScenarioConfig:
    if config_path:
        cfg = ScenarioConfig.from_toml(config_path)
    else:
        cfg = ScenarioConfig()
    data = cfg.to_dict()
    if seed is not None:
        data["seed"] = seed
    if samples is not None:
        data["n_samples"] = samples
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ScenarioConfig.from_dict(data)
    cfg.validate()
    return cfg


def _emit(report: dict, out, timing_start, timing: bool) -> None:
    if timing:
        report["runtime_seconds"] = time.perf_counter() - timing_start
    text = dump_json(report, out)
    click.echo(text, nl=False)


@click.group()
@click.version_option(__version__)
@handle_errors
def main():
    """Pilot-wave Stern-Gerlach workbench and Bell/LHV laboratory."""
    _threads_cap()


@main.group()
def sg():
    """Single-particle Stern-Gerlach experiments."""


@sg.command("run")
@click.option("--theta", type=float, default=60.0, help="preparation axis angle to the device, degrees")
@click.option("--phi", type=float, default=0.0, help="preparation azimuth, degrees")
@scenario_options
@handle_errors
def sg_run(theta, phi, config_path, seed, samples, out, plots_dir, timing):
    """Run one Stern-Gerlach measurement and report both statistical readings."""
    t0 = time.perf_counter()
    cfg = _load_config(
        config_path, seed, samples,
        spin_theta=math.radians(theta), spin_phi=math.radians(phi),
    )
    device = Direction(0.0)
    record_every = 50 if plots_dir else 0
    result = run_measurement(cfg, device, record_every=record_every)
    report = base_report("sg run", cfg, cfg.seed)
    report["results"] = measurement_section(result)
    report["results"]["ab_equivalence_gap"] = abs(
        result.expectation_initial - result.expectation_final
    )
    if plots_dir:
        from .plots import plot_sg_run

        plot_sg_run(result, plots_dir)
        write_snapshot_csv(result.final_field, Path(plots_dir) / "final_snapshot.csv")
        write_trajectories_csv(result, Path(plots_dir) / "trajectories.csv")
        write_trajectory_summary(result, Path(plots_dir) / "trajectory_summary.json")
    _emit(report, out, t0, timing)


@sg.command("partitions")
@click.option("--theta-a", type=float, default=0.0, help="setting a, degrees")
@click.option("--theta-b", type=float, default=90.0, help="setting b, degrees")
@scenario_options
@handle_errors
def sg_partitions(theta_a, theta_b, config_path, seed, samples, out, plots_dir, timing):
    """Partition one shared hidden sample under two settings and intersect."""
    t0 = time.perf_counter()
    cfg = _load_config(config_path, seed, samples)
    da = Direction.from_degrees(theta_a)
    db = Direction.from_degrees(theta_b)
    initial = cfg.initial_field(Direction(0.0))
    sample = sample_hidden(initial, cfg.n_samples, cfg.seed)
    pa = build_partition(sample, da, cfg)
    pb = build_partition(sample, db, cfg)
    joint = intersect_partitions(pa, pb)
    report = base_report("sg partitions", cfg, cfg.seed)
    report["results"] = {
        "setting_a": measurement_section(pa.measurement),
        "setting_b": measurement_section(pb.measurement),
        "hidden_joint": hidden_joint_section(joint),
        "frechet_bounds_hold": frechet_bounds_ok(joint),
    }
    csv_path = None
    if plots_dir:
        csv_path = Path(plots_dir) / "partition_samples.csv"
    elif out:
        csv_path = Path(out).with_suffix(".samples.csv")
    if csv_path is not None:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        write_partition_samples_csv(sample.x0s, pa.outcomes, pb.outcomes, csv_path)
        report["results"]["samples_csv"] = str(csv_path)
    if plots_dir:
        from .plots import plot_partitions

        plot_partitions(sample.x0s, pa.outcomes, pb.outcomes, plots_dir)
    _emit(report, out, t0, timing)


@sg.command("sequential")
@click.option("--first", "first_deg", type=float, default=45.0, help="first device angle, degrees")
@click.option("--second", "second_deg", type=float, default=0.0, help="second device angle, degrees")
@click.option("--both-orders", is_flag=True, help="also run with the devices swapped")
@scenario_options
@handle_errors
def sg_sequential(first_deg, second_deg, both_orders, config_path, seed, samples, out, plots_dir, timing):
    """Two successive measurements; order matters for noncommuting settings."""
    t0 = time.perf_counter()
    cfg = _load_config(config_path, seed, samples)
    initial = cfg.initial_field(Direction(0.0))
    sample = sample_hidden(initial, cfg.n_samples, cfg.seed)

    def reference(first: Direction, second: Direction) -> np.ndarray:
        state = cfg.device_coefficients(first)
        return np.array(
            [
                [sequential_chain_probability(first, second, state, ap, al) for al in (1, -1)]
                for ap in (1, -1)
            ]
        )

    def run_order(first: Direction, second: Direction, tag: str) -> dict:
        seq = sequential_measurement(sample, first, second, cfg)
        ref = reference(first, second)
        section = sequential_section(seq)
        section["quantum_reference"] = table_2x2(ref)
        section["max_abs_error_vs_reference"] = float(np.abs(seq.table - ref).max())
        if plots_dir:
            from .plots import plot_sequential

            plot_sequential(seq, ref, plots_dir, suffix=tag)
        return section

    da = Direction.from_degrees(first_deg)
    db = Direction.from_degrees(second_deg)
    report = base_report("sg sequential", cfg, cfg.seed)
    results = {"order_first_second": run_order(da, db, "fwd")}
    if both_orders:
        results["order_second_first"] = run_order(db, da, "rev")
        p_fwd = results["order_first_second"]["table"]["++"]
        p_rev = results["order_second_first"]["table"]["++"]
        results["order_dependence_delta_pp"] = p_fwd - p_rev
    report["results"] = results
    _emit(report, out, t0, timing)


@main.group()
def bell():
    """Two-particle hidden-variable laboratory."""


def _angles_to_settings(angles) -> tuple[Direction, Direction, Direction, Direction]:
    if len(angles) != 4:
        raise InvalidInputError("need exactly 4 angles: a a' b b'")
    return tuple(Direction.from_degrees(v) for v in angles)


@bell.command("chsh")
@click.option("--model", type=click.Choice(["singlet", "toy"]), default="singlet")
@click.option("--angles", nargs=4, type=float, default=(0.0, 90.0, 45.0, 135.0), help="a a' b b' in degrees")
@click.option("--samples", type=int, default=100_000)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), default=None)
@click.option("--emit-plots", "plots_dir", type=click.Path(), default=None)
@click.option("--timing", is_flag=True)
@handle_errors
def bell_chsh(model, angles, samples, seed, out, plots_dir, timing):
    """Four correlations and the CHSH statistic for a named model."""
    t0 = time.perf_counter()
    settings = _angles_to_settings(angles)
    a, ap, b, bp = settings
    if model == "singlet":
        corr = np.array(
            [[singlet_correlation(x, y) for y in (b, bp)] for x in (a, ap)]
        )
        meta = {"model": "singlet", "analytic": True}
    else:
        behavior = behavior_from_model(
            bell_toy_model(), settings, IntegrationSpec(samples, seed)
        )
        corr = behavior.correlations()
        meta = {"model": "bell-toy-sphere", "n_samples": samples}
    values = chsh_all(corr)
    s_canonical = corr[0, 0] + corr[0, 1] + corr[1, 0] - corr[1, 1]
    report = base_report("bell chsh", None, seed if model == "toy" else None)
    report["results"] = {
        "meta": meta,
        "angles_deg": list(angles),
        "correlations": {
            "ab": float(corr[0, 0]),
            "ab'": float(corr[0, 1]),
            "a'b": float(corr[1, 0]),
            "a'b'": float(corr[1, 1]),
        },
        "chsh_canonical": float(s_canonical),
        "chsh_all_variants": [float(v) for v in values],
        "chsh_max_abs": float(np.abs(values).max()),
        "local_bound": 2.0,
    }
    if plots_dir:
        from .plots import plot_chsh

        plot_chsh(corr, float(np.abs(values).max()), plots_dir)
    _emit(report, out, t0, timing)


@bell.command("bound")
@click.option("--out", type=click.Path(), default=None)
@click.option("--timing", is_flag=True)
@handle_errors
def bell_bound(out, timing):
    """Exhaustive deterministic-strategy table and the |S| <= 2 bound."""
    t0 = time.perf_counter()
    rows = []
    for strat in ALL_STRATEGIES:
        values = chsh_all(strategy_correlations(strat))
        rows.append(
            {"strategy": list(strat.as_tuple()), "max_abs_chsh": float(np.abs(values).max())}
        )
    report = base_report("bell bound", None, None)
    report["results"] = {"strategies": rows, "bound": deterministic_bound()}
    _emit(report, out, t0, timing)


@bell.command("toy")
@click.option("--samples", type=int, default=100_000)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), default=None)
@click.option("--emit-plots", "plots_dir", type=click.Path(), default=None)
@click.option("--timing", is_flag=True)
@handle_errors
def bell_toy(samples, seed, out, plots_dir, timing):
    """Sphere-model correlation curve E(theta) against -1 + 2*theta/pi."""
    t0 = time.perf_counter()
    model = bell_toy_model()
    thetas = np.radians([0.0, 45.0, 90.0, 135.0, 180.0])
    rows, est, err = [], [], []
    for i, th in enumerate(thetas):
        table = coincidence(
            model, Direction(0.0), Direction(th), IntegrationSpec(samples, seed + i)
        )
        e = correlation(table)
        mc_err = 2.0 / math.sqrt(samples)
        rows.append(
            {
                "theta_deg": math.degrees(th),
                "correlation": e,
                "analytic": -1.0 + 2.0 * th / math.pi,
                "mc_error_bound": mc_err,
            }
        )
        est.append(e)
        err.append(mc_err)
    report = base_report("bell toy", None, seed)
    report["results"] = {"n_samples": samples, "curve": rows}
    if plots_dir:
        from .plots import plot_toy_curve

        plot_toy_curve(thetas, np.array(est), np.array(err), plots_dir)
    _emit(report, out, t0, timing)


@bell.command("fine")
@click.option("--behavior", "behavior_path", type=click.Path(exists=True), default=None, help="Behavior JSON file")
@click.option("--singlet", "use_singlet", is_flag=True, help="use the analytic singlet behavior")
@click.option("--angles", nargs=4, type=float, default=(0.0, 90.0, 45.0, 135.0))
@click.option("--out", type=click.Path(), default=None)
@click.option("--timing", is_flag=True)
@handle_errors
def bell_fine(behavior_path, use_singlet, angles, out, timing):
    """Joint-distribution feasibility: witness or CHSH infeasibility certificate."""
    t0 = time.perf_counter()
    if use_singlet:
        behavior = singlet_behavior(*_angles_to_settings(angles))
    elif behavior_path:
        try:
            data = json.loads(Path(behavior_path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"malformed behavior file: {exc}")
        behavior = behavior_from_json(data)
    else:
        raise InvalidInputError("provide --behavior PATH or --singlet")
    result = fine_feasibility(behavior)
    report = base_report("bell fine", None, None)
    section: dict = {
        "behavior": behavior_to_json(behavior),
        "feasible": result.feasible,
    }
    if result.feasible:
        section["witness_weights"] = [float(v) for v in result.witness.weights]
    else:
        section["certificate"] = result.certificate
    report["results"] = section
    _emit(report, out, t0, timing)


if __name__ == "__main__":
    main()
