"""Machine-readable report and CSV emission.

Reports are deterministic under a fixed seed and config: no timestamps, no
environment-dependent content. Wall-clock runtime is only embedded when
explicitly requested (it would break byte-identical reproducibility).
Floats are serialized with Python's shortest round-trip representation
(up to 17 significant digits).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .bell import Behavior
from .ensembles import HiddenJointTable, SequentialResult
from .errors import InvalidInputError
from .quantum import Direction
from .scenario import MeasurementResult, ScenarioConfig
from .solver import SpinorField, density_current


def dump_json(obj: dict, path: str | Path | None = None) -> str:
    text = json.dumps(obj, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def base_report(command: str, config: ScenarioConfig | None, seed: int | None) -> dict:
    report: dict = {"command": command, "artifact_version": __version__}
    if config is not None:
        report["config"] = config.to_dict()
    if seed is not None:
        report["seed"] = seed
    return report


def direction_degrees(d: Direction) -> dict:
    return {"theta_deg": math.degrees(d.theta), "phi_deg": math.degrees(d.phi)}


def table_2x2(table: np.ndarray) -> dict:
    """2x2 outcome table keyed by outcome pair, row outcome first."""
    return {
        "++": float(table[0, 0]),
        "+-": float(table[0, 1]),
        "-+": float(table[1, 0]),
        "--": float(table[1, 1]),
    }


def measurement_section(m: MeasurementResult) -> dict:
    return {
        "device": direction_degrees(m.device),
        "t_final": m.t_final,
        "x_split": m.x_split,
        "n_samples": int(m.outcomes.size),
        "unresolved": m.unresolved,
        "escaped": m.escaped,
        "p_plus": m.p_plus,
        "p_minus": m.p_minus,
        "p_stderr": m.p_stderr,
        "expectation_initial_coordinates": m.expectation_initial,
        "expectation_initial_stderr": m.expectation_initial_err,
        "expectation_final_density": m.expectation_final,
        "ks_equivariance": m.ks_distance,
        "quantum_p_plus": m.quantum_p_plus,
        "quantum_expectation": m.quantum_expectation,
    }


def hidden_joint_section(joint: HiddenJointTable) -> dict:
    return {
        "observable": False,
        "settings": {
            "a": direction_degrees(joint.setting_a),
            "b": direction_degrees(joint.setting_b),
        },
        "n": joint.n,
        "table": table_2x2(joint.table),
        "row_marginals": [float(v) for v in joint.row_marginals()],
        "col_marginals": [float(v) for v in joint.col_marginals()],
    }


def sequential_section(seq: SequentialResult) -> dict:
    return {
        "observable": True,
        "first": direction_degrees(seq.first),
        "second": direction_degrees(seq.second),
        "n": seq.n,
        "unresolved": seq.unresolved,
        "table": table_2x2(seq.table),
        "mc_errors": table_2x2(seq.stderr()),
    }


def behavior_to_json(behavior: Behavior) -> dict:
    """Wire format: 4 angle settings (degrees) and four row-major 2x2 tables."""
    out: dict = {
        "tables": {
            "ab": [float(v) for v in behavior.tables[0, 0].reshape(-1)],
            "ab'": [float(v) for v in behavior.tables[0, 1].reshape(-1)],
            "a'b": [float(v) for v in behavior.tables[1, 0].reshape(-1)],
            "a'b'": [float(v) for v in behavior.tables[1, 1].reshape(-1)],
        },
        "meta": behavior.meta,
    }
    if behavior.settings is not None:
        out["settings"] = [math.degrees(d.theta) for d in behavior.settings]
    return out


def behavior_from_json(data: dict) -> Behavior:
    try:
        tables = np.array(
            [
                [data["tables"]["ab"], data["tables"]["ab'"]],
                [data["tables"]["a'b"], data["tables"]["a'b'"]],
            ],
            dtype=float,
        ).reshape(2, 2, 2, 2)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed behavior JSON: {exc}") from exc
    settings = None
    if "settings" in data:
        angles = data["settings"]
        if len(angles) != 4:
            raise InvalidInputError("behavior settings must list 4 angles")
        settings = tuple(Direction.from_degrees(a) for a in angles)
    return Behavior(tables, settings=settings, meta=data.get("meta", {}))


def write_snapshot_csv(field: SpinorField, path: str | Path) -> None:
    """Columns: x, Re/Im of both components, rho, J, v."""
    dc = density_current(field)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["x", "re_psi_up", "im_psi_up", "re_psi_down", "im_psi_down", "rho", "j", "v"]
        )
        for i, x in enumerate(field.grid.x):
            writer.writerow(
                [
                    repr(float(x)),
                    repr(float(field.psi_up[i].real)),
                    repr(float(field.psi_up[i].imag)),
                    repr(float(field.psi_down[i].real)),
                    repr(float(field.psi_down[i].imag)),
                    repr(float(dc.rho[i])),
                    repr(float(dc.j[i])),
                    repr(float(dc.v[i])),
                ]
            )


def write_trajectories_csv(result: MeasurementResult, path: str | Path) -> None:
    """Long format: sample_id, t, x over the recorded cadence."""
    times = result.integration.record_times
    positions = result.integration.record_positions
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "t", "x"])
        for j in range(positions.shape[1]):
            for i, t in enumerate(times):
                writer.writerow([j, repr(float(t)), repr(float(positions[i, j]))])


def write_trajectory_summary(result: MeasurementResult, path: str | Path) -> None:
    rows = [
        {
            "sample_id": i,
            "x0": traj.x0,
            "x_final": traj.x_final,
            "outcome": int(traj.outcome),
            "final_sigma": None if math.isnan(traj.final_sigma) else traj.final_sigma,
            "escaped": traj.escaped,
        }
        for i, traj in enumerate(result.integration.trajectories)
    ]
    dump_json({"trajectories": rows}, path)


def write_partition_samples_csv(
    x0s: np.ndarray, outcomes_a: np.ndarray, outcomes_b: np.ndarray, path: str | Path
) -> None:
    """Per-sample data reproducing the three partition panels."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "x0", "outcome_a", "outcome_b"])
        for i in range(x0s.size):
            writer.writerow(
                [i, repr(float(x0s[i])), int(outcomes_a[i]), int(outcomes_b[i])]
            )
