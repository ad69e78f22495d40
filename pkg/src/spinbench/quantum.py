"""Spin-1/2 geometry and closed-form reference values.

Everything here is exact (no simulation): device-setting directions,
two-component spin amplitudes, Born weights, basis rotations, the singlet
correlation, and the chain rule for two successive spin measurements. The
simulation modules are checked against these values.

Units: hbar = M = 1 throughout the package.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

_NORM_TOL = 1e-12


class OutcomeValue(enum.IntEnum):
    """Result of one spin measurement; UNRESOLVED is an error channel."""

    PLUS = 1
    MINUS = -1
    UNRESOLVED = 0


@dataclass(frozen=True)
class Direction:
    """A device setting: unit vector given by polar/azimuthal angles (radians).

    Angles are normalized on construction: theta to [0, pi], phi to [0, 2*pi).
    All scenarios shipped with the workbench are coplanar (phi = 0), but the
    singlet correlation needs full 3-vectors.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        theta = float(self.theta) % (2.0 * math.pi)
        phi = float(self.phi)
        if theta > math.pi:
            theta = 2.0 * math.pi - theta
            phi += math.pi
        phi %= 2.0 * math.pi
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array(
            [st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)]
        )

    @staticmethod
    def from_degrees(theta_deg: float, phi_deg: float = 0.0) -> "Direction":
        return Direction(math.radians(theta_deg), math.radians(phi_deg))


@dataclass(frozen=True)
class SpinCoefficients:
    """Amplitudes (c_up, c_down) of a spin state in some measurement basis."""

    c_up: complex
    c_down: complex

    def __post_init__(self):
        object.__setattr__(self, "c_up", complex(self.c_up))
        object.__setattr__(self, "c_down", complex(self.c_down))
        n = abs(self.c_up) ** 2 + abs(self.c_down) ** 2
        if abs(n - 1.0) > 1e-10:
            raise InvalidInputError(f"spin coefficients not normalized: |c|^2 = {n!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.c_up, self.c_down], dtype=complex)

    @staticmethod
    def up() -> "SpinCoefficients":
        return SpinCoefficients(1.0, 0.0)

    @staticmethod
    def down() -> "SpinCoefficients":
        return SpinCoefficients(0.0, 1.0)

    @staticmethod
    def eigenstate(outcome: int) -> "SpinCoefficients":
        """Eigenstate of the basis axis with eigenvalue +1 or -1."""
        if outcome == 1:
            return SpinCoefficients.up()
        if outcome == -1:
            return SpinCoefficients.down()
        raise InvalidInputError(f"outcome must be +1 or -1, got {outcome}")


def _basis_matrix(n: Direction) -> np.ndarray:
    """Columns are the |+n>, |-n> eigenspinors expressed in the z basis.

    The |-n> phase is chosen so rotating spin-up along z into a coplanar
    basis at angle theta gives the conventional (cos(theta/2), sin(theta/2)).
    """
    c, s = math.cos(n.theta / 2.0), math.sin(n.theta / 2.0)
    ph = cmath.exp(1j * n.phi)
    return np.array([[c, s / ph], [s * ph, -c]], dtype=complex)


def born_probability(state: SpinCoefficients) -> tuple[float, float]:
    """Born weights (P(+), P(-)) = (|c_up|^2, |c_down|^2)."""
    p_plus = abs(state.c_up) ** 2
    p_minus = abs(state.c_down) ** 2
    if abs(p_plus + p_minus - 1.0) > _NORM_TOL:
        raise InvalidInputError("state not normalized")
    return p_plus, p_minus


def rotation_matrix(frm: Direction, to: Direction) -> np.ndarray:
    """Spin-1/2 change-of-basis matrix from the `frm` basis to the `to` basis.

    The global phase is fixed by making the (up, up) element real nonnegative
    (falling back to the (down, up) element when the former vanishes), so the
    returned amplitudes are reproducible.
    """
    r = _basis_matrix(to).conj().T @ _basis_matrix(frm)
    anchor = r[0, 0] if abs(r[0, 0]) > 1e-12 else r[1, 0]
    r = r * (anchor.conjugate() / abs(anchor))
    return r


def rotate_basis(
    state: SpinCoefficients, frm: Direction, to: Direction
) -> SpinCoefficients:
    """Re-express a spin state given in basis `frm` in basis `to`."""
    c = rotation_matrix(frm, to) @ state.as_array()
    return SpinCoefficients(c[0], c[1])


def singlet_correlation(a: Direction, b: Direction) -> float:
    """Quantum correlation E(a, b) = -a.b for the two-particle singlet state."""
    return float(-np.dot(a.unit_vector(), b.unit_vector()))


def transition_probability(
    first: Direction, alpha_prime: int, second: Direction, alpha: int
) -> float:
    """|<alpha, second | alpha_prime, first>|^2 = (1 + alpha*alpha_prime*a.b)/2."""
    dot = float(np.dot(first.unit_vector(), second.unit_vector()))
    return 0.5 * (1.0 + alpha * alpha_prime * dot)


def sequential_chain_probability(
    first: Direction,
    second: Direction,
    state: SpinCoefficients,
    alpha_prime: int,
    alpha: int,
) -> float:
    """Chain-rule probability of getting alpha_prime on device `first` and then
    alpha on device `second`, for `state` expressed in the `first` basis."""
    p = born_probability(state)
    p_first = p[0] if alpha_prime == 1 else p[1]
    return p_first * transition_probability(first, alpha_prime, second, alpha)
