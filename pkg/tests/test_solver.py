import math

import numpy as np
import pytest

from spinbench.errors import (
    GridTooSmallError,
    InternalConsistencyError,
    InvalidInputError,
)
from spinbench.quantum import SpinCoefficients
from spinbench.solver import (
    FREE_PROFILE,
    FieldProfile,
    Grid1D,
    SpinorField,
    check_boundary,
    component_centers,
    component_overlap_mass,
    density_current,
    evolve,
    init_gaussian_packet,
    split_point,
    step,
)


class TestGrid1D:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(InvalidInputError):
            Grid1D(-10.0, 10.0, 1000)

    def test_rejects_too_small(self):
        with pytest.raises(InvalidInputError):
            Grid1D(-10.0, 10.0, 128)

    def test_rejects_empty_interval(self):
        with pytest.raises(InvalidInputError):
            Grid1D(5.0, 5.0, 512)

    def test_spacing(self, grid):
        assert grid.dx == pytest.approx(80.0 / 2048)
        assert grid.x[0] == grid.x_min
        assert grid.x[-1] == pytest.approx(grid.x_max - grid.dx)

    def test_wavenumbers_nyquist(self, grid):
        assert np.abs(grid.k).max() == pytest.approx(math.pi / grid.dx)


class TestInitGaussianPacket:
    def test_unit_norm(self, gaussian_field):
        assert gaussian_field.norm() == pytest.approx(1.0, abs=1e-14)

    def test_variance(self, grid):
        f = init_gaussian_packet(grid, 0.0, 1.5, 0.0, SpinCoefficients.up())
        rho = f.rho()
        var = np.sum(grid.x**2 * rho) * grid.dx
        assert var == pytest.approx(1.5**2, rel=1e-10)

    def test_spin_factorization(self, grid):
        c = SpinCoefficients(math.cos(0.5), math.sin(0.5))
        f = init_gaussian_packet(grid, 0.0, 1.0, 0.3, c)
        nu, nd = f.component_norms()
        assert nu == pytest.approx(abs(c.c_up) ** 2, abs=1e-12)
        assert nd == pytest.approx(abs(c.c_down) ** 2, abs=1e-12)

    def test_rejects_narrow_packet(self, grid):
        with pytest.raises(InvalidInputError):
            init_gaussian_packet(grid, 0.0, grid.dx, 0.0, SpinCoefficients.up())

    def test_rejects_offcenter_packet(self, grid):
        with pytest.raises(InvalidInputError):
            init_gaussian_packet(grid, 37.0, 1.0, 0.0, SpinCoefficients.up())


class TestFieldProfile:
    def test_window_overlap(self):
        p = FieldProfile(mu=1.0, b0=0.0, gradient=5.0, t_on=0.0, t_off=0.2)
        assert p.window_overlap(-1.0, 0.1) == pytest.approx(0.1)
        assert p.window_overlap(0.05, 0.15) == pytest.approx(0.1)
        assert p.window_overlap(0.3, 0.5) == 0.0
        assert p.window_overlap(-1.0, 1.0) == pytest.approx(0.2)

    def test_rejects_inverted_window(self):
        with pytest.raises(InvalidInputError):
            FieldProfile(mu=1.0, b0=0.0, gradient=1.0, t_on=0.5, t_off=0.2)


class TestEvolution:
    def test_free_gaussian_width_law(self, grid, gaussian_field):
        """Analytic oracle: var(t) = w^2 + t^2 / (4 w^2) for a free packet."""
        t = 2.0
        final = evolve(gaussian_field, FREE_PROFILE, t, 1e-3)[-1]
        rho = final.rho()
        var = float(np.sum(grid.x**2 * rho) * grid.dx)
        assert var == pytest.approx(1.0 + t**2 / 4.0, rel=1e-6)

    def test_norm_conservation(self, gaussian_field):
        final = evolve(gaussian_field, FREE_PROFILE, 2.0, 1e-3)[-1]
        assert abs(final.norm() - 1.0) < 1e-10

    def test_momentum_drift(self, grid):
        k = 1.5
        f = init_gaussian_packet(grid, -10.0, 1.0, k, SpinCoefficients.up())
        final = evolve(f, FREE_PROFILE, 4.0, 1e-3)[-1]
        mean = float(np.sum(grid.x * final.rho()) * grid.dx)
        assert mean == pytest.approx(-10.0 + k * 4.0, abs=1e-6)

    def test_impulse_momentum_kick(self, grid):
        """The window imparts exactly -/+ mu*gradient*duration per component."""
        c = SpinCoefficients(1 / math.sqrt(2), 1 / math.sqrt(2))
        f = init_gaussian_packet(grid, 0.0, 1.0, 0.0, c)
        profile = FieldProfile(mu=1.0, b0=0.0, gradient=5.0, t_on=0.0, t_off=0.2)
        final = evolve(f, profile, 0.2, 1e-3)[-1]
        dx = grid.dx
        for comp, sign in ((final.psi_up, -1.0), (final.psi_down, 1.0)):
            spec = np.abs(np.fft.fft(comp)) ** 2
            k_mean = np.sum(grid.k * spec) / np.sum(spec)
            assert k_mean == pytest.approx(sign * 1.0 * 5.0 * 0.2, abs=1e-9)

    def test_snapshot_cadence(self, gaussian_field):
        snaps = evolve(gaussian_field, FREE_PROFILE, 0.1, 1e-3, snapshot_every=20)
        assert len(snaps) == 6  # t=0, 0.02, 0.04, 0.06, 0.08, 0.1
        assert snaps[0].t == 0.0
        assert snaps[-1].t == pytest.approx(0.1)

    def test_final_partial_step(self, gaussian_field):
        final = evolve(gaussian_field, FREE_PROFILE, 0.0105, 1e-3)[-1]
        assert final.t == pytest.approx(0.0105, abs=1e-12)

    def test_grid_too_small_detected(self):
        small = Grid1D(-12.0, 12.0, 256)
        f = init_gaussian_packet(small, 0.0, 1.0, 2.0, SpinCoefficients.up())
        with pytest.raises(GridTooSmallError):
            evolve(f, FREE_PROFILE, 8.0, 1e-3)

    def test_rejects_negative_dt(self, gaussian_field):
        with pytest.raises(InvalidInputError):
            step(gaussian_field, FREE_PROFILE, -1e-3)


class TestDensityCurrent:
    def test_plane_wave_velocity(self, grid):
        k_idx = 40
        k = grid.k[k_idx]
        psi = np.exp(1j * k * grid.x) / math.sqrt(grid.length)
        f = SpinorField(grid, psi, np.zeros_like(psi), 0.0)
        dc = density_current(f)
        assert np.allclose(dc.v, k, atol=1e-9)

    def test_real_packet_has_zero_current(self, gaussian_field):
        dc = density_current(gaussian_field)
        assert np.abs(dc.j).max() < 1e-12

    def test_continuity_equation(self, grid):
        """d_t rho + d_x J = 0: finite-difference residual is second order in dt."""
        f = init_gaussian_packet(grid, 0.0, 1.0, 1.0, SpinCoefficients.up())
        f = evolve(f, FREE_PROFILE, 0.3, 1e-3)[-1]
        residuals = []
        for dt in (2e-3, 1e-3, 5e-4):
            before = evolve(f, FREE_PROFILE, f.t + dt, dt)[-1]
            drho = (before.rho() - f.rho()) / dt
            j_mid = 0.5 * (density_current(f).j + density_current(before).j)
            dj = np.real(np.fft.ifft(1j * grid.k * np.fft.fft(j_mid)))
            residuals.append(float(np.abs(drho + dj).max()))
        order1 = math.log2(residuals[0] / residuals[1])
        order2 = math.log2(residuals[1] / residuals[2])
        assert order1 > 1.8 and order2 > 1.8

    def test_node_fill_is_finite(self, grid):
        # Odd superposition has a genuine node at the origin
        psi = grid.x * np.exp(-(grid.x**2) / 4.0)
        psi = psi / math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
        f = SpinorField(grid, psi.astype(complex), np.zeros_like(psi, dtype=complex), 0.0)
        dc = density_current(f)
        assert np.isfinite(dc.v).all()


@pytest.fixture(scope="module")
def separated(grid):
    c = SpinCoefficients(1 / math.sqrt(2), 1 / math.sqrt(2))
    f = init_gaussian_packet(grid, 0.0, 1.0, 0.0, c)
    profile = FieldProfile(mu=1.0, b0=0.0, gradient=5.0, t_on=0.0, t_off=0.8)
    return evolve(f, profile, 4.5, 1e-3)[-1]


class TestLobeDiagnostics:

    def test_overlap_decreases(self, grid, separated):
        c = SpinCoefficients(1 / math.sqrt(2), 1 / math.sqrt(2))
        initial = init_gaussian_packet(grid, 0.0, 1.0, 0.0, c)
        # identical half-norm lobes share all of their mass: min integrates to 1/2
        assert component_overlap_mass(initial) == pytest.approx(0.5, abs=1e-10)
        assert component_overlap_mass(separated) < 1e-6

    def test_centers_drift_apart(self, separated):
        cu, cd = component_centers(separated)
        # +V on psi_up pushes it toward negative x
        assert cu < -10.0 and cd > 10.0

    def test_split_point_between_lobes(self, separated):
        xs = split_point(separated)
        cu, cd = component_centers(separated)
        assert xs is not None and min(cu, cd) < xs < max(cu, cd)

    def test_split_point_single_lobe(self, gaussian_field):
        assert split_point(gaussian_field) is None

    def test_check_boundary_passes_centered(self, gaussian_field):
        check_boundary(gaussian_field)

    def test_norm_drift_guard(self, grid, monkeypatch):
        f = init_gaussian_packet(grid, 0.0, 1.0, 0.0, SpinCoefficients.up())
        import spinbench.solver as solver_mod

        real_step = solver_mod.step

        def lossy(field, profile, dt):
            out = real_step(field, profile, dt)
            return SpinorField(out.grid, out.psi_up * (1.0 - 1e-6), out.psi_down, out.t)

        monkeypatch.setattr(solver_mod, "step", lossy)
        with pytest.raises(InternalConsistencyError):
            solver_mod.evolve(f, FREE_PROFILE, 0.1, 1e-3)
