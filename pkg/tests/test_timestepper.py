import numpy as np
import pytest

from fracwave import (
    AUTO,
    BlowUpError,
    CheckpointError,
    Coefficients,
    Integrator,
    Outcome,
    ParameterError,
    RealField,
    SimulationState,
    SolverConfig,
    auto_dt,
    checkpoint_read,
    checkpoint_write,
    derivative,
    detect_breaking,
    dispersion_speed,
    ifrk4_step,
    integrate,
    make_params,
    rk4_step,
)
from fracwave.spectral import coeffs_of
from conftest import TWO_PI, make_grid, smooth_field


def advection_params():
    return make_params(
        "linearized", 1.0, Coefficients(c_adv=1.0, c_nl=0.0, c_disp=0.0, c_evo=0.0)
    )


class TestSolverConfig:
    def test_validation(self):
        with pytest.raises(ParameterError):
            SolverConfig(t_end=-1.0)
        with pytest.raises(ParameterError):
            SolverConfig(t_end=1.0, dt=-0.1)
        with pytest.raises(ParameterError):
            SolverConfig(t_end=1.0, cfl=1.5)
        with pytest.raises(ParameterError):
            SolverConfig(t_end=1.0, on_breaking="explode")
        with pytest.raises(ParameterError):
            SolverConfig(t_end=1.0, tail_fraction_threshold=2.0)
        cfg = SolverConfig(t_end=1.0, integrator="ifrk4")
        assert cfg.integrator is Integrator.IFRK4


class TestRK4Step:
    def test_zero_rhs(self):
        g = make_grid(16)
        u = RealField(g, np.sin(g.x))
        state = SimulationState(t=0.5, u=u)
        out = rk4_step(state, lambda v: RealField.zeros(g), 0.25)
        assert out.t == 0.75
        assert out.step_count == 1
        assert np.array_equal(out.u.values, u.values)

    def test_linear_advection_one_period(self):
        g = make_grid(32)
        u0 = np.sin(g.x)
        state = SimulationState(t=0.0, u=RealField(g, u0))
        rhs = lambda v: RealField(g, -derivative(v).values)
        dt = TWO_PI / 1000
        for _ in range(1000):
            state = rk4_step(state, rhs, dt)
        assert np.abs(state.u.values - u0).max() < 1e-8

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blowup_carries_stage_and_time(self):
        g = make_grid(16)
        state = SimulationState(t=1.25, u=RealField(g, np.ones(16)))

        def exploding(v):
            return RealField(g, v.values * 1e308)  # second stage overflows

        with pytest.raises(BlowUpError) as err:
            rk4_step(state, exploding, 1.0)
        assert err.value.t == 1.25
        assert err.value.stage is not None

    def test_bad_dt(self):
        g = make_grid(16)
        state = SimulationState(t=0.0, u=RealField.zeros(g))
        with pytest.raises(ParameterError):
            rk4_step(state, lambda v: v, 0.0)


class TestIFRK4Step:
    def test_requires_fkdv(self):
        g = make_grid(16)
        state = SimulationState(t=0.0, u=RealField.zeros(g))
        with pytest.raises(ParameterError):
            ifrk4_step(state, make_params("fch", 1.0), 0.1)

    def test_zero_field_stays_zero(self):
        g = make_grid(32)
        state = SimulationState(t=0.0, u=RealField.zeros(g))
        out = ifrk4_step(state, make_params("fkdv", 1.0), 0.1)
        assert np.all(out.u.values == 0.0)

    def test_exact_on_linear_flow(self):
        # zero nonlinearity: the integrating factor alone is the solution
        g = make_grid(64)
        p = make_params("fkdv", 1.0, Coefficients(c_nl=0.0, c_disp=-0.5))
        k = 3
        state = SimulationState(t=0.0, u=RealField(g, np.sin(k * g.x)))
        dt = 0.5  # huge step; exactness does not depend on dt
        for _ in range(4):
            state = ifrk4_step(state, p, dt)
        c = dispersion_speed(float(k), p)
        expected = np.sin(k * (g.x - c * state.t))
        assert np.abs(state.u.values - expected).max() < 1e-12

    def test_small_mode_phase_speed(self):
        g = make_grid(64)
        p = make_params("fkdv", 1.0)
        eps = 1e-8
        cfg = SolverConfig(t_end=1.0, integrator=Integrator.IFRK4, dt=1.0 / 256)
        res = integrate(RealField(g, eps * np.sin(g.x)), p, cfg)
        coeff = coeffs_of(res.state.u.values)[1]
        # u = eps sin(x - c t) has coefficient (-i eps/2) e^{-ict}
        phase = np.angle(coeff / (-0.5j * eps))
        measured_c = -phase / res.state.t
        assert measured_c == pytest.approx(0.5, abs=1e-9)


class TestAutoDt:
    def test_rest_state_uses_dispersion_sup(self):
        g = make_grid(64)
        p = make_params("fch", 1.0)
        dt = auto_dt(RealField.zeros(g), p, g, cfl=0.5)
        assert dt == pytest.approx(0.5 * g.spacing)  # sup_k c(k) = 1

    def test_doubling_n_halves_dt(self):
        p = make_params("fch", 1.0)
        g1, g2 = make_grid(64), make_grid(128)
        dt1 = auto_dt(RealField.zeros(g1), p, g1, cfl=0.5)
        dt2 = auto_dt(RealField.zeros(g2), p, g2, cfl=0.5)
        assert dt2 == pytest.approx(dt1 / 2)

    def test_large_amplitude_dominates(self):
        g = make_grid(64)
        p = make_params("fch", 1.0)
        u = RealField(g, 10.0 * np.sin(g.x))
        assert auto_dt(u, p, g, cfl=0.5) == pytest.approx(0.5 * g.spacing / 10.0)

    def test_ifrk4_excludes_dispersion(self):
        g = make_grid(64)
        p = make_params("fkdv", 1.0)
        u = RealField(g, 0.1 * np.sin(g.x))
        # RK4 would see the |k|^(2nu+1) phase; IFRK4 handles it exactly
        dt_rk4 = auto_dt(u, p, g, cfl=0.5, integrator=Integrator.RK4)
        dt_if = auto_dt(u, p, g, cfl=0.5, integrator=Integrator.IFRK4)
        assert dt_if == pytest.approx(0.5 * g.spacing)
        assert dt_rk4 < dt_if / 100

    def test_all_rest_fallback(self):
        g = make_grid(64)
        p = make_params("linearized", 1.0, Coefficients(c_adv=0.0, c_nl=0.0))
        dt = auto_dt(RealField.zeros(g), p, g, cfl=0.25)
        assert dt == pytest.approx(0.25 * g.spacing)


def steep_resolved_tail_field(grid):
    """Steep slope and a populated spectral tail (top octave of the band)."""
    hi = grid.n_points // 3 // 2 + 3
    return RealField(grid, 120.0 * np.sin(grid.x) + 4.0 * np.sin(hi * grid.x))


class TestBreakingDetector:
    def test_smooth_field_none(self):
        g = make_grid(128)
        state = SimulationState(t=0.0, u=RealField(g, 0.5 * np.sin(g.x)))
        assert detect_breaking(state, SolverConfig(t_end=1.0)) is None

    def test_steep_without_tail_none(self):
        # resolution guard: a steep single mode has no spectral tail
        g = make_grid(128)
        state = SimulationState(t=0.0, u=RealField(g, 120.0 * np.sin(g.x)))
        assert detect_breaking(state, SolverConfig(t_end=1.0)) is None

    def test_steep_with_tail_reports(self):
        g = make_grid(128)
        state = SimulationState(t=0.7, u=steep_resolved_tail_field(g))
        report = detect_breaking(state, SolverConfig(t_end=1.0))
        assert report is not None
        assert report.t == 0.7
        assert report.min_slope <= -100.0
        assert 0.0 <= report.location < g.length
        assert report.tail_fraction > 1e-4

    def test_breaking_time_fit(self):
        # history following min u_x = -1/(T-t) extrapolates to T
        g = make_grid(128)
        t_star = 2.0
        ts = np.linspace(1.5, 1.95, 12)
        history = [(float(t), float(-1.0 / (t_star - t))) for t in ts]
        state = SimulationState(
            t=1.95, u=steep_resolved_tail_field(g), min_slope_history=history
        )
        report = detect_breaking(state, SolverConfig(t_end=3.0, breaking_slope_threshold=20.0))
        assert report is not None
        assert report.estimated_breaking_time == pytest.approx(t_star, abs=0.05)


class TestIntegrate:
    def test_t_end_zero_one_snapshot(self):
        g = make_grid(32)
        u0 = RealField(g, np.sin(g.x))
        seen = []
        res = integrate(u0, make_params("fch", 1.0), SolverConfig(t_end=0.0),
                        sink=lambda t, u: seen.append(t))
        assert res.outcome is Outcome.COMPLETED
        assert res.state.t == 0.0
        assert seen == [0.0]

    def test_constant_equilibrium(self):
        g = make_grid(32)
        u0 = RealField(g, np.full(32, 0.8))
        res = integrate(u0, make_params("fbbm", 1.0), SolverConfig(t_end=2.0, dt=0.01))
        assert res.outcome is Outcome.COMPLETED
        assert np.abs(res.state.u.values - 0.8).max() < 1e-12

    def test_constant_equilibrium_many_steps(self):
        g = make_grid(8)
        u0 = RealField(g, np.full(8, -1.3))
        res = integrate(u0, make_params("fch", 1.0), SolverConfig(t_end=10.0, dt=1e-3))
        assert res.state.step_count == 10_000
        assert np.abs(res.state.u.values + 1.3).max() < 1e-12

    def test_snapshot_cadence(self):
        g = make_grid(32)
        u0 = RealField(g, 0.01 * np.sin(g.x))
        times = []
        cfg = SolverConfig(t_end=1.0, dt=0.1, snapshot_every=0.2)
        integrate(u0, make_params("fch", 1.0), cfg, sink=lambda t, u: times.append(t))
        assert times == pytest.approx([0.0, 0.2, 0.4, 0.6, 0.8, 1.0])

    def test_ifrk4_kind_guard(self):
        g = make_grid(32)
        cfg = SolverConfig(t_end=1.0, integrator=Integrator.IFRK4)
        with pytest.raises(ParameterError):
            integrate(RealField.zeros(g), make_params("fch", 1.0), cfg)

    def test_breaking_halt(self):
        g = make_grid(256)
        u0 = RealField(g, 2.0 * np.sin(g.x))
        cfg = SolverConfig(t_end=5.0, dt=AUTO, cfl=0.5, dealias=False)
        res = integrate(u0, make_params("fch", 1.0), cfg)
        assert res.outcome is Outcome.BREAKING
        assert res.breaking is not None
        assert np.isfinite(res.state.u.values).all()
        assert res.state.t < 5.0

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_breaking_warn_continues_to_blowup_or_end(self):
        g = make_grid(64)
        u0 = RealField(g, np.sin(g.x))
        # wildly unstable dt so the advection run must blow up; warn mode
        # lets it run into the blow-up instead of halting on the detector
        cfg = SolverConfig(
            t_end=1000.0, dt=10.0, dealias=False, on_breaking="warn"
        )
        res = integrate(u0, advection_params(), cfg)
        assert res.outcome is Outcome.BLOWUP
        assert np.isfinite(res.state.u.values).all()  # last good state
        assert res.blowup_time is not None

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_sink_never_sees_nonfinite(self):
        g = make_grid(64)
        u0 = RealField(g, np.sin(g.x))
        cfg = SolverConfig(
            t_end=1000.0, dt=10.0, dealias=False, on_breaking="warn",
            snapshot_every=10.0,
        )
        fields = []
        res = integrate(u0, advection_params(), cfg, sink=lambda t, u: fields.append(u))
        assert res.outcome is Outcome.BLOWUP
        assert all(np.isfinite(f.values).all() for f in fields)

    def test_determinism(self):
        g = make_grid(64)
        u0 = RealField(g, 0.3 * np.sin(g.x) + 0.1 * np.cos(2 * g.x))
        cfg = SolverConfig(t_end=1.0, dt=AUTO)
        a = integrate(u0, make_params("fch", 1.0), cfg)
        b = integrate(u0, make_params("fch", 1.0), cfg)
        assert np.array_equal(a.state.u.values, b.state.u.values)
        assert a.state.t == b.state.t

    def test_slope_history_monotone_in_t(self):
        g = make_grid(32)
        u0 = RealField(g, 0.5 * np.sin(g.x))
        res = integrate(u0, make_params("fch", 1.0), SolverConfig(t_end=1.0, dt=0.01))
        ts = [t for t, _ in res.state.min_slope_history]
        assert all(a < b for a, b in zip(ts, ts[1:]))


class TestCheckpoint:
    def test_roundtrip_bit_exact(self, tmp_path, rng):
        g = make_grid(64)
        u = smooth_field(g, rng)
        state = SimulationState(
            t=0.7315, u=u, step_count=421,
            min_slope_history=[(0.0, -1.0), (0.5, -2.5), (0.7315, -3.25)],
        )
        path = tmp_path / "state.fwck"
        checkpoint_write(state, path)
        back = checkpoint_read(path)
        assert back.t == state.t
        assert back.step_count == state.step_count
        assert np.array_equal(back.u.values, state.u.values)
        assert back.min_slope_history == state.min_slope_history
        assert back.u.grid == g

    def test_truncated(self, tmp_path, rng):
        g = make_grid(32)
        state = SimulationState(t=0.0, u=smooth_field(g, rng))
        path = tmp_path / "state.fwck"
        checkpoint_write(state, path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(CheckpointError):
            checkpoint_read(path)

    def test_corrupted_crc(self, tmp_path, rng):
        g = make_grid(32)
        state = SimulationState(t=0.0, u=smooth_field(g, rng))
        path = tmp_path / "state.fwck"
        checkpoint_write(state, path)
        blob = bytearray(path.read_bytes())
        blob[60] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="CRC"):
            checkpoint_read(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "state.fwck"
        path.write_bytes(b"NOPE" + bytes(60))
        with pytest.raises(CheckpointError):
            checkpoint_read(path)

    def test_version_mismatch(self, tmp_path, rng):
        import struct
        import zlib

        g = make_grid(32)
        state = SimulationState(t=0.0, u=smooth_field(g, rng))
        path = tmp_path / "state.fwck"
        checkpoint_write(state, path)
        blob = bytearray(path.read_bytes())[:-4]
        blob[4:8] = struct.pack("<I", 99)  # bump format version
        blob += struct.pack("<I", zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="version"):
            checkpoint_read(path)


class TestResume:
    def test_split_equals_straight(self, tmp_path):
        g = make_grid(64)
        u0 = RealField(g, 0.4 * np.sin(g.x))
        p = make_params("fch", 1.0)
        dt = 1.0 / 128

        straight = integrate(u0, p, SolverConfig(t_end=1.0, dt=dt))

        first = integrate(u0, p, SolverConfig(t_end=0.5, dt=dt))
        path = tmp_path / "mid.fwck"
        checkpoint_write(first.state, path)
        resumed = integrate(
            u0, p, SolverConfig(t_end=1.0, dt=dt), start=checkpoint_read(path)
        )

        assert resumed.state.t == straight.state.t
        assert resumed.state.step_count == straight.state.step_count
        assert np.array_equal(resumed.state.u.values, straight.state.u.values)
        assert resumed.state.min_slope_history == straight.state.min_slope_history
