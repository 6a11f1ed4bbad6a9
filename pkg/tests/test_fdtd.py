import math

import numpy as np
import pytest

import radargan.fdtd as fdtd
from radargan.errors import DivergenceError, GeometryError, ValidationError
from radargan.fdtd import (ClassLabel, FieldState, ScenarioParams, SimConfig,
                           SimGrid, SourcePulse, analytic_fresnel,
                           apply_boundary, build_material_grid, field_energy,
                           inject_source, run_simulation, run_simulation_1d,
                           step_fields, transceiver_cell)

from conftest import make_scenario

ETA0 = math.sqrt(fdtd.MU0 / fdtd.EPS0)


def vacuum_grid(nx, ny, dx=2e-3, courant=1 / math.sqrt(2)):
    return SimGrid(dx=dx, nx=nx, ny=ny, eps_r=np.ones((nx, ny)),
                   courant=courant, dt=courant * dx / fdtd.C0)


# ---------------------------------------------------------------------------
# Analytic Fresnel oracle (closed form)
# ---------------------------------------------------------------------------

def test_fresnel_matched_media_is_zero():
    assert analytic_fresnel(1.0, 1.0) == 0.0
    assert analytic_fresnel(7.3, 7.3) == 0.0


@pytest.mark.parametrize("eps2,expected", [
    (1.5, -0.101021), (3.0, -0.267949), (40.0, -0.726946), (60.0, -0.771323)])
def test_fresnel_closed_form_values(eps2, expected):
    got = analytic_fresnel(1.0, eps2)
    assert got == (1.0 - math.sqrt(eps2)) / (1.0 + math.sqrt(eps2))
    assert abs(got - expected) < 1e-5


def test_fresnel_rejects_sub_unity_permittivity():
    with pytest.raises(ValidationError):
        analytic_fresnel(0.5, 2.0)


# ---------------------------------------------------------------------------
# Scene construction
# ---------------------------------------------------------------------------

def test_no_object_shirt_flush_against_tissue():
    grid = build_material_grid(make_scenario(), dx=0.5e-3)
    j_mid = grid.ny // 2
    col_eps = grid.eps_r[:, j_mid]
    shirt_cols = np.flatnonzero(col_eps == 1.5)
    tissue_cols = np.flatnonzero(col_eps == 40.0)
    assert tissue_cols[0] == shirt_cols[-1] + 1


def test_uniform_override_gives_homogeneous_grid():
    params = ScenarioParams(ClassLabel.NO_OBJECT, 2.0, 0.5, 2.6,
                            permittivities={"jacket": 1.0, "shirt": 1.0,
                                            "air_gap": 1.0, "tissue": 1.0})
    grid = build_material_grid(params, dx=1e-3)
    assert np.all(grid.eps_r == 1.0)


def test_large_object_vertical_extent():
    params = make_scenario(ClassLabel.LARGE_OBJECT, center=10.0)
    dx = 0.5e-3
    grid = build_material_grid(params, dx=dx)
    rows = np.flatnonzero((grid.eps_r == 60.0).any(axis=0))
    # 5 cm height centered at 10 cm -> [7.5, 12.5] cm
    assert rows[0] == round(0.075 / dx)
    assert rows[-1] == round(0.125 / dx) - 1


def test_object_slab_sits_between_shirt_and_tissue():
    params = make_scenario(ClassLabel.SMALL_OBJECT, center=10.0)
    grid = build_material_grid(params, dx=0.5e-3)
    mid = grid.ny // 2
    col_eps = grid.eps_r[:, mid]
    shirt_end = np.flatnonzero(col_eps == 1.5)[-1]
    obj_cols = np.flatnonzero(col_eps == 60.0)
    tissue_start = np.flatnonzero(col_eps == 40.0)[0]
    assert obj_cols[0] == shirt_end + 1
    assert tissue_start == obj_cols[-1] + 1


def test_stack_overflow_is_geometry_error():
    with pytest.raises(GeometryError):
        build_material_grid(make_scenario(), dx=1e-3, standoff_cm=40.0)


def test_no_object_with_object_fields_rejected():
    params = ScenarioParams(ClassLabel.NO_OBJECT, 2.0, 0.5, 2.6,
                            object_thickness=1.0, object_height=5.0,
                            object_center_y=10.0)
    with pytest.raises(ValidationError):
        params.validate()


def test_strict_validation_pins_table_values():
    with pytest.raises(ValidationError):
        make_scenario(jacket=3.0).validate()      # outside [1.5, 2.5]
    with pytest.raises(ValidationError):
        make_scenario(ClassLabel.LARGE_OBJECT, center=20.0).validate()
    make_scenario(ClassLabel.LARGE_OBJECT, center=10.0).validate()


# ---------------------------------------------------------------------------
# Field stepping
# ---------------------------------------------------------------------------

def test_zero_fields_stay_zero():
    grid = vacuum_grid(40, 30)
    state = FieldState.zeros(grid)
    new = apply_boundary(step_fields(state, grid), grid, state)
    assert not np.any(new.ez) and not np.any(new.hx) and not np.any(new.hy)


def test_impulse_ring_symmetry_and_energy():
    grid = vacuum_grid(81, 81)
    state = FieldState.zeros(grid)
    state.ez[40, 40] = 1.0
    prev = state
    initial = None
    for _ in range(25):
        new = apply_boundary(step_fields(prev, grid), grid, prev, ("pec",) * 4)
        energy = field_energy(grid, prev, new)
        if initial is None:
            initial = energy
        prev = new
    assert abs(energy - initial) <= 1e-12 * initial
    ez = prev.ez
    assert np.allclose(ez, ez[::-1, :], atol=1e-15)
    assert np.allclose(ez, ez[:, ::-1], atol=1e-15)
    assert np.allclose(ez, ez.T, atol=1e-15)


def test_pec_energy_conservation_long_run():
    grid = vacuum_grid(100, 40, dx=5e-3)
    state = FieldState.zeros(grid)
    state.ez[20:80, 10:30] = np.random.default_rng(0).standard_normal((60, 20))
    prev = state
    energies = []
    for _ in range(2000):
        new = apply_boundary(step_fields(prev, grid), grid, prev, ("pec",) * 4)
        energies.append(field_energy(grid, prev, new))
        prev = new
    energies = np.asarray(energies)
    drift = np.abs(np.diff(energies[::1000])) / energies[0]
    assert drift.max() <= 1e-10


def test_1d_magic_time_step_shifts_exactly():
    n = 400
    profile = lambda u: np.exp(-((u - 100) / 8.0) ** 2)
    x = np.arange(n)
    ez0 = profile(x)
    hy0 = -profile(x[:-1] + 1.0) / ETA0   # exact discrete rightward wave
    k = 50
    _, ez, _ = run_simulation_1d(np.ones(n), 1e-3, 1.0, k, 0, None,
                                 initial=(ez0, hy0))
    assert np.abs(ez - np.roll(ez0, k)).max() < 1e-12


def test_divergence_raises_with_step_index():
    grid = vacuum_grid(20, 20)
    state = FieldState.zeros(grid)
    state.ez[5, 5] = np.nan
    with pytest.raises(DivergenceError) as err:
        step_fields(state, grid)
    assert err.value.step_index == 1


# ---------------------------------------------------------------------------
# Boundaries
# ---------------------------------------------------------------------------

def boundary_pair_residual(axis: str) -> float:
    """Launch the standard pulse from a line source and let it exit through
    the two Mur edges along ``axis``; returns residual/peak energy."""
    grid = vacuum_grid(150, 100)
    pulse = SimConfig().make_pulse()
    kinds = (("mur", "mur", "symmetric", "symmetric") if axis == "x"
             else ("symmetric", "symmetric", "mur", "mur"))
    prev = FieldState.zeros(grid)
    peak = residual = 0.0
    for n in range(520):
        new = apply_boundary(step_fields(prev, grid), grid, prev, kinds)
        value = pulse.value((n + 1) * grid.dt)
        if axis == "x":
            new.ez[grid.nx // 2, :] += value
        else:
            new.ez[:, grid.ny // 2] += value
        residual = field_energy(grid, prev, new)
        peak = max(peak, residual)
        prev = new
    return residual / peak


@pytest.mark.parametrize("axis", ["x", "y"])
def test_mur_pulse_passage_residual(axis):
    assert boundary_pair_residual(axis) <= 1e-3


def test_boundary_zero_fields_stay_zero():
    grid = vacuum_grid(30, 30)
    state = FieldState.zeros(grid)
    for kinds in (("mur",) * 4, ("pec",) * 4, ("symmetric",) * 4):
        new = apply_boundary(step_fields(state, grid), grid, state, kinds)
        assert not np.any(new.ez)


def test_pec_override_reflects_with_unit_negative_coefficient():
    # 1D run against a PEC wall: reflected pulse has the incident amplitude
    # with flipped sign.
    n = 1200
    pulse = SimConfig().make_pulse()
    trace, _, _ = run_simulation_1d(np.ones(n), 0.5e-3, 1.0, 2600, 200, pulse,
                                    probe_cell=600, boundaries=("mur", "pec"))
    dt = 0.5e-3 / fdtd.C0
    t_inc = pulse.delay + 400 * dt          # source to probe at one cell/step
    t_ref = t_inc + 2 * (n - 1 - 600) * dt
    split = int(0.5 * (t_inc / dt + t_ref / dt))
    incident = trace[:split]
    reflected = trace[split:]
    peak_in = incident[np.abs(incident).argmax()]
    peak_re = reflected[np.abs(reflected).argmax()]
    assert abs(peak_re / peak_in - (-1.0)) < 0.02


# ---------------------------------------------------------------------------
# Source
# ---------------------------------------------------------------------------

def test_source_smooth_turn_on():
    pulse = SimConfig().make_pulse()
    assert abs(pulse.value(0.0)) < 1e-6 * pulse.amplitude


def test_source_zero_at_center_delay():
    pulse = SimConfig().make_pulse()
    assert pulse.value(pulse.delay) == 0.0


def test_source_band_edges():
    cfg = SimConfig()
    pulse = cfg.make_pulse()
    t = cfg.dt * np.arange(1, 8193)
    spectrum = np.abs(np.fft.rfft(pulse.value(t)))
    freqs = np.fft.rfftfreq(8192, cfg.dt)
    above = freqs[spectrum >= spectrum.max() * 10 ** (-0.5)]
    assert abs(above[0] - 3.1e9) < 0.2e9
    assert abs(above[-1] - 5.3e9) < 0.2e9


def test_inject_source_is_additive():
    grid = vacuum_grid(20, 20)
    state = FieldState.zeros(grid)
    pulse = SourcePulse(4.2e9, 2.2e9, delay=1e-9)
    cell = (3, 4)
    inject_source(state, pulse, 0.9e-9, cell)
    first = state.ez[cell]
    inject_source(state, pulse, 0.9e-9, cell)
    assert state.ez[cell] == pytest.approx(2 * first)


# ---------------------------------------------------------------------------
# Full runs
# ---------------------------------------------------------------------------

DESK = SimConfig.desk_scale()


def test_no_object_trace_shows_tissue_echo_in_early_time():
    vacuum = ScenarioParams(ClassLabel.NO_OBJECT, 2.0, 0.5, 2.6,
                            permittivities={"jacket": 1.0, "shirt": 1.0,
                                            "air_gap": 1.0, "tissue": 1.0})
    baseline = run_simulation(vacuum, DESK).samples
    trace = run_simulation(make_scenario(), DESK).samples
    echo = trace - baseline
    pulse = DESK.make_pulse()
    echo_time = np.abs(echo).argmax() * DESK.dt_record - pulse.delay
    assert 0.0 < echo_time < 1.5e-9
    assert np.abs(echo).max() > 1e-3 * np.abs(trace).max()


def test_vacuum_override_leaves_nothing_after_gating():
    vacuum = ScenarioParams(ClassLabel.NO_OBJECT, 2.0, 0.5, 2.6,
                            permittivities={"jacket": 1.0, "shirt": 1.0,
                                            "air_gap": 1.0, "tissue": 1.0})
    trace = run_simulation(vacuum, DESK).samples
    pulse = DESK.make_pulse()
    gate = int((pulse.delay + 6 * pulse.sigma) / DESK.dt_record)
    direct = float(np.sum(trace[:gate] ** 2))
    residual = float(np.sum(trace[gate:] ** 2))
    assert residual <= 1e-3 * direct


def test_1d_oracle_reflection_matches_fresnel():
    measured = fdtd.fresnel_reflection_1d(40.0)
    expected = analytic_fresnel(1.0, 40.0)
    assert abs(measured - expected) / abs(expected) < 0.02


def test_trace_deterministic_and_seed_independent():
    a = run_simulation(make_scenario(seed=1), DESK).samples
    b = run_simulation(make_scenario(seed=99), DESK).samples
    assert np.array_equal(a, b)


def test_trace_length_fixed_across_dx():
    for dx_mm, every in ((5.0, 1), (4.0, 2)):
        cfg = SimConfig(dx_mm=dx_mm, record_len=64, record_every=every)
        trace = run_simulation(make_scenario(), cfg)
        assert trace.samples.shape == (64,)
        assert trace.dt_record == pytest.approx(cfg.dt * every)


def test_field_amplitude_stays_bounded():
    trace = run_simulation(make_scenario(ClassLabel.LARGE_OBJECT), DESK)
    assert np.abs(trace.samples).max() < 1e3 * DESK.make_pulse().amplitude


def test_functional_and_fast_paths_agree():
    # run_simulation uses in-place kernels; the public step/boundary/inject
    # chain must produce the identical trace.
    cfg = SimConfig(dx_mm=5.0, record_len=96)
    params = make_scenario()
    fast = run_simulation(params, cfg).samples

    grid = build_material_grid(params, cfg.dx, courant=cfg.courant,
                               standoff_cm=cfg.standoff_cm)
    pulse = cfg.make_pulse()
    src = transceiver_cell(grid)
    prev = FieldState.zeros(grid)
    slow = []
    for n in range(96):
        new = apply_boundary(step_fields(prev, grid), grid, prev, cfg.boundaries)
        inject_source(new, pulse, (n + 1) * grid.dt, src)
        slow.append(new.ez[src])
        prev = new
    assert np.array_equal(fast, np.asarray(slow))


def test_courant_violation_rejected():
    with pytest.raises(ValidationError):
        SimConfig(courant=0.9).validate()
