import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boussitopo.coeffs import SIGMA_DEFAULT
from boussitopo.dn import Regime, fit_slope
from boussitopo.fields import Grid, fourier_grad
from boussitopo.models import Bathymetry, Frame, FrameError, WaveState, energy
from boussitopo.sim import (
    BlowUpError,
    ConsistencyReport,
    NonFiniteError,
    Trajectory,
    build_approximate_solution,
    consistency_residual,
    integrate,
    reference_step,
    simulate,
    simulate_reference,
    step_rk4,
    to_frame_of,
    trajectory_distance,
    trajectory_residual,
)

from conftest import band_limited


def travelling_wave(grid, t):
    x = grid.x[0]
    return WaveState(np.cos(x - t), np.cos(x - t)[None], Frame.SURFACE)


def test_rk4_trivial_cases():
    y = np.array([1.0, 2.0])
    assert step_rk4(lambda v: -v, y, 0.0) is y
    assert np.array_equal(step_rk4(lambda v: -v, np.zeros(2), 0.1), np.zeros(2))
    with pytest.raises(ValueError):
        step_rk4(lambda v: -v, y, -0.1)
    with pytest.raises(NonFiniteError):
        step_rk4(lambda v: v * np.inf, y, 0.1)


def test_rk4_scalar_order():
    errs, dts = [], [0.2, 0.1, 0.05, 0.025]
    for dt in dts:
        y = np.array([1.0])
        for _ in range(int(round(1 / dt))):
            y = step_rk4(lambda v: -v, y, dt)
        errs.append(abs(y[0] - np.exp(-1)))
    assert fit_slope(dts, errs) == pytest.approx(4.0, abs=0.1)


def test_rk4_order_on_linear_wave_system():
    g = Grid(1, 32)
    bath = Bathymetry.flat(g)
    errs, dts = [], [0.2, 0.1, 0.05]
    for dt in dts:
        traj = simulate("b1", travelling_wave(g, 0.0), bath, 0.0, 2.0, dt, snapshot_times=[2.0])
        errs.append(g.norm(traj.states[-1].eta - travelling_wave(g, 2.0).eta))
    assert fit_slope(dts, errs) == pytest.approx(4.0, abs=0.1)


def test_linear_run_conserves_energy():
    g = Grid(1, 32)
    rng = np.random.default_rng(0)
    s0 = WaveState(band_limited(g, rng, 5), band_limited(g, rng, 5)[None], Frame.SYMMETRIZED)
    bath = Bathymetry.flat(g)
    traj = simulate("t1", s0, bath, 0.0, 10.0, 0.005, SIGMA_DEFAULT, snapshot_times=[10.0])
    e0 = energy("t1", s0, bath, 0.0, SIGMA_DEFAULT)
    e1 = energy("t1", traj.states[-1], bath, 0.0, SIGMA_DEFAULT)
    assert abs(e1 - e0) <= 1e-8 * e0


def test_linearized_energy_drift_refines_with_dt():
    g = Grid(1, 16)
    bath = Bathymetry(g, 0.3 * np.cos(g.x[0]), Regime.SMALL)
    rng = np.random.default_rng(1)
    s0 = WaveState(1e-6 * band_limited(g, rng, 5), 1e-6 * band_limited(g, rng, 5)[None], Frame.SYMMETRIZED)
    e0 = energy("t1", s0, bath, 0.1, SIGMA_DEFAULT)
    drift = []
    for dt in (0.2, 0.1):
        traj = simulate("t1", s0, bath, 0.1, 4.0, dt, SIGMA_DEFAULT, snapshot_times=[4.0])
        drift.append(abs(energy("t1", traj.states[-1], bath, 0.1, SIGMA_DEFAULT) - e0) / e0)
    assert drift[1] <= drift[0] / 16


def test_symmetric_long_time_run_stays_bounded():
    g = Grid(1, 64)
    x = g.x[0]
    eps = 0.05
    bath = Bathymetry(g, 0.5 * np.cos(x), Regime.SMALL)
    s0 = WaveState(0.5 * np.cos(x), 0.5 * np.cos(x)[None], Frame.SYMMETRIZED)
    traj = simulate("t1", s0, bath, eps, 1 / eps, 0.05, SIGMA_DEFAULT, snapshot_times=np.linspace(0, 20, 11))
    norms = [np.sqrt(g.norm(s.eta) ** 2 + g.norm(s.u) ** 2) for s in traj.states]
    assert max(norms) <= 2 * norms[0]


def test_zero_data_gives_zero_trajectory():
    g = Grid(1, 16)
    s0 = WaveState(g.zeros(), g.zeros_vector(), Frame.SYMMETRIZED)
    traj = simulate("t1", s0, Bathymetry.flat(g), 0.1, 1.0, 0.1)
    assert all(np.all(s.eta == 0) and np.all(s.u == 0) for s in traj.states)
    assert all(row[1:] == (0.0, 0.0, 0.0) for row in traj.diagnostics(Bathymetry.flat(g), SIGMA_DEFAULT))


def test_simulate_rejects_wrong_frame():
    g = Grid(1, 16)
    with pytest.raises(FrameError):
        simulate("t1", travelling_wave(g, 0), Bathymetry.flat(g), 0.1, 1.0, 0.1)


def test_blow_up_guard():
    g = Grid(1, 8)
    s0 = WaveState(np.ones(g.shape), g.zeros_vector(), Frame.SURFACE)
    with pytest.raises(BlowUpError):
        integrate(lambda s: s * 5.0, s0, 10.0, 0.1, g, "b1", 0.1)


def test_integrate_lands_on_marks_and_triplets():
    g = Grid(1, 8)
    s0 = WaveState(np.ones(g.shape), g.zeros_vector(), Frame.SURFACE)
    traj = integrate(lambda s: s * 0.0, s0, 1.0, 0.3, g, "b1", 0.1, snapshot_times=[0.5, 1.0], pair_delta=0.001)
    assert np.allclose(traj.times, [0.499, 0.5, 0.501, 0.999, 1.0, 1.001])


# -- reference system -------------------------------------------------------------

def test_reference_rest_state():
    g = Grid(1, 16)
    rest = WaveState(g.zeros(), g.zeros(), Frame.POTENTIAL)
    out = reference_step(rest, Bathymetry(g, 0.2 * np.cos(g.x[0])), 0.1, 0.1, nz=16)
    assert np.abs(out.eta).max() < 1e-14 and np.abs(out.u).max() < 1e-14


@pytest.mark.parametrize("k", [1, 2])
def test_reference_linear_dispersion(k):
    g = Grid(1, 32)
    eps, a = 0.1, 1e-6
    x = g.x[0]
    omega = np.sqrt(np.sqrt(eps) * k * np.tanh(np.sqrt(eps) * k) / eps)
    s0 = WaveState(a * np.cos(k * x), g.zeros(), Frame.POTENTIAL)
    traj = simulate_reference(s0, Bathymetry.flat(g), eps, 1.0, 0.01, nz=64, snapshot_times=[1.0])
    expected = a * np.cos(omega) * np.cos(k * x)
    assert np.abs(traj.states[-1].eta - expected).max() <= 1e-3 * a


def test_reference_requires_potential_frame():
    g = Grid(1, 16)
    with pytest.raises(FrameError):
        reference_step(travelling_wave(g, 0), Bathymetry.flat(g), 0.1, 0.1, nz=16)


def test_reference_agrees_with_b1_to_second_order():
    g = Grid(1, 16)
    x = g.x[0]
    psi0, eta0 = 0.5 * np.sin(x), 0.5 * np.cos(x)
    bath = Bathymetry(g, 0.2 * np.cos(x), Regime.SMALL)
    errs, eps_list = [], [0.1, 0.05]
    for eps in eps_list:
        ref = simulate_reference(WaveState(eta0, psi0, Frame.POTENTIAL), bath, eps, 0.5, 0.025, nz=32,
                                 snapshot_times=[0.5])
        app = simulate("b1", WaveState(eta0, fourier_grad(g, psi0), Frame.SURFACE), bath, eps, 0.5, 0.025,
                       snapshot_times=[0.5])
        errs.append(trajectory_distance(ref, app)[0])
    assert fit_slope(eps_list, errs) == pytest.approx(2.0, abs=0.4)


# -- snapshots ------------------------------------------------------------------------

@given(seed=st.integers(0, 2**31), nsnap=st.integers(1, 4),
       frame=st.sampled_from([Frame.SURFACE, Frame.THETA, Frame.POTENTIAL]), d=st.sampled_from([1, 2]))
@settings(max_examples=25, deadline=None)
def test_snapshot_round_trip(seed, nsnap, frame, d):
    g = Grid(d, 8, 3.0)
    rng = np.random.default_rng(seed)
    traj = Trajectory(g, "s0" if frame is Frame.POTENTIAL else "s1", 0.07)
    for i in range(nsnap):
        u = rng.normal(size=g.shape if frame is Frame.POTENTIAL else (d,) + g.shape)
        traj.append(0.5 * i + rng.uniform(0, 0.1), WaveState(rng.normal(size=g.shape), u, frame))
    back = Trajectory.from_bytes(traj.to_bytes())
    assert back.model == traj.model and back.epsilon == traj.epsilon and back.frame is frame
    assert back.times == traj.times
    for a, b in zip(traj.states, back.states):
        assert np.array_equal(a.eta, b.eta) and np.array_equal(a.u, b.u)


def test_snapshot_format_errors():
    g = Grid(1, 8)
    traj = Trajectory(g, "b1", 0.1)
    traj.append(0.0, travelling_wave(g, 0))
    data = traj.to_bytes()
    with pytest.raises(ValueError):
        Trajectory.from_bytes(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        Trajectory.from_bytes(data[:-3])


def test_trajectory_invariants():
    g = Grid(1, 8)
    traj = Trajectory(g, "b1", 0.1)
    traj.append(0.0, travelling_wave(g, 0))
    with pytest.raises(ValueError):
        traj.append(0.0, travelling_wave(g, 0))
    with pytest.raises(FrameError):
        traj.append(1.0, WaveState(g.zeros(), g.zeros_vector(), Frame.THETA))


def test_diagnostics_csv_deterministic():
    g = Grid(1, 16)
    bath = Bathymetry.flat(g)
    run = [simulate("b1", travelling_wave(g, 0), bath, 0.1, 0.5, 0.05).diagnostics_csv(bath) for _ in range(2)]
    assert run[0] == run[1]
    assert run[0].startswith("t,eta_l2,u_l2,energy\n") and "\r" not in run[0]


# -- consistency and comparison ---------------------------------------------------------

def test_consistency_report_needs_three_values():
    assert np.isnan(ConsistencyReport("b1", [0.1, 0.05], [1e-2, 2.5e-3]).slope)
    rep = ConsistencyReport("b1", [0.1, 0.05, 0.025], [1e-2, 2.5e-3, 6.25e-4])
    assert rep.slope == pytest.approx(2.0)
    assert rep.to_csv().splitlines()[-1] == "2.000000"


def test_model_solution_is_self_consistent():
    g = Grid(1, 16)
    x = g.x[0]
    eps = 0.1
    bath = Bathymetry(g, 0.2 * np.cos(x), Regime.SMALL)
    s0 = WaveState(0.3 * np.cos(x), 0.3 * np.sin(x)[None], Frame.SURFACE)
    traj = simulate("b1", s0, bath, eps, 0.5, 0.01, snapshot_times=[0.25, 0.5], pair_delta=eps**2 / 10)
    assert trajectory_residual(traj, "b1", bath) < 1e-6


def test_residual_needs_triplets_and_frames():
    g = Grid(1, 16)
    bath = Bathymetry.flat(g)
    traj = simulate("b1", travelling_wave(g, 0), bath, 0.1, 0.5, 0.05)
    with pytest.raises(ValueError, match="triplet"):
        trajectory_residual(traj, "b1", bath)
    with pytest.raises(FrameError):
        trajectory_residual(traj, "t1", bath)


def test_reference_family_consistency_small():
    g = Grid(1, 32)
    x = g.x[0]
    bath = Bathymetry(g, 0.5 * np.cos(x), Regime.SMALL)
    fam = []
    for eps in (0.1, 0.05, 0.025):
        ref = simulate_reference(WaveState(0.5 * np.cos(x), 0.5 * np.sin(x), Frame.POTENTIAL), bath, eps, 0.3,
                                 0.02, nz=32, snapshot_times=[0.3], pair_delta=eps**2 / 10)
        fam.append((eps, to_frame_of(ref, "t1", bath, SIGMA_DEFAULT), bath))
    assert consistency_residual(fam, "t1", SIGMA_DEFAULT).slope >= 1.7


def test_approximate_solution_linear_limit():
    g = Grid(1, 32)
    bath = Bathymetry(g, 0.3 * np.cos(g.x[0]), Regime.SMALL)
    s0 = travelling_wave(g, 0.0)
    app = build_approximate_solution(s0.u, s0.eta, bath, 0.0, 1.0, 0.01, snapshot_times=[1.0])
    assert app.frame is Frame.SURFACE
    assert np.abs(app.states[-1].eta - travelling_wave(g, 1.0).eta).max() < 1e-9


def test_trajectory_distance_needs_common_times():
    g = Grid(1, 8)
    a, b = Trajectory(g, "b1", 0.1), Trajectory(g, "b1", 0.1)
    a.append(0.0, travelling_wave(g, 0))
    b.append(1.0, travelling_wave(g, 0))
    with pytest.raises(ValueError):
        trajectory_distance(a, b)
