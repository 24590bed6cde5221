"""Time integration, the reference free-surface stepper and error studies."""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coeffs import SmallCoeffs, StrongCoeffs
from .dn import Regime, RegimeParams, StudyReport, exact_dn, fit_slope
from .fields import Grid, StripGrid, dealias, dot, fourier_grad
from .models import (
    Bathymetry,
    Frame,
    FrameError,
    WaveState,
    energy,
    forcing,
    from_model_frame,
    get_model,
    masses,
    rhs,
    symmetric_default,
    to_model_frame,
)

BLOWUP_ETA = 10.0
MAGIC = b"BTJ1"
FRAME_IDS = {Frame.SURFACE: 0, Frame.THETA: 1, Frame.SYMMETRIZED: 2, Frame.POTENTIAL: 3}
MODEL_IDS = {"s0": 0, "b1": 1, "b2": 2, "s1": 3, "t1": 4, "tb": 5, "s_strong": 6}


class NonFiniteError(RuntimeError):
    pass


class BlowUpError(RuntimeError):
    def __init__(self, t: float, peak: float):
        super().__init__(f"blow-up at t={t:.6g}: max|eta|={peak:.3g} > {BLOWUP_ETA}")
        self.t = t


def step_rk4(f: Callable, y, dt: float):
    """One classical Runge-Kutta step for ``dy/dt = f(y)``.

    ``y`` may be any object supporting ``+`` and scalar ``*`` (arrays, WaveState).
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    if dt == 0:
        return y
    k1 = f(y)
    k2 = f(y + (dt / 2) * k1)
    k3 = f(y + (dt / 2) * k2)
    k4 = f(y + dt * k3)
    out = y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    finite = out.is_finite() if isinstance(out, WaveState) else np.all(np.isfinite(out))
    if not finite:
        raise NonFiniteError("non-finite state after Runge-Kutta step")
    return out


# -- trajectories --------------------------------------------------------------

@dataclass
class Trajectory:
    """Time-ordered snapshots of one run."""

    grid: Grid
    model: str
    epsilon: float
    times: list[float] = field(default_factory=list)
    states: list[WaveState] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def frame(self) -> Frame | None:
        return self.states[0].frame if self.states else None

    def append(self, t: float, state: WaveState):
        if self.times and t <= self.times[-1]:
            raise ValueError(f"snapshot time {t} not after {self.times[-1]}")
        if self.states and state.frame is not self.frame:
            raise FrameError("all snapshots of a trajectory share one frame")
        self.times.append(float(t))
        self.states.append(state)

    def __len__(self):
        return len(self.times)

    def at(self, t: float, tol: float = 1e-9) -> WaveState:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > tol:
            raise KeyError(f"no snapshot at t={t}")
        return self.states[i]

    def map(self, fn: Callable[[WaveState], WaveState], model: str | None = None) -> Trajectory:
        out = Trajectory(self.grid, model or self.model, self.epsilon, params=dict(self.params))
        for t, s in zip(self.times, self.states):
            out.append(t, fn(s))
        return out

    # binary snapshot format
    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        g = self.grid
        buf.write(MAGIC)
        buf.write(struct.pack("<iidd", g.d, g.n, g.length, self.epsilon))
        buf.write(struct.pack("<ii", MODEL_IDS[self.model], FRAME_IDS[self.frame or Frame.SURFACE]))
        for t, s in zip(self.times, self.states):
            buf.write(struct.pack("<d", t))
            buf.write(np.ascontiguousarray(s.eta, dtype="<f8").tobytes())
            buf.write(np.ascontiguousarray(s.u, dtype="<f8").tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> Trajectory:
        if data[:4] != MAGIC:
            raise ValueError("not a trajectory file (bad magic)")
        d, n, length, eps = struct.unpack_from("<iidd", data, 4)
        model_id, frame_id = struct.unpack_from("<ii", data, 28)
        model = {v: k for k, v in MODEL_IDS.items()}[model_id]
        frame = {v: k for k, v in FRAME_IDS.items()}[frame_id]
        grid = Grid(d, n, length)
        ncomp = 1 if frame is Frame.POTENTIAL else d
        npts = n**d
        rec = 8 * (1 + npts * (1 + ncomp))
        body = data[36:]
        if len(body) % rec:
            raise ValueError("truncated trajectory file")
        traj = cls(grid, model, eps)
        ushape = grid.shape if frame is Frame.POTENTIAL else (d,) + grid.shape
        for k in range(len(body) // rec):
            chunk = np.frombuffer(body, dtype="<f8", count=rec // 8, offset=k * rec)
            t = float(chunk[0])
            eta = chunk[1:1 + npts].reshape(grid.shape).copy()
            u = chunk[1 + npts:].reshape(ushape).copy()
            traj.append(t, WaveState(eta, u, frame))
        return traj

    def diagnostics(self, bath: Bathymetry | None = None, coeffs=None) -> list[tuple[float, ...]]:
        g = self.grid
        rows = []
        for t, s in zip(self.times, self.states):
            if bath is not None and self.model != "s0":
                e = energy(self.model, s, bath, self.epsilon, coeffs)
            elif s.frame is Frame.POTENTIAL:
                e = energy("s0", s, Bathymetry.flat(g), self.epsilon)
            else:
                e = 0.5 * (g.inner(s.u, s.u) + g.inner(s.eta, s.eta))
            rows.append((t, g.norm(s.eta), g.norm(s.u), e))
        return rows

    def diagnostics_csv(self, bath: Bathymetry | None = None, coeffs=None) -> str:
        lines = ["t,eta_l2,u_l2,energy"]
        for row in self.diagnostics(bath, coeffs):
            lines.append(",".join(f"{v:.12e}" for v in row))
        return "\n".join(lines) + "\n"


def integrate(
    f: Callable[[WaveState], WaveState],
    initial: WaveState,
    t_end: float,
    dt: float,
    grid: Grid,
    model: str,
    eps: float,
    snapshot_times: Sequence[float] | None = None,
    pair_delta: float | None = None,
) -> Trajectory:
    """Step ``f`` with RK4 and record snapshots.

    Steps land exactly on every snapshot time. With ``pair_delta`` each snapshot
    time ``t`` is recorded as the triplet ``t - delta, t, t + delta`` so that
    centered differences of spacing ``delta`` are available there.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if snapshot_times is None:
        nsnap = max(1, int(round(t_end / dt)))
        snapshot_times = np.linspace(0, t_end, nsnap + 1)
    marks = []
    for t in sorted(set(float(s) for s in snapshot_times)):
        if pair_delta and t - pair_delta > 0:
            marks += [t - pair_delta, t, t + pair_delta]
        elif pair_delta:
            marks += [t, t + pair_delta]
        else:
            marks.append(t)
    marks = sorted(m for m in set(marks) if m <= t_end + (pair_delta or 0) + 1e-12)
    traj = Trajectory(grid, model, eps)
    state, t = initial, 0.0
    for mark in marks:
        while mark - t > 1e-13:
            h = min(dt, mark - t)
            state = step_rk4(f, state, h)
            t = mark if mark - t <= dt else t + h
            peak = float(np.max(np.abs(state.eta)))
            if peak > BLOWUP_ETA:
                raise BlowUpError(t, peak)
        traj.append(t, state)
    return traj


def default_dt(grid: Grid, state: WaveState, bath: Bathymetry, eps: float) -> float:
    """``0.5 dx / c`` with a crude wave speed estimate."""
    c = float(np.sqrt(bath.h.max())) if bath.regime is Regime.STRONG else 1.0
    c += eps * (float(np.abs(state.u).max()) + float(np.abs(state.eta).max()))
    return 0.5 * grid.dx / c


def simulate(
    model: str,
    initial: WaveState,
    bath: Bathymetry,
    eps: float,
    t_end: float,
    dt: float | None = None,
    coeffs=None,
    snapshot_times=None,
    pair_delta: float | None = None,
) -> Trajectory:
    """Integrate one of the model systems from ``initial`` (in the model frame)."""
    spec = get_model(model)
    if initial.frame is not spec.frame:
        raise FrameError(f"model {model} runs in the {spec.frame.value} frame")
    if spec.coeff_type is not None and coeffs is None:
        coeffs = symmetric_default(spec.regime)
    dt = dt or default_dt(bath.grid, initial, bath, eps)
    traj = integrate(lambda s: rhs(model, s, bath, eps, coeffs), initial, t_end, dt,
                     bath.grid, model, eps, snapshot_times, pair_delta)
    traj.params.update(coeffs=coeffs, dt=dt)
    return traj


# -- reference free-surface system ---------------------------------------------

@dataclass(frozen=True, eq=False)
class ReferenceSystem:
    """Free-surface equations in (potential, elevation) form with the exact operator."""

    bath: Bathymetry
    params: RegimeParams
    nz: int = 48

    @property
    def strip(self) -> StripGrid:
        return StripGrid(self.bath.grid, self.nz)

    def rhs(self, state: WaveState) -> WaveState:
        if state.frame is not Frame.POTENTIAL:
            raise FrameError("the reference system works on the potential frame")
        grid = self.bath.grid
        eps = self.params.epsilon
        psi, eta = state.u, state.eta
        zpsi = exact_dn(psi, eta, self.bath.b, self.params, self.strip)
        ge = fourier_grad(grid, eta)
        w = fourier_grad(grid, psi) - eps * dealias(grid, ge * zpsi)
        deta = zpsi / eps - eps * dealias(grid, dot(ge, w))
        dpsi = (
            eps * dealias(grid, deta * zpsi)
            - 0.5 * dealias(grid, eps * dot(w, w) + zpsi**2)
            - eta
        )
        return WaveState(deta, dpsi, Frame.POTENTIAL)


def reference_step(state: WaveState, bath: Bathymetry, eps: float, dt: float, nz: int = 48,
                   h_min: float = 0.05) -> WaveState:
    """One RK4 step of the reference free-surface system."""
    system = ReferenceSystem(bath, RegimeParams(eps, bath.regime, h_min), nz)
    return step_rk4(system.rhs, state, dt)


def simulate_reference(
    initial: WaveState,
    bath: Bathymetry,
    eps: float,
    t_end: float,
    dt: float,
    nz: int = 48,
    snapshot_times=None,
    pair_delta: float | None = None,
) -> Trajectory:
    system = ReferenceSystem(bath, RegimeParams(eps, bath.regime, bath.h_min), nz)
    traj = integrate(system.rhs, initial, t_end, dt, bath.grid, "s0", eps, snapshot_times, pair_delta)
    traj.params.update(nz=nz, dt=dt)
    return traj


def potential_to_surface(traj: Trajectory) -> Trajectory:
    """Replace the potential by its gradient in every snapshot."""
    g = traj.grid
    return traj.map(lambda s: WaveState(s.eta, fourier_grad(g, s.u), Frame.SURFACE), model="s0")


def to_frame_of(traj: Trajectory, model: str, bath: Bathymetry, coeffs=None) -> Trajectory:
    """Convert a reference trajectory to the frame of ``model``."""
    if traj.frame is Frame.POTENTIAL:
        traj = potential_to_surface(traj)
    eps = traj.epsilon
    conv = traj.map(lambda s: to_model_frame(model, s, bath, eps, coeffs))
    conv.model = traj.model
    return conv


# -- consistency ---------------------------------------------------------------

@dataclass
class ConsistencyReport:
    target: str
    epsilons: list[float]
    residuals: list[float]

    @property
    def slope(self) -> float:
        if len(self.epsilons) < 3:
            return float("nan")
        return fit_slope(self.epsilons, self.residuals)

    def to_csv(self) -> str:
        lines = ["epsilon,residual"]
        for e, r in zip(self.epsilons, self.residuals):
            lines.append(f"{e:.6g},{r:.10e}")
        lines.append("slope")
        lines.append(f"{self.slope:.6f}")
        return "\n".join(lines) + "\n"


def trajectory_residual(traj: Trajectory, model: str, bath: Bathymetry, coeffs=None,
                        max_spacing: float | None = None) -> float:
    """Max over time of the L2 residual of ``traj`` in the equations of ``model``.

    Time derivatives are centered differences at every snapshot whose two
    neighbours are equally spaced by at most ``max_spacing`` (default eps^2/10).
    """
    spec = get_model(model)
    if traj.frame is not spec.frame:
        raise FrameError(f"trajectory is in the {traj.frame.value} frame, {model} needs {spec.frame.value}")
    eps = traj.epsilon
    max_spacing = max_spacing if max_spacing is not None else eps**2 / 10
    if spec.coeff_type is not None and coeffs is None:
        coeffs = symmetric_default(spec.regime)
    g = traj.grid
    mv, me = masses(model, bath, eps, coeffs)
    ts = traj.times
    worst, used = 0.0, 0
    for j in range(1, len(ts) - 1):
        h1, h2 = ts[j] - ts[j - 1], ts[j + 1] - ts[j]
        if abs(h1 - h2) > 1e-9 * max(h1, h2) or h1 > max_spacing * (1 + 1e-9):
            continue
        dstate = (traj.states[j + 1] - traj.states[j - 1]) * (1 / (h1 + h2))
        fv, fe = forcing(model, traj.states[j], bath, eps, coeffs)
        rv = mv(dstate.u) + fv
        re = me(dstate.eta) + fe
        worst = max(worst, float(np.sqrt(g.norm(rv) ** 2 + g.norm(re) ** 2)))
        used += 1
    if not used:
        raise ValueError(f"no snapshot triplet with spacing <= {max_spacing:.3g}")
    return worst


def consistency_residual(family, target: str, coeffs=None, max_spacing=None) -> ConsistencyReport:
    """Residuals of a solution family plugged into ``target``.

    ``family`` is a sequence of ``(eps, trajectory, bathymetry)`` with every
    trajectory already in the target's frame.
    """
    eps_list, res = [], []
    for eps, traj, bath in family:
        eps_list.append(float(eps))
        res.append(trajectory_residual(traj, target, bath, coeffs, max_spacing))
    return ConsistencyReport(target, eps_list, res)


# -- approximate solutions -------------------------------------------------------

def build_approximate_solution(
    v0: np.ndarray,
    eta0: np.ndarray,
    bath: Bathymetry,
    eps: float,
    t_end: float,
    dt: float | None = None,
    coeffs=None,
    snapshot_times=None,
) -> Trajectory:
    """Approximate free-surface solution from a symmetric model.

    The data are mapped into the symmetric model's frame, evolved, and every
    snapshot is mapped back to the surface-velocity frame with the approximate
    inverse changes of variables.
    """
    model = "t1" if bath.regime is Regime.SMALL else "s_strong"
    if coeffs is None:
        coeffs = symmetric_default(bath.regime)
    if isinstance(coeffs, SmallCoeffs) and model != "t1" or isinstance(coeffs, StrongCoeffs) and model != "s_strong":
        raise TypeError("coefficients do not match the bottom regime")
    grid = bath.grid
    start = to_model_frame(model, WaveState(grid.check_scalar(eta0), grid.check_vector(v0), Frame.SURFACE),
                           bath, eps, coeffs)
    traj = simulate(model, start, bath, eps, t_end, dt, coeffs, snapshot_times)
    out = traj.map(lambda s: from_model_frame(model, s, bath, eps, coeffs))
    out.params.update(traj.params, symmetric_model=model)
    return out


def trajectory_distance(ref: Trajectory, app: Trajectory, t_max: float | None = None) -> tuple[float, float]:
    """Max over common times of the L2 and max-norm distance of (V, eta)."""
    if ref.frame is Frame.POTENTIAL:
        ref = potential_to_surface(ref)
    if ref.frame is not app.frame:
        raise FrameError("trajectories must share a frame")
    g = ref.grid
    l2 = mx = 0.0
    common = 0
    for t, s in zip(app.times, app.states):
        if t_max is not None and t > t_max + 1e-12:
            continue
        try:
            r = ref.at(t)
        except KeyError:
            continue
        dv, de = r.u - s.u, r.eta - s.eta
        l2 = max(l2, float(np.sqrt(g.norm(dv) ** 2 + g.norm(de) ** 2)))
        mx = max(mx, float(max(np.abs(dv).max(), np.abs(de).max())))
        common += 1
    if not common:
        raise ValueError("trajectories have no common snapshot time")
    return l2, mx


def compare_study(
    epsilons,
    make_bath: Callable[[float], Bathymetry],
    psi0: np.ndarray,
    eta0: np.ndarray,
    horizon: Callable[[float], float],
    dt: Callable[[float], float],
    nz: int = 48,
    n_snapshots: int = 10,
    coeffs=None,
) -> StudyReport:
    """Reference-versus-approximation error over an eps sweep."""
    l2s, mxs = [], []
    for eps in epsilons:
        bath = make_bath(eps)
        grid = bath.grid
        t_end = horizon(eps)
        times = np.linspace(0, t_end, n_snapshots + 1)
        ref = simulate_reference(WaveState(eta0, psi0, Frame.POTENTIAL), bath, eps, t_end, dt(eps), nz,
                                 snapshot_times=times)
        app = build_approximate_solution(fourier_grad(grid, psi0), eta0, bath, eps, t_end, dt(eps),
                                         coeffs, snapshot_times=times)
        l2, mx = trajectory_distance(ref, app)
        l2s.append(l2)
        mxs.append(mx)
    return StudyReport(list(map(float, epsilons)), l2s, mxs)
