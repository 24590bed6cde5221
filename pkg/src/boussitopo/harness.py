"""Subcommand drivers: turn a RunConfig into CSV tables and SVG plots.

Each ``cmd_*`` writes its artifacts into ``out`` and returns a
:class:`CommandResult` whose ``summary`` holds the headline numbers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .coeffs import (
    SIGMA_DEFAULT,
    SmallCoeffs,
    StrongCoeffs,
    epsilon_positivity_bounds,
    is_symmetric_small,
    solve_symmetric_strong,
)
from .config import ConfigError, RunConfig, analytic_bathymetry
from .dn import (
    Regime,
    RegimeParams,
    coercivity_check,
    dn_convergence_study,
    exact_dn,
    fit_slope,
    wkb_residual,
)
from .fields import Grid, StripGrid, fourier_grad
from .models import (
    Bathymetry,
    Frame,
    WaveState,
    get_model,
    linearized_generator,
    mass_positivity_sample,
    roundtrip_errors,
    to_model_frame,
)
from .sim import (
    compare_study,
    consistency_residual,
    simulate,
    simulate_reference,
    to_frame_of,
)
from .svg import LinePlot

DEFAULT_DT = 0.02


@dataclass
class CommandResult:
    subcommand: str
    study: str
    artifacts: dict[str, Path] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _write(out: Path, name: str, text: str, result: CommandResult):
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_bytes(text.encode("utf-8"))
    result.artifacts[name] = path


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv(header, rows, footer=None) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    if footer:
        lines.append(",".join(footer[0]))
        lines.append(",".join(f"{v:.6f}" for v in footer[1]))
    return "\n".join(lines) + "\n"


# -- inputs from a config --------------------------------------------------------

def make_grid(cfg: RunConfig) -> Grid:
    return Grid(cfg.d, cfg.n, cfg.length)


def bathymetry_profile(cfg: RunConfig, grid: Grid) -> np.ndarray:
    """Bottom profile ``b`` on ``grid`` (analytic shapes vary along the first axis)."""
    if cfg.bathymetry == "file":
        try:
            data = np.loadtxt(cfg.bath_file, ndmin=1).ravel()
        except OSError as exc:
            raise ConfigError(f"cannot read bathymetry file: {exc}", key="bath_file") from None
        if data.size != int(np.prod(grid.shape)):
            raise ConfigError(f"file holds {data.size} samples, grid needs {np.prod(grid.shape)}",
                              key="bath_file")
        return data.reshape(grid.shape)
    return np.broadcast_to(analytic_bathymetry(cfg, grid.x[0]), grid.shape).copy()


def make_bath(cfg: RunConfig, grid: Grid, regime, b: np.ndarray | None = None) -> Bathymetry:
    b = bathymetry_profile(cfg, grid) if b is None else b
    try:
        return Bathymetry(grid, b, Regime(regime), cfg.h_min)
    except ValueError as exc:
        raise ConfigError(str(exc), key="bathymetry") from None


def modal_field(grid: Grid, cos_amps, sin_amps) -> np.ndarray:
    """``sum_k a_k cos(k x) + b_k sin(k x)`` in the first coordinate, k = 1, 2, ..."""
    kx = 2 * np.pi / grid.length * grid.x[0]
    out = np.zeros(grid.shape)
    for k, a in enumerate(cos_amps, start=1):
        out += a * np.cos(k * kx)
    for k, a in enumerate(sin_amps, start=1):
        out += a * np.sin(k * kx)
    return out


def initial_data(cfg: RunConfig, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """``(psi0, eta0)``: surface potential and elevation from the modal keys."""
    return (modal_field(grid, cfg.psi0_cos, cfg.psi0_sin),
            modal_field(grid, cfg.eta0_cos, cfg.eta0_sin))


def small_coeffs(cfg: RunConfig) -> SmallCoeffs:
    """Small-bottom weights: the symmetric default when ``theta`` is auto.

    With an explicit ``theta``, auto ``lam``/``mu`` are drawn uniformly in
    [0, 1) from ``seed``.
    """
    if cfg.theta is None:
        return SIGMA_DEFAULT
    rng = np.random.default_rng(cfg.seed)
    lam = cfg.lam if cfg.lam is not None else float(rng.uniform(0, 1))
    mu = cfg.mu if cfg.mu is not None else float(rng.uniform(0, 1))
    return SmallCoeffs(cfg.theta**2, lam, mu)


def strong_coeffs(cfg: RunConfig) -> StrongCoeffs:
    """Strong-bottom weights: the symmetric root when ``theta`` is auto."""
    if cfg.theta is None:
        return solve_symmetric_strong(cfg.guess).coeffs
    rng = np.random.default_rng(cfg.seed)
    draw = [cfg.lam1, cfg.lam2, cfg.mu]
    draw = [v if v is not None else float(rng.uniform(0, 1)) for v in draw]
    return StrongCoeffs(cfg.theta, *draw)


def model_coeffs(cfg: RunConfig, model: str):
    spec = get_model(model)
    if spec.coeff_type is None:
        return None
    return small_coeffs(cfg) if spec.coeff_type is SmallCoeffs else strong_coeffs(cfg)


def _slope_plot(title: str, ylabel: str) -> LinePlot:
    return LinePlot(title=title, xlabel="epsilon", ylabel=ylabel, logx=True, logy=True)


# -- dn-verify -------------------------------------------------------------------

def cmd_dn_verify(cfg: RunConfig, out: Path) -> CommandResult:
    study = cfg.default_study()
    res = CommandResult("dn-verify", study)
    grid = make_grid(cfg)
    if study == "flat-oracle":
        strip = StripGrid(grid, cfg.nz)
        eps = cfg.epsilon
        params = RegimeParams(eps, Regime(cfg.regime), cfg.h_min)
        rows = []
        kx = 2 * np.pi / grid.length * grid.x[0]
        for k in cfg.modes:
            f = np.cos(k * kx)
            kk = 2 * np.pi / grid.length * k
            oracle = np.sqrt(eps) * kk * np.tanh(np.sqrt(eps) * kk) * f
            err = float(np.max(np.abs(exact_dn(f, grid.zeros(), grid.zeros(), params, strip) - oracle)))
            rows.append((k, eps, cfg.nz, err))
        _write(out, "dn_flat_oracle.csv", _csv(["k", "epsilon", "nz", "err_max"], rows), res)
        res.summary["errors"] = {k: e for k, _, _, e in rows}
    elif study == "expansion":
        psi0, eta0 = initial_data(cfg, grid)
        b = bathymetry_profile(cfg, grid)
        plot = _slope_plot("Expanded versus exact DN operator", "L2 error")
        slopes = {}
        for regime in cfg.regimes:
            rep = dn_convergence_study(grid, psi0, eta0, b, Regime(regime), cfg.epsilons,
                                       nz=cfg.nz, order=cfg.order, h_min=cfg.h_min)
            _write(out, f"dn_expansion_{regime}.csv", rep.to_csv(), res)
            plot.add(f"{regime} (slope {rep.slope_l2:.2f})", rep.epsilons, rep.err_l2)
            slopes[regime] = rep.slope_l2
            res.summary[f"report_{regime}"] = rep
        _write(out, "dn_expansion.svg", plot.to_svg(), res)
        res.summary["slopes"] = slopes
    elif study == "coercivity":
        violations, checked = coercivity_check(grid, cfg.samples, cfg.h_min, cfg.seed)
        _write(out, "coercivity.csv",
               _csv(["samples", "violations", "h_min", "seed"], [(checked, violations, cfg.h_min, cfg.seed)]), res)
        res.summary.update(violations=violations, checked=checked)
    elif study == "wkb":
        psi0, eta0 = initial_data(cfg, grid)
        b = bathymetry_profile(cfg, grid)
        strip = StripGrid(grid, cfg.nz)
        plot = _slope_plot("Residual of the three-term profile", "max residual")
        for regime in cfg.regimes:
            rows = []
            for eps in cfg.epsilons:
                inner, bottom = wkb_residual(grid, psi0, eta0, b, RegimeParams(eps, Regime(regime), cfg.h_min), strip)
                rows.append((eps, float(np.abs(inner).max()), float(np.abs(bottom).max())))
            es = [r[0] for r in rows]
            slopes = (fit_slope(es, [r[1] for r in rows]), fit_slope(es, [r[2] for r in rows]))
            _write(out, f"wkb_residual_{regime}.csv",
                   _csv(["epsilon", "interior", "bottom"], rows, (["slope_interior", "slope_bottom"], slopes)), res)
            plot.add(f"{regime} interior", es, [r[1] for r in rows])
            plot.add(f"{regime} bottom", es, [r[2] for r in rows])
            res.summary[regime] = slopes
        _write(out, "wkb_residual.svg", plot.to_svg(), res)
    return res


# -- symmetry-solve --------------------------------------------------------------

def cmd_symmetry_solve(cfg: RunConfig, out: Path) -> CommandResult:
    study = cfg.default_study()
    res = CommandResult("symmetry-solve", study)
    if study == "root":
        root = solve_symmetric_strong(cfg.guess)
        rows = [(*root.coeffs.params, root.residual, root.iterations, 1)]
        rows += [(*alt.params, float("nan"), 0, 0) for alt in root.alternatives]
        _write(out, "symmetric_root.csv",
               _csv(["theta", "lambda1", "lambda2", "mu", "residual", "iterations", "selected"], rows), res)
        res.summary.update(root=root.coeffs.params, residual=root.residual)
    elif study == "identities":
        cases = [
            ("sigma_default", SIGMA_DEFAULT),
            ("b1_member", SmallCoeffs(Fraction(1), Fraction(1), Fraction(0))),
        ]
        if cfg.theta is not None:
            cases.append(("configured", small_coeffs(cfg)))
        rows = [(name, c.theta_sq, c.lam, c.mu, *c.a, is_symmetric_small(c)) for name, c in cases]
        _write(out, "small_coefficients.csv",
               _csv(["case", "theta_sq", "lambda", "mu", "a1", "a2", "a3", "a4", "symmetric"], rows), res)
        res.summary.update({name: c.a for name, c in cases})
    elif study == "positivity":
        grid = make_grid(cfg)
        bath = make_bath(cfg, grid, Regime.STRONG)
        c = strong_coeffs(cfg)
        bounds = epsilon_positivity_bounds(c.theta, c.lam1, c.lam2, c.mu, bath.grad_h_sup)
        rows = []
        for factor in cfg.factors:
            for op, bound in (("velocity", bounds.velocity), ("elevation", bounds.elevation)):
                if not np.isfinite(bound):
                    continue
                eps = factor * bound
                sample = {s.operator: s for s in mass_positivity_sample(bath, eps, c, cfg.samples, cfg.seed)}[op]
                rows.append((op, factor, bound, eps, sample.samples, sample.violations, sample.min_quotient))
        _write(out, "positivity.csv",
               _csv(["operator", "factor", "bound", "epsilon", "samples", "violations", "min_quotient"], rows), res)
        res.summary.update(bounds=bounds, grad_h_sup=bath.grad_h_sup,
                           violations={(r[0], r[1]): r[5] for r in rows})
    elif study == "spectrum":
        grid = make_grid(cfg)
        b = bathymetry_profile(cfg, grid)
        cases = [("t1", Regime.SMALL, small_coeffs(cfg) if cfg.theta is not None else SIGMA_DEFAULT),
                 ("s_strong", Regime.STRONG, solve_symmetric_strong(cfg.guess).coeffs)]
        rows = []
        for model, regime, c in cases:
            bath = make_bath(cfg, grid, regime, b)
            gen = linearized_generator(model, bath, cfg.epsilon, c)
            ev = np.linalg.eigvals(gen)
            rows.append((model, regime.value, grid.n, cfg.epsilon, float(np.abs(ev.real).max()),
                         float(np.abs(ev.imag).max())))
        _write(out, "spectrum.csv",
               _csv(["model", "regime", "n", "epsilon", "max_abs_real", "max_abs_imag"], rows), res)
        res.summary["max_abs_real"] = {r[0]: r[4] for r in rows}
    return res


# -- simulate --------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, out: Path) -> CommandResult:
    res = CommandResult("simulate", cfg.default_study())
    grid = make_grid(cfg)
    spec = get_model(cfg.model)
    bath = make_bath(cfg, grid, spec.regime)
    eps = cfg.epsilon
    if spec.regime is Regime.SMALL:
        try:
            bath.check_small_depth(eps)
        except ValueError as exc:
            raise ConfigError(str(exc), key="epsilon") from None
    coeffs = model_coeffs(cfg, cfg.model)
    psi0, eta0 = initial_data(cfg, grid)
    start = to_model_frame(cfg.model, WaveState(eta0, fourier_grad(grid, psi0), Frame.SURFACE), bath, eps, coeffs)
    times = np.linspace(0, cfg.horizon, cfg.n_snapshots + 1)
    traj = simulate(cfg.model, start, bath, eps, cfg.horizon, cfg.dt, coeffs, snapshot_times=times)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trajectory.btj").write_bytes(traj.to_bytes())
    res.artifacts["trajectory.btj"] = out / "trajectory.btj"
    _write(out, "diagnostics.csv", traj.diagnostics_csv(bath, coeffs), res)
    plot = LinePlot(title=f"Surface elevation ({cfg.model})", xlabel="x", ylabel="eta")
    x = grid.x[0].reshape(-1) if grid.d == 1 else grid.x[0][:, 0]
    for t, s in list(zip(traj.times, traj.states))[:: max(1, len(traj) // 5)]:
        y = s.eta if grid.d == 1 else s.eta[:, 0]
        plot.add(f"t={t:.3g}", x, y, marker=False)
    _write(out, "surface.svg", plot.to_svg(), res)
    res.summary.update(trajectory=traj, diagnostics=traj.diagnostics(bath, coeffs))
    return res


# -- consistency -----------------------------------------------------------------

def cmd_consistency(cfg: RunConfig, out: Path) -> CommandResult:
    study = cfg.default_study()
    res = CommandResult("consistency", study)
    grid = make_grid(cfg)
    if study == "roundtrip":
        psi0, eta0 = initial_data(cfg, grid)
        v = fourier_grad(grid, psi0)
        b = bathymetry_profile(cfg, grid)
        bs, bS = make_bath(cfg, grid, Regime.SMALL, b), make_bath(cfg, grid, Regime.STRONG, b)
        theta_small = small_coeffs(cfg).theta
        theta_strong = float(solve_symmetric_strong(cfg.guess).coeffs.theta)
        names = ("theta_small", "symmetrize_small", "symmetrize_strong", "theta_strong")
        errs = [roundtrip_errors(bs, bS, v, eta0, e, theta_small, theta_strong) for e in cfg.epsilons]
        slopes = [fit_slope(cfg.epsilons, [r[n] for r in errs]) for n in names]
        rows = [(e, *(r[n] for n in names)) for e, r in zip(cfg.epsilons, errs)]
        _write(out, "roundtrip.csv", _csv(["epsilon", *names], rows, ([f"slope_{n}" for n in names], slopes)), res)
        plot = _slope_plot("Change of variables composed with its inverse", "relative defect")
        for n in names:
            plot.add(n, cfg.epsilons, [r[n] for r in errs])
        _write(out, "roundtrip.svg", plot.to_svg(), res)
        res.summary["slopes"] = dict(zip(names, slopes))
        return res

    regime = Regime(cfg.regime)
    for t in cfg.targets:
        if get_model(t).regime is not regime:
            raise ConfigError(f"target {t} does not belong to the {regime.value} regime", key="targets")
    bath = make_bath(cfg, grid, regime)
    psi0, eta0 = initial_data(cfg, grid)
    coeffs = {t: model_coeffs(cfg, t) for t in cfg.targets}
    marks = np.linspace(cfg.horizon / cfg.n_snapshots, cfg.horizon, cfg.n_snapshots)
    families = {t: [] for t in cfg.targets}
    for eps in cfg.epsilons:
        ref = simulate_reference(WaveState(eta0, psi0, Frame.POTENTIAL), bath, eps, cfg.horizon,
                                 cfg.dt or DEFAULT_DT, cfg.nz, snapshot_times=marks, pair_delta=eps**2 / 10)
        for t in cfg.targets:
            families[t].append((eps, to_frame_of(ref, t, bath, coeffs[t]), bath))
    reports = {t: consistency_residual(families[t], t, coeffs[t]) for t in cfg.targets}
    rows = [(e, *(reports[t].residuals[i] for t in cfg.targets)) for i, e in enumerate(cfg.epsilons)]
    slopes = [reports[t].slope for t in cfg.targets]
    _write(out, "consistency.csv",
           _csv(["epsilon", *cfg.targets], rows, ([f"slope_{t}" for t in cfg.targets], slopes)), res)
    params = [(t, *_coeff_row(coeffs[t])) for t in cfg.targets]
    _write(out, "consistency_coeffs.csv", _csv(["target", "p1", "p2", "p3", "p4"], params), res)
    plot = _slope_plot("Residual of the reference family", "max residual")
    for t in cfg.targets:
        plot.add(t, cfg.epsilons, reports[t].residuals)
    _write(out, "consistency.svg", plot.to_svg(), res)
    res.summary.update(slopes=dict(zip(cfg.targets, slopes)), reports=reports, coeffs=coeffs)
    return res


def _coeff_row(c) -> tuple:
    if c is None:
        return (float("nan"),) * 4
    if isinstance(c, SmallCoeffs):
        return (c.theta, float(c.lam), float(c.mu), float("nan"))
    return tuple(float(v) for v in c.params)


# -- compare ---------------------------------------------------------------------

def cmd_compare(cfg: RunConfig, out: Path) -> CommandResult:
    res = CommandResult("compare", cfg.default_study())
    grid = make_grid(cfg)
    psi0, eta0 = initial_data(cfg, grid)
    b = bathymetry_profile(cfg, grid)
    dt = cfg.dt or DEFAULT_DT
    plot = _slope_plot("Reference versus approximate solution", "max L2 error")
    for regime in cfg.regimes:
        regime = Regime(regime)
        coeffs = small_coeffs(cfg) if regime is Regime.SMALL else strong_coeffs(cfg)
        bath = make_bath(cfg, grid, regime, b)
        rep = compare_study(cfg.epsilons, lambda e: bath, psi0, eta0, lambda e: cfg.horizon, lambda e: dt,
                            cfg.nz, cfg.n_snapshots, coeffs)
        _write(out, f"compare_{regime.value}.csv", rep.to_csv(), res)
        plot.add(f"{regime.value} t={cfg.horizon:g} (slope {rep.slope_l2:.2f})", rep.epsilons, rep.err_l2)
        res.summary[regime.value] = rep
    if cfg.long_horizon:
        shape = np.cos(cfg.bath_wavenumber * 2 * np.pi / cfg.length * grid.x[0]) * np.ones(grid.shape)
        coeffs = strong_coeffs(cfg)

        def make(e):
            return make_bath(cfg, grid, Regime.STRONG, cfg.long_bath_amplitude * e * shape)

        rep = compare_study(cfg.epsilons, make, psi0, eta0, lambda e: cfg.horizon / e, lambda e: dt,
                            cfg.nz, 2 * cfg.n_snapshots, coeffs)
        rows = [(e, cfg.horizon / e, a, m, a / e) for e, a, m in zip(rep.epsilons, rep.err_l2, rep.err_max)]
        _write(out, "compare_strong_long.csv",
               _csv(["epsilon", "horizon", "err_l2", "err_max", "err_l2_over_eps"], rows,
                    (["slope_l2", "slope_max"], (rep.slope_l2, rep.slope_max))), res)
        plot.add(f"strong, slope bottom, t=1/eps (slope {rep.slope_l2:.2f})", rep.epsilons, rep.err_l2)
        res.summary["strong_long"] = rep
    _write(out, "compare.svg", plot.to_svg(), res)
    return res


COMMANDS = {
    "dn-verify": cmd_dn_verify,
    "symmetry-solve": cmd_symmetry_solve,
    "simulate": cmd_simulate,
    "consistency": cmd_consistency,
    "compare": cmd_compare,
}


def run(cfg: RunConfig, out: Path | str | None = None) -> CommandResult:
    """Run the subcommand named in ``cfg``; ``out`` overrides ``cfg.out``."""
    return COMMANDS[cfg.subcommand](cfg, Path(out if out is not None else cfg.out))

