"""Dirichlet-Neumann type operator of the transformed strip problem.

The fluid domain between the bottom and the free surface is mapped onto the
flat strip ``-1 <= z <= 0``. The velocity potential then solves a variable
coefficient elliptic problem ``-div(P grad u) = 0`` with ``u = f`` on top and a
vanishing conormal flux at the bottom. The operator returned by
:func:`exact_dn` is ``dz u(z=0) / depth``.

Two bottom regimes are supported: small variations (bottom at ``-1 + eps*b``)
and strong variations (bottom at ``-1 + b``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .fields import Grid, StripGrid, dot, fourier_div, fourier_grad, fourier_laplacian


class Regime(enum.Enum):
    SMALL = "small"    # bottom amplitude of order eps
    STRONG = "strong"  # bottom amplitude of order one


class DepthError(ValueError):
    """Water depth falls below the allowed minimum."""


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class RegimeParams:
    """Nonlinearity parameter and bottom regime.

    The still water depth is normalized to one.
    """

    epsilon: float
    regime: Regime = Regime.SMALL
    h_min: float = 0.05

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.h_min > 0:
            raise ValueError(f"h_min must be positive, got {self.h_min}")
        object.__setattr__(self, "regime", Regime(self.regime))

    @property
    def beta(self) -> float:
        return self.epsilon if self.regime is Regime.SMALL else 1.0

    def depth(self, eta: np.ndarray, b: np.ndarray) -> np.ndarray:
        return 1.0 + self.epsilon * eta - self.beta * b


def check_depth(grid: Grid, params: RegimeParams, eta: np.ndarray, b: np.ndarray) -> np.ndarray:
    depth = params.depth(eta, b)
    if depth.min() < params.h_min:
        idx = tuple(int(i) for i in np.unravel_index(np.argmin(depth), depth.shape))
        loc = tuple(float(grid.x[(i,) + idx]) for i in range(grid.d))
        raise DepthError(
            f"depth {depth[idx]:.4g} below h_min={params.h_min} at node {idx}, x={loc}"
        )
    return depth


def _coefficients(eps, beta, depth, grad_eta, grad_b, z):
    """Entries of the strip matrix at heights ``z`` (any shape broadcast first).

    Returns ``(p11, p12, p22)``: the scalar multiplying the identity block, the
    off-diagonal vector (shape ``(d,) + z.shape + grid``) and the vertical entry.
    """
    z = np.asarray(z, dtype=float).reshape((-1,) + (1,) * depth.ndim)
    w = -((z + 1) * eps * grad_eta[:, None] - z * beta * grad_b[:, None])
    p11 = np.broadcast_to(eps * depth, (z.shape[0],) + depth.shape)
    p12 = eps * w
    p22 = (1 + eps * np.sum(w**2, axis=0)) / depth
    return p11, p12, p22


@dataclass(frozen=True)
class EllipticCoeffs:
    """Strip matrix sampled at the vertical nodes.

    ``matrix`` has shape ``(d+1, d+1, nz) + grid.shape``.
    """

    strip: StripGrid
    matrix: np.ndarray

    @property
    def d(self) -> int:
        return self.strip.grid.d


def assemble_coeffs(eta, b, params: RegimeParams, strip: StripGrid) -> EllipticCoeffs:
    grid = strip.grid
    eta, b = grid.check_scalar(eta), grid.check_scalar(b)
    depth = check_depth(grid, params, eta, b)
    p11, p12, p22 = _coefficients(
        params.epsilon, params.beta, depth, fourier_grad(grid, eta), fourier_grad(grid, b), strip.z
    )
    d = grid.d
    mat = np.zeros((d + 1, d + 1, strip.nz) + grid.shape)
    for i in range(d):
        mat[i, i] = p11
        mat[i, d] = mat[d, i] = p12[i]
    mat[d, d] = p22
    return EllipticCoeffs(strip, mat)


def coercivity_c0(x: float, y: float, p_diag, h_min: float, d: int, h0: float = 1.0) -> float:
    """Lower bound for the strip matrix relative to the anisotropy matrix.

    Parameters
    ----------
    x, y : float
        W^{1,inf} norms of the surface and bottom perturbations.
    p_diag : sequence of float
        Diagonal of the anisotropy matrix, length ``d+1``.
    """
    p = np.asarray(p_diag, dtype=float)
    terms = [1.0, 1.0 / (h_min * (x + h0 + y))]
    if x + y > 0:
        terms.append(float(np.min(p[d] / p[:d])) / (x + y) ** 2)
    return h_min / (d + 1) ** 2 * min(terms)


def _deriv_matrix(grid: Grid) -> np.ndarray:
    eye = np.eye(grid.n)
    k = grid._deriv_wavenumbers[0]
    return np.fft.irfft(1j * k[:, None] * np.fft.rfft(eye, axis=0), n=grid.n, axis=0)


def _solve_block_tridiagonal(lower, diag, upper, rhs):
    """Block Thomas algorithm. ``lower[0]`` and ``upper[-1]`` are ignored."""
    n = diag.shape[0]
    c = np.empty_like(upper)
    y = np.empty_like(rhs)
    c[0] = np.linalg.solve(diag[0], upper[0])
    y[0] = np.linalg.solve(diag[0], rhs[0])
    for j in range(1, n):
        m = diag[j] - lower[j] @ c[j - 1]
        c[j] = np.linalg.solve(m, upper[j])
        y[j] = np.linalg.solve(m, rhs[j] - lower[j] @ y[j - 1])
    for j in range(n - 2, -1, -1):
        y[j] -= c[j] @ y[j + 1]
    return y


def strip_solve(f, eta, b, params: RegimeParams, strip: StripGrid) -> np.ndarray:
    """Solve the strip problem; returns ``u`` with shape ``(nz,) + grid.shape``.

    Finite volumes in z (flux at half nodes, half cell at the bottom where
    the conormal condition holds) and Fourier collocation in x.
    """
    grid = strip.grid
    if grid.d != 1:
        raise NotImplementedError("the strip solver supports d=1 only")
    f, eta, b = grid.check_scalar(f), grid.check_scalar(eta), grid.check_scalar(b)
    depth = check_depth(grid, params, eta, b)
    eps, beta = params.epsilon, params.beta
    ge, gb = fourier_grad(grid, eta), fourier_grad(grid, b)
    nz, dz = strip.nz, strip.dz
    z = strip.z
    p11, p12, p22 = _coefficients(eps, beta, depth, ge, gb, z)
    _, p12h, p22h = _coefficients(eps, beta, depth, ge, gb, z[:-1] + dz / 2)
    p12, p12h = p12[0], p12h[0]
    D = _deriv_matrix(grid)
    n = grid.n
    I = np.eye(n)
    m = nz - 1  # unknown levels 0..nz-2

    def dpd(a):  # D diag(a) D for every level
        return D @ (a[:, :, None] * D)

    def rowmul(a):  # diag(a) D
        return a[:, :, None] * D[None]

    def colmul(a):  # D diag(a)
        return D[None] * a[:, None, :]

    # vertical flux at j+1/2: A_j u_j + B_j u_{j+1}
    flux_lo = 0.5 * rowmul(p12h) - p22h[:, :, None] * I / dz
    flux_hi = 0.5 * rowmul(p12h) + p22h[:, :, None] * I / dz
    diag = np.empty((m, n, n))
    upper = np.zeros((m, n, n))
    lower = np.zeros((m, n, n))
    # interior levels
    diag[1:] = dpd(p11[1:m]) + (flux_lo[1:m] - flux_hi[0:m - 1]) / dz
    upper[1:] = colmul(p12[1:m]) / (2 * dz) + flux_hi[1:m] / dz
    lower[1:] = -colmul(p12[1:m]) / (2 * dz) - flux_lo[0:m - 1] / dz
    # bottom half cell, the conormal condition eliminates dz u there
    q = p11[0] - p12[0] ** 2 / p22[0]
    diag[0] = dpd(q[None])[0] + 2 * flux_lo[0] / dz
    upper[0] = 2 * flux_hi[0] / dz
    rhs = np.zeros((m, n))
    rhs[m - 1] = -upper[m - 1] @ f
    u = np.empty((nz, n))
    u[:m] = _solve_block_tridiagonal(lower, diag, upper, rhs)
    u[m] = f
    du = (diag @ u[:m, :, None])[..., 0]
    res = du.copy()
    res[:-1] += (upper[:-1] @ u[1:m, :, None])[..., 0]
    res[1:] += (lower[1:] @ u[:m - 1, :, None])[..., 0]
    scale = np.max(np.abs(rhs)) + np.max(np.abs(du)) + 1e-300
    residual = float(np.max(np.abs(res - rhs)) / scale)
    if not np.isfinite(residual) or residual > 1e-8:
        raise SolverError("strip solve failed", residual)
    return u


def exact_dn(f, eta, b, params: RegimeParams, strip: StripGrid) -> np.ndarray:
    """Dirichlet-Neumann operator ``dz u(0) / depth`` from the strip solve."""
    grid = strip.grid
    u = strip_solve(f, eta, b, params, strip)
    dz = strip.dz
    duz = (25 * u[-1] - 48 * u[-2] + 36 * u[-3] - 16 * u[-4] + 3 * u[-5]) / (12 * dz)
    return duz / params.depth(grid.check_scalar(eta), grid.check_scalar(b))


def dn_expansion_small(grid: Grid, f, eta, b, eps: float, order: int = 2) -> np.ndarray:
    """Two-term expansion of the operator for bottom variations of order eps."""
    lap = fourier_laplacian(grid, f)
    z1 = -lap
    if order == 1:
        return eps * z1
    z2 = (
        -fourier_laplacian(grid, lap) / 3
        - (eta - b) * lap
        + dot(fourier_grad(grid, b), fourier_grad(grid, f))
    )
    return eps * z1 + eps**2 * z2


def dn_expansion_strong(grid: Grid, f, eta, b, eps: float, order: int = 2) -> np.ndarray:
    """Two-term expansion of the operator for bottom variations of order one."""
    h = 1.0 - b
    gf = fourier_grad(grid, f)
    z1 = -fourier_div(grid, h * gf)
    if order == 1:
        return eps * z1
    lap = fourier_laplacian(grid, f)
    inner = h**3 / 3 * fourier_grad(grid, lap) - h**2 * fourier_grad(grid, -z1)
    z2 = 0.5 * fourier_div(grid, inner) - eta * lap
    return eps * z1 + eps**2 * z2


# -- WKB profiles ----------------------------------------------------------

Z = Polynomial([0.0, 1.0])
ZP1 = Polynomial([1.0, 1.0])  # z + 1


@dataclass(frozen=True)
class ProfileTerm:
    shape: Polynomial      # dependence on z
    amplitude: np.ndarray  # dependence on x


@dataclass(frozen=True)
class Profile:
    """Sum of separable terms ``shape(z) * amplitude(x)``."""

    terms: tuple[ProfileTerm, ...]

    def value(self, z, deriv: int = 0) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = 0
        for t in self.terms:
            s = t.shape.deriv(deriv) if deriv else t.shape
            out = out + s(z).reshape((-1,) + (1,) * t.amplitude.ndim) * t.amplitude[None]
        return out


@dataclass(frozen=True)
class WkbProfiles:
    u0: Profile
    u1: Profile
    u2: Profile

    def sampled(self, strip: StripGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(p.value(strip.z) for p in (self.u0, self.u1, self.u2))

    def combined(self, eps: float) -> Profile:
        terms = list(self.u0.terms)
        terms += [ProfileTerm(t.shape, eps * t.amplitude) for t in self.u1.terms]
        terms += [ProfileTerm(t.shape, eps**2 * t.amplitude) for t in self.u2.terms]
        return Profile(tuple(terms))


def wkb_profiles(grid: Grid, f, eta, b, regime: Regime) -> WkbProfiles:
    """Closed-form profiles u0, u1, u2 of the expansion of the strip solution."""
    regime = Regime(regime)
    one = Polynomial([1.0])
    lap = fourier_laplacian(grid, f)
    lap2 = fourier_laplacian(grid, lap)
    gbf = dot(fourier_grad(grid, b), fourier_grad(grid, f))
    u0 = Profile((ProfileTerm(one, f),))
    if regime is Regime.SMALL:
        u1 = Profile((ProfileTerm(0.5 * (one - ZP1**2), lap),))
        u2 = Profile((
            ProfileTerm(ZP1**4 / 24 - ZP1**2 / 4 + 5 / 24 * one, lap2),
            ProfileTerm(one - ZP1**2, (eta - b) * lap),
            ProfileTerm(Z, gbf),
        ))
        return WkbProfiles(u0, u1, u2)
    h = 1.0 - b
    div_hgf = fourier_div(grid, h * fourier_grad(grid, f))
    u1 = Profile((
        ProfileTerm(0.5 * (one - ZP1**2), h**2 * lap),
        ProfileTerm(Z, h * gbf),
    ))
    bracket = h**3 / 3 * fourier_grad(grid, lap) - h**2 * fourier_grad(grid, div_hgf)
    lin = h / 2 * fourier_div(grid, bracket) - eta * (2 * h * lap - gbf)
    u2 = Profile((
        ProfileTerm(Z**4, h**4 / 24 * lap2),
        ProfileTerm(Z**3, h**3 / 6 * fourier_laplacian(grid, div_hgf)),
        ProfileTerm(Z**2, -h * eta * lap),
        ProfileTerm(Z, lin),
    ))
    return WkbProfiles(u0, u1, u2)


def wkb_residual(grid: Grid, f, eta, b, params: RegimeParams, strip: StripGrid):
    """Interior and bottom residuals of the truncated WKB expansion.

    Returns ``(interior, bottom)`` where ``interior`` has shape
    ``(nz,) + grid.shape`` and ``bottom`` has shape ``grid.shape``.
    """
    eps, beta = params.epsilon, params.beta
    depth = check_depth(grid, params, eta, b)
    ge, gb = fourier_grad(grid, eta), fourier_grad(grid, b)
    prof = wkb_profiles(grid, f, eta, b, params.regime).combined(eps)
    z = strip.z
    p11, p12, p22 = _coefficients(eps, beta, depth, ge, gb, z)
    dw = -eps * ge + beta * gb                       # dz of the shear vector
    w = p12 / eps
    dp22 = 2 * eps * np.sum(w * dw[:, None], axis=0) / depth
    u, uz, uzz = (prof.value(z, k) for k in range(3))
    interior = np.empty_like(u)
    for j in range(len(z)):
        gu, guz = fourier_grad(grid, u[j]), fourier_grad(grid, uz[j])
        horiz = fourier_div(grid, p11[j] * gu + p12[:, j] * uz[j])
        vert = eps * dot(dw, gu) + dot(p12[:, j], guz) + dp22[j] * uz[j] + p22[j] * uzz[j]
        interior[j] = -(horiz + vert)
    bottom = dot(p12[:, 0], fourier_grad(grid, u[0])) + p22[0] * uz[0]
    return interior, bottom


# -- convergence studies ---------------------------------------------------

def fit_slope(epsilons, errors) -> float:
    """Least-squares slope of log(error) against log(epsilon)."""
    e = np.asarray(epsilons, dtype=float)
    r = np.asarray(errors, dtype=float)
    if len(e) < 2:
        return float("nan")
    return float(np.polyfit(np.log(e), np.log(r), 1)[0])


@dataclass
class StudyReport:
    """Error table over a sweep of epsilon values with fitted slopes."""

    epsilons: list[float]
    err_l2: list[float]
    err_max: list[float]
    label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def slope_l2(self) -> float:
        return fit_slope(self.epsilons, self.err_l2)

    @property
    def slope_max(self) -> float:
        return fit_slope(self.epsilons, self.err_max)

    def to_csv(self) -> str:
        lines = ["epsilon,err_l2,err_max"]
        for e, a, m in zip(self.epsilons, self.err_l2, self.err_max):
            lines.append(f"{e:.6g},{a:.10e},{m:.10e}")
        lines.append("slope_l2,slope_max")
        lines.append(f"{self.slope_l2:.6f},{self.slope_max:.6f}")
        return "\n".join(lines) + "\n"


def dn_convergence_study(
    grid: Grid,
    f,
    eta,
    b,
    regime: Regime,
    epsilons,
    nz: int = 128,
    order: int = 2,
    h_min: float = 0.05,
) -> StudyReport:
    """Distance between the exact operator and its expansion over an eps sweep."""
    epsilons = [float(e) for e in epsilons]
    if len(epsilons) < 4 or any(a <= b_ for a, b_ in zip(epsilons, epsilons[1:])):
        raise ValueError("need at least four strictly decreasing epsilon values")
    regime = Regime(regime)
    strip = StripGrid(grid, nz)
    expand = dn_expansion_small if regime is Regime.SMALL else dn_expansion_strong
    l2, mx = [], []
    for eps in epsilons:
        params = RegimeParams(eps, regime, h_min)
        diff = exact_dn(f, eta, b, params, strip) - expand(grid, f, eta, b, eps, order)
        l2.append(grid.norm(diff))
        mx.append(float(np.max(np.abs(diff))))
    return StudyReport(epsilons, l2, mx, label=f"{regime.value} order={order}")


def coercivity_check(
    grid: Grid,
    samples: int = 10_000,
    h_min: float = 0.2,
    seed: int = 0,
    fields_per_draw: int = 100,
) -> tuple[int, int]:
    """Monte-Carlo check of the strip-matrix coercivity bound.

    Draws random smooth surfaces and bottoms, random nodes and random vectors,
    and counts violations of ``(V, P V) >= c0 |sqrt(A) V|^2`` where ``A`` is the
    anisotropy matrix ``diag(eps, ..., eps, 1)``. Returns ``(violations, checked)``.
    """
    rng = np.random.default_rng(seed)
    d = grid.d
    x = grid.x
    checked = violations = 0
    while checked < samples:
        eps = rng.uniform(0.01, 0.99)
        regime = Regime.SMALL if rng.random() < 0.5 else Regime.STRONG
        params = RegimeParams(eps, regime, h_min)
        eta = _random_smooth(rng, x, amplitude=rng.uniform(0, 2.0))
        b = _random_smooth(rng, x, amplitude=rng.uniform(0, 0.7))
        depth = params.depth(eta, b)
        if depth.min() < h_min:
            continue
        ge, gb = fourier_grad(grid, eta), fourier_grad(grid, b)
        # W^{1,inf} norms of the scaled surface and bottom
        xs = eps * (np.abs(eta).max() + np.sqrt(np.sum(ge**2, axis=0)).max())
        ys = params.beta * (np.abs(b).max() + np.sqrt(np.sum(gb**2, axis=0)).max())
        pdiag = [eps] * d + [1.0]
        c0 = coercivity_c0(xs, ys, pdiag, h_min, d)
        m = min(fields_per_draw, samples - checked)
        nodes = rng.integers(0, grid.n, size=(m, d))
        zs = rng.uniform(-1, 0, size=m)
        for node, z in zip(nodes, zs):
            idx = tuple(node)
            p11, p12, p22 = _coefficients(
                eps, params.beta, np.atleast_1d(depth[idx]),
                ge[(slice(None),) + idx][:, None], gb[(slice(None),) + idx][:, None], [z],
            )
            mat = np.zeros((d + 1, d + 1))
            mat[:d, :d] = np.eye(d) * p11[0, 0]
            mat[:d, d] = mat[d, :d] = p12[:, 0, 0]
            mat[d, d] = p22[0, 0]
            v = rng.normal(size=d + 1)
            lhs = v @ mat @ v
            rhs = c0 * np.sum(np.asarray(pdiag) * v**2)
            if lhs < rhs * (1 - 1e-12):
                violations += 1
            checked += 1
    return violations, checked


def _random_smooth(rng, x, amplitude: float, modes: int = 4) -> np.ndarray:
    d = x.shape[0]
    out = np.zeros(x.shape[1:])
    for _ in range(modes):
        k = rng.integers(-3, 4, size=d)
        out += rng.normal() * np.cos(np.tensordot(k, x, axes=1) + rng.uniform(0, 2 * np.pi))
    peak = np.abs(out).max()
    return amplitude * out / peak if peak > 0 else out
