"""Evolution systems of the long-wave model families and their changes of variables.

Every system is written as ``M_U dU/dt = -F_U(U, eta)`` and
``M_eta deta/dt = -F_eta(U, eta)`` where the mass operators ``M`` are either
the identity, a constant-coefficient Helmholtz operator or (strong bottom
variations) a variable-coefficient elliptic operator.

Quadratic products of unknowns are dealiased with the 2/3 rule. Products of
unknowns with bathymetry coefficients are left unfiltered so that the discrete
linear operators keep their exact adjoint structure.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .coeffs import SmallCoeffs, StrongCoeffs, epsilon_positivity_bounds, is_symmetric_small
from .dn import Regime, SolverError
from .fields import (
    Grid,
    dealias,
    dot,
    fourier_div,
    fourier_grad,
    fourier_laplacian,
    helmholtz_inverse,
)


class Frame(enum.Enum):
    SURFACE = "V"          # horizontal velocity at the surface
    THETA = "V_theta"      # velocity at a fixed relative height
    SYMMETRIZED = "V_tilde"
    POTENTIAL = "psi"      # velocity potential; the state stores psi itself


class FrameError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WaveState:
    """Surface elevation plus a velocity-type field tagged with its frame.

    For ``Frame.POTENTIAL`` the field ``u`` is the scalar potential; otherwise
    it is a vector field of shape ``(d,) + grid.shape``.
    """

    eta: np.ndarray
    u: np.ndarray
    frame: Frame

    def _check(self, other: WaveState):
        if other.frame is not self.frame:
            raise FrameError(f"cannot combine {self.frame.value} and {other.frame.value} states")

    def __add__(self, other: WaveState) -> WaveState:
        self._check(other)
        return WaveState(self.eta + other.eta, self.u + other.u, self.frame)

    def __sub__(self, other: WaveState) -> WaveState:
        self._check(other)
        return WaveState(self.eta - other.eta, self.u - other.u, self.frame)

    def __mul__(self, c: float) -> WaveState:
        return WaveState(c * self.eta, c * self.u, self.frame)

    __rmul__ = __mul__

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.eta)) and np.all(np.isfinite(self.u)))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.eta.ravel(), self.u.ravel()])

    def like(self, vec: np.ndarray) -> WaveState:
        n = self.eta.size
        return WaveState(vec[:n].reshape(self.eta.shape), vec[n:].reshape(self.u.shape), self.frame)


@dataclass(frozen=True, eq=False)
class Bathymetry:
    """Bottom profile ``b`` on a grid with its regime tag.

    In the strong regime the still water depth is ``h = 1 - b``; in the small
    regime the bottom sits at ``-1 + eps*b`` and the depth check happens when
    ``eps`` is known.
    """

    grid: Grid
    b: np.ndarray
    regime: Regime = Regime.SMALL
    h_min: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "b", self.grid.check_scalar(self.b))
        object.__setattr__(self, "regime", Regime(self.regime))
        if self.regime is Regime.STRONG and self.h.min() < self.h_min:
            raise ValueError(f"still water depth {self.h.min():.4g} below h_min={self.h_min}")

    @cached_property
    def h(self) -> np.ndarray:
        return 1.0 - self.b

    @cached_property
    def sqrt_h(self) -> np.ndarray:
        return np.sqrt(self.h)

    @cached_property
    def grad_b(self) -> np.ndarray:
        return fourier_grad(self.grid, self.b)

    @cached_property
    def grad_h(self) -> np.ndarray:
        return -self.grad_b

    @cached_property
    def grad_h_sup(self) -> float:
        return float(np.sqrt(np.sum(self.grad_h**2, axis=0)).max())

    def check_small_depth(self, eps: float):
        if (1 - eps * self.b).min() < self.h_min:
            raise ValueError(f"depth 1 - eps*b falls below h_min={self.h_min}")

    @classmethod
    def flat(cls, grid: Grid, regime: Regime = Regime.SMALL) -> Bathymetry:
        return cls(grid, grid.zeros(), regime)


# -- mass operators ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MassOperator:
    """Symmetric-looking mass operator ``1 - L`` with a Helmholtz preconditioner.

    ``apply`` is None for the identity. ``helm`` is the coefficient of the
    constant-coefficient approximation ``1 - helm*Lap`` used either as the exact
    inverse (``exact=True``) or as preconditioner.
    """

    grid: Grid
    apply: Callable | None = None
    helm: float = 0.0
    exact: bool = True
    tol: float = 1e-10

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.apply is None:
            return x - (fourier_laplacian(self.grid, x) * self.helm if self.helm else 0)
        return self.apply(x)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.exact:
            return helmholtz_inverse(self.grid, rhs, self.helm)
        shape = rhs.shape
        size = rhs.size

        def mv(v):
            return self.apply(v.reshape(shape)).ravel()

        def pc(v):
            return helmholtz_inverse(self.grid, v.reshape(shape), self.helm).ravel()

        op = LinearOperator((size, size), matvec=mv, dtype=float)
        prec = LinearOperator((size, size), matvec=pc, dtype=float)
        x0 = pc(rhs.ravel())
        sol, info = gmres(op, rhs.ravel(), x0=x0, rtol=self.tol, atol=0.0, restart=60,
                          maxiter=50, M=prec)
        if info != 0:
            res = float(np.linalg.norm(mv(sol) - rhs.ravel()) / max(np.linalg.norm(rhs), 1e-300))
            raise SolverError("mass operator solve did not converge", res)
        return sol.reshape(shape)

    def matrix(self, shape) -> np.ndarray:
        """Dense matrix of the operator acting on flattened arrays of ``shape``."""
        size = int(np.prod(shape))
        eye = np.eye(size)
        return np.column_stack([self(eye[:, i].reshape(shape)).ravel() for i in range(size)])


def _identity(grid):
    return MassOperator(grid)


# -- small-regime systems ----------------------------------------------------

def _require(state: WaveState, frame: Frame, bath: Bathymetry, regime: Regime):
    if state.frame is not frame:
        raise FrameError(f"system expects the {frame.value} frame, got {state.frame.value}")
    if bath.regime is not regime:
        raise ValueError(f"system expects the {regime.value} bottom regime, got {bath.regime.value}")


def _grad_sq(grid, v):
    return fourier_grad(grid, dealias(grid, dot(v, v)))


def _advect(grid, v):
    """``(v . grad) v`` dealiased."""
    grads = [fourier_grad(grid, vi) for vi in v]
    return dealias(grid, np.array([dot(v, g) for g in grads]))


def forcing_b1(grid, v, eta, bath, eps, coeffs=None):
    fv = fourier_grad(grid, eta) + eps / 2 * _grad_sq(grid, v)
    dv = fourier_div(grid, v)
    fe = dv + eps * (
        fourier_div(grid, dealias(grid, eta * v) - bath.b * v)
        + fourier_laplacian(grid, dv) / 3
    )
    return fv, fe


def forcing_b2(grid, v, eta, bath, eps, coeffs=None):
    h = bath.h
    fv = fourier_grad(grid, eta) + eps / 2 * _grad_sq(grid, v)
    disp = h**3 / 3 * fourier_grad(grid, fourier_div(grid, v)) - h**2 * fourier_grad(
        grid, fourier_div(grid, h * v)
    )
    fe = fourier_div(grid, h * v) + eps * (
        fourier_div(grid, dealias(grid, eta * v)) - 0.5 * fourier_div(grid, disp)
    )
    return fv, fe


def forcing_s1(grid, v, eta, bath, eps, c: SmallCoeffs):
    a1, a3 = float(c.a1), float(c.a3)
    ge = fourier_grad(grid, eta)
    dv = fourier_div(grid, v)
    fv = ge + eps * (0.5 * _grad_sq(grid, v) + a1 * fourier_laplacian(grid, ge))
    fe = dv + eps * (
        fourier_div(grid, dealias(grid, eta * v) - bath.b * v) + a3 * fourier_laplacian(grid, dv)
    )
    return fv, fe


def forcing_t1(grid, v, eta, bath, eps, c: SmallCoeffs):
    a1, a3 = float(c.a1), float(c.a3)
    ge = fourier_grad(grid, eta)
    dv = fourier_div(grid, v)
    quad = (
        0.25 * fourier_grad(grid, dealias(grid, eta**2))
        + 0.25 * _grad_sq(grid, v)
        + 0.5 * _advect(grid, v)
        + 0.5 * dealias(grid, v * dv)
    )
    fv = ge + eps * (quad - 0.5 * bath.b * ge + a1 * fourier_laplacian(grid, ge))
    fe = dv + eps * (
        0.5 * fourier_div(grid, dealias(grid, eta * v) - bath.b * v)
        + a3 * fourier_laplacian(grid, dv)
    )
    return fv, fe


def _small_masses(grid, bath, eps, c: SmallCoeffs):
    a2, a4 = float(c.a2), float(c.a4)
    if a2 < 0 or a4 < 0:
        raise ValueError(f"mass coefficients must be >= 0, got a2={a2}, a4={a4}")
    return MassOperator(grid, helm=eps * a2), MassOperator(grid, helm=eps * a4)


# -- strong-regime systems ---------------------------------------------------

def nonlinear_fh(grid, v, eta, bath):
    """Quadratic terms ``(F_h, f_h)`` of the strong-bottom systems."""
    h, sh, gh = bath.h, bath.sqrt_h, bath.grad_h
    vv = dealias(grid, dot(v, v))
    big = (
        0.5 * fourier_grad(grid, dealias(grid, eta**2))
        + 0.5 * fourier_grad(grid, vv)
        + _advect(grid, v)
        + dealias(grid, v * fourier_div(grid, v))
        + (0.5 * dealias(grid, dot(gh, v) * v) - vv * gh) / h
    )
    small = fourier_div(grid, dealias(grid, eta * v)) - dealias(grid, eta * dot(gh, v)) / (2 * h)
    return big / sh, small / sh


def forcing_tb(grid, v, eta, bath, eps, coeffs=None):
    h, sh = bath.h, bath.sqrt_h
    big, small = nonlinear_fh(grid, v, eta, bath)
    fv = sh * fourier_grad(grid, eta) + eps / 2 * big
    disp = h**3 / 3 * fourier_grad(grid, fourier_div(grid, v / sh)) - h**2 * fourier_grad(
        grid, fourier_div(grid, sh * v)
    )
    fe = fourier_div(grid, sh * v) + eps / 2 * (small - fourier_div(grid, disp))
    return fv, fe


def forcing_s_strong(grid, v, eta, bath, eps, c: StrongCoeffs):
    h, sh, gh = bath.h, bath.sqrt_h, bath.grad_h
    b1, b2, b3, b4 = c.b
    c1, c2, c3, c4 = c.c
    big, small = nonlinear_fh(grid, v, eta, bath)
    ge = fourier_grad(grid, eta)
    ghge = dot(gh, ge)
    disp_v = (
        b1 * sh * fourier_grad(grid, fourier_div(grid, h**2 * ge))
        + b2 * sh * fourier_grad(grid, h * ghge)
        + b3 * gh * fourier_div(grid, h * sh * ge)
        + b4 * sh * gh * ghge
    )
    fv = sh * ge + eps / 2 * (big + disp_v)
    dshv = fourier_div(grid, sh * v)
    ghv = dot(gh, v)
    disp_e = fourier_div(
        grid,
        c1 * h**2 * fourier_grad(grid, dshv)
        + c2 * h * gh * dshv
        + c3 * h * sh * fourier_grad(grid, ghv)
        - c4 * sh * gh * ghv,
    )
    fe = dshv + eps / 2 * (small + disp_e)
    return fv, fe


def _strong_masses(grid, bath, eps, c: StrongCoeffs, exact_mass: bool = False):
    h, gh = bath.h, bath.grad_h
    t, l1, l2, mu = c.theta, c.lam1, c.lam2, c.mu
    k1 = (1 - t) * (1 - l1) * (t + 1)
    k2 = (1 - t) * 2 * (1 - l2)
    m1 = (1 - mu) * (t**2 - 1 / 3)
    m2 = (1 - mu) * (1.5 * t**2 - 7 / 6)

    def p1(v):
        return k1 * fourier_grad(grid, h**2 * fourier_div(grid, v)) + k2 * fourier_grad(
            grid, h * dot(gh, v)
        )

    def p2(e):
        return m1 * fourier_div(grid, h**2 * fourier_grad(grid, e)) + m2 * fourier_div(
            grid, h * gh * e
        )

    hbar2 = float(np.mean(h)) ** 2
    flat = bath.grad_h_sup == 0.0 and grid.d == 1
    mv = MassOperator(grid, lambda v: v - eps / 2 * p1(v), helm=eps / 2 * k1 * hbar2,
                      exact=flat and exact_mass)
    me = MassOperator(grid, lambda e: e - eps / 2 * p2(e), helm=eps / 2 * m1 * hbar2,
                      exact=flat and exact_mass)
    return mv, me


def mass_operators_strong(bath: Bathymetry, eps: float, c: StrongCoeffs):
    """The two strong-bottom mass operators (velocity, elevation)."""
    return _strong_masses(bath.grid, bath, eps, c)


def check_positivity(bath: Bathymetry, eps: float, c: StrongCoeffs):
    bounds = epsilon_positivity_bounds(c.theta, c.lam1, c.lam2, c.mu, bath.grad_h_sup)
    limit = min(bounds.velocity, bounds.elevation) if bounds.elevation_applicable else bounds.velocity
    if eps > limit:
        raise ValueError(f"eps={eps} exceeds the mass-operator positivity bound {limit:.4g}")


# -- registry ------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    name: str
    frame: Frame
    regime: Regime
    coeff_type: type | None
    forcing: Callable
    masses: Callable | None = None


MODELS = {
    "b1": ModelSpec("b1", Frame.SURFACE, Regime.SMALL, None, forcing_b1),
    "b2": ModelSpec("b2", Frame.SURFACE, Regime.STRONG, None, forcing_b2),
    "s1": ModelSpec("s1", Frame.THETA, Regime.SMALL, SmallCoeffs, forcing_s1, _small_masses),
    "t1": ModelSpec("t1", Frame.SYMMETRIZED, Regime.SMALL, SmallCoeffs, forcing_t1, _small_masses),
    "tb": ModelSpec("tb", Frame.SYMMETRIZED, Regime.STRONG, None, forcing_tb),
    "s_strong": ModelSpec("s_strong", Frame.THETA, Regime.STRONG, StrongCoeffs, forcing_s_strong,
                          _strong_masses),
}
MODEL_IDS = {name: i for i, name in enumerate(MODELS)}


@lru_cache(maxsize=64)
def _masses_cached(name, bath, eps, coeffs):
    spec = MODELS[name]
    grid = bath.grid
    if spec.masses is None:
        return _identity(grid), _identity(grid)
    if name == "s_strong":
        check_positivity(bath, eps, coeffs)
    return spec.masses(grid, bath, eps, coeffs)


def get_model(name: str) -> ModelSpec:
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(MODELS)}") from None


def _validate(spec: ModelSpec, state: WaveState, bath: Bathymetry, eps: float, coeffs):
    _require(state, spec.frame, bath, spec.regime)
    if not 0 <= eps < 1:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    if spec.coeff_type is not None and not isinstance(coeffs, spec.coeff_type):
        raise TypeError(f"model {spec.name} needs {spec.coeff_type.__name__} coefficients")
    if spec.regime is Regime.SMALL:
        bath.check_small_depth(eps)


def masses(name: str, bath: Bathymetry, eps: float, coeffs=None):
    return _masses_cached(name, bath, float(eps), coeffs)


def forcing(name: str, state: WaveState, bath: Bathymetry, eps: float, coeffs=None):
    """Explicit part ``(F_U, F_eta)`` of a system (no mass inversion)."""
    spec = get_model(name)
    _validate(spec, state, bath, eps, coeffs)
    return spec.forcing(bath.grid, state.u, state.eta, bath, eps, coeffs)


def rhs(name: str, state: WaveState, bath: Bathymetry, eps: float, coeffs=None) -> WaveState:
    """Time derivative of ``state`` under model ``name``."""
    fv, fe = forcing(name, state, bath, eps, coeffs)
    mv, me = masses(name, bath, eps, coeffs)
    return WaveState(-me.solve(fe), -mv.solve(fv), state.frame)


def rhs_b1(state, bath, eps):
    return rhs("b1", state, bath, eps)


def rhs_b2(state, bath, eps):
    return rhs("b2", state, bath, eps)


def rhs_s1(state, bath, eps, c: SmallCoeffs):
    return rhs("s1", state, bath, eps, c)


def rhs_t1(state, bath, eps, c: SmallCoeffs):
    return rhs("t1", state, bath, eps, c)


def rhs_tb(state, bath, eps):
    return rhs("tb", state, bath, eps)


def rhs_s_strong(state, bath, eps, c: StrongCoeffs):
    return rhs("s_strong", state, bath, eps, c)


def energy(name: str, state: WaveState, bath: Bathymetry, eps: float, coeffs=None) -> float:
    """Quadratic energy ``((M_U U, U) + (M_eta eta, eta)) / 2``."""
    grid = bath.grid
    if state.frame is Frame.POTENTIAL:
        v = fourier_grad(grid, state.u)
        return 0.5 * (grid.inner(v, v) + grid.inner(state.eta, state.eta))
    mv, me = masses(name, bath, eps, coeffs)
    return 0.5 * (grid.inner(mv(state.u), state.u) + grid.inner(me(state.eta), state.eta))


def linearized_generator(name: str, bath: Bathymetry, eps: float, coeffs=None) -> np.ndarray:
    """Dense matrix of the system linearized about rest, acting on ``(eta, U)``.

    The explicit part is at most quadratic, so a centered difference with
    amplitude ``delta`` isolates its linear part exactly up to rounding. The
    mass operators are inverted with a dense solve.
    """
    spec = get_model(name)
    grid = bath.grid
    zero = WaveState(grid.zeros(), grid.zeros_vector(), spec.frame)
    n = zero.flat().size
    delta = 1e-3
    kmat = np.empty((n, n))
    eye = np.eye(n)
    for i in range(n):
        plus = forcing(name, zero.like(delta * eye[i]), bath, eps, coeffs)
        minus = forcing(name, zero.like(-delta * eye[i]), bath, eps, coeffs)
        kmat[:, i] = np.concatenate([(plus[1] - minus[1]).ravel(), (plus[0] - minus[0]).ravel()]) / (2 * delta)
    mv, me = masses(name, bath, eps, coeffs)
    ne = grid.zeros().size
    mass = np.zeros((n, n))
    mass[:ne, :ne] = me.matrix(grid.shape)
    mass[ne:, ne:] = mv.matrix((grid.d,) + grid.shape)
    return -np.linalg.solve(mass, kmat)


# -- changes of variables ------------------------------------------------------

def to_theta_frame_small(grid: Grid, v, eps: float, theta: float):
    return v + eps / 2 * (1 - theta**2) * fourier_laplacian(grid, v)


def from_theta_frame_small(grid: Grid, v_theta, eps: float, theta: float):
    """Approximate inverse of :func:`to_theta_frame_small` (error of order eps^2)."""
    return v_theta + eps / 2 * (theta**2 - 1) * fourier_laplacian(grid, v_theta)


def symmetrize_small(v, eta, b, eps: float):
    return (1 + eps / 2 * (eta - b)) * v


def desymmetrize_small(v_tilde, eta, b, eps: float):
    """Approximate inverse of :func:`symmetrize_small`."""
    return (1 - eps / 2 * (eta - b)) * v_tilde


def symmetrize_strong(v, eta, bath: Bathymetry, eps: float):
    sh = bath.sqrt_h
    return (sh + eps / 2 * eta / sh) * v


def desymmetrize_strong(v_tilde, eta, bath: Bathymetry, eps: float):
    """Approximate inverse of :func:`symmetrize_strong`."""
    h, sh = bath.h, bath.sqrt_h
    return (1 / sh - eps / 2 * eta / (h * sh)) * v_tilde


def _theta_operator(grid, v, h, theta):
    return theta * fourier_grad(grid, h**2 * fourier_div(grid, v)) + fourier_grad(
        grid, fourier_div(grid, h**2 * v)
    )


def to_theta_frame_strong(v, bath: Bathymetry, eps: float, theta: float):
    return v - eps / 2 * (theta - 1) * _theta_operator(bath.grid, v, bath.h, theta)


def from_theta_frame_strong(v_theta, bath: Bathymetry, eps: float, theta: float):
    """Approximate inverse of :func:`to_theta_frame_strong`."""
    return v_theta + eps / 2 * (theta - 1) * _theta_operator(bath.grid, v_theta, bath.h, theta)


def model_coeff_theta(coeffs) -> float:
    return float(coeffs.theta) if coeffs is not None else 1.0


def to_model_frame(name: str, state: WaveState, bath: Bathymetry, eps: float, coeffs=None) -> WaveState:
    """Map a surface-velocity state into the frame of model ``name``."""
    spec = get_model(name)
    if state.frame is not Frame.SURFACE:
        raise FrameError("expected a surface-velocity state")
    grid, v, eta = bath.grid, state.u, state.eta
    if spec.frame is Frame.SURFACE:
        return state
    if spec.regime is Regime.SMALL:
        theta = model_coeff_theta(coeffs)
        vt = to_theta_frame_small(grid, v, eps, theta)
        if spec.frame is Frame.SYMMETRIZED:
            vt = symmetrize_small(vt, eta, bath.b, eps)
        return WaveState(eta, vt, spec.frame)
    vt = symmetrize_strong(v, eta, bath, eps)
    if spec.frame is Frame.THETA:
        vt = to_theta_frame_strong(vt, bath, eps, model_coeff_theta(coeffs))
    return WaveState(eta, vt, spec.frame)


def from_model_frame(name: str, state: WaveState, bath: Bathymetry, eps: float, coeffs=None) -> WaveState:
    """Approximate inverse of :func:`to_model_frame`."""
    spec = get_model(name)
    if state.frame is not spec.frame:
        raise FrameError(f"expected a {spec.frame.value} state, got {state.frame.value}")
    grid, v, eta = bath.grid, state.u, state.eta
    if spec.frame is Frame.SURFACE:
        return state
    if spec.regime is Regime.SMALL:
        if spec.frame is Frame.SYMMETRIZED:
            v = desymmetrize_small(v, eta, bath.b, eps)
        v = from_theta_frame_small(grid, v, eps, model_coeff_theta(coeffs))
        return WaveState(eta, v, Frame.SURFACE)
    if spec.frame is Frame.THETA:
        v = from_theta_frame_strong(v, bath, eps, model_coeff_theta(coeffs))
    v = desymmetrize_strong(v, eta, bath, eps)
    return WaveState(eta, v, Frame.SURFACE)


def frame_of(name: str) -> Frame:
    return get_model(name).frame


def symmetric_default(regime: Regime):
    """Default symmetric coefficient choice for each regime."""
    from .coeffs import SIGMA_DEFAULT, REFERENCE_ROOT, solve_symmetric_strong

    if Regime(regime) is Regime.SMALL:
        assert is_symmetric_small(SIGMA_DEFAULT)
        return SIGMA_DEFAULT
    return solve_symmetric_strong(REFERENCE_ROOT).coeffs


# -- studies -------------------------------------------------------------------

def random_localized_field(grid: Grid, rng: np.random.Generator, max_wavenumber: float = 6.0,
                           width: tuple[float, float] = (0.05, 0.6)) -> np.ndarray:
    """Periodic Gaussian wave packet with random centre, width, carrier and phase."""
    env = np.ones(grid.shape)
    for axis in range(grid.d):
        c = rng.uniform(0, grid.length)
        w = rng.uniform(*width) * grid.length / (2 * np.pi)
        dist = (grid.x[axis] - c + grid.length / 2) % grid.length - grid.length / 2
        env = env * np.exp(-((dist / w) ** 2))
    k = rng.uniform(0, max_wavenumber)
    phase = rng.uniform(0, 2 * np.pi)
    return env * np.cos(k * 2 * np.pi / grid.length * grid.x[0] + phase)


@dataclass(frozen=True)
class PositivitySample:
    operator: str
    epsilon: float
    samples: int
    violations: int
    min_quotient: float


def mass_positivity_sample(bath: Bathymetry, eps: float, c: StrongCoeffs, samples: int = 1000,
                           seed: int = 0) -> tuple[PositivitySample, PositivitySample]:
    """Sample the quadratic forms ``(u, M u)`` of both strong-bottom mass operators.

    The quotient ``(u, M u) / |u|^2`` is recorded; a violation is a quotient
    ``<= 0``. The same random fields are used for both operators.
    """
    grid = bath.grid
    rng = np.random.default_rng(seed)
    mv, me = mass_operators_strong(bath, eps, c)
    qv, qe = [], []
    for _ in range(samples):
        u = random_localized_field(grid, rng)
        vec = np.zeros((grid.d,) + grid.shape)
        vec[0] = u
        nrm = grid.inner(u, u)
        qv.append(grid.inner(vec, mv(vec)) / nrm)
        qe.append(grid.inner(u, me(u)) / nrm)
    out = []
    for name, q in (("velocity", np.array(qv)), ("elevation", np.array(qe))):
        out.append(PositivitySample(name, float(eps), samples, int((q <= 0).sum()), float(q.min())))
    return tuple(out)


def roundtrip_errors(bath_small: Bathymetry, bath_strong: Bathymetry, v, eta, eps: float,
                     theta_small: float, theta_strong: float) -> dict[str, float]:
    """Relative L2 defects of the four changes of variables composed with their inverses."""
    grid = bath_small.grid

    def rel(a, b):
        return grid.norm(a - b) / grid.norm(b)

    return {
        "theta_small": rel(from_theta_frame_small(grid, to_theta_frame_small(grid, v, eps, theta_small),
                                                  eps, theta_small), v),
        "symmetrize_small": rel(desymmetrize_small(symmetrize_small(v, eta, bath_small.b, eps),
                                                   eta, bath_small.b, eps), v),
        "symmetrize_strong": rel(desymmetrize_strong(symmetrize_strong(v, eta, bath_strong, eps),
                                                     eta, bath_strong, eps), v),
        "theta_strong": rel(from_theta_frame_strong(to_theta_frame_strong(v, bath_strong, eps, theta_strong),
                                                    bath_strong, eps, theta_strong), v),
    }
