"""Coefficients of the model families and their symmetry conditions.

Small-bottom family: weights ``(theta, lam, mu)`` give the four dispersive
coefficients ``a1..a4``. Strong-bottom family: weights
``(theta, lam1, lam2, mu)`` give ``b1..b4`` (velocity equation) and ``c1..c4``
(elevation equation).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

# published approximation of the symmetric strong-bottom root
REFERENCE_ROOT = (0.6318, -0.3416, -2.8209, -3.1157)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def _check_theta(theta):
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")


@dataclass(frozen=True)
class SmallCoeffs:
    """Dispersive coefficients of the small-bottom family.

    ``theta_sq`` is stored instead of theta so that exact rational inputs
    (e.g. ``Fraction(2, 3)``) stay exact.
    """

    theta_sq: float
    lam: float
    mu: float

    def __post_init__(self):
        if not 0 <= self.theta_sq <= 1:
            raise ValueError(f"theta must lie in [0, 1], got theta^2={self.theta_sq}")

    @property
    def theta(self) -> float:
        return float(np.sqrt(float(self.theta_sq)))

    @property
    def a1(self):
        return -self.mu * (self.theta_sq - 1) / 2

    @property
    def a2(self):
        return (self.mu - 1) * (self.theta_sq - 1) / 2

    @property
    def a3(self):
        return self.lam * (self.theta_sq / 2 - Fraction(1, 6))

    @property
    def a4(self):
        return (1 - self.lam) * (self.theta_sq / 2 - Fraction(1, 6))

    @property
    def a(self) -> tuple:
        return (self.a1, self.a2, self.a3, self.a4)


def coeffs_small(theta: float, lam: float, mu: float) -> SmallCoeffs:
    _check_theta(theta)
    return SmallCoeffs(theta * theta, lam, mu)


def is_symmetric_small(c: SmallCoeffs, tol: float = 1e-12) -> bool:
    """Membership in the symmetric subclass: a1 = a3, a2 >= 0, a4 >= 0."""
    return abs(float(c.a1) - float(c.a3)) <= tol and c.a2 >= 0 and c.a4 >= 0


# convenient symmetric member with all four coefficients equal to 1/12
SIGMA_DEFAULT = SmallCoeffs(Fraction(2, 3), Fraction(1, 2), Fraction(1, 2))


@dataclass(frozen=True)
class StrongCoeffs:
    """Dispersive coefficients of the strong-bottom family."""

    theta: float
    lam1: float
    lam2: float
    mu: float

    def __post_init__(self):
        _check_theta(self.theta)

    @property
    def b(self) -> tuple[float, float, float, float]:
        t, l1, l2 = self.theta, self.lam1, self.lam2
        return (
            l1 * (1 - t**2),
            (1 - t) * (2 * l2 - 1.5 * l1 * (1 + t)),
            l1 / 2 * (1 - t**2),
            (1 - t) * (l2 - l1 / 2 * (1 + t)),
        )

    @property
    def c(self) -> tuple[float, float, float, float]:
        t, mu = self.theta, self.mu
        return (
            mu * (t**2 - 1 / 3),
            mu * (1.5 * t**2 - 7 / 6),
            -(t**2) / 2 + 2 * t - 7 / 6,
            0.5 * (t - 2) ** 2,
        )

    @property
    def params(self) -> np.ndarray:
        return np.array([self.theta, self.lam1, self.lam2, self.mu])


def coeffs_strong(theta: float, lam1: float, lam2: float, mu: float) -> StrongCoeffs:
    return StrongCoeffs(theta, lam1, lam2, mu)


def symmetry_residual_strong(theta, lam1, lam2, mu) -> np.ndarray:
    """Residual ``(b1-c1, b2+c2, b3-c3, b4+c4)`` of the symmetry conditions.

    Evaluated without the theta range check so Newton iterates may leave [0, 1].
    """
    t = theta
    b = (
        lam1 * (1 - t**2),
        (1 - t) * (2 * lam2 - 1.5 * lam1 * (1 + t)),
        lam1 / 2 * (1 - t**2),
        (1 - t) * (lam2 - lam1 / 2 * (1 + t)),
    )
    c = (
        mu * (t**2 - 1 / 3),
        mu * (1.5 * t**2 - 7 / 6),
        -(t**2) / 2 + 2 * t - 7 / 6,
        0.5 * (t - 2) ** 2,
    )
    return np.array([b[0] - c[0], b[1] + c[1], b[2] - c[2], b[3] + c[3]])


def _residual(p):
    return symmetry_residual_strong(*p)


def newton(fun, x0, tol: float = 1e-12, max_iter: int = 50, step: float = 1e-7):
    """Newton iteration with a forward-difference Jacobian.

    Returns ``(x, residual_norm, iterations)``; raises ConvergenceError when the
    max-norm of ``fun`` is not below ``tol`` after ``max_iter`` iterations.
    """
    x = np.array(x0, dtype=float)
    r = fun(x)
    for it in range(max_iter + 1):
        res = float(np.max(np.abs(r)))
        if res <= tol:
            return x, res, it
        if it == max_iter or not np.all(np.isfinite(x)):
            break
        jac = np.empty((len(r), len(x)))
        for j in range(len(x)):
            xp = x.copy()
            xp[j] += step
            jac[:, j] = (fun(xp) - r) / step
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular Jacobian", res) from None
        x = x + dx
        r = fun(x)
    raise ConvergenceError("Newton did not converge", float(np.max(np.abs(r))))


@dataclass(frozen=True)
class SymmetricRoot:
    coeffs: StrongCoeffs
    residual: float
    iterations: int
    alternatives: tuple[StrongCoeffs, ...] = field(default=())


def solve_symmetric_strong(initial_guess, extra_guesses=(), tol: float = 1e-12) -> SymmetricRoot:
    """Solve the symmetry conditions of the strong-bottom family.

    Every guess is refined by Newton. Converged roots with theta in [0, 1] are
    kept; the one nearest the published approximation is returned and the
    others are listed in ``alternatives``.

    Raises
    ------
    ConvergenceError
        No guess converged.
    ValueError
        Roots were found but none has theta in [0, 1].
    """
    guesses = [initial_guess, *extra_guesses]
    found, rejected, errors = [], [], []
    for g in guesses:
        g = np.asarray(g, dtype=float)
        if g.shape != (4,):
            raise ValueError("a guess is the 4-vector (theta, lam1, lam2, mu)")
        try:
            x, res, it = newton(_residual, g, tol=tol)
        except ConvergenceError as exc:
            errors.append(exc)
            continue
        if 0 <= x[0] <= 1:
            found.append((x, res, it))
        else:
            rejected.append(x)
    if not found:
        if rejected:
            raise ValueError(f"converged roots have theta outside [0, 1]: {[r.tolist() for r in rejected]}")
        raise errors[0]
    ref = np.array(REFERENCE_ROOT)
    found.sort(key=lambda item: np.linalg.norm(item[0] - ref))
    unique = []
    for x, res, it in found:
        if all(np.linalg.norm(x - u[0]) > 1e-8 for u in unique):
            unique.append((x, res, it))
    x, res, it = unique[0]
    alts = tuple(StrongCoeffs(*u[0]) for u in unique[1:])
    return SymmetricRoot(StrongCoeffs(*x), res, it, alts)


class PositivityBounds(NamedTuple):
    """Largest eps keeping the two strong-bottom mass operators positive."""

    velocity: float
    elevation: float
    elevation_applicable: bool


def epsilon_positivity_bounds(theta, lam1, lam2, mu, grad_h_norm: float) -> PositivityBounds:
    """Sufficient eps bounds for positivity of the two mass operators.

    ``grad_h_norm`` is the sup norm of ``|grad h|``; zero gives unbounded
    (infinite) bounds. The elevation bound needs ``theta^2 > 1/3`` and is
    NaN with ``elevation_applicable=False`` otherwise.
    """
    if grad_h_norm < 0:
        raise ValueError("grad_h_norm must be >= 0")
    t = theta
    g2 = grad_h_norm**2
    applicable = t**2 > 1 / 3
    denom1 = (1 - t) * (1 - lam2) ** 2 * g2
    eps1 = np.inf if denom1 == 0 else 2 * (1 + t) * (1 - lam1) / denom1
    if not applicable:
        eps2 = float("nan")
    else:
        denom2 = (1 - mu) * (1.5 * t**2 - 7 / 6) ** 2 * g2
        eps2 = np.inf if denom2 == 0 else 8 * (t**2 - 1 / 3) / denom2
    return PositivityBounds(float(eps1), float(eps2), applicable)
