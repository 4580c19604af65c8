"""Breather family: Newton solver and exact rational series.

A breather with frequency offset phi is a real amplitude vector p* solving

    F_j(p; eps, phi) = -eps (Lap p)_j - (1 + phi) p_j + p_j^3 = 0 .

The branch of interest is the one continued from p = (1, 0, ..., 0) at
eps = 0; its amplitudes decay like |p*_j| ~ eps^(j-1).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BasinViolation, NewtonDivergence, PoleError, SingularMatrix
from .lattice import SystemParams, laplacian, laplacian_matrix

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
EPSILON_BASIN = 0.2
PHI_BASIN = 0.2


@dataclass(frozen=True)
class BreatherProfile:
    """One member of the breather family."""

    phi: float
    amplitudes: np.ndarray
    residual_norm: float
    epsilon: float

    @property
    def n_sites(self) -> int:
        return self.amplitudes.shape[0]

    def decay_constant(self) -> float:
        """Smallest K with |amplitudes[j]| <= K * eps^(j-1) for all j.

        K stays O(1) on the localized branch and blows up if the solve
        escaped to a delocalized root.
        """
        if self.epsilon == 0.0:
            return float(np.max(np.abs(self.amplitudes)))
        powers = self.epsilon ** np.arange(self.n_sites)
        return float(np.max(np.abs(self.amplitudes) / powers))


@dataclass(frozen=True)
class SeriesTable:
    """Exact rational coefficients c[j][k] of p*_j = sum_k c[j][k] eps^k at phi=0."""

    order: int
    coefficients: tuple  # tuple of per-site tuples of Fraction

    @property
    def n_sites(self) -> int:
        return len(self.coefficients)


def residual(p: np.ndarray, epsilon: float, phi: float) -> np.ndarray:
    """Fixed-point residual F(p; eps, phi), componentwise."""
    p = np.asarray(p, dtype=float)
    return -epsilon * laplacian(p) - (1.0 + phi) * p + p ** 3


def residual_jacobian(p: np.ndarray, epsilon: float, phi: float) -> np.ndarray:
    """Jacobian dF/dp = -eps*Lap - (1+phi) I + 3 diag(p^2)."""
    n = p.shape[0]
    return (
        -epsilon * laplacian_matrix(n)
        - (1.0 + phi) * np.eye(n)
        + 3.0 * np.diag(p ** 2)
    )


def solve_breather(
    params: SystemParams,
    phi: float = 0.0,
    seed: np.ndarray | None = None,
    allow_outside_basin: bool = False,
) -> BreatherProfile:
    """Newton iteration for the breather amplitudes at (params.epsilon, phi).

    Seeds at p0_j = delta_{j,1} unless an explicit seed is given.  The
    (eps, phi) basin bounds are conservative and can be overridden; outside
    them the iteration may diverge or land on a different root.
    """
    eps = params.epsilon
    if not allow_outside_basin:
        if eps >= EPSILON_BASIN or abs(phi) >= PHI_BASIN:
            raise BasinViolation(
                f"(epsilon={eps}, phi={phi}) outside validated basin "
                f"(eps < {EPSILON_BASIN}, |phi| < {PHI_BASIN}); "
                "pass allow_outside_basin=True to override"
            )
    n = params.n_sites
    if seed is None:
        p = np.zeros(n)
        p[0] = 1.0
    else:
        p = np.asarray(seed, dtype=float).copy()
        if p.shape != (n,):
            raise ValueError(f"seed must have shape ({n},)")

    last_norm = np.inf
    for _ in range(NEWTON_MAX_ITER):
        F = residual(p, eps, phi)
        last_norm = float(np.max(np.abs(F)))
        if last_norm < NEWTON_TOL:
            return BreatherProfile(
                phi=phi, amplitudes=p, residual_norm=last_norm, epsilon=eps
            )
        J = residual_jacobian(p, eps, phi)
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix(f"singular Jacobian at residual {last_norm:g}") from exc
        if not np.all(np.isfinite(step)):
            raise NewtonDivergence("Newton step non-finite", p, last_norm)
        p = p - step
    raise NewtonDivergence(
        f"no convergence in {NEWTON_MAX_ITER} iterations "
        f"(residual {last_norm:g})",
        p,
        last_norm,
    )


def breather_series(n_sites: int, order: int) -> SeriesTable:
    """Exact eps-series of the breather amplitudes at phi = 0.

    Equating powers of eps in F(p) = 0 gives a triangular hierarchy: with
    p = sum_k c^k eps^k and c^0 = delta_{j,1}, order k >= 1 requires

        (3 delta_{j,1} - 1) c^k_j = (Lap c^(k-1))_j - S^k_j ,

    where S^k_j collects the cubic cross terms sum_{a+b+c=k, a,b,c<k}
    c^a_j c^b_j c^c_j.  Everything is rational, so the table is exact.
    """
    if n_sites < 2:
        raise ValueError("n_sites must be >= 2")
    if order < 0:
        raise ValueError("order must be >= 0")
    zero = Fraction(0)
    c = [[zero] * (order + 1) for _ in range(n_sites)]
    c[0][0] = Fraction(1)

    def lap(vec):
        out = [zero] * n_sites
        out[0] = vec[1] - vec[0]
        out[-1] = vec[-2] - vec[-1]
        for j in range(1, n_sites - 1):
            out[j] = vec[j - 1] - 2 * vec[j] + vec[j + 1]
        return out

    for k in range(1, order + 1):
        prev = [c[j][k - 1] for j in range(n_sites)]
        lap_prev = lap(prev)
        for j in range(n_sites):
            cross = zero
            for a in range(k + 1):
                for b in range(k + 1 - a):
                    cc = k - a - b
                    if a == k or b == k or cc == k:
                        continue
                    cross += c[j][a] * c[j][b] * c[j][cc]
            diag = Fraction(3 if j == 0 else 0) - 1
            c[j][k] = (lap_prev[j] - cross) / diag

    return SeriesTable(order=order, coefficients=tuple(tuple(row) for row in c))


def leading_coefficient(site: int, phi: float) -> float:
    """Coefficient of eps^(j-1) in p*_j(eps, phi): (-1)^(j-1) (1+phi)^-(j-1)."""
    if site < 1:
        raise ValueError("site index starts at 1")
    if phi == -1.0:
        raise PoleError("leading coefficient has a pole at phi = -1")
    j = site - 1
    return float((-1.0) ** j / (1.0 + phi) ** j)


def evaluate_series(table: SeriesTable, epsilon: float) -> np.ndarray:
    """Evaluate the series per site (Horner in exact rationals, one float cast)."""
    if not -1.0 < epsilon < 1.0:
        raise ValueError("series evaluation requires |epsilon| < 1")
    eps = Fraction(epsilon)  # exact binary value of the float
    out = np.empty(table.n_sites)
    for j, coeffs in enumerate(table.coefficients):
        acc = Fraction(0)
        for ck in reversed(coeffs):
            acc = acc * eps + ck
        out[j] = float(acc)
    return out


def series_csv_rows(table: SeriesTable):
    """Rows (site, power, numerator, denominator) for CSV export."""
    for j, coeffs in enumerate(table.coefficients, start=1):
        for k, ck in enumerate(coeffs):
            yield j, k, ck.numerator, ck.denominator
