"""Lattice state, parameters, vector field and energies.

The model is the damped discrete NLS chain in its rotating frame, written in
real variables w_j = p_j + i q_j:

    dq_j/dt = -eps (Lap p)_j - p_j + (p_j^2 + q_j^2) p_j - delta_{jN} gamma eps q_N
    dp_j/dt = +eps (Lap q)_j + q_j - (p_j^2 + q_j^2) q_j - delta_{jN} gamma eps p_N

with the free-end discrete Laplacian (Lap u)_1 = u_2 - u_1,
(Lap u)_j = u_{j-1} - 2 u_j + u_{j+1}, (Lap u)_N = u_{N-1} - u_N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, UndefinedScaling


@dataclass(frozen=True)
class SystemParams:
    """Lattice size N, coupling epsilon and damping gamma."""

    n_sites: int
    epsilon: float
    gamma: float = 0.0

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError(f"n_sites must be >= 2, got {self.n_sites}")
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")


@dataclass(frozen=True)
class RealState:
    """Real and imaginary parts (p, q) of the lattice field."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if p.ndim != 1 or q.ndim != 1 or p.shape != q.shape:
            raise DimensionMismatch(
                f"p and q must be equal-length vectors, got {p.shape} and {q.shape}"
            )
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ValueError("state contains non-finite entries")

    @property
    def n_sites(self) -> int:
        return self.p.shape[0]

    def flat(self) -> np.ndarray:
        """Single vector ordered (p_1..p_N, q_1..q_N)."""
        return np.concatenate([self.p, self.q])

    @staticmethod
    def from_flat(y: np.ndarray) -> "RealState":
        y = np.asarray(y, dtype=float)
        n = y.shape[0] // 2
        return RealState(y[:n].copy(), y[n:].copy())


@dataclass(frozen=True)
class Observables:
    """Energies recorded along a trajectory."""

    hamiltonian_value: float
    ell2_energy: float
    site_energies: np.ndarray


def laplacian(u: np.ndarray) -> np.ndarray:
    """Free-end discrete Laplacian."""
    out = np.empty_like(u)
    out[0] = u[1] - u[0]
    out[-1] = u[-2] - u[-1]
    if u.shape[0] > 2:
        out[1:-1] = u[:-2] - 2.0 * u[1:-1] + u[2:]
    return out


def laplacian_matrix(n: int) -> np.ndarray:
    """Dense matrix of the free-end Laplacian."""
    d = np.full(n, -2.0)
    d[0] = d[-1] = -1.0
    return np.diag(d) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)


def _check(state: RealState, params: SystemParams):
    if state.n_sites != params.n_sites:
        raise DimensionMismatch(
            f"state has {state.n_sites} sites, params expect {params.n_sites}"
        )


def vector_field(state: RealState, params: SystemParams) -> RealState:
    """Time derivative (dp/dt, dq/dt) of the damped rotating-frame system."""
    _check(state, params)
    p, q = state.p, state.q
    eps, gamma = params.epsilon, params.gamma
    r2 = p * p + q * q
    dq = -eps * laplacian(p) - p + r2 * p
    dp = eps * laplacian(q) + q - r2 * q
    dq[-1] -= gamma * eps * q[-1]
    dp[-1] -= gamma * eps * p[-1]
    return RealState(dp, dq)


def hamiltonian(state: RealState, params: SystemParams) -> float:
    """Energy of the undamped system; gamma is ignored by construction."""
    _check(state, params)
    p, q = state.p, state.q
    coupling = 0.5 * params.epsilon * np.sum(
        (p[:-1] - p[1:]) ** 2 + (q[:-1] - q[1:]) ** 2
    )
    r2 = p * p + q * q
    onsite = np.sum(0.5 * r2 - 0.25 * r2 * r2)
    return float(coupling - onsite)


def site_energies(state: RealState) -> np.ndarray:
    """Per-site energies p_j^2 + q_j^2."""
    return state.p ** 2 + state.q ** 2


def ell2_energy(state: RealState) -> float:
    """Half the squared l2 norm of the field."""
    return float(0.5 * np.sum(site_energies(state)))


def energy_flux(state: RealState, params: SystemParams) -> float:
    """Instantaneous rate of change of ell2_energy; only the damped end
    contributes, so this is -gamma*eps*(p_N^2 + q_N^2) <= 0."""
    _check(state, params)
    return float(-params.gamma * params.epsilon * (state.p[-1] ** 2 + state.q[-1] ** 2))


def observables(state: RealState, params: SystemParams) -> Observables:
    return Observables(
        hamiltonian_value=hamiltonian(state, params),
        ell2_energy=ell2_energy(state),
        site_energies=site_energies(state),
    )


def to_physical_frame(state: RealState, params: SystemParams, t: float):
    """Undo the amplitude rescaling and frame rotation.

    Returns (u, tau) with u_j = eps^(-1/2) e^(it) (p_j + i q_j) and tau = eps*t.
    """
    _check(state, params)
    if params.epsilon == 0.0:
        raise UndefinedScaling("physical frame is undefined at epsilon = 0")
    scale = params.epsilon ** -0.5
    u = scale * np.exp(1j * t) * (state.p + 1j * state.q)
    return u, params.epsilon * t


def rotate(state: RealState, theta: float) -> RealState:
    """Rotate every (p_j, q_j) pair by theta, i.e. w -> e^(i theta) w."""
    c, s = np.cos(theta), np.sin(theta)
    return RealState(c * state.p - s * state.q, s * state.p + c * state.q)
