"""Long-time integration with online downcrossing detection.

Classical fixed-step RK4 on the flat state y = (p_1..p_N, q_1..q_N).  The
hot loop is a numba kernel advancing one sampling chunk at a time while
logging p_1 at every raw step; the Python side scans the log for sign
changes and refines each crossing by bisection on a frozen one-step
propagator.  Fixed step plus branch-free kernels make trajectories
bit-reproducible for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .breather import BreatherProfile
from .errors import BlowUp, InsufficientData, InvalidWindow
from .lattice import Observables, RealState, SystemParams, hamiltonian, rotate

CROSSING_TOL = 1e-10
CROSSING_MAX_BISECT = 60


@njit(cache=True)
def _field_flat(y, n, eps, gamma, out):
    for j in range(n):
        pj = y[j]
        qj = y[n + j]
        pl = y[j - 1] if j > 0 else pj
        pr = y[j + 1] if j < n - 1 else pj
        ql = y[n + j - 1] if j > 0 else qj
        qr = y[n + j + 1] if j < n - 1 else qj
        r2 = pj * pj + qj * qj
        out[j] = eps * (ql - 2.0 * qj + qr) + qj - r2 * qj
        out[n + j] = -eps * (pl - 2.0 * pj + pr) - pj + r2 * pj
    out[n - 1] -= gamma * eps * y[n - 1]
    out[2 * n - 1] -= gamma * eps * y[2 * n - 1]


@njit(cache=True)
def _rk4_flat(y, n, eps, gamma, dt, k1, k2, k3, k4, tmp, out):
    m = 2 * n
    _field_flat(y, n, eps, gamma, k1)
    for i in range(m):
        tmp[i] = y[i] + 0.5 * dt * k1[i]
    _field_flat(tmp, n, eps, gamma, k2)
    for i in range(m):
        tmp[i] = y[i] + 0.5 * dt * k2[i]
    _field_flat(tmp, n, eps, gamma, k3)
    for i in range(m):
        tmp[i] = y[i] + dt * k3[i]
    _field_flat(tmp, n, eps, gamma, k4)
    for i in range(m):
        out[i] = y[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def _advance_chunk(y, n, eps, gamma, dt, nsteps, p1_log):
    """Advance nsteps in place, logging p_1 after every step."""
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    tmp = np.empty_like(y)
    out = np.empty_like(y)
    for s in range(nsteps):
        _rk4_flat(y, n, eps, gamma, dt, k1, k2, k3, k4, tmp, out)
        for i in range(2 * n):
            y[i] = out[i]
        p1_log[s] = y[0]


def rk4_step(y: np.ndarray, params: SystemParams, dt: float) -> np.ndarray:
    """One RK4 step of the flat state (used by tests and refinement)."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    k = [np.empty_like(y) for _ in range(5)]
    _rk4_flat(y, params.n_sites, params.epsilon, params.gamma, dt,
              k[0], k[1], k[2], k[3], k[4], out)
    return out


def default_time_step(phi_scale: float = 1.0) -> float:
    """Step size resolving the fast O(1) rotation: min(0.01, 2pi/(200*scale))."""
    return min(0.01, 2.0 * np.pi / (200.0 * max(1.0, abs(phi_scale))))


@dataclass(frozen=True)
class IntegrationConfig:
    t_end: float
    dt: float = 0.01
    sample_stride: int = 100
    method: str = "rk4"

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        if self.method != "rk4":
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class CrossingLog:
    """Times T_k at which p_1 crossed zero downward, k = 1, 2, ..."""

    times: np.ndarray

    def __len__(self):
        return self.times.shape[0]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("crossing times must be strictly increasing")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray          # (n_samples, 2N)
    hamiltonian: np.ndarray
    ell2: np.ndarray
    site_energies: np.ndarray   # (n_samples, N)
    crossings: CrossingLog
    params: SystemParams
    config: IntegrationConfig

    def state(self, i: int) -> RealState:
        return RealState.from_flat(self.states[i])

    def observables(self, i: int) -> Observables:
        return Observables(
            hamiltonian_value=float(self.hamiltonian[i]),
            ell2_energy=float(self.ell2[i]),
            site_energies=self.site_energies[i],
        )


def detect_downcrossings(p1_prev, p1_curr, t_prev, t_curr, refine):
    """Refined time of a downcrossing of p_1 in (t_prev, t_curr], or None.

    A crossing is p1_prev > 0 >= p1_curr.  `refine(h)` must return p_1 a
    sub-step h after t_prev, from the frozen state at t_prev; bisection
    runs until |p_1| < CROSSING_TOL or CROSSING_MAX_BISECT halvings.
    """
    if not (p1_prev > 0.0 >= p1_curr):
        return None
    lo = 0.0
    hi = t_curr - t_prev
    h = hi
    for _ in range(CROSSING_MAX_BISECT):
        h = 0.5 * (lo + hi)
        val = refine(h)
        if abs(val) < CROSSING_TOL:
            break
        if val > 0.0:
            lo = h
        else:
            hi = h
    return t_prev + h


def integrate(initial: RealState, params: SystemParams, config: IntegrationConfig) -> Trajectory:
    """Fixed-step RK4 trajectory with sampled observables and crossing log.

    The crossing detector runs on every raw step.  Any non-finite state
    aborts with BlowUp carrying the last finite sample time.
    """
    if initial.n_sites != params.n_sites:
        raise ValueError("initial state size does not match params")
    n = params.n_sites
    eps, gamma, dt = params.epsilon, params.gamma, config.dt
    n_steps = config.n_steps
    stride = config.sample_stride

    y = initial.flat()
    n_chunks, rem = divmod(n_steps, stride)
    sample_times = [0.0]
    samples = [y.copy()]
    crossings: list[float] = []
    p1_log = np.empty(stride)

    scratch = [np.empty_like(y) for _ in range(6)]

    def refine_factory(y_at_step):
        def refine(h):
            out = scratch[5]
            _rk4_flat(y_at_step, n, eps, gamma, h,
                      scratch[0], scratch[1], scratch[2], scratch[3], scratch[4], out)
            return out[0]
        return refine

    step0 = 0
    last_good = 0.0
    for chunk in range(n_chunks + 1):
        csteps = stride if chunk < n_chunks else rem
        if csteps == 0:
            break
        y_start = y.copy()
        _advance_chunk(y, n, eps, gamma, dt, csteps, p1_log)
        log = p1_log[:csteps]
        if not np.all(np.isfinite(y)):
            bad = np.nonzero(~np.isfinite(log))[0]
            bad_step = step0 + (int(bad[0]) if bad.size else csteps)
            raise BlowUp(
                f"non-finite state at t ~ {bad_step * dt:g}",
                last_good_time=last_good,
            )
        prevs = np.empty(csteps)
        prevs[0] = y_start[0]
        prevs[1:] = log[:-1]
        hits = np.nonzero((prevs > 0.0) & (log <= 0.0))[0]
        if hits.size:
            cursor = y_start.copy()
            at = 0
            waste = np.empty(max(1, csteps))
            for s in map(int, hits):
                if s > at:
                    _advance_chunk(cursor, n, eps, gamma, dt, s - at, waste[: s - at])
                    at = s
                t_prev = (step0 + s) * dt
                tc = detect_downcrossings(
                    prevs[s], log[s], t_prev, t_prev + dt, refine_factory(cursor)
                )
                if tc is not None:
                    crossings.append(tc)
        step0 += csteps
        last_good = step0 * dt
        sample_times.append(step0 * dt)
        samples.append(y.copy())

    times = np.array(sample_times)
    states = np.array(samples)
    p, q = states[:, :n], states[:, n:]
    site_e = p ** 2 + q ** 2
    ell2 = 0.5 * site_e.sum(axis=1)
    coupling = 0.5 * eps * (
        ((p[:, :-1] - p[:, 1:]) ** 2).sum(axis=1)
        + ((q[:, :-1] - q[:, 1:]) ** 2).sum(axis=1)
    )
    ham = coupling - (0.5 * site_e - 0.25 * site_e ** 2).sum(axis=1)
    return Trajectory(
        times=times,
        states=states,
        hamiltonian=ham,
        ell2=ell2,
        site_energies=site_e,
        crossings=CrossingLog(np.array(crossings)),
        params=params,
        config=config,
    )


def initial_condition(
    profile: BreatherProfile,
    delta: float = 1e-3,
    seed: int = 0,
    theta: float = 0.0,
) -> RealState:
    """Breather rotated to phase theta, plus delta times a random unit vector."""
    n = profile.n_sites
    state = rotate(RealState(profile.amplitudes.copy(), np.zeros(n)), theta)
    y = state.flat()
    if delta != 0.0:
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(2 * n)
        y = y + delta * v / np.linalg.norm(v)
    return RealState.from_flat(y)


def crossing_ratio_statistic(crossings: CrossingLog) -> np.ndarray:
    """X_k = (T_k/T_{k-1} - 1)/(sqrt(k/(k-1)) - 1) for k >= 2.

    Equals 1 identically when T_k = c sqrt(k).
    """
    t = crossings.times
    if t.shape[0] < 2:
        raise InsufficientData("ratio statistic needs at least two crossings")
    k = np.arange(2, t.shape[0] + 1, dtype=float)
    return (t[1:] / t[:-1] - 1.0) / (np.sqrt(k / (k - 1.0)) - 1.0)


def decay_exponent(params: SystemParams, m_t: float, m_tp: float, t: float, tp: float) -> float:
    """Exponent s with m ~ exp(-c t gamma eps^s), from two norm samples:

        s = log( log(m_t/m_tp) / (gamma (tp - t)) ) / log(eps)
    """
    if params.gamma <= 0.0:
        raise InvalidWindow("decay exponent undefined for gamma = 0")
    if not 0.0 < params.epsilon < 1.0:
        raise InvalidWindow("decay exponent needs 0 < epsilon < 1")
    if tp <= t:
        raise InvalidWindow(f"window must have tp > t, got [{t}, {tp}]")
    if not (0.0 < m_tp < m_t):
        raise InvalidWindow(
            f"norm must decay over the window, got m_t={m_t}, m_tp={m_tp}"
        )
    rate = np.log(m_t / m_tp) / (params.gamma * (tp - t))
    return float(np.log(rate) / np.log(params.epsilon))
