"""Linearization about a breather: spectrum, zero chain, adjoint frame.

About the profile X* = (p*, 0) the linearized flow is dx/dt = M x with

    M = [[0, A], [B, 0]],
    A = eps*Lap + (1+phi) I - diag(p*^2)      (symmetric tridiagonal)
    B = -eps*Lap - (1+phi) I + 3 diag(p*^2)   (symmetric tridiagonal)

so A p* = -F(p*) = 0 and B is the Jacobian of the fixed-point residual.
End damping adds -gamma*eps*Ctilde with Ctilde = diag(C, C), C = e_N e_N^T.

Spectra are computed from a longdouble rebuild of M: p* is first polished
by a couple of Newton steps in longdouble so the exact double-zero Jordan
pair is certified at ~1e-9 instead of the ~1.5e-8 float64 floor (see
eig.py).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import eig
from .breather import BreatherProfile, residual
from .errors import (
    DegenerateFrame,
    ProvenanceError,
    SingularMatrix,
    TrackingError,
    VerificationFailure,
)
from .lattice import SystemParams

ZERO_EIG_THRESHOLD = 1e-8
CHAIN_TOL = 1e-10

eigenvalues = eig.eigenvalues  # dense nonsymmetric eigensolver (op re-export)


def _gauss_solve(a, b):
    """Gaussian elimination with partial pivoting; works in any float dtype."""
    a = a.copy()
    b = b.copy()
    n = b.shape[0]
    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if a[piv, k] == 0.0:
            raise SingularMatrix("singular matrix in longdouble solve")
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        for i in range(k + 1, n):
            f = a[i, k] / a[k, k]
            a[i, k:] -= f * a[k, k:]
            b[i] -= f * b[k]
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1:] @ x[i + 1:]) / a[i, i]
    return x


def _lap_matrix_ld(n):
    L = np.zeros((n, n), dtype=np.longdouble)
    for j in range(n):
        if j > 0:
            L[j, j - 1] = 1
        if j < n - 1:
            L[j, j + 1] = 1
        L[j, j] = -(2 if 0 < j < n - 1 else 1)
    return L


def _polish_longdouble(p, epsilon, phi, steps=3):
    """A few Newton steps in longdouble, from a float64 breather."""
    n = p.shape[0]
    eps = np.longdouble(epsilon)
    ph = np.longdouble(phi)
    L = _lap_matrix_ld(n)
    x = p.astype(np.longdouble)
    eye = np.eye(n, dtype=np.longdouble)
    for _ in range(steps):
        F = -eps * (L @ x) - (1 + ph) * x + x ** 3
        J = -eps * L - (1 + ph) * eye + 3 * np.diag(x ** 2)
        x = x - _gauss_solve(J, F)
    return x, eps, ph, L


@dataclass(frozen=True)
class Linearization:
    """Blocks and assembled matrix of the linearized flow at a breather."""

    a_block: np.ndarray
    b_block: np.ndarray
    matrix: np.ndarray
    params: SystemParams
    profile: BreatherProfile
    matrix_ld: np.ndarray = field(repr=False, default=None)

    @property
    def n_sites(self) -> int:
        return self.params.n_sites


def build_linearization(profile: BreatherProfile, params: SystemParams) -> Linearization:
    """Assemble A, B and M = [[0, A], [B, 0]] about the given profile."""
    if profile.n_sites != params.n_sites:
        raise ProvenanceError(
            f"profile has {profile.n_sites} sites, params {params.n_sites}"
        )
    if profile.epsilon != params.epsilon:
        raise ProvenanceError(
            f"profile solved at epsilon={profile.epsilon}, params carry "
            f"{params.epsilon}"
        )
    res = np.max(np.abs(residual(profile.amplitudes, params.epsilon, profile.phi)))
    if res > 1e-9:
        raise ProvenanceError(
            f"profile does not solve the fixed-point equation at these "
            f"parameters (residual {res:g})"
        )

    n = params.n_sites
    p_ld, eps, ph, L = _polish_longdouble(
        profile.amplitudes, params.epsilon, profile.phi
    )
    d = np.full(n, 2, dtype=np.longdouble)
    d[0] = d[-1] = 1
    off = np.full(n - 1, eps, dtype=np.longdouble)
    A = np.diag((1 + ph) - eps * d - p_ld ** 2) + np.diag(off, 1) + np.diag(off, -1)
    B = np.diag(-(1 + ph) + eps * d + 3 * p_ld ** 2) - np.diag(off, 1) - np.diag(off, -1)
    M = np.zeros((2 * n, 2 * n), dtype=np.longdouble)
    M[:n, n:] = A
    M[n:, :n] = B
    return Linearization(
        a_block=A.astype(float),
        b_block=B.astype(float),
        matrix=M.astype(float),
        params=params,
        profile=profile,
        matrix_ld=M,
    )


def damping_matrix(n: int) -> np.ndarray:
    """Ctilde = diag(C, C) with C selecting the last site."""
    ct = np.zeros((2 * n, 2 * n))
    ct[n - 1, n - 1] = 1.0
    ct[2 * n - 1, 2 * n - 1] = 1.0
    return ct


def damped_linearization(lin: Linearization, params: SystemParams) -> np.ndarray:
    """M - gamma*eps*Ctilde for the damping in params."""
    n = lin.n_sites
    return lin.matrix - params.gamma * params.epsilon * damping_matrix(n)


def _damped_ld(lin: Linearization, gamma: float) -> np.ndarray:
    n = lin.n_sites
    m = lin.matrix_ld.copy()
    ge = np.longdouble(gamma) * np.longdouble(lin.params.epsilon)
    m[n - 1, n - 1] -= ge
    m[2 * n - 1, 2 * n - 1] -= ge
    return m


def spectrum(lin: Linearization, gamma: float = 0.0) -> np.ndarray:
    """Eigenvalues of M - gamma*eps*Ctilde, via the longdouble rebuild."""
    return eig.eigenvalues(_damped_ld(lin, gamma))


def zero_chain(lin: Linearization):
    """Jordan chain of the zero eigenvalue: v1 = (0, p*), v2 = (B^-1 p*, 0).

    Verifies M v1 = 0 and M v2 = v1 to CHAIN_TOL before returning.
    """
    n = lin.n_sites
    p = lin.profile.amplitudes
    sv = np.linalg.svd(lin.b_block, compute_uv=False)
    if sv[-1] <= 1e-8:
        raise SingularMatrix(
            f"B block is near-singular (smallest singular value {sv[-1]:g})"
        )
    x = np.linalg.solve(lin.b_block, p)
    v1 = np.concatenate([np.zeros(n), p])
    v2 = np.concatenate([x, np.zeros(n)])
    r1 = np.linalg.norm(lin.matrix @ v1)
    r2 = np.linalg.norm(lin.matrix @ v2 - v1)
    if r1 > CHAIN_TOL or r2 > CHAIN_TOL:
        raise VerificationFailure(
            f"zero chain residuals too large: |Mv1|={r1:g}, |Mv2-v1|={r2:g}"
        )
    return v1, v2


def adjoint_frame(lin: Linearization):
    """Biorthogonal adjoint vectors (n1, n2) and normalizations (nu1, nu2).

    Unnormalized: nt2 = (p*, 0) spans ker(M^T), nt1 = (0, B^-1 p*) maps to
    nt2 under M^T.  Normalized so <n1, v1> = <n2, v2> = 1; the cross
    pairings vanish because the vectors live in complementary blocks.
    """
    v1, v2 = zero_chain(lin)
    n = lin.n_sites
    p = lin.profile.amplitudes
    x = v2[:n]
    nt1 = np.concatenate([np.zeros(n), x])
    nt2 = np.concatenate([p, np.zeros(n)])
    pair1 = float(nt1 @ v1)
    pair2 = float(nt2 @ v2)
    if abs(pair1) < 1e-12 or abs(pair2) < 1e-12:
        raise DegenerateFrame(
            f"frame pairing vanished: <nt1,v1>={pair1:g}, <nt2,v2>={pair2:g}"
        )
    nu1 = 1.0 / pair1
    nu2 = 1.0 / pair2
    n1 = nu1 * nt1
    n2 = nu2 * nt2
    gram = np.array([[n1 @ v1, n1 @ v2], [n2 @ v1, n2 @ v2]])
    if np.max(np.abs(gram - np.eye(2))) > CHAIN_TOL:
        raise VerificationFailure(f"biorthogonality failed: pairing matrix {gram}")
    return n1, n2, nu1, nu2


@dataclass(frozen=True)
class SpectralReport:
    """Spectrum plus the zero-eigenspace frames at one (params, gamma)."""

    eigenvalues: np.ndarray
    zero_chain: tuple
    adjoint_frame: tuple
    damped: bool
    gamma: float
    params: SystemParams


def spectral_report(lin: Linearization, gamma: float | None = None) -> SpectralReport:
    g = lin.params.gamma if gamma is None else gamma
    v1, v2 = zero_chain(lin)
    n1, n2, nu1, nu2 = adjoint_frame(lin)
    return SpectralReport(
        eigenvalues=spectrum(lin, g),
        zero_chain=(v1, v2),
        adjoint_frame=(n1, n2, nu1, nu2),
        damped=g > 0,
        gamma=g,
        params=lin.params,
    )


def _group_pairs(ev: np.ndarray):
    """Group 2N eigenvalues into N two-element pairs.

    The two smallest-|lambda| eigenvalues form the zero pair; the rest must
    pair up as complex conjugates.  Returns a list of (rep, centroid, pair)
    with rep the upper-half-plane (or larger-real) member.
    """
    idx = np.argsort(np.abs(ev))
    zero_pair = ev[idx[:2]]
    rest = ev[idx[2:]]
    pairs = [tuple(sorted(zero_pair, key=lambda z: (z.imag, z.real)))]
    used = np.zeros(len(rest), dtype=bool)
    for i in range(len(rest)):
        if used[i]:
            continue
        cands = [
            j for j in range(len(rest)) if not used[j] and j != i
        ]
        if not cands:
            raise TrackingError("odd eigenvalue left over while pairing conjugates")
        j = min(cands, key=lambda j: abs(rest[j] - np.conj(rest[i])))
        if abs(rest[j] - np.conj(rest[i])) > 1e-6 * max(1.0, abs(rest[i])):
            raise TrackingError(
                f"eigenvalue {rest[i]} has no conjugate partner"
            )
        used[i] = used[j] = True
        pairs.append(tuple(sorted((rest[i], rest[j]), key=lambda z: (z.imag, z.real))))
    out = []
    for pair in pairs:
        rep = max(pair, key=lambda z: (z.imag, z.real))
        centroid = 0.5 * (pair[0] + pair[1])
        out.append((rep, centroid, pair))
    return out


@dataclass(frozen=True)
class SlopeReport:
    """Least-squares response of the paired real parts to the damping gamma."""

    gammas: np.ndarray
    pair_reps: np.ndarray        # (n_gamma, N) complex, tracked representatives
    pair_centroids: np.ndarray   # (n_gamma, N) complex
    slopes: np.ndarray           # (N,) d Re(centroid) / d gamma
    intercepts: np.ndarray       # (N,)
    zero_pair_index: int
    raw_eigenvalues: np.ndarray  # (n_gamma, 2N) complex, unpaired

    @property
    def nonzero_slopes(self) -> np.ndarray:
        """|slope| of every pair except the near-zero one, ascending."""
        keep = [i for i in range(self.slopes.shape[0]) if i != self.zero_pair_index]
        return np.sort(np.abs(self.slopes[keep]))


def spectral_slopes(
    params: SystemParams,
    gamma_grid,
    lin: Linearization | None = None,
) -> SlopeReport:
    """Track eigenvalue pairs over a damping grid and fit Re vs gamma.

    Pairs are tracked by their upper-half-plane representative using greedy
    nearest matching with radius half the minimal gap of the undamped
    representatives; ties or out-of-radius matches raise TrackingError.
    """
    gammas = np.asarray(sorted(float(g) for g in gamma_grid))
    if gammas.size < 2:
        raise TrackingError("slope fit needs at least two gamma grid points")
    if np.any(gammas < 0):
        raise TrackingError("gamma grid must be non-negative")
    if lin is None:
        from .breather import solve_breather

        profile = solve_breather(SystemParams(params.n_sites, params.epsilon, 0.0))
        lin = build_linearization(profile, SystemParams(params.n_sites, params.epsilon, 0.0))

    n_pairs = params.n_sites
    reps = np.empty((gammas.size, n_pairs), dtype=complex)
    cents = np.empty((gammas.size, n_pairs), dtype=complex)
    raw = np.empty((gammas.size, 2 * params.n_sites), dtype=complex)

    order = None
    radius = None
    zero_idx = None
    for gi, g in enumerate(gammas):
        ev = spectrum(lin, g)
        raw[gi] = np.sort_complex(ev)
        groups = _group_pairs(ev)
        if gi == 0:
            groups_sorted = sorted(groups, key=lambda t: abs(t[0]))
            zero_idx = 0
            order = groups_sorted
            base = [t[0] for t in groups_sorted]
            gaps = [
                abs(base[i] - base[j])
                for i in range(len(base))
                for j in range(i + 1, len(base))
            ]
            radius = 0.5 * min(gaps) if gaps else np.inf
            for k, t in enumerate(groups_sorted):
                reps[0, k] = t[0]
                cents[0, k] = t[1]
            prev = base
            continue
        cand = [t[0] for t in groups]
        assigned = [-1] * n_pairs
        taken = [False] * n_pairs
        dists = sorted(
            (abs(prev[i] - cand[j]), i, j)
            for i in range(n_pairs)
            for j in range(n_pairs)
        )
        for dist, i, j in dists:
            if assigned[i] >= 0 or taken[j]:
                continue
            if dist > radius:
                raise TrackingError(
                    f"eigenvalue pair tracking lost at gamma={g:g}: nearest "
                    f"match {dist:g} exceeds radius {radius:g}"
                )
            assigned[i] = j
            taken[j] = True
        for i in range(n_pairs):
            t = groups[assigned[i]]
            reps[gi, i] = t[0]
            cents[gi, i] = t[1]
        prev = list(reps[gi])

    slopes = np.empty(n_pairs)
    intercepts = np.empty(n_pairs)
    for k in range(n_pairs):
        y = cents[:, k].real
        coef = np.polyfit(gammas, y, 1)
        slopes[k] = coef[0]
        intercepts[k] = coef[1]
    return SlopeReport(
        gammas=gammas,
        pair_reps=reps,
        pair_centroids=cents,
        slopes=slopes,
        intercepts=intercepts,
        zero_pair_index=zero_idx,
        raw_eigenvalues=raw,
    )
