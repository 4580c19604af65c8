"""Acceptance criteria, one test per criterion, at the stated tolerances.

Each test prints a single [criterion N] PASS/FAIL line (run with -s to see
them live; they also appear in captured output).  Tolerances are pinned to
the stated values; where the measured mathematics genuinely cannot meet a
stated constant, the test still asserts the stated bound and fails, and the
measured value is printed alongside.
"""

from fractions import Fraction

import numpy as np
import pytest

from dnls.breather import breather_series, evaluate_series, solve_breather
from dnls.dynamics import (
    IntegrationConfig,
    crossing_ratio_statistic,
    initial_condition,
    integrate,
)
from dnls.experiments import ExperimentConfig, run
from dnls.lattice import SystemParams
from dnls.modulation import (
    fit_modulation_parameters,
    predicted_crossing_times,
    reconstruct,
)
from dnls.spectral import build_linearization, spectral_slopes, spectrum, zero_chain
from dnls.eig import eigenvalues


def report(num, passed, detail):
    line = f"[criterion {num}] {'PASS' if passed else 'FAIL'}: {detail}"
    print(line)
    assert passed, line


@pytest.fixture(scope="module")
def crossing_run():
    """Criterion 7 trajectory, shared with criterion 10."""
    params = SystemParams(3, 0.1, 0.02)
    prof = solve_breather(SystemParams(3, 0.1, 0.0))
    ic = initial_condition(prof, delta=0.0, theta=-(np.pi / 2 + 0.3))
    traj = integrate(
        ic, params, IntegrationConfig(t_end=3e4, dt=0.01, sample_stride=100)
    )
    return params, traj


def test_criterion_1_series_golden():
    golden = {
        1: (Fraction(1), Fraction(-1, 2), Fraction(-5, 8), Fraction(-21, 16)),
        2: (Fraction(0), Fraction(-1), Fraction(-3, 2), Fraction(-35, 8)),
        3: (Fraction(0), Fraction(0), Fraction(1), Fraction(5, 2)),
    }
    table = breather_series(3, 3)
    ok = all(
        table.coefficients[site - 1][k] == golden[site][k]
        for site in (1, 2, 3)
        for k in range(4)
    )
    report(1, ok, "order-3 rational series for N=3 reproduces the golden table exactly")


def test_criterion_2_newton_series_agreement():
    worst = 0.0
    details = []
    for eps in (0.001, 0.005, 0.01, 0.05):
        prof = solve_breather(SystemParams(3, eps, 0.0))
        approx = evaluate_series(breather_series(3, 3), eps)
        diff = np.max(np.abs(prof.amplitudes - approx))
        details.append(f"eps={eps}: max|diff|/eps^4 = {diff / eps ** 4:.2f}")
        worst = max(worst, diff / eps ** 4)
    report(
        2,
        worst <= 10.0,
        "|Newton - order-3 series| <= 10 eps^4 per component; "
        + "; ".join(details)
        + " (the order-4 coefficient -231/16 makes the true constant ~15)",
    )


def test_criterion_3_spectral_structure():
    worst_zero, worst_re, worst_c1, worst_c2 = 0.0, 0.0, 0.0, 0.0
    for n in (2, 3, 4, 5, 6):
        for eps in (0.001, 0.01, 0.05):
            params = SystemParams(n, eps, 0.0)
            prof = solve_breather(params)
            lin = build_linearization(prof, params)
            ev = spectrum(lin, 0.0)
            mags = np.sort(np.abs(ev))
            assert mags.shape[0] == 2 * n
            worst_zero = max(worst_zero, float(mags[1]))
            n_zero = int(np.sum(mags < 1e-8))
            if n_zero != 2:
                report(3, False, f"N={n}, eps={eps}: {n_zero} near-zero eigenvalues")
            worst_re = max(worst_re, float(np.max(np.abs(ev.real))))
            v1, v2 = zero_chain(lin)
            worst_c1 = max(worst_c1, float(np.linalg.norm(lin.matrix @ v1)))
            worst_c2 = max(worst_c2, float(np.linalg.norm(lin.matrix @ v2 - v1)))
    ok = worst_zero < 1e-8 and worst_re < 1e-8 and worst_c1 < 1e-10 and worst_c2 < 1e-10
    report(
        3,
        ok,
        f"N=2..6, eps in {{0.001, 0.01, 0.05}}: zero pair |lambda| <= {worst_zero:.1e}, "
        f"max |Re| = {worst_re:.1e}, |Mv1| <= {worst_c1:.1e}, |Mv2-v1| <= {worst_c2:.1e}",
    )


def test_criterion_4_ab_eigenvalue_series():
    eps_grid = np.linspace(1e-3, 1e-2, 10)
    lam = []
    for eps in eps_grid:
        params = SystemParams(3, eps, 0.0)
        lin = build_linearization(solve_breather(params), params)
        ab = eigenvalues(lin.a_block @ lin.b_block)
        lam.append(np.sort(ab.real[np.abs(ab) > 1e-8]))
    lam = np.array(lam)
    c1 = np.polyfit(eps_grid, lam[:, 0], 2)[1]
    c2 = np.polyfit(eps_grid, lam[:, 1], 2)[1]
    ok = abs(c1 - 0.76393) < 1e-3 and abs(c2 - 5.23606797) < 1e-3
    report(
        4,
        ok,
        f"AB-block linear coefficients over eps in [1e-3, 1e-2]: "
        f"{c1:.6f} (target 0.76393), {c2:.6f} (target 5.23606797)",
    )


def test_criterion_5_damped_slopes():
    rep = spectral_slopes(SystemParams(3, 0.01, 0.0), np.linspace(0.0, 0.5, 11))
    big = rep.nonzero_slopes
    z = rep.slopes[rep.zero_pair_index]
    dev1 = abs(big[0] - 0.0027) / 0.0027
    dev2 = abs(big[1] - 0.00727) / 0.00727
    ok = dev1 <= 0.10 and dev2 <= 0.10 and 0.0 < z < 1e-8
    report(
        5,
        ok,
        f"slopes {big[0]:.6f} ({dev1:.1%} from 0.0027), {big[1]:.6f} "
        f"({dev2:.1%} from 0.00727); near-zero pair slope {z:.2e} "
        f"(positive, < 1e-8; reference 3.2e-10)",
    )


def test_criterion_6_conservation():
    params = SystemParams(3, 0.01, 0.0)
    prof = solve_breather(params)
    ic = initial_condition(prof, delta=1e-3, seed=0)
    traj = integrate(ic, params, IntegrationConfig(t_end=1e4, dt=0.01, sample_stride=100))
    h_drift = float(np.max(np.abs(traj.hamiltonian - traj.hamiltonian[0]))
                    / abs(traj.hamiltonian[0]))
    e_drift = float(np.max(np.abs(traj.ell2 - traj.ell2[0])) / traj.ell2[0])
    ok = h_drift < 1e-8 and e_drift < 1e-8
    report(
        6,
        ok,
        f"t in [0, 1e4], dt=0.01, breather+1e-3: relative drift H {h_drift:.1e}, "
        f"E {e_drift:.1e} (< 1e-8)",
    )


def test_criterion_7_crossing_time_law(crossing_run):
    params, traj = crossing_run
    t_k = traj.crossings.times
    x_k = crossing_ratio_statistic(traj.crossings)
    x_tail = x_k[1:]  # k >= 3
    ks = np.arange(3, len(t_k) + 1)
    pred = np.array([predicted_crossing_times(params, int(k)) for k in ks])
    rel = t_k[2:] / pred
    ok_x = bool(np.all((x_tail >= 0.9) & (x_tail <= 1.1)))
    ok_t = bool(np.all(np.abs(rel - 1.0) <= 0.20))
    report(
        7,
        ok_x and ok_t,
        f"{len(t_k)} crossings to t=3e4; X_k in [{x_tail.min():.3f}, {x_tail.max():.3f}] "
        f"for k>=3 ({'PASS' if ok_x else 'FAIL'}); T_k/prediction in "
        f"[{rel.min():.3f}, {rel.max():.3f}] vs 20% band ({'PASS' if ok_t else 'FAIL'}; "
        f"finite-eps drift rate is ~1.9x the leading order at eps=0.1)",
    )


def test_criterion_8_decay_exponents(tmp_path):
    cfg = ExperimentConfig("fig4-decay", tmp_path / "fig4", dt=0.01, seed=0)
    res = run(cfg)
    lines = [
        f"{e.name.split(':')[0]} {'PASS' if e.passed else 'FAIL'} ({e.detail.split(',')[0]})"
        for e in res.expectations
    ]
    ok = res.exit_code == 0
    report(
        8,
        ok,
        "2N-1 within 5% per case: " + "; ".join(lines)
        + " (finite-eps amplitude corrections exceed 5% for eps >= 0.1 at N=3 "
        "and eps = 0.2; the N=3, eps=0.2 breather branch does not exist)",
    )


def test_criterion_9_energy_ladder(tmp_path):
    cfg = ExperimentConfig("fig1-energies", tmp_path / "fig1", seed=0)
    res = run(cfg)
    ok = res.exit_code == 0
    report(
        9,
        ok,
        "; ".join(
            f"site {i + 2}: {e.detail.split(' over ')[0]}"
            for i, e in enumerate(res.expectations)
        )
        + " (time-averaged site energy / site 1 vs eps^(2(i-1)), within one order)",
    )


def test_criterion_10_modulation_fit(crossing_run):
    params, traj = crossing_run

    # fit idempotence (stated: 1e-12)
    base = SystemParams(3, 0.1, 0.0)
    prof = solve_breather(base, phi=0.01)
    from dnls.lattice import RealState, rotate

    st = rotate(RealState(prof.amplitudes.copy(), np.zeros(3)), 0.4)
    phi1, th1, _ = fit_modulation_parameters(st, base)
    phi2, th2, _ = fit_modulation_parameters(reconstruct(base, phi1, th1), base)
    idem = max(abs(phi1 - phi2), abs(th1 - th2))

    # fitted theta(t) along the criterion-7 run, sampled every 100 time units
    stride = 100
    idxs = np.arange(0, traj.times.shape[0], stride)
    alphas = np.empty(idxs.shape[0])
    phis = np.empty(idxs.shape[0])
    for j, i in enumerate(idxs):
        phi_f, th_f, _ = fit_modulation_parameters(traj.state(int(i)), base, t=0.0)
        alphas[j] = th_f  # total phase at this instant
        phis[j] = phi_f
    total = np.unwrap(alphas)
    ts = traj.times[idxs]
    theta_fit = total - ts * phis - total[0]
    pred = params.gamma * params.epsilon ** 5 * ts ** 2
    mask = ts >= 0.2 * ts[-1]  # past the transient
    ratio = theta_fit[mask] / pred[mask]
    ok_theta = bool(np.all(np.abs(ratio - 1.0) <= 0.15))
    ok_idem = idem <= 1e-12
    report(
        10,
        ok_theta and ok_idem,
        f"fitted theta(t)/ (gamma eps^5 t^2) in [{ratio.min():.3f}, {ratio.max():.3f}] "
        f"vs 15% band ({'PASS' if ok_theta else 'FAIL'}; same ~1.9x finite-eps rate "
        f"as criterion 7); idempotence {idem:.1e} "
        f"({'PASS' if ok_idem else 'FAIL'}, <= 1e-12)",
    )
