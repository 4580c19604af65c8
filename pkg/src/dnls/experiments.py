"""Reproducible experiment runner backing the CLI.

Each experiment resolves its full configuration, runs, writes CSV artifacts
plus a gnuplot script, checks its expectations table, and records a
manifest (resolved config, package version, RNG seed, sha-256 of every
output file).  Exit codes: 0 pass, 1 expectation failure, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .breather import breather_series, series_csv_rows, solve_breather
from .dynamics import (
    IntegrationConfig,
    Trajectory,
    crossing_ratio_statistic,
    decay_exponent,
    initial_condition,
    integrate,
)
from .errors import ConfigError, DnlsError
from .lattice import SystemParams
from .modulation import predicted_crossing_times, predicted_drift
from .spectral import build_linearization, spectral_report, spectral_slopes

EXPERIMENTS = (
    "fig1-energies",
    "fig3-crossings",
    "fig4-decay",
    "fig5-spectrum",
    "breather-table",
    "spectrum-report",
)

# Exact order-3 amplitude series for N=3 (golden values for breather-table).
SERIES_GOLDEN_N3 = (
    (Fraction(1), Fraction(-1, 2), Fraction(-5, 8), Fraction(-21, 16)),
    (Fraction(0), Fraction(-1), Fraction(-3, 2), Fraction(-35, 8)),
    (Fraction(0), Fraction(0), Fraction(1), Fraction(5, 2)),
)

FIG5_EXPECTED_SLOPES = (0.0027, 0.00727)
FIG5_SLOPE_RTOL = 0.10
FIG1_LADDER_FACTOR = 10.0
FIG3_X_BAND = (0.9, 1.1)
FIG3_T_RTOL = 0.20
FIG3_K_MIN = 3
FIG4_K_RTOL = 0.05
# decay window: ln(m0/m) spanning this range keeps the state near the
# original breather while the drop is still well above measurement noise
FIG4_WINDOW = (0.005, 0.025)
# crossing-statistics phase origin: a small back-offset past a downcrossing
# so count k corresponds to k full revolutions without sitting on the
# detection plane (see fig3 runner)
FIG3_THETA0_OFFSET = 0.3


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    output_dir: Path
    n_sites: int | None = None
    epsilon: float | None = None
    gamma: float | None = None
    epsilons: tuple[float, ...] = ()
    t_end: float | None = None
    dt: float = 0.01
    sample_stride: int = 100
    seed: int = 0
    delta: float | None = None
    order: int = 3
    gamma_points: int = 11
    gamma_max: float = 0.5

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        object.__setattr__(self, "output_dir", Path(self.output_dir))


@dataclass
class Expectation:
    name: str
    passed: bool
    detail: str


@dataclass
class RunResult:
    exit_code: int
    expectations: list[Expectation]
    files: list[Path]
    manifest: Path | None


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_manifest(outdir: Path, entries: dict, files: list[Path]) -> Path:
    path = outdir / "manifest.txt"
    with open(path, "w") as fh:
        fh.write(f"package_version={__version__}\n")
        for k, v in entries.items():
            fh.write(f"{k}={_fmt(v)}\n")
        for f in files:
            fh.write(f"sha256:{f.name}={_sha256(f)}\n")
    return path


def _write_summary(outdir: Path, expectations: list[Expectation]) -> Path:
    path = outdir / "summary.txt"
    with open(path, "w") as fh:
        for e in expectations:
            fh.write(f"[{'PASS' if e.passed else 'FAIL'}] {e.name}: {e.detail}\n")
        n_fail = sum(not e.passed for e in expectations)
        fh.write(f"total={len(expectations)} failed={n_fail}\n")
    return path


def _write_gnuplot(outdir: Path, name: str, lines: list[str]) -> Path:
    path = outdir / f"plot_{name}.gp"
    with open(path, "w") as fh:
        fh.write("# gnuplot script, generated; run: gnuplot " + path.name + "\n")
        fh.write("set datafile separator ','\n")
        for ln in lines:
            fh.write(ln + "\n")
    return path


def _trajectory_csv(path: Path, traj: Trajectory) -> Path:
    n = traj.params.n_sites
    header = (
        ["t"]
        + [f"p_{j}" for j in range(1, n + 1)]
        + [f"q_{j}" for j in range(1, n + 1)]
        + ["H", "E"]
        + [f"e_{j}" for j in range(1, n + 1)]
    )
    rows = (
        [traj.times[i], *traj.states[i], traj.hamiltonian[i], traj.ell2[i], *traj.site_energies[i]]
        for i in range(traj.times.shape[0])
    )
    return _write_csv(path, header, rows)


# ---------------------------------------------------------------- experiments


def _run_fig1(cfg: ExperimentConfig, outdir: Path):
    n = cfg.n_sites or 4
    eps = cfg.epsilon if cfg.epsilon is not None else 0.01
    gamma = cfg.gamma if cfg.gamma is not None else 0.2
    t_end = cfg.t_end or 5e4
    delta = cfg.delta if cfg.delta is not None else 1e-3
    params = SystemParams(n, eps, gamma)

    rng = np.random.default_rng(cfg.seed)
    y0 = np.zeros(2 * n)
    y0[0] = 1.0
    if delta:
        v = rng.standard_normal(2 * n)
        y0 = y0 + delta * v / np.linalg.norm(v)
    from .lattice import RealState

    traj = integrate(
        RealState.from_flat(y0), params,
        IntegrationConfig(t_end=t_end, dt=cfg.dt, sample_stride=cfg.sample_stride),
    )
    files = [_trajectory_csv(outdir / "trajectory.csv", traj)]

    i0 = int(traj.times.shape[0] * 2 / 3)
    avg = traj.site_energies[i0:].mean(axis=0)
    rel = avg / avg[0]
    target = eps ** (2 * np.arange(n))
    rows = [
        (j + 1, avg[j], rel[j], target[j], rel[j] / target[j]) for j in range(n)
    ]
    files.append(
        _write_csv(
            outdir / "site_energy_ladder.csv",
            ["site", "mean_energy", "relative_to_site1", "eps_power", "ratio"],
            rows,
        )
    )
    expectations = []
    for j in range(1, n):
        ratio = rel[j] / target[j]
        expectations.append(
            Expectation(
                f"site {j + 1} mean energy within {FIG1_LADDER_FACTOR}x of "
                f"eps^{2 * j} relative to site 1",
                bool(1 / FIG1_LADDER_FACTOR <= ratio <= FIG1_LADDER_FACTOR),
                f"ratio={ratio:.3g} over t in [{traj.times[i0]:.0f}, {t_end:.0f}]",
            )
        )
    files.append(
        _write_gnuplot(
            outdir,
            "fig1",
            [
                "set logscale y",
                "set xlabel 't'; set ylabel 'site energy'",
                "plot "
                + ", ".join(
                    f"'trajectory.csv' using 1:{2 + 2 * n + 2 + j} with lines title 'e_{j}'"
                    for j in range(1, n + 1)
                ),
            ],
        )
    )
    entries = {
        "n_sites": n, "epsilon": eps, "gamma": gamma,
        "gamma_convention": "absolute (this experiment fixes gamma itself)",
        "t_end": t_end, "dt": cfg.dt, "sample_stride": cfg.sample_stride,
        "seed": cfg.seed, "delta": delta,
        "initial_condition": "unit amplitude on site 1 plus seeded perturbation",
    }
    return expectations, files, entries


def _fig3_initial(params: SystemParams, delta: float, seed: int):
    base = SystemParams(params.n_sites, params.epsilon, 0.0)
    prof = solve_breather(base)
    theta0 = -(np.pi / 2 + FIG3_THETA0_OFFSET)
    return initial_condition(prof, delta=delta, seed=seed, theta=theta0)


def _run_fig3(cfg: ExperimentConfig, outdir: Path):
    n = cfg.n_sites or 3
    eps_list = cfg.epsilons or ((cfg.epsilon,) if cfg.epsilon is not None else (0.05, 0.1))
    delta = cfg.delta if cfg.delta is not None else 0.0
    expectations = []
    files = []
    entries = {
        "n_sites": n,
        "gamma_convention": "gamma = 0.2*epsilon (damping scales with the coupling here)",
        "dt": cfg.dt, "seed": cfg.seed, "delta": delta,
        "theta0": f"-(pi/2 + {FIG3_THETA0_OFFSET}) (phase origin just past a downcrossing)",
        "epsilons": ",".join(str(e) for e in eps_list),
    }
    for eps in eps_list:
        gamma = 0.2 * eps
        params = SystemParams(n, eps, gamma)
        if cfg.t_end:
            t_end = cfg.t_end
        else:
            # size the run for ~12 crossings using the leading-order rate
            t_end = 1.2 * predicted_crossing_times(params, 12)
        ic = _fig3_initial(params, delta, cfg.seed)
        traj = integrate(
            ic, params,
            IntegrationConfig(t_end=t_end, dt=cfg.dt, sample_stride=cfg.sample_stride),
        )
        tag = f"eps{eps:g}"
        t_k = traj.crossings.times
        entries[f"t_end_{tag}"] = t_end
        if len(t_k) >= 2:
            x_k = crossing_ratio_statistic(traj.crossings)
        else:
            x_k = np.array([])
        rows = [
            (k + 1, t_k[k], x_k[k - 1] if k >= 1 else "")
            for k in range(len(t_k))
        ]
        files.append(
            _write_csv(outdir / f"crossings_{tag}.csv", ["k", "T_k", "X_k"], rows)
        )
        files.append(
            _write_csv(
                outdir / f"crossings_predicted_{tag}.csv",
                ["k", "T_k_predicted"],
                [(k, predicted_crossing_times(params, k)) for k in range(1, max(len(t_k), 12) + 1)],
            )
        )
        drift_rows = []
        for t in np.linspace(0, t_end, 101):
            ph, th = predicted_drift(params, t)
            drift_rows.append((t, ph, th))
        files.append(
            _write_csv(outdir / f"drift_predicted_{tag}.csv", ["t", "phi", "theta"], drift_rows)
        )

        ks = np.arange(FIG3_K_MIN, len(t_k) + 1)
        if ks.size == 0:
            expectations.append(
                Expectation(
                    f"{tag}: crossings observed", False,
                    f"only {len(t_k)} crossings by t={t_end:g}",
                )
            )
            continue
        x_tail = x_k[FIG3_K_MIN - 2:]
        ok_x = bool(np.all((x_tail >= FIG3_X_BAND[0]) & (x_tail <= FIG3_X_BAND[1])))
        expectations.append(
            Expectation(
                f"{tag}: X_k in [{FIG3_X_BAND[0]}, {FIG3_X_BAND[1]}] for k >= {FIG3_K_MIN}",
                ok_x,
                f"range [{x_tail.min():.4f}, {x_tail.max():.4f}] over k={FIG3_K_MIN}..{len(t_k)}",
            )
        )
        pred = np.array([predicted_crossing_times(params, int(k)) for k in ks])
        rel = t_k[FIG3_K_MIN - 1:] / pred
        ok_t = bool(np.all(np.abs(rel - 1.0) <= FIG3_T_RTOL))
        expectations.append(
            Expectation(
                f"{tag}: T_k within {FIG3_T_RTOL:.0%} of sqrt(2 pi k/(gamma eps^{2*n-1}))",
                ok_t,
                f"T/pred in [{rel.min():.4f}, {rel.max():.4f}] for k >= {FIG3_K_MIN}",
            )
        )
    files.append(
        _write_gnuplot(
            outdir,
            "fig3",
            [
                "set xlabel 'k'; set ylabel 'X_k'",
                "plot "
                + ", ".join(
                    f"'crossings_eps{e:g}.csv' using 1:3 with linespoints title 'eps={e:g}'"
                    for e in eps_list
                )
                + ", 1 with lines dashtype 2 title 'theory'",
            ],
        )
    )
    return expectations, files, entries


def _run_fig4(cfg: ExperimentConfig, outdir: Path):
    gamma = cfg.gamma if cfg.gamma is not None else 0.2
    if cfg.n_sites is not None and (cfg.epsilon is not None or cfg.epsilons):
        eps_list = cfg.epsilons or (cfg.epsilon,)
        cases = [(cfg.n_sites, e) for e in eps_list]
    else:
        cases = [(2, 0.05), (2, 0.1), (2, 0.2), (3, 0.1), (3, 0.2)]
    expectations = []
    files = []
    rows = []
    entries = {
        "gamma": gamma,
        "gamma_convention": "absolute (this experiment fixes gamma itself)",
        "dt": cfg.dt, "seed": cfg.seed,
        "cases": ";".join(f"N={n},eps={e:g}" for n, e in cases),
        "window_rule": f"ln(m0/m) in [{FIG4_WINDOW[0]}, {FIG4_WINDOW[1]}]",
    }
    for n, eps in cases:
        params = SystemParams(n, eps, gamma)
        base = SystemParams(n, eps, 0.0)
        prof = solve_breather(base, allow_outside_basin=eps >= 0.2)
        decay_k = prof.decay_constant()
        rate_est = (
            gamma * eps * prof.amplitudes[-1] ** 2 / np.sum(prof.amplitudes ** 2)
        )
        t_end = cfg.t_end or 2.0 * FIG4_WINDOW[1] / rate_est
        stride = max(1, int(round(t_end / (4000 * cfg.dt))))
        traj = integrate(
            initial_condition(prof, delta=0.0),
            params,
            IntegrationConfig(t_end=t_end, dt=cfg.dt, sample_stride=stride),
        )
        m = np.sqrt(2.0 * traj.ell2)
        lnr = np.log(m[0] / m)
        i1 = int(np.searchsorted(lnr, FIG4_WINDOW[0]))
        i2 = int(np.searchsorted(lnr, FIG4_WINDOW[1]))
        tag = f"N{n}_eps{eps:g}"
        if i2 >= m.shape[0]:
            expectations.append(
                Expectation(f"{tag}: decay window reached", False,
                            f"norm only dropped by {lnr[-1]:.2g} by t={t_end:g}")
            )
            continue
        t1, t2 = float(traj.times[i1]), float(traj.times[i2])
        k_meas = decay_exponent(params, float(m[i1]), float(m[i2]), t1, t2)
        k_expected = 2 * n - 1
        rel = (k_meas - k_expected) / k_expected
        rows.append((n, eps, t1, t2, m[i1], m[i2], k_meas, k_expected, rel, decay_k))
        expectations.append(
            Expectation(
                f"{tag}: decay exponent {k_expected} within {FIG4_K_RTOL:.0%}",
                bool(abs(rel) <= FIG4_K_RTOL),
                f"k={k_meas:.4f} (dev {rel:+.2%}), window [{t1:.0f}, {t2:.0f}], "
                f"profile decay constant K={decay_k:.3g}",
            )
        )
    files.append(
        _write_csv(
            outdir / "decay_exponents.csv",
            ["n_sites", "epsilon", "t1", "t2", "m_t1", "m_t2",
             "k_measured", "k_expected", "rel_dev", "profile_decay_K"],
            rows,
        )
    )
    files.append(
        _write_gnuplot(
            outdir,
            "fig4",
            [
                "set xlabel 'epsilon'; set ylabel 'measured decay exponent'",
                "set logscale x",
                "plot 'decay_exponents.csv' using 2:7 with points pt 7 title 'measured', "
                "'' using 2:8 with lines dashtype 2 title '2N-1'",
            ],
        )
    )
    return expectations, files, entries


def _run_fig5(cfg: ExperimentConfig, outdir: Path):
    n = cfg.n_sites or 3
    eps = cfg.epsilon if cfg.epsilon is not None else 0.01
    params = SystemParams(n, eps, 0.0)
    grid = np.linspace(0.0, cfg.gamma_max, cfg.gamma_points)
    report = spectral_slopes(params, grid)

    files = []
    eig_rows = []
    for gi, g in enumerate(report.gammas):
        for idx, ev in enumerate(report.raw_eigenvalues[gi]):
            eig_rows.append((g, idx, ev.real, ev.imag))
    files.append(
        _write_csv(outdir / "spectrum_vs_gamma.csv",
                   ["gamma", "eigenvalue_index", "re", "im"], eig_rows)
    )
    slope_rows = [
        (k, report.slopes[k], report.intercepts[k], int(k == report.zero_pair_index))
        for k in range(report.slopes.shape[0])
    ]
    files.append(
        _write_csv(outdir / "slopes.csv",
                   ["pair", "slope_re_vs_gamma", "intercept", "is_zero_pair"], slope_rows)
    )
    expectations = []
    big = report.nonzero_slopes
    for expected, measured in zip(sorted(FIG5_EXPECTED_SLOPES), big):
        rel = abs(measured - expected) / expected
        expectations.append(
            Expectation(
                f"damped pair slope {expected} within {FIG5_SLOPE_RTOL:.0%}",
                bool(rel <= FIG5_SLOPE_RTOL),
                f"measured {measured:.6g} (dev {rel:+.2%})",
            )
        )
    z = report.slopes[report.zero_pair_index]
    expectations.append(
        Expectation(
            "near-zero pair slope positive and < 1e-8",
            bool(0.0 < z < 1e-8),
            f"measured {z:.3g} (reference value 3.2e-10)",
        )
    )
    files.append(
        _write_gnuplot(
            outdir,
            "fig5",
            [
                "set xlabel 'gamma'; set ylabel 'Re lambda'",
                "plot 'spectrum_vs_gamma.csv' using 1:3 with points pt 6 title 'Re lambda'",
            ],
        )
    )
    entries = {
        "n_sites": n, "epsilon": eps,
        "gamma_grid": f"linspace(0, {cfg.gamma_max}, {cfg.gamma_points})",
        "pairing": "eigenvalues tracked as +- pairs; slope fit on pair-mean Re",
    }
    return expectations, files, entries


def _run_breather_table(cfg: ExperimentConfig, outdir: Path):
    n = cfg.n_sites or 3
    order = cfg.order
    table = breather_series(n, order)
    files = [
        _write_csv(
            outdir / "breather_series.csv",
            ["site", "power", "numerator", "denominator"],
            series_csv_rows(table),
        )
    ]
    expectations = []
    if n == 3 and order >= 3:
        ok = all(
            table.coefficients[j][k] == SERIES_GOLDEN_N3[j][k]
            for j in range(3)
            for k in range(4)
        )
        expectations.append(
            Expectation(
                "order-3 series for N=3 matches the golden rational table exactly",
                ok,
                "rational arithmetic, no tolerance",
            )
        )
    entries = {"n_sites": n, "order": order}
    return expectations, files, entries


def _run_spectrum_report(cfg: ExperimentConfig, outdir: Path):
    n = cfg.n_sites or 3
    eps = cfg.epsilon if cfg.epsilon is not None else 0.01
    gamma = cfg.gamma if cfg.gamma is not None else 0.0
    params = SystemParams(n, eps, gamma)
    prof = solve_breather(SystemParams(n, eps, 0.0))
    lin = build_linearization(prof, SystemParams(n, eps, 0.0))
    report = spectral_report(lin, gamma)
    files = [
        _write_csv(
            outdir / "eigenvalues.csv",
            ["index", "re", "im"],
            [(i, ev.real, ev.imag) for i, ev in enumerate(report.eigenvalues)],
        )
    ]
    v1, v2 = report.zero_chain
    n1, n2, nu1, nu2 = report.adjoint_frame
    files.append(
        _write_csv(
            outdir / "zero_frame.csv",
            ["component", "v1", "v2", "n1", "n2"],
            [(i, v1[i], v2[i], n1[i], n2[i]) for i in range(2 * n)],
        )
    )
    entries = {
        "n_sites": n, "epsilon": eps, "gamma": gamma,
        "nu1": nu1, "nu2": nu2,
        "damped": report.damped,
    }
    return [], files, entries


_RUNNERS = {
    "fig1-energies": _run_fig1,
    "fig3-crossings": _run_fig3,
    "fig4-decay": _run_fig4,
    "fig5-spectrum": _run_fig5,
    "breather-table": _run_breather_table,
    "spectrum-report": _run_spectrum_report,
}


def validate(config: ExperimentConfig) -> list[str]:
    """Pre-flight diagnostics: parameter ranges, dt probe, runtime estimate."""
    notes = []
    eps = config.epsilon
    if eps is not None and eps >= 0.2:
        notes.append(
            f"warning: epsilon={eps} is outside the validated solver basin "
            "(eps < 0.2); the localized branch may not exist"
        )
    if config.experiment in ("fig1-energies", "fig3-crossings", "fig4-decay"):
        n = config.n_sites or (4 if config.experiment == "fig1-energies" else 3)
        probe_eps = eps if (eps is not None and eps < 0.2) else 0.01
        params = SystemParams(n, probe_eps, 0.0)
        # O(1) off-equilibrium probe state; near the breather RK4 is exact
        # and would hide an oversized dt
        from .lattice import RealState

        y = np.zeros(2 * n)
        y[0], y[1] = 1.3, 0.2
        y[n + 1], y[n + min(2, n - 1)] = 0.3, 0.1
        traj = integrate(
            RealState.from_flat(y),
            params,
            IntegrationConfig(t_end=10.0, dt=config.dt,
                              sample_stride=max(1, int(round(10.0 / config.dt)))),
        )
        h = traj.hamiltonian
        drift = abs(h[-1] - h[0]) / max(abs(h[0]), 1e-30)
        if drift > 1e-6:
            notes.append(
                f"warning: dt={config.dt} conservation probe drift {drift:.2e} "
                f"> 1e-6; suggest dt <= {config.dt / 2}"
            )
        t_end = config.t_end or 5e4
        steps = int(t_end / config.dt)
        notes.append(f"estimated {steps} integration steps per run")
    if not notes or all(n.startswith("estimated") for n in notes):
        notes.insert(0, "ok")
    return notes


def run(config: ExperimentConfig) -> RunResult:
    """Execute one experiment; see module docstring for the exit codes."""
    outdir = config.output_dir
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output dir {outdir}: {exc}") from exc

    runner = _RUNNERS[config.experiment]
    entries = {
        "experiment": config.experiment,
        "seed": config.seed,
    }
    try:
        expectations, files, extra = runner(config, outdir)
    except DnlsError as exc:
        entries["status"] = f"incomplete: {type(exc).__name__}: {exc}"
        manifest = _write_manifest(outdir, entries, [])
        return RunResult(3, [], [], manifest)
    entries.update(extra)
    entries["status"] = "complete"
    files = list(files)
    files.append(_write_summary(outdir, expectations))
    manifest = _write_manifest(outdir, entries, files)
    failed = any(not e.passed for e in expectations)
    return RunResult(1 if failed else 0, expectations, files, manifest)
