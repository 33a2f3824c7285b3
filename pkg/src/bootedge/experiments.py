"""Experiment drivers behind the command-line subcommands.

Each ``run_*`` function takes an :class:`ExperimentConfig`, writes its CSV
and plot-script outputs into ``out`` and returns a result object with a
``passed`` flag (``None`` when the config sets no acceptance thresholds).
All randomness flows from the config seed through named sub-streams, so a
rerun with the same config and seed reproduces every output byte for any
``jobs`` value.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from bootedge import __version__
from bootedge import catalog
from bootedge._rng import subseed
from bootedge.bootstrap import (
    SampleSet, bootstrap_distribution, exact_bootstrap_cdf, product_measure_eval, truncate_and_center,
)
from bootedge.config import ExperimentConfig
from bootedge.diagnostics import (
    BelowResolution, EventConfig, complement_probability, conditional_moment, cramer_probe,
    e1_indicator, e2_indicator, e3_e4_indicator, e5_integral, e5_quadrature, e5_threshold, fit_rates,
    non_increasing, non_increasing_within, sample_xi, strictly_decreasing,
)
from bootedge.edgeworth import (
    HermiteTensorTable, build_expansion, density_term, exact_measure, expansion_probability,
    quadrature_measure, signed_measure,
)
from bootedge.mc import Estimate, MCConfig
from bootedge.regions import Ball, PolynomialMap, gaussian_boundary_mass, lemma1_select, prop1_probability
from bootedge.smooth_model import approximate_cumulants, sym_power, taylor_expand
from bootedge.tensors import CumulantSet, cumulants_to_moments, moments_to_cumulants, sample_cumulants


# -- output helpers -------------------------------------------------------------

def metadata(cfg: ExperimentConfig, extra=()):
    pop = _population(cfg)
    lines = [
        f"bootedge {__version__}",
        f"experiment {cfg.kind}",
        f"config_sha256 {cfg.digest}",
        f"seed {cfg.seed}",
        f"population {pop.name} cramer={'yes' if pop.cramer else 'no'}",
        f"statistic {cfg.statistic} k={cfg.k} d={cfg.d} nu={cfg.nu}",
    ]
    return lines + list(extra)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header_lines, columns, rows):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def write_gnuplot(path: Path, title, datafile, xcol, ycols, labels, logx=True, logy=True, ylabel=""):
    lines = [
        "# generated plot script; run with: gnuplot -p " + path.name,
        "set datafile separator ','",
        "set key top right",
        f"set title '{title}'",
        "set xlabel 'n'",
        f"set ylabel '{ylabel}'",
    ]
    if logx:
        lines.append("set logscale x")
    if logy:
        lines.append("set logscale y")
    plots = [f"'{datafile}' using {xcol}:{y} every ::1 with linespoints title '{lab}'" for y, lab in zip(ycols, labels)]
    lines.append("plot " + ", \\\n     ".join(plots))
    path.write_text("\n".join(lines) + "\n")


def _outdir(cfg, out):
    path = Path(out if out is not None else cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# -- config plumbing ----------------------------------------------------------------

def _population(cfg):
    return catalog.population(cfg.population, cfg.d, **cfg.population_params)


def _statistic(cfg, samples=None):
    return catalog.statistic(cfg.statistic, cfg.d, samples)


def _regions(cfg, q):
    if cfg.balls is not None or cfg.halflines is not None:
        halflines = [Ball.halfline(t) for t in cfg.halflines or ()]
        return halflines + [Ball(q, center=c, radius=r) for c, r in cfg.balls or ()]
    if q == 1:
        return [Ball.halfline(t) for t in np.linspace(-3.0, 3.0, 61)]
    return [Ball(q, radius=r) for r in (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)]


def _event_config(cfg, nu=None):
    p = dict(cfg.event_params)
    keys = {"C1": "C1", "C2": "C2", "C3": "C3", "u": "u", "C": "C", "m": "m", "lambda": "lam",
            "r_exponent": "r_exponent"}
    kwargs = {keys[k]: v for k, v in p.items() if k in keys}
    return EventConfig(nu=cfg.nu if nu is None else nu, d=cfg.d, **kwargs)


def _sample(cfg, n, rep, stream):
    if cfg.sample_csv:
        return SampleSet.from_csv(cfg.sample_csv)
    return SampleSet.simulate(_population(cfg), cfg.sizes(n), subseed(cfg.seed, stream, n, rep))


# -- compare --------------------------------------------------------------------------

@dataclass
class CompareResult:
    rows: list
    summary: list
    slope: float | None
    ratios: list
    passed: bool | None
    checks: dict = field(default_factory=dict)


def compare_replicate(cfg: ExperimentConfig, n: int, rep: int, jobs: int = 1):
    """One sample: bootstrap and expansion probabilities for every region.

    Returns ``(regions, boot Estimates, [edge values per order 0..nu])``.
    """
    sset = _sample(cfg, n, rep, "compare/sample")
    stat = _statistic(cfg, sset.samples)
    data = [catalog.lift(stat, X) for X in sset.samples]
    ac = approximate_cumulants(stat, [sample_cumulants(X, cfg.nu + 2) for X in data], sset.n_js, cfg.nu)
    regions = _regions(cfg, stat.q)
    if cfg.exact:
        probs = exact_bootstrap_cdf(stat, sset, regions)
        boot = [Estimate(p, 0.0) for p in probs]
    else:
        bd = bootstrap_distribution(stat, sset, cfg.bootstrap_reps, subseed(cfg.seed, "compare/boot", n, rep), jobs)
        boot = [bd.probability(B) for B in regions]
    edges = []
    for nu in range(cfg.nu + 1):
        exp = build_expansion(ac.raw, ac.W, nu)
        mc = MCConfig(samples=cfg.mc_samples, seed=subseed(cfg.seed, "compare/edge", n, rep), jobs=jobs)
        edges.append([expansion_probability(exp, B, sset.n, mc).value for B in regions])
    return regions, boot, edges


def run_compare(cfg: ExperimentConfig, out=None, jobs: int = 1) -> CompareResult:
    outdir = _outdir(cfg, out)
    nus = list(range(cfg.nu + 1))
    rows = []
    sup = {n: {nu: [] for nu in nus} for n in cfg.n_grid}
    grid = cfg.n_grid if not cfg.sample_csv else cfg.n_grid[:1]
    reps = cfg.replicates if not cfg.sample_csv else 1
    for n in grid:
        for rep in range(reps):
            regions, boot, edges = compare_replicate(cfg, n, rep, jobs)
            gaps = [[abs(b.value - e) for b, e in zip(boot, col)] for col in edges]
            for nu in nus:
                sup[n][nu].append(max(gaps[nu]))
            for i, B in enumerate(regions):
                rows.append([n, rep, B.label(), boot[i].value, boot[i].se]
                            + [edges[nu][i] for nu in nus] + [gaps[nu][i] for nu in nus])
    cols = ["n", "replicate", "region", "boot", "boot_se"] + [f"edge_nu{nu}" for nu in nus] + [f"gap_nu{nu}" for nu in nus]
    write_csv(outdir / "compare.csv", metadata(cfg), cols, rows)

    med = {n: {nu: float(np.median(sup[n][nu])) for nu in nus} for n in grid}
    summary = [[n] + [med[n][nu] for nu in nus] for n in grid]
    ratios = []
    for a, b in zip(grid, grid[1:]):
        if b == 2 * a and med[a][cfg.nu] > 0:
            ratios.append((a, b, med[b][cfg.nu] / med[a][cfg.nu]))
    slope = None
    if len(grid) >= 3:
        try:
            slope = fit_rates(grid, [med[n][cfg.nu] for n in grid]).slope
        except BelowResolution:
            slope = None
    extra = [f"ratio err({b})/err({a}) = {r!r}" for a, b, r in ratios]
    extra.append(f"fitted slope (nu={cfg.nu}) = {slope!r}")
    write_csv(outdir / "compare_summary.csv", metadata(cfg, extra),
              ["n"] + [f"median_sup_gap_nu{nu}" for nu in nus], summary)
    write_gnuplot(outdir / "compare.gp", "median sup gap", "compare_summary.csv", 1,
                  [2 + nu for nu in nus], [f"nu={nu}" for nu in nus], ylabel="median sup gap")

    checks = {}
    acc = cfg.acceptance
    if "max_ratio" in acc:
        checks["max_ratio"] = bool(ratios) and all(r <= acc["max_ratio"] for _, _, r in ratios)
    if acc.get("nu_improvement") and cfg.nu >= 1:
        checks["nu_improvement"] = all(med[n][cfg.nu] < med[n][0] for n in grid)
    passed = all(checks.values()) if checks else None
    return CompareResult(rows, summary, slope, ratios, passed, checks)


# -- rates ----------------------------------------------------------------------------

@dataclass
class RatesResult:
    estimates: dict
    fits: dict
    passed: bool | None
    checks: dict = field(default_factory=dict)


def run_rates(cfg: ExperimentConfig, out=None, jobs: int = 1) -> RatesResult:
    outdir = _outdir(cfg, out)
    pop = _population(cfg)
    ecfg = _event_config(cfg)
    events = [e for e in cfg.events if e != "prop1"]
    e5_mc = MCConfig(samples=int(cfg.event_params.get("e5_samples", 20_000)), seed=subseed(cfg.seed, "e5"))
    estimates = {e: [] for e in cfg.events}
    for n in cfg.n_grid:
        if events:
            res = complement_probability(events, pop, n, cfg.replicates, subseed(cfg.seed, "rates"), ecfg, e5_mc, jobs)
            for e in events:
                estimates[e].append(res[e])
        if "prop1" in cfg.events:
            estimates["prop1"].append(_prop1_at(cfg, n, jobs)[1])
    fits = {}
    for e in cfg.events:
        est = estimates[e]
        try:
            fit = fit_rates(cfg.n_grid, [x.value for x in est], [x.se for x in est], label=e)
            fits[e] = fit
            extra = [f"event {e}", f"slope {fit.slope!r} se {fit.slope_se!r}",
                     f"slope_ci {fit.ci[0]!r},{fit.ci[1]!r} floored={fit.floored}"]
            fit_row = [["fit", fit.slope, fit.slope_se]]
        except BelowResolution:
            fits[e] = None
            extra = [f"event {e}", "fit: decay below Monte Carlo resolution (all estimates zero)"]
            fit_row = []
        rows = [[n, x.value, x.se] for n, x in zip(cfg.n_grid, est)] + fit_row
        write_csv(outdir / f"rates_{e}.csv", metadata(cfg, extra), ["n", "estimate", "se"], rows)
    write_gnuplot(outdir / "rates.gp", "complement probabilities", f"rates_{cfg.events[0]}.csv", 1, [2],
                  [cfg.events[0]], ylabel="1 - P(E)")
    checks = {}
    acc = cfg.acceptance
    for e in acc.get("strictly_decreasing", ()):
        checks[f"{e}_strictly_decreasing"] = strictly_decreasing([x.value for x in estimates[e]])
    for e in acc.get("non_increasing", ()):
        checks[f"{e}_non_increasing"] = non_increasing([x.value for x in estimates[e]])
    if "max_final" in acc:
        for e in acc.get("max_final_events", events):
            checks[f"{e}_max_final"] = estimates[e][-1].value <= acc["max_final"]
    passed = all(checks.values()) if checks else None
    return RatesResult(estimates, fits, passed, checks)


# -- prop1 ----------------------------------------------------------------------------

def catalog_polynomial_map(cfg: ExperimentConfig) -> PolynomialMap:
    """The statistic's graded Taylor map at the population anchors, whitened.

    With ``x = Sigma^{1/2} z`` the map becomes a polynomial in standard normal
    ``z``; grades run up to ``nu``, i.e. degrees 1..nu+1.
    """
    pop = _population(cfg)
    if cfg.statistic == "standardized_mean":
        stat = catalog.centered_mean(cfg.d, sym_power(pop.central_moments()[1] * np.eye(cfg.d), -0.5))
    else:
        stat = _statistic(cfg)
    anchors, Sigma = catalog.lifted_law(pop, stat, cfg.ratios)
    expansion = taylor_expand(stat, anchors, 1, cfg.nu, max_grade=cfg.nu)
    R = sym_power(Sigma, 0.5)
    comps = [[p.compose_affine(R) for p in comp] for comp in expansion.grades]
    b1 = max(p.max_abs_coefficient() for comp in comps for p in comp)
    return PolynomialMap(comps, b1, cfg.b2)


def _prop1_at(cfg, n, jobs):
    pmap = catalog_polynomial_map(cfg)
    regions = _regions(cfg, pmap.q)
    # common random numbers across n
    mc = MCConfig(samples=cfg.mc_samples, seed=subseed(cfg.seed, "prop1"), jobs=jobs)
    return prop1_probability(pmap, regions, cfg.beta, cfg.b, n, mc)


@dataclass
class Prop1Result:
    per_region: dict
    sups: list
    slope: float | None
    passed: bool | None
    checks: dict = field(default_factory=dict)


def run_prop1(cfg: ExperimentConfig, out=None, jobs: int = 1) -> Prop1Result:
    outdir = _outdir(cfg, out)
    pmap = catalog_polynomial_map(cfg)
    regions = _regions(cfg, pmap.q)
    rows, sups, per_region = [], [], {}
    for n in cfg.n_grid:
        ests, sup = _prop1_at(cfg, n, jobs)
        scale = n ** cfg.beta
        per_region[n] = ests
        sups.append(sup)
        for B, e in zip(regions, ests):
            rows.append([n, B.label(), e.value, e.se, e.value * scale, e.se * scale])
    write_csv(outdir / "prop1.csv", metadata(cfg, [f"beta {cfg.beta!r} b {cfg.b!r} b1 {pmap.b1!r}"]),
              ["n", "region", "estimate", "se", "scaled", "scaled_se"], rows)
    scaled = [(s.value * n ** cfg.beta, s.se * n ** cfg.beta) for s, n in zip(sups, cfg.n_grid)]
    try:
        fit = fit_rates(cfg.n_grid, [s.value for s in sups], [s.se for s in sups], label="prop1")
        slope = fit.slope
    except BelowResolution:
        slope = None
    write_csv(outdir / "prop1_summary.csv", metadata(cfg, [f"fitted slope {slope!r}"]),
              ["n", "sup_estimate", "sup_se", "sup_scaled", "sup_scaled_se"],
              [[n, s.value, s.se, a, b] for n, s, (a, b) in zip(cfg.n_grid, sups, scaled)])
    write_gnuplot(outdir / "prop1.gp", "sup p(n) n^beta", "prop1_summary.csv", 1, [4],
                  ["sup scaled"], logy=False, ylabel="p n^beta")
    checks = {}
    if cfg.acceptance.get("shape"):
        checks["shape"] = non_increasing_within(scaled, 2.0)
    passed = all(checks.values()) if checks else None
    return Prop1Result(per_region, sups, slope, passed, checks)


# -- diagnose ---------------------------------------------------------------------------

@dataclass
class DiagnoseResult:
    rows: list
    passed: bool | None = None


def run_diagnose(cfg: ExperimentConfig, out=None, jobs: int = 1) -> DiagnoseResult:
    """Every event quantity for one sample per grid point (or the imported sample)."""
    outdir = _outdir(cfg, out)
    pop = _population(cfg)
    ecfg = _event_config(cfg)
    probe = cramer_probe(pop.cf, pop.d)
    rows = []
    grid = cfg.n_grid if not cfg.sample_csv else cfg.n_grid[:1]
    for n in grid:
        sset = _sample(cfg, n, 0, "diagnose/sample")
        if sset.k != 1:
            sset = SampleSet((sset.samples[0],), sset.provenance)
        n_eff = sset.n
        X = sset.samples[0]
        Xc = X - X.mean(axis=0)
        lam = np.linalg.eigvalsh(Xc.T @ Xc / n_eff)
        rep = truncate_and_center(sset, cfg.event_params.get("convention", "keep_small"))
        lamd = np.linalg.eigvalsh(rep.Vdagger[0])
        e3, e4 = e3_e4_indicator(sset, ecfg, rep.convention)
        c2 = ecfg.c2_for(pop)
        e5_mc = MCConfig(samples=int(cfg.event_params.get("e5_samples", 20_000)),
                         seed=subseed(cfg.seed, "diagnose/e5", n), jobs=jobs)
        e5, e5_ok = e5_integral(sset, pop.cf, ecfg, e5_mc)
        values = [
            ("xi_nu", sample_xi(sset, ecfg.nu)),
            ("mean_deviation", float(np.linalg.norm(X.mean(axis=0) - pop.mean))),
            ("E1", e1_indicator(sset, ecfg, pop.mean)),
            ("conditional_moment", conditional_moment(sset, ecfg.r)),
            ("moment_exponent", ecfg.r),
            ("C2", c2),
            ("E2", e2_indicator(sset, ecfg, c2)),
            ("vhat_lambda_min", float(lam.min())),
            ("vhat_lambda_max", float(lam.max())),
            ("E3", e3),
            ("vdagger_lambda_min", float(lamd.min())),
            ("vdagger_lambda_max", float(lamd.max())),
            ("E4", e4),
            ("truncation_fraction", rep.truncation_fraction[0]),
            ("norm_a", float(np.linalg.norm(rep.a))),
            ("e5_integral", e5.value),
            ("e5_se", e5.se),
            ("e5_threshold", e5_threshold(n_eff, ecfg)),
            ("E5", e5_ok),
            ("m", ecfg.m),
            ("cramer_sup_modulus", probe.sup_modulus),
            ("cramer_satisfied", probe.satisfied),
        ]
        rows.extend([n_eff, k, v] for k, v in values)
    write_csv(outdir / "diagnose.csv", metadata(cfg), ["n", "quantity", "value"], rows)
    return DiagnoseResult(rows)


# -- oracle suite ---------------------------------------------------------------------------

@dataclass
class OracleCheck:
    name: str
    value: float
    tolerance: str
    passed: bool

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.value:.6e} ({self.tolerance})"


@dataclass
class OracleResult:
    checks: list
    report: str

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _moments_of(atoms, order):
    from bootedge.tensors import empirical_moments

    return empirical_moments(atoms, order)


def oracle_cumulant_roundtrip(seed, count=100):
    rng = np.random.default_rng(subseed(seed, "oracle/cumulants"))
    worst = 0.0
    for _ in range(count):
        d = int(rng.integers(1, 4))
        order = int(rng.integers(2, 7))
        m = _moments_of(rng.normal(size=(int(rng.integers(3, 9)), d)), order)
        back = cumulants_to_moments(moments_to_cumulants(m))
        for r in range(1, order + 1):
            worst = max(worst, float(np.max(np.abs(back.tensor(r) - m.tensor(r)))))
    return worst


def oracle_cf_inversion(gamma=2.0):
    """Max error of ``P_1 phi`` against numerical Fourier inversion of ``gamma (it)^3/6 e^{-t^2/2}``."""
    exp = build_expansion(CumulantSet.univariate([0.0, 1.0, gamma]), np.eye(1), 1)
    x = np.linspace(-4, 4, 81)
    t = np.linspace(-40, 40, 40_001)
    dt = t[1] - t[0]
    spectrum = gamma * (1j * t) ** 3 / 6 * np.exp(-0.5 * t * t)
    inv = (np.exp(-1j * np.outer(x, t)) @ spectrum).real * dt / (2 * math.pi)
    ours = density_term(exp, 1, x[:, None])
    return float(np.max(np.abs(inv - ours)))


def run_oracle_suite(cfg: ExperimentConfig, out=None, jobs: int = 1) -> OracleResult:
    seed = cfg.seed
    checks = []

    def add(name, value, ok, tol):
        checks.append(OracleCheck(name, float(value), tol, bool(ok)))

    err = oracle_cumulant_roundtrip(seed)
    add("cumulant round trip (100 random laws)", err, err <= 1e-10, "<= 1e-10")

    err = oracle_cf_inversion()
    add("P1 density vs CF inversion", err, err < 1e-6, "< 1e-6")

    table = HermiteTensorTable(np.array([[1.5, 0.4], [0.4, 0.8]]))
    worst = max(table.recursion_residual((a, s - a), i) for s in range(9) for a in range(s + 1) for i in (0, 1))
    add("Hermite recursion up to |alpha|=9", worst, worst < 1e-9, "< 1e-9")

    exp = build_expansion(CumulantSet.univariate([0.0, 1.0, 2.0]), np.eye(1), 1)
    B = Ball.halfline(0.0)
    exact = exact_measure(exp, 1, B)
    quad, _ = integrate.quad(lambda x: density_term(exp, 1, np.array([[x]]))[0], -10, 0, epsabs=1e-13)
    add("P1(-Phi)((-inf,0]) closed form vs quadrature", abs(exact - quad), abs(exact - quad) < 1e-9, "< 1e-9")

    exp2 = build_expansion(
        CumulantSet.from_dense([np.zeros(2), np.eye(2), _sym3(seed), _sym4(seed)]), np.eye(2), 2)
    ball = Ball(2, center=(0.3, -0.2), radius=1.2)
    mc = MCConfig(samples=1_000_000, seed=subseed(seed, "oracle/measure"), jobs=jobs)
    for j in (1, 2):
        est = signed_measure(exp2, j, ball, mc)
        quad = quadrature_measure(exp2, j, ball)
        add(f"signed measure j={j}: MC vs quadrature (z-score)", abs(est.value - quad) / est.se,
            est.within(quad, 3.0), "|z| <= 3")

    rng = np.random.default_rng(subseed(seed, "oracle/boot"))
    sset = SampleSet((rng.normal(size=6),))
    stat = catalog.centered_mean(1)
    grid = [Ball.halfline(t) for t in np.linspace(-1.5, 1.5, 20)]
    exact_p = exact_bootstrap_cdf(stat, sset, grid)
    bd = bootstrap_distribution(stat, sset, 200_000, subseed(seed, "oracle/boot/mc"), jobs)
    gap = max(abs(bd.probability(B).value - p) for B, p in zip(grid, exact_p))
    add("exact vs MC bootstrap, n=6 (sup gap)", gap, gap <= 0.006, "<= 0.006")

    cyl = [Ball(1, radius=0.7), Ball(1, radius=1.1)]
    s2 = SampleSet((rng.normal(size=5), rng.normal(size=4)))
    joint = product_measure_eval("Q", cyl, s2, exact=True)
    parts = (product_measure_eval("Q", cyl[:1], SampleSet(s2.samples[:1]), exact=True)
             * product_measure_eval("Q", cyl[1:], SampleSet(s2.samples[1:]), exact=True))
    add("product measure factorisation (exact)", abs(joint - parts), joint == parts, "identical")

    rep = truncate_and_center(SampleSet((rng.normal(size=(50, 2)),)), threshold=1.0)
    centre = float(np.max(np.abs(rep.atoms[0].mean(axis=0))))
    add("E(X_dagger) = 0 after truncation", centre, centre <= 1e-12, "<= 1e-12")

    mass = gaussian_boundary_mass(Ball.halfline(0.0), np.eye(1), 0.01,
                                  MCConfig(samples=1_000_000, seed=subseed(seed, "oracle/mass"), jobs=jobs))
    target = 2 * 0.01 / math.sqrt(2 * math.pi)
    add("boundary mass vs 2 eps phi(0) (z-score)", abs(mass.value - target) / mass.se,
        mass.within(target, 3.0, 1e-5), "|z| <= 3")

    j, lam = lemma1_select([[1, 0], [0, 1], [1, 1]])
    add("lemma1 example (e1, e2, e1+e2)", lam, j == 2 and abs(lam - 1.0) < 1e-12, "j=3 (1-based), lambda=1")

    pop = catalog.population("normal")
    s5 = SampleSet.simulate(pop, [200], subseed(seed, "oracle/e5"))
    ecfg = EventConfig()
    est, _ = e5_integral(s5, pop.cf, ecfg, MCConfig(samples=200_000, seed=subseed(seed, "oracle/e5/mc"), jobs=jobs))
    quad = e5_quadrature(s5, pop.cf, ecfg)
    add("E5 integral: importance sampling vs quadrature (z-score)", abs(est.value - quad) / est.se,
        est.within(quad, 4.0, 0.02 * quad), "|z| <= 4 or 2%")

    report = "\n".join([f"# {line}" for line in metadata(cfg)] + [c.line() for c in checks]
                       + [f"SUMMARY {sum(c.passed for c in checks)}/{len(checks)} passed"]) + "\n"
    outdir = _outdir(cfg, out)
    (outdir / "oracle_report.txt").write_text(report)
    return OracleResult(checks, report)


def _sym3(seed):
    rng = np.random.default_rng(subseed(seed, "oracle/k3"))
    return _symmetrize(rng.normal(scale=0.5, size=(2, 2, 2)))


def _sym4(seed):
    rng = np.random.default_rng(subseed(seed, "oracle/k4"))
    return _symmetrize(rng.normal(scale=0.5, size=(2, 2, 2, 2)))


def _symmetrize(T):
    from itertools import permutations

    perms = list(permutations(range(T.ndim)))
    return sum(np.transpose(T, p) for p in perms) / len(perms)


RUNNERS = {
    "compare": run_compare,
    "rates": run_rates,
    "prop1": run_prop1,
    "diagnose": run_diagnose,
    "oracle": run_oracle_suite,
}
