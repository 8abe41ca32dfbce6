"""Acceptance gate: one check per shipped guarantee, one verdict line each.

Run with `pytest tests/test_acceptance.py -s` to see the verdict lines; each
criterion asserts its numerical tolerance and its wall-clock budget.
"""

import time

import numpy as np

from pathcalc import (
    GridPath,
    OSCILLATING,
    StoppedPath,
    VectorFunctional,
    benchmark,
    builtin,
    constant_direction,
    constant_path,
    d_space,
    dyadic_subsample,
    estimate_f,
    eval_direction,
    fk_residual,
    ito_residual,
    martingale_check,
    numerical_derivatives,
    quadratic_covariation,
    ramp_battery,
    ramp_path,
    recover_gradient,
    relation_residual,
    running_avg_direction,
    solve_flow,
    stop,
    stratonovich_integral,
    zero_direction,
)
from pathcalc.cli import main
from pathcalc.rng import substream


def _report(num, name, ok, detail):
    word = "PASS" if ok else "FAIL"
    print(f"[criterion {num}] {name}: {word} ({detail})")
    assert ok, f"criterion {num} {name}: {detail}"


def _random_path(gen, dim, n_lo=24, n_hi=48):
    n = int(gen.integers(n_lo, n_hi))
    times = np.concatenate([[0.0], np.sort(gen.uniform(0.02, 0.98, n)),
                            [1.0]])
    steps = gen.normal(0.0, 0.25, (len(times), dim))
    values = 0.5 + np.cumsum(steps, axis=0) * 0.2
    return GridPath(times, values)


def test_criterion_01_flow_solver():
    t0 = time.perf_counter()
    w = constant_path(1.0)
    sol = solve_flow(w, 0.0, eval_direction(1), substep=1e-4)
    err = abs(sol.path.eval(1.0)[0] - np.e)
    r = ramp_path(1.0, 1.0, n=257)
    frozen = solve_flow(r, 0.3, zero_direction(1)).path
    ts = np.linspace(0.0, 1.0, 501)
    exact = isinstance(frozen, StoppedPath) \
        and np.array_equal(frozen.eval(ts), stop(r, 0.3).eval(ts))
    elapsed = time.perf_counter() - t0
    _report(1, "flow solver", err <= 1e-6 and exact and elapsed < 1.0,
            f"|y(1)-e|={err:.3g}, zero-field exact={exact}, "
            f"{elapsed:.2f}s")


def test_criterion_02_derivative_relation():
    t0 = time.perf_counter()
    gen = substream(2025, 1)
    worst = 0.0
    count = 0
    for dim, fnames in ((1, ["eval", "square", "integral"]), (2, ["product"])):
        dirs = [constant_direction([0.7] * dim), eval_direction(dim),
                running_avg_direction(dim)]
        for _ in range(20):
            x = _random_path(gen, dim)
            t = float(gen.uniform(0.1, 0.85))
            for fname in fnames:
                F = builtin(fname, dim=dim)
                for gamma in dirs:
                    rel = relation_residual(F, gamma, t, x)
                    worst = max(worst, abs(rel.residual))
                    count += 1
    elapsed = time.perf_counter() - t0
    _report(2, "derivative relation", worst <= 1e-4 and elapsed < 30.0,
            f"max |residual|={worst:.3g} over {count} combos, "
            f"{elapsed:.1f}s")


def test_criterion_03_gradient_recovery():
    t0 = time.perf_counter()
    gen = substream(2025, 2)
    worst = 0.0
    cases = 0
    for dim, fname in ((1, "square"), (2, "product")):
        basis = [constant_direction(row) for row in np.eye(dim)]
        for trial in range(4):
            x = _random_path(gen, dim)
            t = float(gen.uniform(0.15, 0.8))
            ref = np.array([d_space(builtin(fname, dim=dim), i, t, x).estimate
                            for i in range(dim)])
            while True:
                M = np.eye(dim) + 0.3 * gen.normal(size=(dim, dim))
                if np.linalg.cond(M) < 50.0:
                    break
            for fields in (basis, [constant_direction(row) for row in M]):
                rec = recover_gradient(builtin(fname, dim=dim), fields, t, x)
                worst = max(worst, np.abs(rec.gradient - ref).max())
                cases += 1
    elapsed = time.perf_counter() - t0
    _report(3, "gradient recovery", worst <= 1e-4 and elapsed < 30.0,
            f"max |recovered - direct|={worst:.3g} over {cases} systems, "
            f"{elapsed:.1f}s")


def test_criterion_04_gateaux_counterexample():
    t0 = time.perf_counter()
    bat = ramp_battery(0.5)
    etas = bat.expansion.report.etas
    eta_eff = np.minimum(0.5 + etas, 1.0) - 0.5
    rate_err = np.abs(bat.expansion.report.quotients
                      - (-1.0 / (1.0 + 2.0 * eta_eff))).max()
    checks = [
        ("spatial sin(log h)", bat.spatial_max_err <= 1e-12
         and bat.spatial.verdict == OSCILLATING),
        ("horizontal oscillates", bat.horizontal.verdict == OSCILLATING),
        ("constraint direction", bat.constraint.ok
         and abs(bat.constraint.report.estimate) <= 1e-3),
        ("gamma* on surface", bat.star_on.ok
         and abs(bat.star_on.report.estimate) <= 1e-3),
        ("gamma* off surface", bat.star_off.ok
         and abs(bat.star_off.report.estimate) <= 1e-3),
        ("expansion alpha", bat.expansion.alpha == -1.0
         and abs(bat.expansion.alpha_hat + 1.0) <= 1e-3
         and rate_err <= 1e-3),
    ]
    elapsed = time.perf_counter() - t0
    bad = [name for name, ok in checks if not ok]
    _report(4, "ramp counterexample",
            not bad and bat.passed and elapsed < 10.0,
            f"failing parts={bad or 'none'}, rate oracle err={rate_err:.3g}, "
            f"{elapsed:.1f}s")


def test_criterion_05_exact_telescoping():
    t0 = time.perf_counter()
    gen = substream(2025, 3)
    worst_rel = 0.0
    for k in range(100):
        dim = 1 if k % 2 == 0 else 2
        x = _random_path(gen, dim)
        knots = x.times
        take = np.sort(gen.choice(np.arange(1, len(knots) - 1),
                                  size=int(gen.integers(3, 10)),
                                  replace=False))
        times = np.concatenate([[0.0], knots[take], [knots[-1]]])
        names = ["eval", "square"] if dim == 1 else ["product"]
        for fname in names:
            dec = ito_residual(builtin(fname, dim=dim), x, times)
            worst_rel = max(worst_rel, abs(dec.residual) / dec.scale)
    elapsed = time.perf_counter() - t0
    _report(5, "pointwise functionals telescope",
            worst_rel <= 1e-12 and elapsed < 5.0,
            f"max |residual|/scale={worst_rel:.3g} over 100 paths, "
            f"{elapsed:.1f}s")


def test_criterion_06_residual_refines(brownian_corpus):
    t0 = time.perf_counter()
    F = builtin("exp_eval")
    levels = range(6, 13)
    medians = []
    for level in levels:
        res = []
        for p in brownian_corpus:
            times = dyadic_subsample(p, level, n_exp=16)
            res.append(abs(ito_residual(F, p, times).residual))
        medians.append(float(np.median(res)))
    medians = np.array(medians)
    elapsed = time.perf_counter() - t0
    ok = medians[-1] <= 1e-2 and np.all(np.diff(medians) <= 0.0)
    shown = np.array2string(
        medians, formatter={"float_kind": lambda v: f"{v:.1e}"})
    _report(6, "functional change decomposes", ok and elapsed < 120.0,
            f"medians 6..12={shown}, {elapsed:.1f}s")


def test_criterion_07_quadratic_variation(brownian_corpus):
    t0 = time.perf_counter()
    qvs = []
    for p in brownian_corpus:
        times = dyadic_subsample(p, 12, n_exp=16)
        qvs.append(quadratic_covariation(p, times).final()[0, 0])
    qvs = np.array(qvs)
    frac = float(np.mean((qvs >= 0.95) & (qvs <= 1.05)))
    exact = True
    for n in (4, 8, 12):
        times = np.linspace(0.0, 1.0, 2 ** n + 1)
        ident = GridPath(times, times[:, None])
        exact &= quadratic_covariation(ident, times).final()[0, 0] == 2.0 ** -n
    elapsed = time.perf_counter() - t0
    _report(7, "quadratic variation", frac >= 0.95 and exact
            and elapsed < 60.0,
            f"in [0.95,1.05]: {frac:.1%} of 200, smooth-path QV exact={exact}, "
            f"{elapsed:.1f}s")


def test_criterion_08_stratonovich(brownian_corpus):
    t0 = time.perf_counter()
    G = VectorFunctional(lambda t, x: np.array([x.eval(t)[0] ** 2]), 1,
                         fn_many=lambda ts, x: x.eval(ts)[:, :1] ** 2,
                         label="square_integrand")
    errs = []
    for p in brownian_corpus:
        times = dyadic_subsample(p, 12, n_exp=16)
        r = stratonovich_integral(G, p, times)
        errs.append(abs(r.value - p.eval(1.0)[0] ** 3 / 3.0))
    med = float(np.median(errs))
    bridge = True
    p0 = brownian_corpus[0]
    for level in range(6, 13):
        times = dyadic_subsample(p0, level, n_exp=16)
        r = stratonovich_integral(G, p0, times)
        bridge &= r.value == r.ito + 0.5 * r.covariation
    elapsed = time.perf_counter() - t0
    _report(8, "stratonovich chain rule", med <= 1e-2 and bridge
            and elapsed < 60.0,
            f"median |int x^2 dx - x(1)^3/3|={med:.3g}, "
            f"bridge exact={bridge}, {elapsed:.1f}s")


def test_criterion_09_feynman_kac():
    t0 = time.perf_counter()
    spec, f = benchmark("gauss_square")
    x0 = constant_path(1.0)
    coded = max(abs(fk_residual(f, spec, t, x0)) for t in (0.1, 0.5, 0.9))
    f_num = numerical_derivatives(f, dim=1)
    numeric = abs(fk_residual(f_num, spec, 0.5, x0))
    est = estimate_f(spec, 0.5, x0, n_paths=10000, n_steps=64, seed=7)
    mc_ok = est.within(f.eval(0.5, x0), k=3.0)
    t_grid = np.linspace(0.0, 1.0, 17)
    good = martingale_check(spec, f, t_grid, 1.0, n_paths=2000, seed=4)
    bad = martingale_check(spec, builtin("square"), t_grid, 1.0,
                           n_paths=4000, seed=4)
    elapsed = time.perf_counter() - t0
    ok = (coded == 0.0 and numeric <= 1e-2 and mc_ok
          and good.passed and not bad.passed and elapsed < 120.0)
    _report(9, "feynman-kac checks", ok,
            f"coded residual={coded}, ladder residual={numeric:.3g}, "
            f"MC within 3se={mc_ok}, martingale pass/flag="
            f"{good.passed}/{not bad.passed}, {elapsed:.1f}s")


def test_criterion_10_reproducible_cli(tmp_path):
    t0 = time.perf_counter()
    jobs = {
        "flow": ["flow", "--path", "ramp:1.0", "--nodes", "65",
                 "--direction", "eval", "--substep", "0.0078125"],
        "deriv": ["deriv", "--kind", "space", "--functional", "square",
                  "--nodes", "129", "--count", "10"],
        "qv": ["qv", "--level-min", "6", "--level-max", "10",
               "--n-exp", "12"],
        "feynman-kac": ["feynman-kac", "--times", "0.25,0.5",
                        "--n-paths", "200", "--n-steps", "16"],
    }
    stable = True
    for name, argv in jobs.items():
        a, b = tmp_path / f"{name}-a.csv", tmp_path / f"{name}-b.csv"
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        stable &= a.read_bytes() == b.read_bytes()
    cfgfile = tmp_path / "qv.cfg"
    cfgfile.write_text("level_min = 6\nlevel_max = 10\nn_exp = 12\n")
    c = tmp_path / "qv-c.csv"
    assert main(["qv", "--config", str(cfgfile), "--out", str(c)]) == 0
    stable &= c.read_bytes() == (tmp_path / "qv-a.csv").read_bytes()
    elapsed = time.perf_counter() - t0
    _report(10, "reproducible artifacts", stable,
            f"byte-identical reruns + config-file equivalence={stable}, "
            f"{elapsed:.1f}s")
