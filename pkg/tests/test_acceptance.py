"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import math
import time
from fractions import Fraction

import numpy as np
from click.testing import CliRunner

from critreg import chains, expansion, rotation, thompson
from critreg.cli import main, random_cover, random_dyadic_tuple
from critreg.denjoy import build_denjoy, fundamental_estimate, verify_denjoy
from critreg.homeo import CircleMap, SigmaBump, YoccozTransfer
from critreg.modulus import ConcaveModulus
from critreg.optgroup import AdmissibleLengths, build_action, slow_progress_experiment

GOLDEN = rotation.Theta.golden()
HALF = ConcaveModulus.hoelder(0.5)


def test_criterion_01_rotation_number(record):
    t0 = time.perf_counter()
    f = CircleMap.rotation(GOLDEN.value)
    errs = {}
    for n in (100, 1000, 10_000):
        est = rotation.rotation_number(f, n)
        errs[n] = rotation.circle_distance(est.value, GOLDEN.value)
    dt = time.perf_counter() - t0
    ok = all(errs[n] <= 1.0 / n for n in errs) and dt < 1.0
    detail = ", ".join(f"n={n}: {e:.2e} <= {1 / n:g}" for n, e in errs.items())
    assert record(1, "rotation number of R_theta", ok, detail, dt, 1)


def test_criterion_02_convergents(record):
    t0 = time.perf_counter()
    conv = rotation.convergents(GOLDEN, 10)
    fib = [1, 1]
    while len(fib) < 13:
        fib.append(fib[-1] + fib[-2])
    # golden conjugate: p/q = F_k / F_{k+1}, starting at 1/2
    expected = [(fib[i], fib[i + 1]) for i in range(1, 11)]
    quality = [rotation.approximation_quality(GOLDEN, p, q) for p, q in conv]
    dt = time.perf_counter() - t0
    ok = list(conv) == expected and max(quality) < 1.0 and dt < 1.0
    detail = f"{conv[0][0]}/{conv[0][1]} .. {conv[-1][0]}/{conv[-1][1]}, max q|q theta - p| = {max(quality):.4f}"
    assert record(2, "golden convergents are Fibonacci ratios", ok, detail, dt, 1)


def test_criterion_03_denjoy_koksma(record):
    t0 = time.perf_counter()
    f = CircleMap.rotation(GOLDEN.value)
    phi = lambda x: np.sin(2 * np.pi * x)  # noqa: E731
    qs = [q for _, q in rotation.convergents(GOLDEN, 30) if q <= 1000]
    worst = 0.0
    ok = True
    for q in qs:
        res = rotation.denjoy_koksma_check(f, phi, q, variation=4.0, mean=0.0)
        ok &= res.lhs <= 4.0 / q
        worst = max(worst, res.lhs * q / 4.0)
    dt = time.perf_counter() - t0
    ok = bool(ok) and dt < 5.0
    detail = f"{len(qs)} convergents up to q={qs[-1]}, worst deviation/(4/q) = {worst:.3f}"
    assert record(3, "Denjoy-Koksma for sin 2 pi x", ok, detail, dt, 5)


def test_criterion_04_denjoy_counterexample(record):
    t0 = time.perf_counter()
    f = build_denjoy(HALF, "golden", 2000, tail_target=1e-3)
    s = f.scheme
    fe = fundamental_estimate(s, HALF)
    rep = verify_denjoy(f, n_iters=1000, rotation_iters=100_000)
    dt = time.perf_counter() - t0
    parts = {
        "a": s.window_sum() <= 1.0 and s.tail_bound < 1e-3,
        "b": fe.value <= 64 * s.K,
        "c": rep.endpoint_error <= 1e-9,
        "d": rep.wandering,
        "e": rep.rotation_error <= 1e-4 + 1.0 / 100_000,
    }
    ok = all(parts.values()) and dt < 60.0
    detail = (f"sum {s.window_sum():.3e}, tail {s.tail_bound:.3e}, fundamental {fe.value:.4f} <= "
              f"64K = {64 * s.K:.3e}, endpoints {rep.endpoint_error:.1e}, wandering {rep.wandering}, "
              f"rotation error {rep.rotation_error:.1e}; parts {''.join(k for k, v in parts.items() if v)}")
    assert record(4, "Denjoy counterexample, Hoelder 1/2, W=2000", ok, detail, dt, 60)


def test_criterion_05_fast_diffeomorphism(record):
    t0 = time.perf_counter()
    bits = []
    ok = True
    for k in (1, 2):
        p = expansion.FastDiffeoParams(k, HALF, 2.0 ** -7, 0.9, strict=False)
        f = expansion.build_fast_diffeo(p)
        start = p.D0 * p.ell
        closed = all(f.iterate_closed(i, np.array([start]))[0] == start + i * p.Delta
                     for i in range(1, p.N0 + 1))
        # stepping one application at a time agrees with the closed form to rounding
        x = np.array([start])
        drift = 0.0
        for i in range(1, p.N0 + 1):
            x = f(x)
            drift = max(drift, abs(x[0] - (start + i * p.Delta)) / (i * np.spacing(p.ell)))
        grid = np.append(np.linspace(0.0, p.ell, 2049), start)
        delta = expansion.measure_fast(f, (0.0, p.ell), grid, power=p.N0)
        xs = np.linspace(0.0, p.ell, 20001)
        sup1 = float(np.max(np.abs(f.deriv(xs, 1) - 1.0)))
        bound = p.K0 * float(HALF(p.ell))
        good = closed and drift <= 1.0 and delta >= p.delta0 and sup1 <= bound
        ok &= good
        bits.append(f"k={k}: N0={p.N0}, delta={delta:.4f}, sup|f'-1|={sup1:.3g} <= {bound:.3g}")
    dt = time.perf_counter() - t0
    ok = bool(ok) and dt < 5.0
    assert record(5, "fast diffeomorphism plateau and fastness", ok, "; ".join(bits), dt, 5)


def _fast_instances():
    rng = np.random.default_rng(20)
    out = []
    for _ in range(10):
        L = float(rng.uniform(0.1, 2.0))
        out.append((SigmaBump.fast(0.0, L, float(rng.uniform(0.5, 0.99))), (0.0, L), 1))
    p = expansion.FastDiffeoParams(1, ConcaveModulus.lipschitz(), 2.0 ** -14, 0.9)
    out.append((expansion.build_fast_diffeo(p), (0.0, p.ell), p.N0))
    for _ in range(9):
        alpha = ConcaveModulus.hoelder(float(rng.uniform(0.4, 1.0)))
        ell = 2.0 ** -int(rng.integers(5, 8))
        p = expansion.FastDiffeoParams(2, alpha, ell, 0.9, strict=False)
        out.append((expansion.build_fast_diffeo(p), (0.0, ell), p.N0))
    return out


def test_criterion_06_fast_implies_expansive(record):
    t0 = time.perf_counter()
    worst = math.inf
    ok = True
    inst = _fast_instances()
    for f, J, N in inst:
        if hasattr(f, "checks"):
            ok &= f.checks.monotone
        grid = np.linspace(J[0], J[1], 2049 if N == 1 else 257)
        delta = expansion.measure_fast(f, J, grid, power=N)
        ex = expansion.measure_expansive(f, J, grid, power=N)
        margin = ex - (expansion.fast_to_expansive_bound(delta) - 1e-3)
        worst = min(worst, margin)
        ok &= margin >= 0
    dt = time.perf_counter() - t0
    ok = bool(ok) and dt < 5.0
    detail = f"{len(inst)} instances, smallest margin over 2 delta/(1-delta) - 1e-3 = {worst:.4f}"
    assert record(6, "fast implies expansive", ok, detail, dt, 5)


def test_criterion_07_covering(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    agree = 0
    for _ in range(200):
        iv, target = random_cover(rng, 12)
        agree += chains.covering_length(iv, target) == chains.covering_length_bruteforce(iv, target)
    movers = []
    for _ in range(10):
        m = int(rng.integers(2, 5))
        iv = chains.random_chain(rng, m)
        act = chains.chain_action(iv)
        a = float(rng.uniform(iv[0][0], iv[1][0]))
        b = float(rng.uniform(iv[m - 2][1], iv[m - 1][1]))
        cl = chains.covering_length(iv, (a, b))
        res = chains.min_syllable_mover(act, (a, b))
        movers.append((m, cl, res.length))
    dt = time.perf_counter() - t0
    ok = agree == 200 and all(cl == m and ln == cl for m, cl, ln in movers) and dt < 30.0
    detail = f"greedy = brute force on {agree}/200 covers; mover length = CL on " \
             f"{sum(cl == ln for _, cl, ln in movers)}/10 chains (m = {[m for m, _, _ in movers]})"
    assert record(7, "covering length and syllable movers", ok, detail, dt, 30)


def test_criterion_08_thompson(record):
    t0 = time.perf_counter()
    A, B = thompson.standard_generators()
    rel_ok, _ = thompson.relations_check(A, B)
    rng = np.random.default_rng(8)
    exact = 0
    for _ in range(50):
        n = int(rng.integers(1, 5))
        lv = int(rng.integers(3, 9))
        xs, ys = random_dyadic_tuple(rng, n, lv), random_dyadic_tuple(rng, n, lv)
        g = thompson.n_transitive_map(xs, ys)
        exact += all(g.exact(x) == y for x, y in zip(xs, ys))
    gs = thompson.ghys_sergiescu(thompson.doubling_lift())
    pts = np.arange(0, 1025) / 1024.0
    gs_err = max(float(np.max(np.abs(gs.realize(g)(pts) - np.array([float(g.exact(Fraction(int(k), 1024)))
                                                                   for k in range(1025)]))))
                 for g in (A, B))
    dt = time.perf_counter() - t0
    ok = rel_ok and exact == 50 and gs_err == 0.0 and dt < 10.0
    detail = f"relators identity: {rel_ok}; exact interpolants {exact}/50; h=2x error on level-10 dyadics {gs_err:g}"
    assert record(8, "Thompson exact suite", ok, detail, dt, 10)


def test_criterion_09_yoccoz(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(10):
        a, b, c = rng.uniform(0.2, 5.0, 3)
        x = np.linspace(0.0, a, 1000)
        lhs = YoccozTransfer(b, c)(YoccozTransfer(a, b)(x))
        worst = max(worst, float(np.max(np.abs(lhs - YoccozTransfer(a, c)(x)))))
    y = YoccozTransfer(1.0, 2.0)
    sup = float(np.max(np.abs(y.deriv(np.linspace(0.0, 1.0, 100_001)) - 1.0)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and abs(sup - 3.0) <= 1e-6 and dt < 2.0
    detail = f"equivariance defect {worst:.2e}, sup|phi'_(1,2) - 1| = {sup:.9f}"
    assert record(9, "Yoccoz equivariant family", ok, detail, dt, 2)


def test_criterion_10_slow_progress(record):
    t0 = time.perf_counter()
    act = build_action(1, HALF, AdmissibleLengths.invlogsq(), 400)
    res = slow_progress_experiment(act, 300)
    dt = time.perf_counter() - t0
    floor = 1.0 - 2.0 / 300
    ok = (res.membership_ok and res.cd_ok and res.min_ratio >= floor and res.certificate
          and all(v for k, v in act.certificates.items() if isinstance(v, bool)) and dt < 120.0)
    detail = (f"membership {res.membership_ok}, CD in {{i, i+1}} {res.cd_ok}, min CD/i = {res.min_ratio:.4f} "
              f">= {floor:.4f} > ceiling {res.ceiling:.4f}")
    assert record(10, "Slow Progress separation", ok, detail, dt, 120)


def test_criterion_11_muller_tsuboi(record):
    t0 = time.perf_counter()
    A, _ = thompson.standard_generators()
    g2 = thompson.double_flatten(A)
    x = 2.0 ** -20
    ratio = abs(float(g2(x)) - x) / x ** 3
    # the double conjugate is not the identity: it still moves interior points
    moved = abs(float(g2(0.5)) - 0.5)
    dt = time.perf_counter() - t0
    ok = ratio < 1e-6 and moved > 1e-3 and dt < 2.0
    detail = f"|g2(x) - x|/x^3 = {ratio:.3e} at x = 2^-20, |g2(1/2) - 1/2| = {moved:.3f}"
    assert record(11, "Muller-Tsuboi tangency", ok, detail, dt, 2)


DETERMINISM_RUNS = [
    ["modulus"],
    ["rotnum", "--n", "100000"],
    ["koksma"],
    ["denjoy", "--tail-target", "1e-3", "--verify"],
    ["fastmap", "--k", "1", "--ell", "0.0078125"],
    ["fastmap", "--k", "2", "--ell", "0.0078125"],
    ["chains", "random"],
    ["thompson", "relcheck"],
    ["thompson", "transit", "--from", "1/4,1/2", "--to", "1/8,3/4"],
    ["thompson", "random"],
    ["slowprogress"],
]


def test_criterion_12_determinism(record, tmp_path):
    t0 = time.perf_counter()
    runner = CliRunner()
    same = 0
    names = []
    for args in DETERMINISM_RUNS:
        outs = []
        for rep in (1, 2):
            d = tmp_path / f"run{rep}"
            res = runner.invoke(main, ["--seed", "11", "--out-dir", str(d), *args, "--out", "data.csv"])
            assert res.exit_code == 0, (args, res.output)
            outs.append((d / "data.csv").read_bytes())
        same += outs[0] == outs[1]
        names.append(" ".join(args[:2]) if args[0] in ("chains", "thompson") else args[0])
    dt = time.perf_counter() - t0
    ok = same == len(DETERMINISM_RUNS)
    assert record(12, "byte-identical CSV on re-run", ok, f"{same}/{len(DETERMINISM_RUNS)} experiments "
                  f"({', '.join(names)})", dt, None)
