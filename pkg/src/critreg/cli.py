"""Command line runner: every experiment writes a CSV of data, a one-check-per-line
summary (JSON lines) and a metadata file, and exits 0 / 1 / 2 for
pass / failed check / usage error."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import click
import numpy as np

OUTPUT_ENV = "CRITREG_OUTPUT_DIR"
DEFAULT_TOL = 1e-9


@dataclass
class Check:
    name: str
    value: Any
    bound: Any
    passed: bool | None  # None marks an informational line

    def to_dict(self) -> dict:
        return {"name": self.name, "value": _plain(self.value), "bound": _plain(self.bound),
                "pass": self.passed}


@dataclass
class Report:
    kind: str
    header: list
    rows: list
    checks: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.passed is not None)

    def check(self, name, value, bound, passed):
        self.checks.append(Check(name, value, bound, None if passed is None else bool(passed)))


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, Fraction):
        return str(v)
    return v


def _cell(v) -> str:
    v = _plain(v)
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit(report: Report, csv_path: Path) -> tuple[Path, Path, Path]:
    """Write <stem>.csv, <stem>.summary.jsonl and <stem>.meta.json."""
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(report.header)
        for row in report.rows:
            w.writerow([_cell(v) for v in row])
    stem = csv_path.with_suffix("")
    summary = stem.with_name(stem.name + ".summary.jsonl")
    with open(summary, "w") as fh:
        for c in report.checks:
            fh.write(json.dumps(c.to_dict(), sort_keys=True) + "\n")
    meta = stem.with_name(stem.name + ".meta.json")
    with open(meta, "w") as fh:
        json.dump({"experiment": report.kind, **report.meta}, fh, sort_keys=True, indent=1,
                  default=_plain)
        fh.write("\n")
    return csv_path, summary, meta


def read_csv(path) -> tuple[list, list]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# experiments -----------------------------------------------------------------
def _decades(n: int) -> list:
    out, m = [], 100
    while m < n:
        out.append(m)
        m *= 10
    return out + [n]


def exp_modulus(p: dict, seed: int, tol: float) -> Report:
    from .modulus import ConcaveModulus, check_concavity, dyadic_grid, integrability

    alpha = ConcaveModulus.parse(p["alpha"])
    xs = dyadic_grid(p["jmin"], p["jmax"])
    xs = xs[xs <= alpha.validity_sup]
    r = Report("modulus", ["x", "alpha"], [(float(x), float(alpha(x))) for x in xs],
               meta={"params": p, "alpha": alpha.to_dict()})
    conc = check_concavity(alpha)
    r.check("concave", conc.regime, "concave, x/alpha nondecreasing", conc.ok)
    res = integrability(alpha, "denjoy")
    # informational: finite for moduli that admit a Denjoy counterexample
    r.check("integral_inverse_alpha", res.value, None, None)
    return r


def exp_rotnum(p: dict, seed: int, tol: float) -> Report:
    from .homeo import CircleMap
    from .rotation import Theta, circle_distance, rotation_number

    th = Theta.parse(p["theta"])
    f = CircleMap.rotation(th.value)
    r = Report("rotnum", ["n", "estimate", "bound"], [], meta={"params": p, "theta": th.to_dict()})
    for n in _decades(p["n"]):
        est = rotation_number(f, n)
        r.rows.append((n, est.value, est.error_bound))
        r.check(f"rotation_n{n}", circle_distance(est.value, th.value), est.error_bound + tol,
                circle_distance(est.value, th.value) <= est.error_bound + tol)
    return r


def exp_koksma(p: dict, seed: int, tol: float) -> Report:
    from .homeo import CircleMap
    from .rotation import Theta, convergents, denjoy_koksma_check

    th = Theta.parse(p["theta"])
    f = CircleMap.rotation(th.value)
    phi = lambda x: np.sin(2.0 * np.pi * x)  # noqa: E731
    r = Report("koksma", ["q", "deviation", "bound"], [], meta={"params": p, "theta": th.to_dict()})
    for _, q in convergents(th, 64):
        if q > p["qmax"]:
            break
        res = denjoy_koksma_check(f, phi, q, variation=4.0, mean=0.0)
        r.rows.append((q, res.lhs, res.bound))
        r.check(f"koksma_q{q}", res.lhs, res.bound + tol, res.lhs <= res.bound + tol)
    return r


def exp_denjoy(p: dict, seed: int, tol: float) -> Report:
    from .denjoy import build_denjoy, build_scheme, fundamental_estimate, verify_denjoy
    from .modulus import ConcaveModulus

    alpha = ConcaveModulus.parse(p["alpha"])
    target = p["tail_target"] if p["tail_target"] > 0 else None
    s = build_scheme(alpha, p["theta"], p["window"], target)
    rows = []
    for j, k in enumerate(s.indices):
        nxt = s.lengths[j + 1] / s.lengths[j] if j + 1 < s.lengths.size else ""
        rows.append((int(k), float(s.fracs[j]), float(s.positions[j]), float(s.lengths[j]), nxt))
    r = Report("denjoy", ["k", "frac_k_theta", "position", "length", "ratio_next"], rows,
               meta={"params": p, "scheme": s.to_dict()})
    r.check("window_sum", s.window_sum(), 1.0, s.window_sum() <= 1.0)
    if target is not None:
        r.check("tail_bound", s.tail_bound, target, s.tail_bound < target)
    fe = fundamental_estimate(s, alpha)
    r.check("fundamental_estimate", fe.value, fe.bound, fe.passed)
    r.check("disjoint", s.min_gap(), 0.0, s.disjoint())
    r.check("position_error", s.position_error, None, None)
    if p["verify"]:
        f = build_denjoy(s)
        rep = verify_denjoy(f, n_iters=p["iters"], rotation_iters=p["rotation_iters"])
        r.check("endpoint_error", rep.endpoint_error, tol, rep.endpoint_error <= tol)
        r.check("wandering", rep.first_return if rep.first_return is not None else 0,
                p["iters"], rep.wandering)
        r.check("rotation", rep.rotation_error, rep.rotation_bound, rep.rotation_ok)
        r.check("identity_off_intervals", rep.plateau_ok, True, rep.plateau_ok)
        r.check("sup_abs_g_minus_1", rep.sup_c1, None, None)
        r.check("integral_g_defect", f.checks["integral_g_defect"], None, None)
    return r


def exp_fastmap(p: dict, seed: int, tol: float) -> Report:
    from .expansion import FastDiffeoParams, build_fast_diffeo, measure_fast
    from .modulus import ConcaveModulus

    alpha = ConcaveModulus.parse(p["alpha"])
    fp = FastDiffeoParams(p["k"], alpha, p["ell"], p["delta0"], strict=False)
    f = build_fast_diffeo(fp)
    x = np.linspace(0.0, fp.ell, p["grid"])
    rows = list(zip(x.tolist(), f(x).tolist(), f.deriv(x, 1).tolist()))
    r = Report("fastmap", ["x", "f", "df"], rows, meta={"params": p, "constants": fp.to_dict()})
    ch = f.checks
    r.check("support", ch.support, True, ch.support)
    r.check("plateau_translation", ch.plateau, fp.Delta, ch.plateau)
    start = fp.D0 * fp.ell
    its = np.arange(1, fp.N0 + 1)
    got = np.array([f.iterate_closed(int(i), np.array([start]))[0] for i in its]) if fp.N0 <= 5000 \
        else f.iterate_closed(fp.N0, np.array([start]))
    want = start + (its if fp.N0 <= 5000 else np.array([fp.N0])) * fp.Delta
    r.check("plateau_orbit_exact", float(np.max(np.abs(got - want))), 0.0, bool(np.all(got == want)))
    grid = np.append(np.linspace(0.0, fp.ell, 2049), start)
    delta = measure_fast(f, (0.0, fp.ell), grid, power=fp.N0)
    r.check("fast", delta, fp.delta0, delta >= fp.delta0)
    sup1 = float(np.max(np.abs(f.deriv(x, 1) - 1.0)))
    bound = fp.K0 * float(alpha(fp.ell))
    r.check("sup_abs_df_minus_1", sup1, bound, sup1 <= bound)
    r.check("ck_distance", ch.ck_distance, bound, ch.ck_ok)
    r.check("holder_seminorm", ch.holder_seminorm, fp.K0, ch.seminorm_ok)
    # beyond l0 the lemma makes no monotonicity promise; it is then reported only
    r.check("monotone", ch.monotone, True, None if fp.beyond_l0 else ch.monotone)
    return r


def _parse_pair(text: str) -> tuple:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise click.BadParameter(f"expected a,b but got {text!r}") from exc
    return a, b


def exp_cover(p: dict, seed: int, tol: float) -> Report:
    from .chains import SupportCover, covering_length, covering_length_bruteforce

    a, b = _parse_pair(p["target"])
    cover = SupportCover.from_csv(p["cover"])
    iv = cover.intervals
    greedy = covering_length(cover, (a, b))
    rows = [(name, lo, hi) for name, lo, hi in cover.labelled()]
    r = Report("cover", ["name", "lo", "hi"], rows, meta={"params": p})
    r.check("covering_length", greedy, None, None)
    if len(iv) <= 12:
        brute = covering_length_bruteforce(iv, (a, b))
        r.check("greedy_equals_bruteforce", greedy, brute, greedy == brute)
    return r


def random_cover(rng: np.random.Generator, n_max: int) -> tuple[list, tuple]:
    n = int(rng.integers(1, n_max + 1))
    lo = rng.uniform(0.0, 1.0, n)
    w = rng.uniform(0.02, 0.5, n)
    a, b = np.sort(rng.uniform(0.0, 1.3, 2))
    return [(float(x), float(x + y)) for x, y in zip(lo, w)], (float(a), float(b))


def exp_randcover(p: dict, seed: int, tol: float) -> Report:
    from .chains import covering_length, covering_length_bruteforce

    rng = np.random.default_rng(seed)
    r = Report("randcover", ["case", "n", "a", "b", "greedy", "bruteforce"], [], meta={"params": p})
    bad = 0
    for case in range(p["count"]):
        iv, (a, b) = random_cover(rng, p["max_intervals"])
        g, br = covering_length(iv, (a, b)), covering_length_bruteforce(iv, (a, b))
        r.rows.append((case, len(iv), a, b, g, br))
        bad += g != br
    r.check("greedy_equals_bruteforce", bad, 0, bad == 0)
    return r


def exp_relcheck(p: dict, seed: int, tol: float) -> Report:
    from .thompson import relations_check, standard_generators

    ok, res = relations_check(*standard_generators())
    r = Report("relcheck", ["relator", "identity"], [(rel, v) for rel, v in res], meta={"params": p})
    for rel, v in res:
        r.check(rel, v, True, v)
    return r


def _transit_report(kind, cases, p) -> Report:
    r = Report(kind, ["case", "x", "y", "image", "breakpoints"], [], meta={"params": p})
    bad = 0
    for case, (xs, ys) in enumerate(cases):
        from .thompson import n_transitive_map

        g = n_transitive_map(xs, ys)
        for x, y in zip(xs, ys):
            img = g.exact(x)
            r.rows.append((case, Fraction(x), Fraction(y), img, len(g.breakpoints)))
            bad += img != Fraction(y)
    r.check("exact_interpolation", bad, 0, bad == 0)
    return r


def _dyadics(text: str) -> list:
    try:
        return [Fraction(v) for v in text.split(",")]
    except ValueError as exc:
        raise click.BadParameter(f"expected comma separated dyadics, got {text!r}") from exc


def exp_transit(p: dict, seed: int, tol: float) -> Report:
    return _transit_report("transit", [(_dyadics(p["from"]), _dyadics(p["to"]))], p)


def random_dyadic_tuple(rng: np.random.Generator, n: int, level: int) -> list:
    pts = rng.choice(np.arange(1, 1 << level), size=n, replace=False)
    return [Fraction(int(v), 1 << level) for v in np.sort(pts)]


def exp_randtransit(p: dict, seed: int, tol: float) -> Report:
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(p["count"]):
        n = int(rng.integers(1, p["n_max"] + 1))
        lv = int(rng.integers(max(2, n.bit_length() + 1), p["level"] + 1))
        cases.append((random_dyadic_tuple(rng, n, lv), random_dyadic_tuple(rng, n, lv)))
    return _transit_report("randtransit", cases, p)


def exp_slowprogress(p: dict, seed: int, tol: float) -> Report:
    from .modulus import ConcaveModulus
    from .optgroup import AdmissibleLengths, build_action, slow_progress_experiment

    alpha = ConcaveModulus.parse(p["alpha"])
    act = build_action(p["k"], alpha, AdmissibleLengths.parse(p["lengths"]), p["window"])
    res = slow_progress_experiment(act, p["imax"])
    rows = [(row.i, row.N, row.s, row.cd, row.ratio) for row in res.rows]
    r = Report("slowprogress", ["i", "N_i", "s_i", "CD", "CD/i"], rows,
               meta={"params": p, "constants": act.config.constants.to_dict(),
                     "result": res.to_dict()})
    cert = act.certificates
    r.check("fast", cert["fast_min"], act.config.constants.delta0, cert["fast"])
    r.check("chain_condition", cert["chain_power"], None, cert["chain_condition"])
    r.check("u0_nontrivial", cert["u0_step_residual"], 1e-9, cert["u0_nontrivial"])
    r.check("mirror", cert["mirror_defect"], 1e-12, cert["mirror"])
    r.check("membership", res.membership_ok, True, res.membership_ok)
    r.check("cd_in_i_or_i_plus_1", res.cd_ok, True, res.cd_ok)
    floor = 1.0 - 2.0 / p["imax"]
    r.check("min_cd_ratio", res.min_ratio, floor, res.min_ratio >= floor)
    r.check("separation_certificate", res.min_ratio, res.ceiling, res.certificate)
    return r


# name -> (runner, {field: (type, default)})
EXPERIMENTS: dict[str, tuple[Callable, dict]] = {
    "modulus": (exp_modulus, {"alpha": (str, "hoelder:0.5"), "jmin": (int, 1), "jmax": (int, 52)}),
    "rotnum": (exp_rotnum, {"theta": (str, "golden"), "n": (int, 100_000)}),
    "koksma": (exp_koksma, {"theta": (str, "golden"), "qmax": (int, 1000)}),
    "denjoy": (exp_denjoy, {"alpha": (str, "hoelder:0.5"), "theta": (str, "golden"),
                            "window": (int, 2000), "tail_target": (float, 0.0),
                            "verify": (bool, False), "iters": (int, 1000),
                            "rotation_iters": (int, 100_000)}),
    "fastmap": (exp_fastmap, {"k": (int, 2), "alpha": (str, "hoelder:0.5"), "ell": (float, 0.01),
                              "delta0": (float, 0.9), "grid": (int, 1025)}),
    "cover": (exp_cover, {"target": (str, ""), "cover": (str, "")}),
    "randcover": (exp_randcover, {"count": (int, 200), "max_intervals": (int, 12)}),
    "relcheck": (exp_relcheck, {}),
    "transit": (exp_transit, {"from": (str, ""), "to": (str, "")}),
    "randtransit": (exp_randtransit, {"count": (int, 50), "n_max": (int, 4), "level": (int, 8)}),
    "slowprogress": (exp_slowprogress, {"k": (int, 1), "alpha": (str, "hoelder:0.5"),
                                        "lengths": (str, "invlogsq"), "window": (int, 400),
                                        "imax": (int, 300)}),
}


def _convert(kind: str, key: str, raw: str, where: str):
    fields = EXPERIMENTS[kind][1]
    if key not in fields:
        raise click.UsageError(f"{where}: unknown field {kind}.{key}")
    typ = fields[key][0]
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(raw)
            return low in ("1", "true", "yes")
        return typ(raw.strip())
    except ValueError as exc:
        raise click.UsageError(f"{where}: cannot read {raw!r} as {typ.__name__} for {kind}.{key}") from exc


def run_experiment(kind: str, params: dict, seed: int, tol: float) -> Report:
    runner, fields = EXPERIMENTS[kind]
    full = {k: d for k, (_, d) in fields.items()}
    full.update(params)
    try:
        return runner(full, seed, tol)
    except ValueError as exc:
        # malformed descriptors and inadmissible parameters are input problems
        raise click.UsageError(f"{kind}: {exc}") from exc


# config files -----------------------------------------------------------------
GLOBAL_KEYS = {"experiments": str, "seed": int, "tol": float, "output_dir": str}


@dataclass
class ExperimentConfig:
    experiments: list
    seed: int = 0
    tol: float = DEFAULT_TOL
    output_dir: str | None = None
    params: dict = field(default_factory=dict)  # kind -> {field: value}
    outputs: dict = field(default_factory=dict)  # kind -> stem

    @classmethod
    def parse(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        raw: dict = {}
        for n, line in enumerate(text.splitlines(), 1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            if "=" not in s:
                raise click.UsageError(f"{source}:{n}: expected key = value")
            key, val = (t.strip() for t in s.split("=", 1))
            if key in raw:
                raise click.UsageError(f"{source}:{n}: duplicate key {key}")
            raw[key] = (val, f"{source}:{n}")
        return cls.from_raw(raw)

    @classmethod
    def from_raw(cls, raw: dict) -> "ExperimentConfig":
        exps = [e.strip() for e in raw.get("experiments", ("", ""))[0].split(",") if e.strip()]
        for e in exps:
            if e not in EXPERIMENTS:
                raise click.UsageError(f"{raw['experiments'][1]}: unknown experiment {e!r}")
        cfg = cls(exps)
        for key, (val, where) in raw.items():
            if key in GLOBAL_KEYS:
                if key == "experiments":
                    continue
                try:
                    setattr(cfg, key, GLOBAL_KEYS[key](val))
                except ValueError as exc:
                    raise click.UsageError(f"{where}: bad value for {key}: {val!r}") from exc
                continue
            kind, dot, fld = key.partition(".")
            if not dot or kind not in EXPERIMENTS:
                raise click.UsageError(f"{where}: unknown key {key}")
            if fld == "out":
                cfg.outputs[kind] = val
                continue
            cfg.params.setdefault(kind, {})[fld] = _convert(kind, fld, val, where)
        return cfg

    def to_text(self) -> str:
        lines = [f"experiments = {', '.join(self.experiments)}", f"seed = {self.seed}",
                 f"tol = {self.tol!r}"]
        if self.output_dir is not None:
            lines.append(f"output_dir = {self.output_dir}")
        for kind in sorted(self.params):
            for k in sorted(self.params[kind]):
                v = self.params[kind][k]
                lines.append(f"{kind}.{k} = {repr(v) if isinstance(v, float) else v}")
        for kind in sorted(self.outputs):
            lines.append(f"{kind}.out = {self.outputs[kind]}")
        return "\n".join(lines) + "\n"


# click wiring -----------------------------------------------------------------
def _out_dir(ctx) -> Path:
    return Path(ctx.obj.get("out_dir") or os.environ.get(OUTPUT_ENV) or ".")


def _finish(ctx, kind: str, params: dict, out: str | None) -> None:
    rep = run_experiment(kind, params, ctx.obj["seed"], ctx.obj["tol"])
    path = Path(out) if out else Path(f"{kind}.csv")
    if not path.is_absolute():
        path = _out_dir(ctx) / path
    emit(rep, path)
    for c in rep.checks:
        mark = "info" if c.passed is None else ("PASS" if c.passed else "FAIL")
        click.echo(f"{mark:4s} {c.name} value={_plain(c.value)} bound={_plain(c.bound)}")
    ctx.exit(0 if rep.passed else 1)


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for randomized experiments.")
@click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True, help="Slack for numeric checks.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help=f"Output directory (default ${OUTPUT_ENV} or the working directory).")
@click.pass_context
def main(ctx, seed, tol, out_dir):
    """Constructions and numerical checks for circle and interval diffeomorphisms."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, tol=tol, out_dir=out_dir)


@main.command()
@click.option("--alpha", default="hoelder:0.5", show_default=True)
@click.option("--jmin", type=int, default=1, show_default=True)
@click.option("--jmax", type=int, default=52, show_default=True)
@click.option("--out", default=None)
@click.pass_context
def modulus(ctx, alpha, jmin, jmax, out):
    """Tabulate a modulus on a dyadic grid and check concavity."""
    _finish(ctx, "modulus", {"alpha": alpha, "jmin": jmin, "jmax": jmax}, out)


@main.command()
@click.option("--theta", default="golden", show_default=True)
@click.option("--n", "n", type=int, default=100_000, show_default=True)
@click.option("--out", default=None)
@click.pass_context
def rotnum(ctx, theta, n, out):
    """Rotation number estimates of R_theta against the 1/n bound."""
    _finish(ctx, "rotnum", {"theta": theta, "n": n}, out)


@main.command()
@click.option("--theta", default="golden", show_default=True)
@click.option("--qmax", type=int, default=1000, show_default=True)
@click.option("--out", default=None)
@click.pass_context
def koksma(ctx, theta, qmax, out):
    """Birkhoff sums of sin(2 pi x) at convergent denominators."""
    _finish(ctx, "koksma", {"theta": theta, "qmax": qmax}, out)


@main.command()
@click.option("--alpha", default="hoelder:0.5", show_default=True)
@click.option("--theta", default="golden", show_default=True)
@click.option("--window", type=int, default=2000, show_default=True)
@click.option("--tail-target", type=float, default=0.0, help="Grow K until the tail is below this.")
@click.option("--verify", is_flag=True, help="Build the map and run the orbit checks.")
@click.option("--iters", type=int, default=1000, show_default=True)
@click.option("--out", default=None)
@click.pass_context
def denjoy(ctx, alpha, theta, window, tail_target, verify, iters, out):
    """Wandering-interval scheme and (with --verify) the Denjoy map checks."""
    _finish(ctx, "denjoy", {"alpha": alpha, "theta": theta, "window": window,
                            "tail_target": tail_target, "verify": verify, "iters": iters}, out)


@main.command()
@click.option("--k", "k", type=int, default=2, show_default=True)
@click.option("--alpha", default="hoelder:0.5", show_default=True)
@click.option("--ell", type=float, default=0.01, show_default=True)
@click.option("--delta0", type=float, default=0.9, show_default=True)
@click.option("--grid", type=int, default=1025, show_default=True)
@click.option("--out", default=None)
@click.pass_context
def fastmap(ctx, k, alpha, ell, delta0, grid, out):
    """Fast bump: (x, f, f') samples and the property checks."""
    _finish(ctx, "fastmap", {"k": k, "alpha": alpha, "ell": ell, "delta0": delta0, "grid": grid}, out)


@main.group()
def chains():
    """Covering lengths."""


@chains.command("cover")
@click.option("--target", required=True, help="a,b")
@click.option("--cover", "cover_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default=None)
@click.pass_context
def chains_cover(ctx, target, cover_path, out):
    """Covering length of [a, b] by the intervals of a cover CSV."""
    _parse_pair(target)
    _finish(ctx, "cover", {"target": target, "cover": cover_path}, out)


@chains.command("random")
@click.option("--count", type=int, default=200, show_default=True)
@click.option("--max-intervals", type=int, default=12, show_default=True)
@click.option("--out", default=None)
@click.pass_context
def chains_random(ctx, count, max_intervals, out):
    """Greedy against exhaustive covering length on seeded random covers."""
    _finish(ctx, "randcover", {"count": count, "max_intervals": max_intervals}, out)


@main.group()
def thompson():
    """Exact computations in Thompson's group F."""


@thompson.command("relcheck")
@click.option("--out", default=None)
@click.pass_context
def thompson_relcheck(ctx, out):
    """Evaluate both defining relators exactly."""
    _finish(ctx, "relcheck", {}, out)


@thompson.command("transit")
@click.option("--from", "src", required=True, help="Comma separated dyadics in (0, 1).")
@click.option("--to", "dst", required=True)
@click.option("--out", default=None)
@click.pass_context
def thompson_transit(ctx, src, dst, out):
    """An element of F sending one increasing dyadic tuple to another."""
    xs, ys = _dyadics(src), _dyadics(dst)
    if len(xs) != len(ys):
        raise click.BadParameter("--from and --to need the same number of points")
    _finish(ctx, "transit", {"from": src, "to": dst}, out)


@thompson.command("random")
@click.option("--count", type=int, default=50, show_default=True)
@click.option("--n-max", type=int, default=4, show_default=True)
@click.option("--level", type=int, default=8, show_default=True)
@click.option("--out", default=None)
@click.pass_context
def thompson_random(ctx, count, n_max, level, out):
    """Seeded random n-transitivity instances."""
    _finish(ctx, "randtransit", {"count": count, "n_max": n_max, "level": level}, out)


@main.command()
@click.option("--k", "k", type=int, default=1, show_default=True)
@click.option("--alpha", default="hoelder:0.5", show_default=True)
@click.option("--lengths", default="invlogsq", show_default=True)
@click.option("--window", type=int, default=400, show_default=True)
@click.option("--imax", type=int, default=300, show_default=True)
@click.option("--out", default=None)
@click.pass_context
def slowprogress(ctx, k, alpha, lengths, window, imax, out):
    """Covering distance growth along the fast chain action."""
    _finish(ctx, "slowprogress", {"k": k, "alpha": alpha, "lengths": lengths, "window": window,
                                  "imax": imax}, out)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--set", "overrides", multiple=True, help="key=value, overriding the file.")
@click.pass_context
def run(ctx, config_path, overrides):
    """Run every experiment listed in a key = value config file."""
    text = Path(config_path).read_text()
    raw = {}
    base = ExperimentConfig.parse(text, config_path)  # validates the file on its own
    for n, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if s:
            key, val = (t.strip() for t in s.split("=", 1))
            raw[key] = (val, f"{config_path}:{n}")
    for o in overrides:
        if "=" not in o:
            raise click.UsageError(f"--set expects key=value, got {o!r}")
        key, val = (t.strip() for t in o.split("=", 1))
        raw[key] = (val, "--set")
    cfg = ExperimentConfig.from_raw(raw) if overrides else base
    if ctx.obj.get("out_dir") is None and cfg.output_dir is not None:
        ctx.obj["out_dir"] = cfg.output_dir
    ok = True
    for kind in cfg.experiments:
        rep = run_experiment(kind, cfg.params.get(kind, {}), cfg.seed, cfg.tol)
        path = Path(cfg.outputs.get(kind, f"{kind}.csv"))
        if not path.is_absolute():
            path = _out_dir(ctx) / path
        emit(rep, path)
        fails = [c.name for c in rep.checks if c.passed is False]
        click.echo(f"{'PASS' if not fails else 'FAIL'} {kind}" + (f" ({', '.join(fails)})" if fails else ""))
        ok &= rep.passed
    ctx.exit(0 if ok else 1)


if __name__ == "__main__":  # pragma: no cover
    main()
