"""Batch experiment driver: estimate, verify, fit, extremal, bound-series,
and sample subcommands with JSON-lines measurement records.

Records embed the resolved configuration, its hash, the tool version, and a
wall clock stamp; identical configuration and seed reproduce byte-identical
records apart from the wall clock.  A JSON config file can predefine any
flag; explicit flags win.  Exit codes: 0 success, 1 runtime failure, 2
invalid configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import json
import sys
import threading
import time
from typing import Optional

import numpy as np

from . import __version__, analysis, arms, paths
from .lattice import build_box, build_rect
from .rcmodel import (BoundaryCondition, Configuration, Params,
                      critical_point, exact_distribution)
from .sampler import (ALGORITHMS, CHAYES_MACHTA, EXACT_TINY, HEAT_BATH,
                      SWENDSEN_WANG, SamplerSpec, initial_state,
                      save_checkpoint, sweep as chain_sweep, sample_codes)

STATISTICS = ("crossing", "chemical-distance", "lowest-length", "radial", "arm")
VERIFY_SUITES = ("oracle", "dichotomy", "arms")


class RecordWriter:
    """Line-atomic JSONL appends, serialized through one lock."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()

    def write(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()


def write_records(records, path) -> None:
    writer = RecordWriter(path)
    for r in records:
        writer.write(r)


def read_records(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed record: {exc}") from exc
    return out


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def measurement_record(est: "analysis.EstimateRecord", command: str,
                       config: dict) -> dict:
    rec = est.to_dict()
    rec["command"] = command
    rec["toolVersion"] = __version__
    rec["configHash"] = config_hash({"command": command, **config})
    rec["wallClock"] = time.time()
    return rec


def _resolve_p(p_arg, q: float) -> float:
    if p_arg in (None, "critical"):
        return critical_point(q)
    return float(p_arg)


def _sampler_spec(args) -> SamplerSpec:
    return SamplerSpec(algorithm=args.algorithm,
                       burn_in_sweeps=args.burnin,
                       thinning_sweeps=args.thinning,
                       replica_count=args.replicas)


def _emit(records, args, command, config) -> None:
    out = [measurement_record(r, command, config) for r in records]
    if args.out:
        write_records(out, args.out)
    for rec in out:
        print(json.dumps(rec, sort_keys=True))


def _config_dict(args, skip=("out", "config", "func")) -> dict:
    return {k: v for k, v in sorted(vars(args).items())
            if k not in skip and not callable(v)}


# -- subcommand implementations ----------------------------------------------

def _cmd_estimate(args) -> int:
    _require(args, "q")
    q = args.q
    p = _resolve_p(args.p, q)
    params = Params(p, q)
    spec = _sampler_spec(args)
    cfg = _config_dict(args)
    cfg["p_resolved"] = p
    stat = args.statistic
    if stat == "arm":
        if args.n1 is None or args.n2 is None or not args.sigma:
            raise ConfigError("arm estimates need --n1, --n2 and --sigma")
        rec = analysis.estimate_arm_probability(
            tuple(args.sigma), args.n1, args.n2, q, args.bc, spec,
            args.seed, args.samples, domain_n=args.n)
        _emit([rec], args, "estimate arm", cfg)
        return 0
    if args.n is None:
        raise ConfigError(f"{stat} estimates need --n")
    box = build_box(args.n)
    bc = (BoundaryCondition.free(box) if args.bc == "free"
          else BoundaryCondition.wired(box))
    if stat == "crossing":
        rec = analysis.estimate_probability(
            lambda c: paths.has_horizontal_crossing(c, box), box, params, bc,
            spec, args.seed, args.samples, name=f"P[crossing](n={args.n})",
            n=args.n)
    elif stat == "chemical-distance":
        rec = analysis.estimate_conditional_mean(
            lambda c: float(paths.chemical_distance(c, box) or 0),
            lambda c: paths.has_horizontal_crossing(c, box),
            box, params, bc, spec, args.seed, args.samples,
            name=f"E[S|H](n={args.n})", n=args.n)
    elif stat == "lowest-length":
        def lowest_len(c):
            lc = paths.lowest_crossing(c, box)
            return float(lc.length) if lc is not None else 0.0
        rec = analysis.estimate_conditional_mean(
            lowest_len, lambda c: paths.has_horizontal_crossing(c, box),
            box, params, bc, spec, args.seed, args.samples,
            name=f"E[len(l)|H](n={args.n})", n=args.n)
    elif stat == "radial":
        rec = analysis.estimate_conditional_mean(
            lambda c: float(paths.radial_chemical_distance(c, box) or 0),
            lambda c: paths.radial_chemical_distance(c, box) is not None,
            box, params, bc, spec, args.seed, args.samples,
            name=f"E[radial|connected](n={args.n})", n=args.n)
    else:  # pragma: no cover - argparse choices forbid this
        raise ConfigError(f"unknown statistic {stat}")
    _emit([rec], args, f"estimate {stat}", cfg)
    return 0


def _cmd_sample(args) -> int:
    _require(args, "q", "n", "checkpoint")
    q = args.q
    params = Params(_resolve_p(args.p, q), q)
    box = build_box(args.n)
    bc = (BoundaryCondition.free(box) if args.bc == "free"
          else BoundaryCondition.wired(box))
    spec = SamplerSpec(args.algorithm, burn_in_sweeps=0, thinning_sweeps=1)
    state = initial_state(box, params, args.seed)
    for _ in range(args.sweeps):
        state = chain_sweep(state, params, bc, args.algorithm)
    save_checkpoint(args.checkpoint, state, params, bc)
    print(json.dumps({"checkpoint": args.checkpoint, "sweeps": state.sweeps,
                      "openEdges": int(state.config.n_open),
                      "toolVersion": __version__}, sort_keys=True))
    return 0


def decorrelation_thinning(alg: str, dom, params: Params, bc, seed: int,
                           pilot: int = 6000) -> int:
    """Thinning that makes thinned samples effectively independent: ten
    times the largest per-edge integrated autocorrelation time from a
    pilot run (needed because the chi-square test assumes i.i.d. draws)."""
    from .sampler import autocorrelation
    if alg == EXACT_TINY:
        return 1
    spec = SamplerSpec(alg, burn_in_sweeps=64, thinning_sweeps=1)
    codes = sample_codes(spec, dom, params, bc, seed ^ 0x5DEECE66D, pilot)
    tau = 0.5
    for e in range(dom.n_edges):
        x = ((codes >> e) & 1).astype(float)
        if x.std() > 0:
            tau = max(tau, autocorrelation(x))
    return int(math.ceil(10.0 * tau)) + 2


def _verify_oracle(args) -> int:
    q = args.q
    params = Params(critical_point(q), q)
    domains = [("single-edge", build_rect(0, 1, 0, 0)), ("B(1)", build_box(1))]
    algorithms = [HEAT_BATH, CHAYES_MACHTA, EXACT_TINY]
    if abs(q - round(q)) < 1e-12 and round(q) in (2, 3, 4):
        algorithms.insert(1, SWENDSEN_WANG)
    failures = 0
    for alg in algorithms:
        for dname, dom in domains:
            for bc_kind in ("free", "wired"):
                bc = (BoundaryCondition.free(dom) if bc_kind == "free"
                      else BoundaryCondition.wired(dom))
                thin = args.thinning or decorrelation_thinning(
                    alg, dom, params, bc, args.seed)
                spec = SamplerSpec(alg, burn_in_sweeps=64,
                                   thinning_sweeps=thin)
                codes = sample_codes(spec, dom, params, bc, args.seed,
                                     args.samples)
                table = exact_distribution(dom, params, bc)
                pval = chi_square_pvalue(codes, table.probabilities)
                ok = pval > 0.01
                failures += 0 if ok else 1
                print(f"{'PASS' if ok else 'FAIL'} {alg} q={q} {dname} "
                      f"{bc_kind}: thinning={thin} chi-square p={pval:.4f}")
    return 0 if failures == 0 else 1


def chi_square_pvalue(codes: np.ndarray, probabilities: np.ndarray,
                      min_expected: float = 10.0) -> float:
    """Goodness of fit of sampled bit-codes against exact cell
    probabilities, pooling the smallest-expectation cells."""
    from scipy import stats as sstats
    n = len(codes)
    counts = np.bincount(codes, minlength=len(probabilities)).astype(float)
    exp = probabilities * n
    order = np.argsort(exp)
    obs_p, exp_p = [], []
    acc_o = acc_e = 0.0
    for i in order:
        acc_o += counts[i]
        acc_e += exp[i]
        if acc_e >= min_expected:
            obs_p.append(acc_o)
            exp_p.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0:
        if exp_p:
            obs_p[-1] += acc_o
            exp_p[-1] += acc_e
        else:
            obs_p.append(acc_o)
            exp_p.append(acc_e)
    obs_a, exp_a = np.array(obs_p), np.array(exp_p)
    if len(obs_a) < 2:
        return 1.0
    chi2 = float(((obs_a - exp_a) ** 2 / exp_a).sum())
    return float(1.0 - sstats.chi2.cdf(chi2, len(obs_a) - 1))


def _verify_dichotomy(args) -> int:
    rect = paths.crossing_rectangle(args.n)
    rng = np.random.default_rng(args.seed)
    half = 0
    for _ in range(args.samples):
        cfg = Configuration.bernoulli(rect, 0.5, rng)
        if not paths.duality_dichotomy_holds(cfg, rect):
            print(f"FAIL dichotomy violated at n={args.n}")
            return 1
        if paths.has_horizontal_crossing(cfg, rect):
            half += 1
    freq = half / args.samples
    z = (freq - 0.5) / (0.5 / args.samples ** 0.5)
    ok = abs(z) < 4
    print(f"{'PASS' if ok else 'FAIL'} dichotomy exact on {args.samples} "
          f"samples; crossing frequency {freq:.4f} (z={z:.2f})")
    return 0 if ok else 1


def _verify_arms(args) -> int:
    from .lattice import build_annulus
    ann = build_annulus((0, 0), 1, 3)
    rng = np.random.default_rng(args.seed)
    sigmas = [("O",), ("C",), ("O", "C"), ("O", "O", "C"),
              ("O", "C", "O", "C", "O")]
    for trial in range(args.samples):
        bits = (rng.random(ann.n_edges) < 0.5).astype(np.uint8)
        cfg = Configuration(ann, bits)
        for sigma in sigmas:
            spec = arms.ArmSpec(ann, sigma)
            det = arms.detect_arm_event(cfg, spec).occurs
            orc = arms.brute_force_arm_oracle(cfg, spec)
            if det != orc:
                print(f"FAIL detector/oracle disagree on sigma={sigma} "
                      f"trial={trial}")
                return 1
    print(f"PASS arm detector matches oracle on {args.samples} random "
          f"configurations x {len(sigmas)} color sequences")
    return 0


def _cmd_verify(args) -> int:
    if args.suite == "oracle":
        return _verify_oracle(args)
    if args.suite == "dichotomy":
        return _verify_dichotomy(args)
    return _verify_arms(args)


def _cmd_fit(args) -> int:
    _require(args, "input")
    records = read_records(args.input)
    points = []
    for rec in records:
        ctx = rec.get("context", {})
        if "n1" in ctx and "n2" in ctx and rec.get("value", 0) > 0:
            points.append((ctx["n1"] / ctx["n2"], rec["value"], rec["stderr"]))
    if len(points) < 3:
        raise ConfigError(f"need at least 3 usable records, found {len(points)}")
    fit = analysis.fit_power_law(points, seed=args.seed)
    out = {"command": "fit", "exponent": fit.exponent,
           "exponentCI": list(fit.exponent_ci),
           "interceptLog": fit.intercept_log, "rSquared": fit.r_squared,
           "nPoints": len(points), "toolVersion": __version__,
           "configHash": config_hash({"command": "fit", "points": points}),
           "wallClock": time.time()}
    if args.out:
        write_records([out], args.out)
    print(json.dumps(out, sort_keys=True))
    return 0


def _cmd_extremal(args) -> int:
    _require(args, "rows", "cols")
    quad = analysis.quad_rectangle(args.rows, args.cols)
    removed = []
    if args.holes:
        rng = np.random.default_rng(args.seed)
        interior = [i for i, (u, v) in enumerate(quad.edges)
                    if all(0 < w.x < args.cols and 0 < w.y < args.rows
                           for w in (u, v))]
        removed = sorted(rng.choice(interior, size=min(args.holes, len(interior)),
                                    replace=False).tolist())
        quad = analysis.remove_quad_edges(quad, removed)
    value, residual = analysis.extremal_distance(quad)
    out = {"command": "extremal", "value": value, "residual": residual,
           "rows": args.rows, "cols": args.cols, "holes": removed,
           "toolVersion": __version__,
           "configHash": config_hash({"command": "extremal",
                                      "rows": args.rows, "cols": args.cols,
                                      "holes": removed}),
           "wallClock": time.time()}
    if args.out:
        write_records([out], args.out)
    print(json.dumps(out, sort_keys=True))
    return 0


def _cmd_bound_series(args) -> int:
    _require(args, "q", "n-list")
    n_list = [int(s) for s in args.n_list.split(",")]
    spec = _sampler_spec(args)
    recs = analysis.bound_ratio_series(n_list, args.q, args.bc, spec,
                                       args.seed, args.samples)
    cfg = _config_dict(args)
    _emit(recs, args, "bound-series", cfg)
    return 0


class ConfigError(ValueError):
    pass


def _require(args, *names) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise ConfigError("missing required settings: "
                          + ", ".join("--" + n for n in missing))


# -- parser -------------------------------------------------------------------

def _add_sampler_flags(p, default_samples=100_000):
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--p", default="critical",
                   help="edge weight, or 'critical' for p_c(q)")
    p.add_argument("--bc", choices=("free", "wired"), default="free")
    p.add_argument("--algorithm", choices=ALGORITHMS, default=HEAT_BATH)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=default_samples)
    p.add_argument("--burnin", type=int, default=None,
                   help="burn-in sweeps (default: pilot-estimated)")
    p.add_argument("--thinning", type=int, default=4)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--out", default=None, help="JSONL output path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rclab",
        description="critical random-cluster model laboratory")
    ap.add_argument("--config", default=None,
                    help="JSON file of flag defaults (flags override)")
    sub = ap.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="Monte Carlo estimates")
    p_est.add_argument("statistic", choices=STATISTICS)
    _add_sampler_flags(p_est)
    p_est.add_argument("--n", type=int, default=None)
    p_est.add_argument("--n1", type=int, default=None)
    p_est.add_argument("--n2", type=int, default=None)
    p_est.add_argument("--sigma", default=None,
                       help="arm colors, e.g. OOC or OCOCO")
    p_est.set_defaults(func=_cmd_estimate)

    p_sample = sub.add_parser("sample", help="run a chain, write a checkpoint")
    p_sample.add_argument("--q", type=float, default=None)
    p_sample.add_argument("--p", default="critical")
    p_sample.add_argument("--n", type=int, default=None)
    p_sample.add_argument("--bc", choices=("free", "wired"), default="free")
    p_sample.add_argument("--algorithm", choices=ALGORITHMS[:3], default=HEAT_BATH)
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--sweeps", type=int, default=100)
    p_sample.add_argument("--checkpoint", default=None)
    p_sample.set_defaults(func=_cmd_sample)

    p_ver = sub.add_parser("verify", help="self-checking suites")
    p_ver.add_argument("suite", choices=VERIFY_SUITES)
    p_ver.add_argument("--q", type=float, default=1.0)
    p_ver.add_argument("--n", type=int, default=8)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--samples", type=int, default=100_000)
    p_ver.add_argument("--thinning", type=int, default=None,
                       help="sampler thinning (default: pilot-calibrated)")
    p_ver.set_defaults(func=_cmd_verify)

    p_fit = sub.add_parser("fit", help="power-law fit over arm records")
    p_fit.add_argument("--input", default=None)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--out", default=None)
    p_fit.set_defaults(func=_cmd_fit)

    p_ext = sub.add_parser("extremal", help="discrete extremal distance")
    p_ext.add_argument("--rows", type=int, default=None)
    p_ext.add_argument("--cols", type=int, default=None)
    p_ext.add_argument("--holes", type=int, default=0)
    p_ext.add_argument("--seed", type=int, default=0)
    p_ext.add_argument("--out", default=None)
    p_ext.set_defaults(func=_cmd_extremal)

    p_bs = sub.add_parser("bound-series", help="crossing-length ratio series")
    p_bs.add_argument("--n-list", default=None, help="e.g. 16,32,64")
    _add_sampler_flags(p_bs, default_samples=2000)
    p_bs.set_defaults(func=_cmd_bound_series)
    return ap


def run_command(argv) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if getattr(args, "config", None):
            # config supplies values for flags not given explicitly
            with open(args.config, encoding="utf-8") as fh:
                defaults = json.load(fh)
            if not isinstance(defaults, dict):
                raise ConfigError("config file must hold a JSON object")
            explicit = {a[2:].replace("-", "_") for a in argv
                        if a.startswith("--")}
            for key, value in defaults.items():
                attr = key.replace("-", "_")
                if attr not in explicit and hasattr(args, attr):
                    setattr(args, attr, value)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
