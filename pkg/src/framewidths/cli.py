"""Command-line front end.

Exit codes: 0 success, 1 a verify check failed, 2 invalid configuration or
usage, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .besov import BesovParams, dyadic_n_list
from .domains import build_domain_frame_pair, domain_preset, stable_box_subframe
from .errors import (
    AdmissibilityError,
    ConfigurationError,
    FitError,
    FrameWidthsError,
    GeometryError,
    NumericError,
    ParameterError,
    RegularityError,
    SpectralError,
)
from .experiments import KINDS, rate_experiment
from .frames import (
    check_stability,
    continuous_n_term,
    load_frame_pair,
    n_term_error,
    orthonormal_frame,
    pathological_frame,
    random_subsets,
    riesz_basis_frame,
    singleton_subsets,
    tight_duplicate,
    tight_growing,
)
from .operators import SolutionOperator
from .verify import run_verify
from .wavelets import build_system

__all__ = ["ExperimentConfig", "load_config", "main"]

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
_CONFIG_ERRORS = (ConfigurationError, ParameterError, RegularityError, GeometryError, AdmissibilityError)
_NUMERIC_ERRORS = (NumericError, SpectralError, FitError, FloatingPointError, np.linalg.LinAlgError)


class ConfigFieldError(ConfigurationError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    """Flat experiment description; see :func:`load_config` for the file keys."""

    kind: str = "sequence"
    family: tuple = (2, 4)
    domain: str = "interval"
    source: BesovParams = field(default_factory=lambda: BesovParams(1.0, 1.0, 2.0))
    target_s: float | None = None
    n_list: list = field(default_factory=lambda: dyadic_n_list(16, 1024))
    seed: int = 0
    n_random: int = 64
    levels: int | None = None
    fit_range: tuple | None = None
    dictionary: str = "wavelet"
    output: str = "out"
    tolerances: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigFieldError("kind", f"unknown kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if tuple(self.family) not in ((1, 1), (2, 2), (2, 4)):
            raise ConfigFieldError("family", f"unsupported family {self.family}; use 1,1 or 2,2 or 2,4")
        if not 0 <= self.seed < 2**64:
            raise ConfigFieldError("seed", "must be an unsigned 64-bit integer")
        if not self.n_list or any(n < 0 for n in self.n_list):
            raise ConfigFieldError("n_list", "needs nonnegative integers")
        lo, hi = self.fit_range or (min(self.n_list), max(self.n_list))
        if sum(lo <= n <= hi for n in set(self.n_list)) < 4:
            raise ConfigFieldError("n_list", f"a rate fit needs at least 4 distinct n in [{lo}, {hi}]")
        if self.n_random < 0:
            raise ConfigFieldError("n_random", "must be nonnegative")
        if self.dictionary not in ("trig", "wavelet"):
            raise ConfigFieldError("dictionary", "use trig or wavelet")
        target = self.resolved_target()
        gain = 0.0 if self.kind == "sequence" else _operator(self.kind).gain
        try:
            self.source.t_condition(target, gain)
        except ParameterError as exc:
            raise ConfigFieldError("t", str(exc)) from None
        if self.kind == "domain-poisson" and not build_system(tuple(self.family), 1).r > 1:
            raise ConfigFieldError("family", "domain-poisson measures H^1 errors and needs regularity r > 1 (2,4)")
        return self

    def resolved_target(self) -> float:
        if self.target_s is not None:
            return self.target_s
        return {"domain-poisson": 1.0, "single-layer": -0.5}.get(self.kind, 0.0)


def _operator(kind: str) -> SolutionOperator:
    return SolutionOperator("poisson-1d" if kind == "domain-poisson" else "single-layer-circle")


def _parse_float(name, raw):
    raw = raw.strip().lower()
    if raw in ("inf", "infinity"):
        return math.inf
    try:
        if "/" in raw:
            num, den = raw.split("/")
            return float(num) / float(den)
        return float(raw)
    except (ValueError, ZeroDivisionError):
        raise ConfigFieldError(name, f"expected a number, got {raw!r}") from None


def _parse_ints(name, raw):
    try:
        return [int(x) for x in raw.replace(",", " ").split()]
    except ValueError:
        raise ConfigFieldError(name, f"expected integers, got {raw!r}") from None


_KEYS = {"kind", "family", "domain", "s", "t", "p", "q", "d", "target_s", "n_list", "seed", "n_random",
         "levels", "fit_min", "fit_max", "dictionary", "output"}


def load_config(path) -> ExperimentConfig:
    """Read an INI file with an ``[experiment]`` section and optional ``[tolerances]``.

    Keys: ``kind``, ``family`` (e.g. ``2,4``), ``domain``, ``p``, ``q``, ``d``,
    either ``s`` (source smoothness) or ``t`` (smoothness gap), ``target_s``,
    ``n_list``, ``seed``, ``n_random``, ``levels``, ``fit_min``, ``fit_max``,
    ``dictionary``, ``output``.  ``[tolerances]`` may set ``slope``.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigFieldError("config", str(exc)) from None
    if "experiment" not in parser:
        raise ConfigFieldError("config", "missing [experiment] section")
    sec = parser["experiment"]
    unknown = set(sec) - _KEYS
    if unknown:
        raise ConfigFieldError(sorted(unknown)[0], "unknown key")
    cfg = ExperimentConfig()
    cfg.kind = sec.get("kind", cfg.kind).strip()
    if "family" in sec:
        fam = tuple(_parse_ints("family", sec["family"]))
        if len(fam) != 2:
            raise ConfigFieldError("family", "expected two integers")
        cfg.family = fam
    cfg.domain = sec.get("domain", cfg.domain).strip()
    if "target_s" in sec:
        cfg.target_s = _parse_float("target_s", sec["target_s"])
    p = _parse_float("p", sec.get("p", "2"))
    q = _parse_float("q", sec.get("q", "2"))
    d = _parse_ints("d", sec.get("d", "1"))[0]
    if "s" in sec and "t" in sec:
        raise ConfigFieldError("t", "give either s or t, not both")
    try:
        if "t" in sec:
            t = _parse_float("t", sec["t"])
            gain = 0.0 if cfg.kind == "sequence" else _operator(cfg.kind).gain
            s = t + cfg.resolved_target() - gain
        else:
            s = _parse_float("s", sec.get("s", "1"))
        cfg.source = BesovParams(s, p, q, d)
    except ParameterError as exc:
        name = str(exc).split()[0]
        raise ConfigFieldError(name if name in ("p", "q") else "d", str(exc)) from None
    except ConfigurationError:
        raise ConfigFieldError("kind", f"unknown kind {cfg.kind!r}") from None
    if "n_list" in sec:
        cfg.n_list = _parse_ints("n_list", sec["n_list"])
    if "seed" in sec:
        cfg.seed = _parse_ints("seed", sec["seed"])[0]
    if "n_random" in sec:
        cfg.n_random = _parse_ints("n_random", sec["n_random"])[0]
    if "levels" in sec:
        cfg.levels = _parse_ints("levels", sec["levels"])[0]
    if "fit_min" in sec or "fit_max" in sec:
        cfg.fit_range = (_parse_ints("fit_min", sec.get("fit_min", str(min(cfg.n_list))))[0],
                         _parse_ints("fit_max", sec.get("fit_max", str(max(cfg.n_list))))[0])
    cfg.dictionary = sec.get("dictionary", cfg.dictionary).strip()
    cfg.output = sec.get("output", cfg.output).strip()
    if "tolerances" in parser:
        cfg.tolerances = {k: _parse_float(k, v) for k, v in parser["tolerances"].items()}
    return cfg


# -- output --------------------------------------------------------------------------


def _write(out: Path, name: str, text: str):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", newline="") as fh:
        fh.write(text)


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


class _Console:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, *args):
        if not self.quiet:
            print(*args)


# -- subcommands ---------------------------------------------------------------------


def _frame_constants(cfg: ExperimentConfig) -> dict:
    """Measured constants of the frame model behind an experiment."""
    if cfg.kind == "sequence":
        return {"model": "canonical basis of b^s_{2,2}", "A": 1.0, "B": 1.0, "A_prime": 1.0}
    op = _operator(cfg.kind)
    nS, nSi = op.norms(1 << 6)
    consts = {"operator": op.kind, "norm_S_modes_1_64": nS, "norm_S_inv_modes_1_64": nSi}
    if cfg.kind == "domain-poisson":
        dfp = build_domain_frame_pair(build_system(tuple(cfg.family), 1), domain_preset("interval"), s=1.0,
                                      j_max=5)
        fr = dfp.frame
        consts.update({"model": "domain frame on (0,1), H^1, j_max=5", "A": fr.A, "B": fr.B})
    else:
        consts["model"] = f"{cfg.dictionary} dictionary in H^-1/2"
    return consts


def cmd_rates(args, cfg: ExperimentConfig, say) -> int:
    cfg.validate()
    rep = rate_experiment(cfg.kind, cfg.source, cfg.target_s, cfg.n_list, seed=cfg.seed,
                          n_random=cfg.n_random, levels=cfg.levels, fit_range=cfg.fit_range,
                          family=tuple(cfg.family), dictionary=cfg.dictionary)
    report = {**rep.header(), "samples": [[n, e] for n, e in rep.samples],
              "frame_constants": _frame_constants(cfg)}
    tol = cfg.tolerances.get("slope")
    if tol is not None:
        report["slope_tolerance"] = tol
        report["within_tolerance"] = abs(rep.slope - rep.target_slope) <= tol
    out = Path(args.out or cfg.output)
    _write(out, "report.json", _dump(report))
    _write(out, "errors.csv", rep.to_csv())
    _write(out, "plot.dat", rep.plot_data())
    say(f"{cfg.kind}: slope {rep.slope:.4f} (target {rep.target_slope:.4f}) -> {out}")
    return EXIT_OK


def _model_frame(name: str, args, rng):
    if name == "tight-duplicate":
        return tight_duplicate(args.dim)
    if name == "tight-growing":
        return tight_growing(args.size)
    if name == "orthonormal":
        return orthonormal_frame(args.dim)
    if name == "riesz":
        return riesz_basis_frame(args.dim, rng)
    raise ConfigFieldError("model", f"unknown frame model {name!r}")


def _sampled_stability(frame, rng) -> float:
    subsets = singleton_subsets(frame) + random_subsets(frame, 50, rng)
    probes = [np.eye(frame.dim)[i] for i in range(frame.dim)] + [rng.standard_normal(frame.dim) for _ in range(10)]
    return check_stability(frame, subsets, probes)


def cmd_frame_bounds(args, cfg, say) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else cfg.seed)
    if args.frame:
        frame = load_frame_pair(args.frame)
    elif args.model == "domain":
        dfp = build_domain_frame_pair(build_system(tuple(cfg.family), domain_preset(cfg.domain).dimension),
                                      domain_preset(cfg.domain), s=args.s, j_max=args.j_max)
        frame = dfp.frame
    else:
        frame = _model_frame(args.model, args, rng)
    res = {"model": frame.name, "size": frame.size, "dim": frame.dim, "A": frame.A, "B": frame.B,
           "A_prime_declared": frame.A_prime, "A_prime_sampled": _sampled_stability(frame, rng),
           "B_over_minA": frame.admissibility_ratio}
    _emit(args, "frame_bounds.json", res, say)
    return EXIT_OK


def _emit(args, name, obj, say):
    text = _dump(obj)
    if args.out:
        _write(Path(args.out), name, text)
    say(text.rstrip())


def cmd_stability(args, cfg, say) -> int:
    domain = domain_preset(cfg.domain if args.domain is None else args.domain)
    box = [tuple(_parse_float("box", v) for v in b.split(":")) for b in args.box]
    dfp = build_domain_frame_pair(build_system(tuple(cfg.family), domain.dimension), domain, s=args.s,
                                  j_max=args.j_max, stable_box=box)
    rep = stable_box_subframe(dfp, box, n_probes=args.probes, seed=args.seed if args.seed is not None else cfg.seed)
    fr = dfp.frame
    res = {"domain": domain.name, "family": list(cfg.family), "box": box, "onset": rep.onset,
           "A_prime_spectral": rep.A_prime, "A_prime_sampled": rep.sampled_A_prime,
           "cardinalities": rep.cardinalities, "leakage": rep.leakage, "A": fr.A, "B": fr.B}
    _emit(args, "stability.json", res, say)
    return EXIT_OK


def cmd_threshold_demo(args, cfg, say) -> int:
    base = args.seed if args.seed is not None else cfg.seed
    rows, ok = [], True
    for i in range(args.trials):
        rng = np.random.default_rng([base, i])
        fr = riesz_basis_frame(args.dim, rng)
        f = rng.standard_normal(args.dim) * np.exp(-rng.uniform(0.05, 0.5) * np.arange(args.dim))
        n = int(rng.integers(1, args.dim // 2))
        e, _ = n_term_error(fr, f, n)
        res = continuous_n_term(fr, f, n, e)
        good = res.kept_count <= 2 * n and res.error <= res.bound * (1 + 1e-6)
        ok &= good
        rows.append([i, n, res.kept_count, repr(res.error), repr(res.bound), int(good)])
    text = _rows_csv(["trial", "n", "m", "error", "bound", "ok"], rows)
    if args.out:
        _write(Path(args.out), "threshold.csv", text)
    say(text.rstrip())
    say(f"all rows satisfy m <= 2n and error <= 2B/A e: {ok}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_counterexample(args, cfg, say) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else cfg.seed)
    if args.which == "pathological":
        probes = rng.standard_normal((args.probes, args.dim))
        probes /= np.linalg.norm(probes, axis=1, keepdims=True)
        frame, rec = pathological_frame(probes, args.delta, C=args.C, epsilon=args.epsilon)
        res = {**rec.to_dict(), "A": frame.A, "B": frame.B}
        ok = rec.all_below and res["measured_B_over_A"] < args.C
    elif args.which == "tight-duplicate":
        fr = tight_duplicate(args.dim)
        res = {"A": fr.A, "B": fr.B, "A_prime": _sampled_stability(fr, rng), "expected_A_prime": 2**-0.5}
        ok = True
    else:
        rows = []
        for m in range(1, args.size + 1):
            fr = tight_growing(m)
            rows.append({"m": m, "elements": fr.size, "A": fr.A, "B": fr.B, "A_prime": _sampled_stability(fr, rng)})
        res = {"sections": rows}
        ok = True
    _emit(args, f"counterexample_{args.which}.json", res, say)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_verify(args, cfg, say) -> int:
    rep = run_verify(args.seed if args.seed is not None else cfg.seed)
    if args.out:
        _write(Path(args.out), "verify.json", rep.to_json() + "\n")
    say(rep.table())
    say(f"{sum(c.passed for c in rep.checks)}/{len(rep.checks)} checks passed")
    return EXIT_OK if rep.passed else EXIT_CHECK


# -- argument parsing ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(_dump({"error": "usage", "message": message, "exit": EXIT_CONFIG}).rstrip(), file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _seed(raw: str) -> int:
    v = int(raw, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS, help="INI experiment file")
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", metavar="U64", type=_seed, default=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    parser = _Parser(prog="framewidths", parents=[common],
                     description="Frame-based n-term approximation experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rates", parents=[common], help="worst-case n-term rate experiment")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--p", dest="p")
    p.add_argument("--q", dest="q")
    p.add_argument("--t", dest="t", help="smoothness gap (overrides the config)")
    p.add_argument("--n-list", dest="n_list")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("frame-bounds", parents=[common], help="measured frame bounds of a model")
    p.add_argument("model", nargs="?", default="tight-duplicate",
                   choices=["tight-duplicate", "tight-growing", "orthonormal", "riesz", "domain"])
    p.add_argument("--frame", metavar="JSON", help="load a frame pair instead of a model")
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--size", type=int, default=30)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--j-max", dest="j_max", type=int, default=5)
    p.set_defaults(func=cmd_frame_bounds)

    p = sub.add_parser("stability", parents=[common], help="stable-box subframe of a domain frame")
    p.add_argument("--domain")
    p.add_argument("--box", nargs="+", default=["0.25:0.75"], help="lo:hi per axis")
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--j-max", dest="j_max", type=int, default=6)
    p.add_argument("--probes", type=int, default=20)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("threshold-demo", parents=[common], help="soft-threshold guarantee rows")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--dim", type=int, default=64)
    p.set_defaults(func=cmd_threshold_demo)

    p = sub.add_parser("counterexample", parents=[common], help="frame counterexample records")
    p.add_argument("which", choices=["pathological", "tight-duplicate", "tight-growing"])
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--probes", type=int, default=8)
    p.add_argument("--C", type=float, default=2.0)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--size", type=int, default=30)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    p.set_defaults(func=cmd_verify)
    return parser


def _apply_overrides(args, cfg: ExperimentConfig) -> ExperimentConfig:
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "kind", None):
        cfg = replace(cfg, kind=args.kind)
    src = cfg.source
    p = _parse_float("p", args.p) if getattr(args, "p", None) else src.p
    q = _parse_float("q", args.q) if getattr(args, "q", None) else src.q
    s = src.s
    if getattr(args, "t", None):
        gain = 0.0 if cfg.kind == "sequence" else _operator(cfg.kind).gain
        s = _parse_float("t", args.t) + cfg.resolved_target() - gain
    try:
        cfg = replace(cfg, source=BesovParams(s, p, q, src.d))
    except ParameterError as exc:
        raise ConfigFieldError("p", str(exc)) from None
    if getattr(args, "n_list", None):
        cfg = replace(cfg, n_list=_parse_ints("n_list", args.n_list))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("config", None), ("out", None), ("seed", None), ("quiet", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    say = _Console(args.quiet)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = _apply_overrides(args, cfg)
        return args.func(args, cfg, say)
    except _CONFIG_ERRORS as exc:
        diag = {"error": "invalid configuration", "field": getattr(exc, "field", None),
                "message": str(exc), "exit": EXIT_CONFIG}
        print(_dump(diag).rstrip(), file=sys.stderr)
        return EXIT_CONFIG
    except (*_NUMERIC_ERRORS, FrameWidthsError) as exc:
        diag = {"error": "numeric failure", "module": type(exc).__module__, "type": type(exc).__name__,
                "message": str(exc), "exit": EXIT_NUMERIC}
        print(_dump(diag).rstrip(), file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
