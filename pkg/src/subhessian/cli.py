"""Command-line harness.

Every subcommand reads an optional INI config (flat sections of key-value
pairs), applies flag overrides, validates everything before dispatch and
writes a JSON report (plus CSV tables where the output is tabular) to
``--out``. Exit codes: 0 success, 1 identity violation or failed
invariant, 2 rejected input or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .fields import FieldSystem, builtin, check_conditions, system_from_spec
from .geometry import (
    DistanceBudget,
    ExponentError,
    UnreachableError,
    cc_distances,
    doubling_check,
    exponent_report,
    homogeneous_dimension,
)
from .hessian import is_k_convex
from .identities import (
    RejectedInput,
    admissible_pairs,
    monotonicity_gap,
    principal_minor_identity,
    random_k_convex_quadratic,
    sample_garding_cone,
    verify_divergence_identity,
    verify_maclaurin_chain,
    verify_p_subharmonicity,
)
from .measures import BudgetError, Cutoff, Domain, MarginError, MaxOfQuadratics, local_bounds
from .measures import weak_continuity_experiment
from .sympoly import Polynomial, random_polynomial

COMMANDS = ("check-system", "verify-identities", "kconvex", "weak-continuity", "monotonicity",
            "local-bounds", "cc-geometry", "exponents")

EXIT_OK, EXIT_FAIL, EXIT_REJECTED = 0, 1, 2


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


# -- configuration -----------------------------------------------------------------

def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "auto", "none") else int(text)


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "auto", "none") else float(text)


def _choice(*options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _fmt(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "system": (str, "heisenberg1"),
        "seed": (int, 0),
        "out": (str, "reports"),
    },
    "check_system": {
        "samples": (int, 16),
        "sample_box": (float, 1.0),
        "max_step": (int, 4),
    },
    "identities": {
        "corpus": (_choice("random4", "random3", "random2"), "random4"),
        "corpus_size": (int, 20),
        "matrices": (int, 1000),
        "maclaurin_samples": (int, 1000),
        "maclaurin_k": (_opt_int, None),
    },
    "kconvex": {
        "k": (int, 2),
        "p": (_opt_float, None),
        "u": (str, ""),
        "functions": (int, 50),
        "samples": (int, 1000),
        "sample_box": (float, 2.0),
        "tol": (float, 1e-9),
    },
    "weak_continuity": {
        "h": (float, 0.02),
        "eps_ladder": (_floats, (0.2, 0.1, 0.05, 0.025)),
        "alpha": (_floats, (0.0, 0.25, 0.75)),
        "half_width": (float, 0.75),
        "shell": (float, 0.24),
        "eta_radius": (float, 0.5),
        "k": (int, 2),
        "target_q1": (str, "1/2 * x1^2 + 1/2 * x2^2"),
        "target_q2": (str, "1/2 * x1^2 + 1/2 * x2^2 + 3/10 * x1^1 + -3/20 * x2^1 + 1/10 * x3^1 + -1/20"),
        "gap_tol": (float, 1e-3),
        "margin_tol": (float, 1e-6),
    },
    "monotonicity": {
        "which": (_choice("auto", "f2", "f2_star"), "auto"),
        "pairs": (int, 10),
        "radius": (float, 1.0),
        "h": (_opt_float, None),
        "richardson_tol": (float, 0.05),
    },
    "local_bounds": {
        "q": (float, 1.0),
        "r": (float, 0.0),
        "k": (int, 2),
        "spread": (float, 1.5),
    },
    "cc_geometry": {
        "pairs": (int, 20),
        "pair_box": (float, 1.0),
        "radii": (_floats, (0.5, 1.0, 2.0)),
        "samples": (int, 2000),
        "segments": (int, 16),
        "iterations": (int, 30),
        "restarts": (int, 3),
        "doubling_c": (float, 1.0),
        "distance_tol": (float, 0.01),
    },
    "exponents": {
        "k": (_opt_int, None),
        "m": (_opt_int, None),
        "Q": (_opt_int, None),
    },
}


@dataclass
class ExperimentConfig:
    """Fully materialised configuration: every key of every section has a value."""

    values: dict[str, dict[str, object]] = field(default_factory=dict)

    def __post_init__(self):
        for section, keys in SCHEMA.items():
            sec = self.values.setdefault(section, {})
            for key, (_, default) in keys.items():
                sec.setdefault(key, default)

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, text: str):
        self.values[section][key] = _parse_value(section, key, text)

    @property
    def system(self) -> str:
        return self.values["run"]["system"]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    def to_dict(self) -> dict:
        return {s: {k: _fmt(v) for k, v in keys.items()} for s, keys in self.values.items()}

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for s, keys in self.to_dict().items():
            cp[s] = keys
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def validate(self):
        spec = self.system
        if not Path(spec).exists():
            try:
                builtin(spec)
            except ValueError:
                raise ConfigError(f"system: {spec!r} is neither a builtin nor an existing file") from None
        wc = self.values["weak_continuity"]
        if wc["h"] <= 0 or any(e <= 0 for e in wc["eps_ladder"]):
            raise ConfigError("weak_continuity: h and eps_ladder must be positive")
        if not 0 < wc["shell"] < wc["half_width"]:
            raise ConfigError("weak_continuity: shell must lie in (0, half_width)")
        for sec, key in (("check_system", "samples"), ("check_system", "max_step"),
                         ("identities", "corpus_size"), ("kconvex", "functions"),
                         ("kconvex", "samples"), ("monotonicity", "pairs"),
                         ("cc_geometry", "samples"), ("cc_geometry", "pairs")):
            if self.values[sec][key] < 1:
                raise ConfigError(f"{sec}: {key} must be at least 1")
        if any(r <= 0 for r in self.values["cc_geometry"]["radii"]):
            raise ConfigError("cc_geometry: radii must be positive")
        return self


def _parse_value(section: str, key: str, text: str):
    if section not in SCHEMA:
        raise ConfigError(f"unknown section [{section}]")
    if key not in SCHEMA[section]:
        raise ConfigError(f"unknown key {key!r} in [{section}]")
    parser = SCHEMA[section][key][0]
    try:
        return parser(text.strip())
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key!r} in [{section}]: {text!r} ({exc})") from None


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        # a bare key list is read as the [run] section
        if exc.lineno == 1 or not text.lstrip().startswith("["):
            return parse_config("[run]\n" + text)
        raise ConfigError(f"parse error at line {exc.lineno}: {exc.line!r}") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"parse error at line {lineno}: {line!r}") from None
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from None
    values: dict[str, dict] = {}
    for section in cp.sections():
        for key, raw in cp[section].items():
            values.setdefault(section, {})[key] = _parse_value(section, key, raw)
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
    return ExperimentConfig(values)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read, materialise defaults and validate a config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text).validate()


# -- reports -------------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return "inf" if math.isinf(v) and v > 0 else "-inf" if math.isinf(v) else v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, Polynomial):
        return v.to_text()
    return v


def report_bytes(report: dict) -> bytes:
    """Canonical serialisation used for report files."""
    return (json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n").encode()


def _write(out: Path, name: str, report: dict, tables: dict[str, str]):
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.json").write_bytes(report_bytes(report))
    for suffix, text in tables.items():
        (out / f"{name}{suffix}.csv").write_text(text)


# -- subcommands ---------------------------------------------------------------------

def _corpus(cfg: ExperimentConfig, n: int) -> list[Polynomial]:
    degree = int(cfg.get("identities", "corpus")[-1])
    rng = np.random.default_rng(cfg.seed)
    return [random_polynomial(n, rng, max_degree=degree) for _ in range(cfg.get("identities", "corpus_size"))]


def cmd_check_system(S: FieldSystem, cfg: ExperimentConfig):
    c = cfg.values["check_system"]
    rng = np.random.default_rng(cfg.seed)
    pts = rng.uniform(-c["sample_box"], c["sample_box"], size=(c["samples"], S.n))
    rep = check_conditions(S, pts, c["max_step"])
    result = rep.to_dict()
    result["conditions"] = {"i": all(rep.anti_self_adjoint), "ii": rep.hormander_holds,
                            "iii": rep.step2_vanishing}
    return result, EXIT_OK, {}


def cmd_verify_identities(S: FieldSystem, cfg: ExperimentConfig):
    rep = check_conditions(S)
    expect_zero = rep.anti_self_adjoint and rep.step2_vanishing
    entries = []
    failed = False
    for idx, u in enumerate(_corpus(cfg, S.n)):
        for r in verify_divergence_identity(S, u):
            d = {"name": r.name, "status": r.status, "residual_norm": r.residual_norm(),
                 "seed": cfg.seed, "corpus_index": idx, "u": u.to_text(),
                 "residual": r.residual.to_text()}
            if not r.ok:
                if expect_zero:
                    failed = True
                else:
                    d["label"] = "expected: condition (iii) or (i) absent"
            entries.append(d)

    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(cfg.get("identities", "matrices")):
        lhs, rhs = principal_minor_identity(rng.standard_normal((S.m, S.m)))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    minors = {"name": "principal_minors", "status": "holds_within" if worst <= 1e-12 else "violated",
              "residual_norm": worst, "tol": 1e-12, "seed": cfg.seed,
              "coefficient": "1/4"}
    failed |= worst > 1e-12

    k = cfg.get("identities", "maclaurin_k") or max(1, min(2, S.m))
    chain = {"name": "maclaurin_chain", "k": k, "m": S.m, "seed": cfg.seed}
    if k > S.m:
        raise RejectedInput(f"maclaurin_k={k} exceeds m={S.m}")
    lams = sample_garding_cone(S.m, k, cfg.get("identities", "maclaurin_samples"), rng)
    bad = [verify_maclaurin_chain(lam, k) for lam in lams]
    bad = [r for r in bad if not r.ok]
    chain.update(status="holds_within" if not bad else "violated", violations=len(bad),
                 samples=len(lams), residual_norm=max((r.residual_norm() for r in bad), default=0.0))
    failed |= bool(bad)
    result = {"divergence_expected_zero": expect_zero, "divergence": entries,
              "principal_minors": minors, "maclaurin": chain,
              "nonzero_divergence": sum(e["status"] == "violated" for e in entries)}
    return result, EXIT_FAIL if failed else EXIT_OK, {}


def cmd_kconvex(S: FieldSystem, cfg: ExperimentConfig):
    c = cfg.values["kconvex"]
    k = c["k"]
    if not 1 <= k <= S.m:
        raise RejectedInput(f"k={k} outside 1..{S.m}")
    rep = exponent_report(k, S.m, S.homogeneous_dim or S.n)
    p = c["p"] if c["p"] is not None else float(rep.p_laplace_max)
    rng = np.random.default_rng(cfg.seed)
    pts = rng.uniform(-c["sample_box"], c["sample_box"], size=(c["samples"], S.n))
    if c["u"]:
        funcs = [Polynomial.from_text(c["u"], S.n)]
    else:
        try:
            funcs = [random_k_convex_quadratic(S, k, rng) for _ in range(c["functions"])]
        except ValueError as exc:
            raise RejectedInput(str(exc)) from None
    rows, failed, rejected = [], False, 0
    for u in funcs:
        kc = is_k_convex(S, u, k, pts, c["tol"])
        row = {"u": u.to_text(), "k_convex": kc.to_dict()}
        try:
            r = verify_p_subharmonicity(S, u, k, pts, p, c["tol"])
            row["p_subharmonicity"] = r.to_dict()
            failed |= not r.ok
        except RejectedInput as exc:
            rejected += 1
            row["p_subharmonicity"] = {"status": "rejected", "reason": str(exc)}
        rows.append(row)
    result = {"k": k, "p": p, "functions": rows, "rejected": rejected,
              "violations": sum(r["p_subharmonicity"].get("status") == "violated" for r in rows)}
    table = "index,k_convex,min_sigma,min_delta_p\n" + "".join(
        f"{i},{int(r['k_convex']['holds'])},{r['k_convex']['worst']['value']!r},"
        f"{r['p_subharmonicity'].get('residual', float('nan'))!r}\n" for i, r in enumerate(rows))
    code = EXIT_FAIL if failed else EXIT_REJECTED if rejected == len(rows) else EXIT_OK
    return result, code, {"": table}


def _ladder_setup(S: FieldSystem, cfg: ExperimentConfig):
    c = cfg.values["weak_continuity"]
    try:
        q1 = Polynomial.from_text(c["target_q1"], S.n)
        q2 = Polynomial.from_text(c["target_q2"], S.n)
        target = MaxOfQuadratics(q1, q2)
    except ValueError as exc:
        raise ConfigError(f"weak_continuity target: {exc}") from None
    domain = Domain.cube(S.n, c["half_width"], shell=c["shell"])
    eta = Cutoff(tuple([0.0] * S.n), c["eta_radius"])
    return c, target, domain, eta


def cmd_weak_continuity(S: FieldSystem, cfg: ExperimentConfig):
    c, target, domain, eta = _ladder_setup(S, cfg)
    results = weak_continuity_experiment(S, target, c["eps_ladder"], eta, c["alpha"], domain=domain,
                                         h=c["h"], k=c["k"], margin_tol=c["margin_tol"])
    failed = False
    out, tables = [], {}
    for res in results:
        d = res.to_dict()
        ref = abs(res.rows[-1].pairing)
        d["relative_final_gap"] = res.final_gap() / ref if ref > 0 else math.inf
        d["passes"] = res.valid and res.monotone() and d["relative_final_gap"] < c["gap_tol"]
        failed |= not d["passes"]
        out.append(d)
        tables[f"_alpha{res.alpha:g}"] = res.to_csv()
    return {"target": target.describe(), "domain": domain.to_dict(), "eta": eta.eta_id,
            "ladders": out}, EXIT_FAIL if failed else EXIT_OK, tables


def cmd_local_bounds(S: FieldSystem, cfg: ExperimentConfig):
    c, target, domain, _ = _ladder_setup(S, cfg)
    lb = cfg.values["local_bounds"]
    rows = []
    for eps in c["eps_ladder"]:
        r = local_bounds(S, target.mollified(eps), domain.inner(), domain, lb["q"], lb["r"],
                         h=c["h"], k=lb["k"])
        rows.append({"eps": eps, **r.to_dict()})
    f2r = [r["f2_ratio"] for r in rows]
    spread = max(f2r) / min(f2r) if min(f2r) > 0 else math.inf
    ok = all(math.isfinite(v) for r in rows for v in (r["sup_ratio"], r["gradient_ratio"],
                                                      r["energy_ratio"], r["f2_ratio"]))
    ok &= spread <= lb["spread"]
    table = "eps,sup_ratio,gradient_ratio,energy_ratio,f2_ratio\n" + "".join(
        f"{r['eps']!r},{r['sup_ratio']!r},{r['gradient_ratio']!r},{r['energy_ratio']!r},"
        f"{r['f2_ratio']!r}\n" for r in rows)
    return {"rows": rows, "f2_ratio_spread": spread, "passes": ok}, EXIT_OK if ok else EXIT_FAIL, {"": table}


def cmd_monotonicity(S: FieldSystem, cfg: ExperimentConfig):
    c = cfg.values["monotonicity"]
    which = c["which"]
    if which == "auto":
        rep = check_conditions(S)
        if rep.step2_vanishing:
            which = "f2"
        elif rep.z_vanishes:
            which = "f2_star"
        else:
            raise RejectedInput("neither condition (iii) nor Z = 0 holds; no monotone functional")
    if c["radius"] != 1.0:
        raise RejectedInput("admissible pairs are constructed on the unit ball only")
    h = c["h"] if c["h"] is not None else (0.05 if S.n <= 3 else 0.1)
    domain = Domain.ball(tuple([0.0] * S.n), c["radius"])
    rows, failed = [], False
    for idx, (u, v) in enumerate(admissible_pairs(S, c["pairs"], cfg.seed)):
        r = monotonicity_gap(S, u, v, domain, which, h, seed=cfg.seed)
        ok = r.holds and r.richardson_agreement <= c["richardson_tol"]
        failed |= not ok
        rows.append({"name": f"monotonicity[{which}, pair {idx}]",
                     "status": "holds_within" if ok else "violated", "seed": cfg.seed, **r.to_dict()})
    table = "pair,gap,gap_coarse,quadrature_error,richardson_agreement\n" + "".join(
        f"{i},{r['gap']!r},{r['gap_coarse']!r},{r['quadrature_error']!r},{r['richardson_agreement']!r}\n"
        for i, r in enumerate(rows))
    return {"which": which, "h": h, "pairs": rows}, EXIT_FAIL if failed else EXIT_OK, {"": table}


def cmd_cc_geometry(S: FieldSystem, cfg: ExperimentConfig):
    c = cfg.values["cc_geometry"]
    budget = DistanceBudget(segments=c["segments"], iterations=c["iterations"], restarts=c["restarts"])
    rng = np.random.default_rng(cfg.seed)
    X = rng.uniform(-c["pair_box"], c["pair_box"], size=(c["pairs"], S.n))
    Y = rng.uniform(-c["pair_box"], c["pair_box"], size=(c["pairs"], S.n))
    failed = False
    dists = []
    for x, y in zip(X, Y):
        d = cc_distances(S, x, y[None, :], budget, cfg.seed)
        dists.append(float(d[0]))
    dist_rows = [{"x": x.tolist(), "y": y.tolist(), "distance": d} for x, y, d in zip(X, Y, dists)]
    if S.name.startswith("euclidean"):
        errs = [abs(d - float(np.linalg.norm(x - y))) / float(np.linalg.norm(x - y))
                for x, y, d in zip(X, Y, dists)]
        for row, e in zip(dist_rows, errs):
            row["relative_error_vs_euclidean"] = e
        failed |= max(errs) > c["distance_tol"]
    Q = S.homogeneous_dim
    fit = homogeneous_dimension(S, np.zeros(S.n), c["radii"], c["samples"], cfg.seed, budget, Q=Q)
    doubling = None
    if Q is not None:
        doubling = doubling_check(fit.volumes, Q, c["doubling_c"])
        failed |= not doubling
    result = {"distances": dist_rows, "dimension": fit.to_dict(), "Q_reference": Q,
              "doubling_ok": doubling}
    return result, EXIT_FAIL if failed else EXIT_OK, {"_volumes": fit.to_csv()}


def cmd_exponents(S: FieldSystem | None, cfg: ExperimentConfig):
    c = cfg.values["exponents"]
    m = c["m"] if c["m"] is not None else S.m
    Q = c["Q"] if c["Q"] is not None else (S.homogeneous_dim or S.n)
    k = c["k"] if c["k"] is not None else min(2, m)
    try:
        rep = exponent_report(k, m, Q)
    except ExponentError as exc:
        raise RejectedInput(str(exc)) from None
    return rep.to_dict(), EXIT_OK, {}


HANDLERS = {
    "check-system": cmd_check_system,
    "verify-identities": cmd_verify_identities,
    "kconvex": cmd_kconvex,
    "weak-continuity": cmd_weak_continuity,
    "monotonicity": cmd_monotonicity,
    "local-bounds": cmd_local_bounds,
    "cc-geometry": cmd_cc_geometry,
    "exponents": cmd_exponents,
}


# -- argument handling ---------------------------------------------------------------

# flag -> (section, key) overrides; "section.key" with the command's own section
COMMON_FLAGS = {"system": ("run", "system"), "seed": ("run", "seed"), "out": ("run", "out")}
COMMAND_FLAGS = {
    "verify-identities": {"corpus": ("identities", "corpus"),
                          "corpus-size": ("identities", "corpus_size")},
    "kconvex": {"k": ("kconvex", "k"), "p": ("kconvex", "p"), "u": ("kconvex", "u"),
                "functions": ("kconvex", "functions"), "samples": ("kconvex", "samples")},
    "weak-continuity": {"h": ("weak_continuity", "h"), "alpha": ("weak_continuity", "alpha"),
                        "eps-ladder": ("weak_continuity", "eps_ladder")},
    "monotonicity": {"which": ("monotonicity", "which"), "pairs": ("monotonicity", "pairs"),
                     "h": ("monotonicity", "h")},
    "local-bounds": {"q": ("local_bounds", "q"), "r": ("local_bounds", "r"),
                     "h": ("weak_continuity", "h")},
    "cc-geometry": {"pairs": ("cc_geometry", "pairs"), "samples": ("cc_geometry", "samples"),
                    "radii": ("cc_geometry", "radii")},
    "exponents": {"k": ("exponents", "k"), "m": ("exponents", "m"), "Q": ("exponents", "Q")},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subhessian", description="Subelliptic Hessian measure experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file; flags override its values")
        for flag in COMMON_FLAGS:
            p.add_argument(f"--{flag}")
        for flag in COMMAND_FLAGS.get(name, {}):
            p.add_argument(f"--{flag}", dest=flag.replace("-", "_"))
    return parser


def _configure(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    flags = {**COMMON_FLAGS, **COMMAND_FLAGS.get(args.command, {})}
    for flag, (section, key) in flags.items():
        val = getattr(args, flag.replace("-", "_"), None)
        if val is not None:
            cfg.set(section, key, val)
    return cfg.validate()


def run(argv=None) -> int:
    """Execute one subcommand; returns the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_REJECTED
        cfg = _configure(args)
        S = system_from_spec(cfg.system)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REJECTED

    start = time.perf_counter()
    report = {"tool": "subhessian", "version": __version__, "command": args.command,
              "seed": cfg.seed, "system": S.name, "config": cfg.to_dict()}
    try:
        result, code, tables = HANDLERS[args.command](S, cfg)
    except (RejectedInput, ConfigError, ExponentError, MarginError, BudgetError, UnreachableError) as exc:
        result, code, tables = {"rejected": str(exc)}, EXIT_REJECTED, {}
        print(f"rejected: {exc}", file=sys.stderr)
    report["result"] = result
    report["exit_code"] = code
    report["timing"] = {"wall_time_s": time.perf_counter() - start}
    name = args.command.replace("-", "_")
    _write(Path(cfg.get("run", "out")), name, report, tables)
    print(f"{args.command}: exit {code}; report {Path(cfg.get('run', 'out')) / (name + '.json')}")
    return code


def main():
    sys.exit(run())
