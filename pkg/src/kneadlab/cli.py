"""Command-line interface.

Subcommands expose the library pipeline (rule -> cutting times -> solved
parameter -> ladder and orbit -> diagnostics) as one-shot batch runs.
Tabular commands default to CSV (header row, LF, UTF-8); every command
supports --format json, emitting a single document

    {"schema": "kneadlab/1", "inputs": ..., "results": ...}

whose inputs block echoes the fully resolved configuration, so a run can
be reproduced from its own output. All real numbers are printed as
decimal strings sized to the working precision; identical configurations
produce byte-identical output.

Exit codes: 0 success, 1 a check or verification returned a negative
verdict, 2 working precision exhausted, 3 invalid input or configuration.
"""

from __future__ import annotations

import argparse
import json
import pathlib
import re
import sys
from dataclasses import dataclass

from .cplane import as_complex, green, poincare_partial, preimages, sector_check
from .diagnostics import (
    assemble_report,
    derivative_band,
    gap_kappa,
    longbranched_sum,
    saddle_node_cascade,
    scaling_ratios,
    sigma_hat,
    verify_monotone_neighborhood,
    verify_no2cpp,
)
from .errors import KneadlabError, PrecisionExhausted, RuleViolation
from .extprec import to_decimal
from .kneading import (
    KneadingMap,
    check_admissible,
    check_feigenbaum_periodic,
    check_fibonacci_like,
    check_renormalizable,
    check_strict_hofbauer,
    constant_map,
    cutting_times,
    feigenbaum_map,
    fibonacci_map,
)
from .orbits import UnicriticalMap, closest_precritical, critical_orbit
from .solver import PrecisionPolicy, SolveResult, solve_parameter

SCHEMA = "kneadlab/1"

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_PRECISION = 2
EXIT_INVALID = 3


@dataclass(frozen=True)
class RunConfig:
    """Resolved flags shared by every subcommand."""

    command: str
    rule: KneadingMap | None
    rule_text: str | None
    ell: int
    precision_bits: int
    K: int
    delta: str
    fmt: str
    out: str | None

    def __post_init__(self):
        if not 64 <= self.precision_bits <= 4096:
            raise RuleViolation(f"precision_bits must lie in [64, 4096], got {self.precision_bits}")
        if self.ell < 2 or self.ell % 2:
            raise RuleViolation(f"ell must be even and >= 2, got {self.ell}")
        if self.K < 1:
            raise RuleViolation(f"K must be >= 1, got {self.K}")
        if self.fmt not in ("csv", "json"):
            raise RuleViolation(f"format must be csv or json, got {self.fmt!r}")


def parse_rule(text: str) -> KneadingMap:
    """Interpret --rule: a named template, inline JSON, or a JSON file path.

    Named templates: "fibonacci" (optionally suffixed with the lag, e.g.
    "fibonacci3"), "feigenbaum", and "constant" suffixed with the cap
    (e.g. "constant0").
    """
    t = text.strip()
    if t.startswith("{"):
        try:
            return KneadingMap.from_json(t)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise RuleViolation(f"bad inline rule JSON: {e}")
    m = re.fullmatch(r"fibonacci(\d*)", t)
    if m:
        return fibonacci_map(int(m.group(1) or 2))
    if t == "feigenbaum":
        return feigenbaum_map()
    m = re.fullmatch(r"constant(\d*)", t)
    if m:
        return constant_map(int(m.group(1) or 0))
    path = pathlib.Path(t)
    if path.is_file():
        try:
            return KneadingMap.from_json(path.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise RuleViolation(f"bad rule file {t!r}: {e}")
    raise RuleViolation(
        f"cannot interpret rule {text!r}: not a named template, inline JSON, or readable file"
    )


# ---------------------------------------------------------------------------
# shared plumbing


def _config(ns: argparse.Namespace) -> RunConfig:
    rule_text = getattr(ns, "rule", None)
    rule = parse_rule(rule_text) if rule_text is not None else None
    return RunConfig(
        command=ns.command,
        rule=rule,
        rule_text=rule_text,
        ell=ns.ell,
        precision_bits=ns.bits,
        K=ns.K,
        delta=ns.delta,
        fmt=ns.format,
        out=ns.out,
    )


def _document(cfg: RunConfig, extras: dict, results: dict) -> str:
    inputs = {
        "command": cfg.command,
        "rule": cfg.rule.to_json_dict() if cfg.rule is not None else None,
        "ell": cfg.ell,
        "precision_bits": cfg.precision_bits,
        "K": cfg.K,
        "delta": cfg.delta,
    }
    inputs.update(extras)
    doc = {"schema": SCHEMA, "inputs": inputs, "results": results}
    return json.dumps(doc, indent=2) + "\n"


def _solve(cfg: RunConfig, target_bits: int | None = None) -> SolveResult:
    target = target_bits if target_bits is not None else min(80, cfg.precision_bits - 48)
    policy = PrecisionPolicy(
        start_bits=cfg.precision_bits, max_bits=4096, target_bits=target
    )
    return solve_parameter(cfg.ell, cfg.rule, cfg.K, policy)


def _solve_json(r: SolveResult) -> dict:
    d = r.to_json_dict()
    d["midpoint"] = to_decimal(r.midpoint(), r.precision_bits)
    d["width"] = to_decimal(r.width(), r.precision_bits)
    d["iterations"] = r.iterations
    return d


def _map_from(cfg: RunConfig, ns: argparse.Namespace):
    """Map for base-point commands: --c directly, or the solved rule."""
    if getattr(ns, "c", None) is not None:
        return UnicriticalMap.from_str(cfg.ell, ns.c, cfg.precision_bits), None
    return None, _solve(cfg)


def _parse_z(text: str, bits: int):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 1:
        return as_complex(parts[0], bits)
    if len(parts) == 2:
        return as_complex((parts[0], parts[1]), bits)
    raise RuleViolation(f"bad complex value {text!r}: expected 're' or 're,im'")


def _ladder_rows(ladder) -> list:
    bits = ladder.fmap.precision_bits
    return [
        {
            "k": e.k,
            "S_k": e.S_k,
            "zeta": to_decimal(e.zeta, bits),
            "residual": to_decimal(e.residual, bits),
        }
        for e in ladder.entries
    ]


# ---------------------------------------------------------------------------
# subcommand handlers; each returns (exit_code, output_text)


def _cmd_cutting_times(ns):
    cfg = _config(ns)
    S = cutting_times(cfg.rule, cfg.K)
    if cfg.fmt == "csv":
        return EXIT_OK, S.to_csv()
    Q = [None] + [cfg.rule.q(k) for k in range(1, cfg.K + 1)]
    return EXIT_OK, _document(cfg, {}, {"S": list(S.values), "Q": Q})


def _cmd_check(ns):
    cfg = _config(ns)
    mode = ns.mode
    Q, K = cfg.rule, cfg.K
    if mode == "admissible":
        rep = check_admissible(Q, K, window=ns.window)
        negative = rep.verdict == "fail"
        results = {
            "check": mode,
            "verdict": rep.verdict,
            "first_violation": list(rep.first_violation) if rep.first_violation else None,
            "undecided_k": rep.undecided_k,
            "window": rep.window,
        }
    elif mode == "strict-hofbauer":
        rep = check_strict_hofbauer(Q, K)
        negative = not rep.passed
        results = {
            "check": mode,
            "verdict": "pass" if rep.passed else "fail",
            "k0": rep.k0,
            "largest_violation": rep.largest_violation,
        }
    elif mode == "fibonacci-like":
        rep = check_fibonacci_like(Q, K)
        negative = rep.growing
        results = {
            "check": mode,
            "verdict": "fail" if negative else "pass",
            "n_max": rep.n_max,
            "growing": rep.growing,
        }
    elif mode == "feigenbaum-periodic":
        witness = check_feigenbaum_periodic(Q, K)
        negative = witness is None
        results = {
            "check": mode,
            "verdict": "fail" if negative else "pass",
            "witness": list(witness) if witness else None,
        }
    else:  # renormalizable
        candidates = check_renormalizable(Q, K, strict=not ns.non_strict)
        negative = not candidates
        results = {
            "check": mode,
            "verdict": "fail" if negative else "pass",
            "k0_candidates": candidates,
        }
    code = EXIT_NEGATIVE if negative else EXIT_OK
    return code, _document(cfg, {"mode": mode}, results)


def _cmd_solve(ns):
    cfg = _config(ns)
    r = _solve(cfg, ns.target_bits)
    extras = {"target_bits": ns.target_bits or min(80, cfg.precision_bits - 48)}
    return EXIT_OK, _document(cfg, extras, {"solve": _solve_json(r)})


def _cmd_precrit(ns):
    cfg = _config(ns)
    r = _solve(cfg)
    S = cutting_times(cfg.rule, cfg.K)
    kmax = ns.kmax if ns.kmax is not None else min(cfg.K, 8)
    ladder = closest_precritical(r.fmap(), S, kmax)
    if cfg.fmt == "csv":
        return EXIT_OK, ladder.to_csv()
    results = {"solve": _solve_json(r), "ladder": _ladder_rows(ladder)}
    return EXIT_OK, _document(cfg, {"kmax": kmax}, results)


def _cmd_scaling(ns):
    cfg = _config(ns)
    r = _solve(cfg)
    S = cutting_times(cfg.rule, cfg.K)
    fmap = r.fmap()
    rep = scaling_ratios(fmap, S, cfg.K - 1)
    if cfg.fmt == "csv":
        return EXIT_OK, rep.to_csv()
    bits = fmap.precision_bits
    results = {
        "solve": _solve_json(r),
        "ratios": [to_decimal(v, bits) for v in rep.ratios],
        "lambda_hat": to_decimal(rep.lambda_hat, bits),
        "cauchy_width": to_decimal(rep.cauchy_width, bits),
        "tail_start": rep.tail_start,
        "sigma_hat": to_decimal(sigma_hat(S, cfg.K), bits),
        "verdict": rep.verdict_json(),
    }
    return EXIT_OK, _document(cfg, {}, results)


def _cmd_band(ns):
    cfg = _config(ns)
    r = _solve(cfg)
    S = cutting_times(cfg.rule, cfg.K)
    fmap = r.fmap()
    kmax = ns.kmax if ns.kmax is not None else min(cfg.K, 8)
    ladder = closest_precritical(fmap, S, kmax)
    rep = derivative_band(fmap, ladder, S, kmax)
    if cfg.fmt == "csv":
        return EXIT_OK, rep.to_csv()
    bits = fmap.precision_bits
    results = {
        "solve": _solve_json(r),
        "values": [to_decimal(v, bits) for v in rep.values],
        "band_min": to_decimal(rep.band_min, bits),
        "band_max": to_decimal(rep.band_max, bits),
        "band_ratio": to_decimal(rep.band_ratio, bits),
        "band_start": rep.band_start,
        "verdict": rep.verdict_json(),
    }
    return EXIT_OK, _document(cfg, {"kmax": kmax}, results)


def _cmd_sums(ns):
    cfg = _config(ns)
    r = _solve(cfg)
    S = cutting_times(cfg.rule, cfg.K)
    fmap = r.fmap()
    kmax = ns.kmax if ns.kmax is not None else min(cfg.K, 8)
    ladder = closest_precritical(fmap, S, kmax)
    sign = 1 if ns.sign == "plus" else -1
    series = longbranched_sum(fmap, ladder, S, cfg.delta, kmax, sign)
    if cfg.fmt == "csv":
        return EXIT_OK, series.to_csv()
    bits = fmap.precision_bits
    rows = [
        {"k": k, "S_k": s, "term": to_decimal(t, bits), "cumulative": to_decimal(c, bits)}
        for k, s, t, c in series.rows
    ]
    results = {
        "solve": _solve_json(r),
        "series": series.name,
        "rows": rows,
        "total": to_decimal(series.total, bits),
        "verdict": series.verdict_json(),
    }
    return EXIT_OK, _document(cfg, {"kmax": kmax, "sign": ns.sign}, results)


def _cmd_cascade(ns):
    cfg = _config(ns)
    r = _solve(cfg)
    S = cutting_times(cfg.rule, cfg.K)
    fmap = r.fmap()
    window = ns.window
    orbit_N = ns.orbit if ns.orbit is not None else max(64 * window, S.S(S.K))
    orbit = critical_orbit(fmap, orbit_N)
    kmax = S.index_of_ceiling(min(window, S.S(S.K)))
    ladder = closest_precritical(fmap, S, kmax)
    rep = saddle_node_cascade(fmap, orbit, ladder, S, window)
    if cfg.fmt == "csv":
        return EXIT_OK, rep.to_csv()
    bits = fmap.precision_bits
    entries = [
        {"N": e.N, "d": e.d, "bracketed": e.bracketed, "term": to_decimal(e.term, bits)}
        for e in rep.entries
    ]
    results = {
        "solve": _solve_json(r),
        "entries": entries,
        "L": to_decimal(rep.L, bits),
        "total": to_decimal(rep.total, bits),
        "verdict": rep.verdict_json(),
    }
    return EXIT_OK, _document(cfg, {"window": window, "orbit": orbit_N}, results)


def _cmd_poincare(ns):
    cfg = _config(ns)
    fmap, r = _map_from(cfg, ns)
    if fmap is None:
        fmap = r.fmap()
    z = _parse_z(ns.z, cfg.precision_bits)
    extras = {
        "c": ns.c if ns.c is not None else to_decimal(fmap.c, fmap.precision_bits),
        "z": ns.z,
        "levels": ns.levels,
        "prune_eps": ns.prune_eps,
        "min_deriv": ns.min_deriv,
        "leaves": ns.leaves,
    }
    if ns.leaves:
        tree = preimages(
            fmap, z, ns.levels, prune_eps=ns.prune_eps, delta=cfg.delta, min_deriv=ns.min_deriv
        )
        if cfg.fmt == "csv":
            return EXIT_OK, tree.to_csv()
        bits = tree.bits
        leaves = [
            {
                "path": leaf.path,
                "re": to_decimal(leaf.value.real, bits),
                "im": to_decimal(leaf.value.imag, bits),
                "log_deriv": to_decimal(leaf.log_deriv, bits),
            }
            for leaf in tree.leaves
        ]
        results = {
            "leaves": leaves,
            "pruned_mass_bound": to_decimal(tree.pruned_mass_bound, bits),
        }
        return EXIT_OK, _document(cfg, extras, results)
    summary = poincare_partial(
        fmap, z, cfg.delta, ns.levels, prune_eps=ns.prune_eps, min_deriv=ns.min_deriv
    )
    if cfg.fmt == "csv":
        return EXIT_OK, summary.to_csv()
    return EXIT_OK, _document(cfg, extras, summary.to_json_dict())


def _cmd_green(ns):
    cfg = _config(ns)
    fmap, r = _map_from(cfg, ns)
    if fmap is None:
        fmap = r.fmap()
    z = _parse_z(ns.z, cfg.precision_bits)
    g = green(fmap, z, tol=ns.tol, max_steps=ns.max_steps)
    bits = fmap.precision_bits
    extras = {
        "c": ns.c if ns.c is not None else to_decimal(fmap.c, fmap.precision_bits),
        "z": ns.z,
        "tol": ns.tol,
        "max_steps": ns.max_steps,
    }
    results = {
        "value": to_decimal(g.value, bits),
        "escaped": g.escaped,
        "steps": g.steps,
        "tail_bound": to_decimal(g.tail_bound, bits),
        "bounded_through_cutoff": g.bounded_through_cutoff,
    }
    return EXIT_OK, _document(cfg, extras, results)


def _cmd_verify_lemmas(ns):
    cfg = _config(ns)
    r = _solve(cfg, target_bits=min(160, cfg.precision_bits - 48))
    S = cutting_times(cfg.rule, cfg.K)
    fmap = r.fmap()
    kmax = min(cfg.K, 8)
    ladder = closest_precritical(fmap, S, kmax)
    n_max = S.S(min(6, S.K))
    orbit = critical_orbit(fmap, n_max)
    adm = check_admissible(cfg.rule, cfg.K)
    verdicts = [
        {
            "name": "admissible",
            "verdict": False if adm.verdict == "fail" else True,
            "witness": {"verdict": adm.verdict},
        },
        gap_kappa(fmap, ladder, S, cfg.rule, kmax).verdict_json(),
        verify_no2cpp(fmap, ladder, orbit, S, n_max).verdict_json(),
        verify_monotone_neighborhood(fmap, S, cfg.rule, min(cfg.K - 1, 8)).verdict_json(),
    ]
    sector = [k for k in range(cfg.ell) if sector_check(cfg.ell, k)]
    results = {
        "solve": _solve_json(r),
        "verdicts": verdicts,
        "sector_wakes": sector,
    }
    code = EXIT_NEGATIVE if any(v["verdict"] is False for v in verdicts) else EXIT_OK
    return code, _document(cfg, {}, results)


def _cmd_report(ns):
    cfg = _config(ns)
    r = _solve(cfg)
    S = cutting_times(cfg.rule, cfg.K)
    fmap = r.fmap()
    kmax = min(cfg.K - 1, 8)
    ladder = closest_precritical(fmap, S, kmax)
    orbit = critical_orbit(fmap, S.S(min(6, S.K)))
    rep = assemble_report(fmap, cfg.rule, S, ladder, orbit, cfg.K, delta=cfg.delta)
    results = {
        "solve": _solve_json(r),
        "ladder": _ladder_rows(ladder),
        "diagnostics": rep.to_json_dict(),
    }
    return EXIT_OK, _document(cfg, {"kmax": kmax}, results)


# ---------------------------------------------------------------------------
# parser


_RULE_HELP = (
    "kneading-map rule: a named template (fibonacci, fibonacci3, feigenbaum, "
    "constant0, ...), inline JSON, or a path to a JSON file"
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kneadlab",
        description="Kneading-map combinatorics, parameter solving, and diagnostics "
        "for real unicritical maps x^ell + c.",
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, handler, help, formats=("csv", "json"), default_K=16, with_c=False):
        sp = sub.add_parser(name, help=help, description=help)
        if with_c:
            g = sp.add_mutually_exclusive_group(required=True)
            g.add_argument("--rule", help=_RULE_HELP)
            g.add_argument("--c", help="map parameter as a decimal string (skips solving)")
        else:
            sp.add_argument("--rule", required=True, help=_RULE_HELP)
        sp.add_argument("--ell", type=int, default=2, help="even degree of the map (default 2)")
        sp.add_argument(
            "--bits", type=int, default=256, help="working precision in bits, 64..4096 (default 256)"
        )
        sp.add_argument(
            "-K", "--depth", dest="K", type=int, default=default_K,
            help=f"combinatorial depth: cutting times through S_K (default {default_K})",
        )
        sp.add_argument("--delta", default="1", help="exponent for weighted sums (default 1)")
        sp.add_argument(
            "--format", choices=list(formats), default=formats[0],
            help=f"output format (default {formats[0]})",
        )
        sp.add_argument("--out", help="write output to this path instead of stdout")
        sp.set_defaults(func=handler)
        return sp

    add("cutting-times", _cmd_cutting_times, "cutting times S_0..S_K and the rule values Q(k)")

    sp = add("check", _cmd_check, "combinatorial checks on a rule", formats=("json",), default_K=32)
    modes = sp.add_mutually_exclusive_group()
    modes.add_argument(
        "--admissible", dest="mode", action="store_const", const="admissible",
        help="shifted-sequence dominance (default)",
    )
    modes.add_argument(
        "--strict-hofbauer", dest="mode", action="store_const", const="strict-hofbauer",
        help="strict dominance with a finite threshold k0",
    )
    modes.add_argument(
        "--fibonacci-like", dest="mode", action="store_const", const="fibonacci-like",
        help="bounded lag k - Q(k)",
    )
    modes.add_argument(
        "--feigenbaum-periodic", dest="mode", action="store_const", const="feigenbaum-periodic",
        help="eventual periodicity witness (k0, p)",
    )
    modes.add_argument(
        "--renormalizable", dest="mode", action="store_const", const="renormalizable",
        help="periodic restrictive-interval candidates",
    )
    sp.add_argument("--window", type=int, default=64, help="admissibility look-ahead (default 64)")
    sp.add_argument(
        "--non-strict", action="store_true",
        help="relaxed tail bound for --renormalizable",
    )
    sp.set_defaults(mode="admissible")

    sp = add("solve", _cmd_solve, "bracket the parameter realizing a rule", formats=("json",))
    sp.add_argument(
        "--target-bits", type=int, default=None,
        help="bracket width target 2^-target_bits (default min(80, bits - 48))",
    )

    sp = add("precrit", _cmd_precrit, "ladder of closest precritical points for the solved map")
    sp.add_argument("--kmax", type=int, default=None, help="ladder height (default min(K, 8))")

    add("scaling", _cmd_scaling, "critical-orbit return ratios and their tail average")

    sp = add("band", _cmd_band, "|Df^{S_k}| at the ladder points with a max/min band summary")
    sp.add_argument("--kmax", type=int, default=None, help="ladder height (default min(K, 8))")

    sp = add("sums", _cmd_sums, "partial sums of S_k |zeta_k - zeta_{k+1}|^(+-delta)")
    sp.add_argument("--kmax", type=int, default=None, help="ladder height (default min(K, 8))")
    sp.add_argument(
        "--sign", choices=["plus", "minus"], default="plus",
        help="exponent sign on the gap factor (default plus)",
    )

    sp = add("cascade", _cmd_cascade, "central-branch return depths and cascade terms")
    sp.add_argument("--window", type=int, default=12, help="largest return time scanned (default 12)")
    sp.add_argument(
        "--orbit", type=int, default=None,
        help="critical-orbit length (default max(64 * window, S_K))",
    )

    sp = add(
        "poincare", _cmd_poincare,
        "backward-orbit partial sums of |Df^n|^-delta at a base point",
        with_c=True,
    )
    sp.add_argument("--z", required=True, help="base point, 're' or 're,im' decimal strings")
    sp.add_argument("--levels", type=int, default=8, help="preimage tree depth (default 8)")
    sp.add_argument("--prune-eps", default="0", help="drop subtrees below this weight (default 0)")
    sp.add_argument(
        "--min-deriv", default=None,
        help="derivative lower bound used by the pruning error estimate",
    )
    sp.add_argument(
        "--leaves", action="store_true",
        help="emit the preimage leaves (path, re, im, log_deriv) instead of level sums",
    )

    sp = add("green", _cmd_green, "escape-rate potential at a point", formats=("json",), with_c=True)
    sp.add_argument("--z", required=True, help="sample point, 're' or 're,im' decimal strings")
    sp.add_argument("--tol", default="1e-30", help="truncation tolerance (default 1e-30)")
    sp.add_argument("--max-steps", type=int, default=4096, help="iteration cutoff (default 4096)")

    add(
        "verify-lemmas", _cmd_verify_lemmas,
        "verification battery on the solved map: admissibility, return gaps, "
        "interval occupancy, monotone-branch images, sector arithmetic",
        formats=("json",),
    )

    add(
        "report", _cmd_report,
        "solve, ladder, and all diagnostics for one rule as a single JSON document",
        formats=("json",),
    )

    return p


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help and 2 for usage errors
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    try:
        code, text = ns.func(ns)
    except PrecisionExhausted as e:
        print(f"kneadlab: precision exhausted: {e}", file=sys.stderr)
        return EXIT_PRECISION
    except KneadlabError as e:
        print(f"kneadlab: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, OSError) as e:
        print(f"kneadlab: {e}", file=sys.stderr)
        return EXIT_INVALID
    _emit(text, ns.out)
    return code


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
