"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 solver non-convergence,
3 failed certificate or audit.  Data goes to stdout (or --out), diagnostics
to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass

import numpy as np

from . import inner, oracle, outer, sandwich
from .polytope import build_facets
from .symellipsoid import materialize

log = logging.getLogger("metric_ellipsoids")

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3

N_LIMITS = {
    "inner": inner.MAX_N,
    "table": inner.MAX_N,
    "outer": inner.MAX_N,
    "sandwich": 3000,
    "contacts": 3000,
    "verify-john": outer.MAX_JOHN_N,
    "oracle-compare": 5,
}
TANGENCY_TOL = 1e-7
ORACLE_ENTRY_TOL = 1e-5
ORACLE_LOGVOL_TOL = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    n_list: list[int] | None = None
    tol: float = 1e-10
    max_iter: int = 500
    seed: int = 42
    samples: int = 10_000
    format: str = "json"
    out: str | None = None
    verbose: bool = False

    def validate(self) -> None:
        ns = self.n_list if self.command == "table" else [self.n]
        if not ns or any(v is None for v in ns):
            raise UsageError(f"{self.command} needs {'--n-list' if self.command == 'table' else '--n'}")
        limit = N_LIMITS[self.command]
        for v in ns:
            if not 3 <= v <= limit:
                raise UsageError(f"{self.command}: n={v} outside [3, {limit}]")
        if not 1e-14 <= self.tol <= 1e-6:
            raise UsageError("--tol must lie in [1e-14, 1e-6]")
        if self.max_iter < 1 or self.samples < 1:
            raise UsageError("--max-iter and --samples must be positive")
        if self.command == "sandwich" and self.format == "csv" and self.n > sandwich.MAX_AUDIT_N:
            raise UsageError(f"the audit CSV needs n <= {sandwich.MAX_AUDIT_N}")


def _n_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--n-list", type=_n_list, dest="n_list")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--max-iter", type=int, default=500, dest="max_iter")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--samples", type=int, default=10_000)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out")
    common.add_argument("--verbose", action="store_true")

    parser = _Parser(prog="metric-ellipsoids", description="Loewner-John ellipsoids of the metric polytope")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [
        ("inner", "solve for the largest inscribed ellipsoid"),
        ("outer", "enclosing ball and shrink factor"),
        ("sandwich", "full inflation/shrink report with containment audit"),
        ("contacts", "tangency points of the inner ellipsoid"),
        ("verify-john", "John certificate over cut metrics"),
        ("oracle-compare", "reduced solver against the generic ellipsoid oracle"),
        ("table", "solve for a list of n and tabulate"),
    ]:
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def _plain(obj):
    """Recursively convert numpy scalars/arrays to JSON-native types."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def dumps_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _scalar_csv(d: dict) -> str:
    rows = [(k, v) for k, v in _plain(d).items() if not isinstance(v, (list, dict))]
    return dumps_csv(("key", "value"), rows)


def _cmd_inner(cfg: RunConfig):
    res = inner.solve_inner(cfg.n, cfg.tol, cfg.max_iter)
    d = res.to_json()
    return (dumps_json(d) if cfg.format == "json" else _scalar_csv({**d, **d["ellipsoid"]})), EXIT_OK


def _cmd_outer(cfg: RunConfig):
    r = outer.outer_radius(cfg.n)
    rin = outer.centered_inscribed_ball(cfg.n)
    d = {"n": cfg.n, "radius": r, "center": 0.5, "inscribed_radius": rin, "shrink_factor": r / rin}
    return (dumps_json(d) if cfg.format == "json" else _scalar_csv(d)), EXIT_OK


def _cmd_verify_john(cfg: RunConfig):
    cert = outer.john_certificate(cfg.n)
    d = cert.to_json()
    if cfg.verbose:
        bare = outer.john_certificate(cfg.n, include_trivial=False)
        d["without_trivial_cut"] = bare.to_json()
        log.info(
            "without the zero cut: barycenter %.3e identity %.3e",
            bare.barycenter_residual,
            bare.identity_residual,
        )
    code = EXIT_OK if cert.valid() else EXIT_CHECK
    if code:
        log.error("John certificate residuals exceed %.0e", outer.CERT_TOL)
    return (dumps_json(d) if cfg.format == "json" else _scalar_csv(d)), code


def _cmd_oracle_compare(cfg: RunConfig):
    n = cfg.n
    res = inner.solve_inner(n, cfg.tol, cfg.max_iter)
    orc = oracle.solve_mve(build_facets(n), max_iter=cfg.max_iter)
    avg = oracle.symmetry_average(orc.e, n)
    entry_diff = float(np.max(np.abs(orc.e.A - materialize(res.e))))
    center_diff = float(np.max(np.abs(orc.e.c - res.e.delta)))
    spread = oracle.pattern_spread(orc.e.A, n)
    d = {
        "n": n,
        "reduced": res.e.to_json(),
        "oracle_averaged": avg.to_json(),
        "pattern_spread": list(spread),
        "max_entry_diff": entry_diff,
        "max_center_diff": center_diff,
        "log_volume_reduced": res.log_volume_factor,
        "log_det_oracle": orc.log_det,
        "log_volume_diff": abs(orc.log_det - res.log_volume_factor),
        "oracle_iterations": orc.iterations,
        "oracle_kkt_residual": orc.kkt_residual,
    }
    if cfg.verbose:
        d["oracle"] = orc.to_json()
    ok = max(entry_diff, center_diff, *spread) <= ORACLE_ENTRY_TOL and d["log_volume_diff"] <= ORACLE_LOGVOL_TOL
    return (dumps_json(d) if cfg.format == "json" else _scalar_csv(d)), (EXIT_OK if ok else EXIT_CHECK)


def _cmd_contacts(cfg: RunConfig):
    res = inner.solve_inner(cfg.n, cfg.tol, cfg.max_iter)
    p, q = sandwich.contact_points(res.e)
    tg = sandwich.tangency(res.e, p, q)
    d = {
        "n": cfg.n,
        "p": p,
        "q": q,
        "triangle_facet_value": tg.p_facet_value,
        "q12": tg.q12,
        "p_dilation": tg.p_dilation,
        "q_dilation": tg.q_dilation,
        "tangency_residual": tg.residual(),
    }
    code = EXIT_OK if tg.residual() <= TANGENCY_TOL else EXIT_CHECK
    return (dumps_json(d) if cfg.format == "json" else _scalar_csv(d)), code


def _cmd_sandwich(cfg: RunConfig):
    rep = sandwich.sandwich_report(cfg.n, cfg.tol, cfg.max_iter, cfg.samples, cfg.seed)
    ok = rep.tangency.residual() <= TANGENCY_TOL and (rep.audit is None or rep.audit.passed)
    if rep.audit is None:
        log.info("n=%d above the sampling-audit cap (%d); audit skipped", cfg.n, sandwich.MAX_AUDIT_N)
    elif not rep.audit.passed:
        log.error("containment audit failed: min slack %.3e", rep.audit.min_slack)
    if cfg.format == "csv":
        text = dumps_csv(("sample_index", "min_slack_constraint_kind", "min_slack"), rep.audit.rows)
    else:
        text = dumps_json(rep.to_json())
    return text, (EXIT_OK if ok else EXIT_CHECK)


def _cmd_table(cfg: RunConfig):
    ns = sorted(cfg.n_list)
    results = [inner.solve_inner(n, cfg.tol, cfg.max_iter) for n in ns]
    if cfg.format == "csv":
        return dumps_csv(inner.TABLE_HEADER, [inner.table_row(r) for r in results]), EXIT_OK
    return dumps_json([r.to_json() for r in results]), EXIT_OK


COMMANDS = {
    "inner": _cmd_inner,
    "outer": _cmd_outer,
    "verify-john": _cmd_verify_john,
    "oracle-compare": _cmd_oracle_compare,
    "contacts": _cmd_contacts,
    "sandwich": _cmd_sandwich,
    "table": _cmd_table,
}


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(**vars(ns))
    cfg.validate()
    return cfg


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        text, code = COMMANDS[cfg.command](cfg)
    except (inner.SolverError, oracle.OracleError) as exc:
        log.error("%s", exc)
        return EXIT_SOLVER
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"metric-ellipsoids: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.DEBUG if cfg.verbose else logging.WARNING)
    try:
        return run(cfg)
    finally:
        log.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
