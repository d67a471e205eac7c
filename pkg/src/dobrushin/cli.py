"""Command-line front end: ``dobrushin {certify,sweep,decay,verify} --spec FILE``.

Exit codes: 0 success / Unique, 1 spec parse error, 2 Indeterminate or not
certified, 3 Inadmissible, 4 state space over cap, 5 a checked bound failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ModelSpec, load_spec
from .coupling import iterate, product_coupling
from .criterion import CriterionError, Verdict, certify
from .decay import NotCertifiedError, decay_experiment
from .gibbs import Observable, StateSpaceError, exact_gibbs, h_moment
from .graph import GraphError, greedy_color
from .spin_model import verify_membership

EXIT_OK, EXIT_PARSE, EXIT_INDETERMINATE, EXIT_INADMISSIBLE, EXIT_CAP, EXIT_FAILED = range(6)
VERDICT_EXIT = {Verdict.UNIQUE: EXIT_OK, Verdict.INDETERMINATE: EXIT_INDETERMINATE,
                Verdict.INADMISSIBLE: EXIT_INADMISSIBLE}
CSV_COLUMNS = ["n", "gamma", "lambda", "transformed_norm", "min_slack"]


def _fmt(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.ndarray):
        return json.dumps([[float(v) for v in row] for row in x])
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _header(command: str, args, spec: ModelSpec, K: float) -> dict:
    n = spec.numerics
    return {"command": command, "spec": str(args.spec), "K": K, "exact_tol": n.exact_tol,
            "slack_tol": n.slack_tol, "cap": n.cap}


def _lines(prefix: str, v) -> list[str]:
    if isinstance(v, dict):
        return [line for k, vv in v.items() for line in _lines(f"{prefix}.{k}" if prefix else k, vv)]
    if isinstance(v, list) and v and isinstance(v[0], dict):
        return [line for i, item in enumerate(v) for line in _lines(f"{prefix}[{i}]", item)]
    if isinstance(v, list):
        return [f"{prefix}: {', '.join(_fmt(x) for x in v) or 'none'}"]
    return [f"{prefix}: {_fmt(v)}"]


def _text(header: dict, body: dict) -> str:
    lines = [f"# {k}: {_fmt(v)}" for k, v in header.items()]
    lines.extend(_lines("", body))
    return "\n".join(lines) + "\n"


def _render(args, header: dict, body: dict) -> str:
    if args.json:
        return json.dumps(_jsonable({"header": header, **body}), indent=2, sort_keys=True) + "\n"
    return _text(header, body)


def _mu_h(spec: ModelSpec) -> float:
    if spec.mu_h is not None:
        return spec.mu_h
    return h_moment(exact_gibbs(spec.model, spec.graph, spec.numerics.cap), spec.model)


def cmd_certify(args, spec: ModelSpec) -> tuple[str, int]:
    K = args.k if args.k is not None else spec.K
    cert = certify(spec.params(K), spec.graph, K, _mu_h(spec))
    return _render(args, _header("certify", args, spec, K), {"certificate": cert.as_dict()}), VERDICT_EXIT[cert.verdict]


def cmd_verify(args, spec: ModelSpec) -> tuple[str, int]:
    K = args.k if args.k is not None else spec.K
    rep = verify_membership(spec.model, spec.graph, K, spec.params(K), spec.numerics.exact_tol)
    sites = []
    for s in rep.sites:
        sites.append({"site": s.site, "kappa_slack": s.kappa_slack, "h_slack": s.h_slack,
                      "multi_site": s.multi_site, "vacuous": s.vacuous,
                      "kappa_worst": None if s.kappa_worst is None else
                      ";".join(",".join(f"{k}={v}" for k, v in side.items()) for side in s.kappa_worst),
                      "h_worst": ",".join(f"{k}={v}" for k, v in s.h_worst.items())})
    body = {"passed": rep.passed, "kappa_ok": rep.kappa_ok, "h_ok": rep.h_ok,
            "failures": "; ".join(rep.failures()) or "none", "sites": sites}
    return _render(args, _header("verify", args, spec, K), body), EXIT_OK if rep.passed else EXIT_FAILED


def cmd_sweep(args, spec: ModelSpec) -> tuple[str, int]:
    K = args.k if args.k is not None else spec.K
    params = spec.params(K)
    mu = exact_gibbs(spec.model, spec.graph, spec.numerics.cap)
    cert = certify(params, spec.graph, K, _mu_h(spec))
    membership = verify_membership(spec.model, spec.graph, K, params, spec.numerics.exact_tol)
    nu0 = product_coupling(mu, mu, spec.numerics.cap)
    traj = iterate(nu0, greedy_color(spec.graph), spec.model, cert, params, tol=args.tol,
                   max_sweeps=args.sweeps, slack_tol=spec.numerics.slack_tol)
    rows = []
    for r in traj.rows:
        slack = min(r.min_slack, r.matrix_slack)
        rows.append({"n": r.n, "gamma": r.gamma, "lambda": r.lam, "transformed_norm": r.norm,
                     "min_slack": None if math.isinf(slack) else slack})
    code = EXIT_FAILED if traj.events else EXIT_OK
    header = _header("sweep", args, spec, K)
    header.update(verdict=cert.verdict.value, r_K=cert.r_K, xi=cert.xi, membership=membership.passed,
                  sweeps=args.sweeps, tol=args.tol)
    if args.json:
        return json.dumps(_jsonable({"header": header, "rows": rows, "events": traj.events}),
                          indent=2, sort_keys=True) + "\n", code
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}: {_fmt(v)}\n")
    for e in traj.events:
        buf.write(f"# falsification: {e}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(["" if row[c] is None else _fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue(), code


def _observable(site: str, values, spec: ModelSpec, flag: str) -> Observable:
    if values is not None:
        vals = np.array([float(v) for v in values.split(",")])
    elif spec.observable_values is not None:
        vals = spec.observable_values
    else:
        try:
            vals = np.array([float(s) for s in spec.model.alphabet])
        except ValueError:
            raise ConfigError(f"{flag}: alphabet is not numeric; pass observable values explicitly") from None
    if vals.shape != (spec.model.q,):
        raise ConfigError(f"{flag}: expected {spec.model.q} values")
    spec.graph.index(site)
    return Observable(site, vals)


def cmd_decay(args, spec: ModelSpec) -> tuple[str, int]:
    K = args.k if args.k is not None else spec.K
    f = _observable(args.site1, args.f, spec, "--f")
    g = _observable(args.site2, args.g, spec, "--g")
    try:
        rep = decay_experiment(spec.model, spec.graph, spec.params(K), K, f, g, spec.mu_h, spec.numerics.cap)
    except NotCertifiedError as exc:
        header = _header("decay", args, spec, K)
        return _render(args, header, {"error": str(exc)}), EXIT_INDETERMINATE
    tol = spec.numerics.slack_tol
    checks_ok = (rep.shell_slack >= -tol and rep.phi_slack >= -tol and rep.chain_slack >= -tol
                 and rep.reconstruction_error <= spec.numerics.exact_tol
                 and rep.phi_spread <= spec.numerics.exact_tol)
    body = {"decay": rep.as_dict(), "checks_ok": checks_ok}
    code = EXIT_OK if rep.bound_holds and checks_ok else EXIT_FAILED
    return _render(args, _header("decay", args, spec, K), body), code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dobrushin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True, type=Path, help="TOML model spec")
        p.add_argument("--k", type=float, default=None, help="override criterion.K")
        p.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
        p.add_argument("--json", action="store_true", help="machine-readable JSON output")

    common(sub.add_parser("certify", help="evaluate the uniqueness certificate"))
    common(sub.add_parser("verify", help="check the kappa and moment bounds at every site"))
    p = sub.add_parser("sweep", help="run chromatic sweeps from mu x mu and emit the trajectory as CSV")
    common(p)
    p.add_argument("--sweeps", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-9, help="stop once gamma drops below this")
    p = sub.add_parser("decay", help="exact covariance against the certified decay bound")
    common(p)
    p.add_argument("site1")
    p.add_argument("site2")
    p.add_argument("--f", default=None, help="comma-separated values of f per symbol")
    p.add_argument("--g", default=None, help="comma-separated values of g per symbol")
    return parser


COMMANDS = {"certify": cmd_certify, "verify": cmd_verify, "sweep": cmd_sweep, "decay": cmd_decay}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_spec(args.spec)
        text, code = COMMANDS[args.command](args, spec)
    except (ConfigError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except StateSpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except CriterionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
