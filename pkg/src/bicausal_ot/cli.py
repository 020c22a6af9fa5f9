"""Command-line entry point. The only module with side effects.

Exit codes: 0 success, 1 domain error (structured JSON on stderr), 2 usage
error. Outputs are canonical JSON (sorted keys, rationals as "num/den", no
floats, no timestamps) written atomically; --meta adds a sidecar file with
run metadata so the artifact itself stays byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from . import __version__
from ._util import format_rational, parse_decimal, parse_rational
from .approx import biadapted_feasibility, convergence_report
from .couplings import is_bicausal, is_causal, marginals
from .errors import BicausalOTError, SchemaError, UsageError
from .generators import FIXTURES, fixture, paper_example_pair, random_instance
from .lifting import lift_biadapted, lift_static, project_static, verify_adapted
from .measures import PathMeasure, pushforward, validate
from .serialize import (
    SCHEMA,
    assert_float_free,
    canonical_dumps,
    dump_coupling,
    dump_lift,
    dump_measure,
    parse_coupling,
    parse_lift,
    parse_measure,
)
from .solvers import CostSpec, solve_bicausal_dp, solve_bicausal_oracle, solve_kantorovich


def _read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}", path=path) from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON in {path}: {exc}", path=path) from None


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(obj: dict, out: str | None, meta: bool = False) -> None:
    assert_float_free(obj)
    text = canonical_dumps(obj)
    if out:
        _write_atomic(out, text)
        if meta:
            import datetime

            side = {
                "written": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "tool": f"bicausal-ot {__version__}",
            }
            _write_atomic(out + ".meta.json", canonical_dumps(side))
    else:
        sys.stdout.write(text)


def _parse_cost(spec: str) -> CostSpec:
    if spec.startswith("metric:"):
        p = parse_rational(spec.split(":", 1)[1])
        return CostSpec.metric(p)
    if spec.startswith("table:"):
        obj = _read_json(spec.split(":", 1)[1])
        mode = obj.get("mode")
        if mode == "stepwise":
            tables = []
            for step in obj["tables"]:
                tables.append(
                    {
                        (e["x"], e["y"]): parse_rational(e["value"])
                        for e in step
                    }
                )
            return CostSpec.stepwise(tables)
        if mode == "general":
            table = {
                (tuple(e["x_path"]), tuple(e["y_path"])): parse_rational(e["value"])
                for e in obj["entries"]
            }
            return CostSpec.general(table)
        raise SchemaError(f"unknown cost table mode {mode!r}")
    raise UsageError(f"cannot parse cost spec {spec!r}; use metric:P or table:FILE")


def _load_pair(args) -> tuple[PathMeasure, PathMeasure]:
    return parse_measure(_read_json(args.mu)), parse_measure(_read_json(args.nu))


def cmd_validate(args) -> int:
    obj = _read_json(args.file)
    kind = obj.get("kind", "measure")
    if kind == "measure":
        out = dump_measure(validate(parse_measure(obj)))
    elif kind == "coupling":
        out = dump_coupling(parse_coupling(obj))
    else:
        raise SchemaError(f"validate supports measures and couplings, got {kind!r}")
    _emit(out, args.out, args.meta)
    return 0


def cmd_solve(args) -> int:
    mu, nu = _load_pair(args)
    cost = _parse_cost(args.cost)
    if args.problem == "kp":
        result = solve_kantorovich(mu, nu, cost)
    elif args.oracle or not cost.is_separable():
        result = solve_bicausal_oracle(mu, nu, cost)
    else:
        result = solve_bicausal_dp(mu, nu, cost)
    out = {
        "schema": SCHEMA,
        "kind": "solve-result",
        "problem": args.problem,
        "value": format_rational(result.value),
        "optimizer": dump_coupling(result.optimizer),
        "certificate": result.certificate,
    }
    _emit(out, args.out, args.meta)
    return 0


def cmd_check(args) -> int:
    pi = parse_coupling(_read_json(args.pi))
    report = is_bicausal(pi) if args.bicausal else is_causal(pi)
    out = {"schema": SCHEMA, "kind": "causality-report", **report.to_json()}
    _emit(out, args.out, args.meta)
    return 0


def cmd_lift(args) -> int:
    pi = parse_coupling(_read_json(args.pi))
    if args.static:
        result = lift_static(pi)
        mode = "static"
    else:
        result = lift_biadapted(pi)
        mode = "biadapted"
    out = dump_lift(result, pi, mode)
    _emit(out, args.out, args.meta)
    return 0


def cmd_project(args) -> int:
    mode, plan, base, micro, bijection = parse_lift(_read_json(args.lift))
    if mode == "static":
        projected = project_static(micro, base.left, base.right)
    else:
        from .lifting import project as project_micro

        mu, nu = marginals(base)
        projected = project_micro(micro, _micro_of(mu, plan), _micro_of(nu, plan))
    _emit(dump_coupling(projected), args.out, args.meta)
    return 0


def _micro_of(measure: PathMeasure, plan):
    from .lifting import microatomize

    return microatomize(measure, plan)


def cmd_approx(args) -> int:
    pi = parse_coupling(_read_json(args.pi))
    targets = [parse_decimal(tok) for tok in args.mesh.split(",")]
    report = convergence_report(
        pi,
        targets,
        int(args.p),
        threads=args.threads,
        surjective_only=args.surjective_only,
    )
    out = {"schema": SCHEMA, "kind": "approx-report", **report.to_json()}
    _emit(out, args.out, args.meta)
    if args.csv:
        rows = ["mesh,wp_p,bound,cost_gap,cells_ok"]
        for row in report.rows:
            j = row.to_json()
            bound = j["bound"] if isinstance(j["bound"], str) else j["bound"]["hi"]
            rows.append(
                f'{j["mesh"]},{j["wp_p"]},{bound},{j["cost_gap"]},{str(j["cells_ok"]).lower()}'
            )
        _write_atomic(args.csv, "\n".join(rows) + "\n")
    return 0


def cmd_feasibility(args) -> int:
    mu, nu = _load_pair(args)
    result = biadapted_feasibility(mu, nu)
    out = {"schema": SCHEMA, "kind": "feasibility", **result.to_json()}
    _emit(out, args.out, args.meta)
    return 0


def cmd_gen(args) -> int:
    if args.kind == "random-tree":
        mu, nu, pi = random_instance(args.seed, args.steps, args.branching, args.denom, with_pi=bool(args.out_pi))
    elif args.kind == "paper-example":
        mu, nu = paper_example_pair()
        pi = None
    elif args.kind == "fixture":
        if not args.name:
            raise UsageError("fixture generation needs --name", known=sorted(FIXTURES))
        mu, nu = fixture(args.name)
        pi = None
    else:
        raise UsageError(f"unknown generator kind {args.kind!r}")
    _emit(dump_measure(mu), args.out_mu, args.meta)
    _emit(dump_measure(nu), args.out_nu, args.meta)
    if args.out_pi:
        if pi is None:
            raise UsageError(f"generator kind {args.kind!r} does not produce a coupling")
        _emit(dump_coupling(pi), args.out_pi, args.meta)
    return 0


def cmd_verify(args) -> int:
    obj = _read_json(args.file)
    kind = obj.get("kind")
    checks: dict[str, bool] = {}
    if kind == "measure":
        measure = parse_measure(obj)
        checks["valid"] = True
        checks["round_trip"] = dump_measure(measure) == obj
    elif kind == "coupling":
        pi = parse_coupling(obj)
        checks["valid"] = True
        checks["round_trip"] = dump_coupling(pi) == obj
        mu, nu = marginals(pi)
        checks["marginals_normalized"] = True
    elif kind == "lift":
        mode, plan, base, micro, bijection = parse_lift(obj)
        checks["bijection"] = bijection.is_bijection()
        checks["adapted_forward"] = verify_adapted(bijection, "forward").ok
        checks["adapted_inverse"] = verify_adapted(bijection, "inverse").ok
        graph = {(src, dst) for src, dst in bijection.forward.items()}
        checks["coupling_on_graph"] = all(pair in graph for pair in micro.support)
        if mode == "static":
            projected = project_static(micro, base.left, base.right)
        else:
            mu, nu = marginals(base)
            from .lifting import project as project_micro

            projected = project_micro(micro, _micro_of(mu, plan), _micro_of(nu, plan))
        checks["projects_to_base"] = projected.mass == base.mass
        mu_hat, nu_hat = marginals(micro)
        image = pushforward(mu_hat, dict(bijection.forward), nu_hat.space)
        checks["pushforward_uniform"] = image.mass == nu_hat.mass
    else:
        raise SchemaError(f"verify supports measure, coupling and lift artifacts, got {kind!r}")
    ok = all(checks.values())
    out = {"schema": SCHEMA, "kind": "verification", "ok": ok, "checks": checks}
    _emit(out, args.out, args.meta)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bicausal-ot",
        description="Exact transport between discrete process laws: solvers, causality checks, lifts, and the denseness pipeline.",
    )
    parser.add_argument("--version", action="version", version=f"bicausal-ot {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output path (stdout when omitted)")
        p.add_argument("--meta", action="store_true", help="also write a .meta.json sidecar")

    p = sub.add_parser("validate", help="canonicalize a measure or coupling")
    p.add_argument("--file", required=True)
    common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("solve", help="solve a transport problem")
    p.add_argument("--problem", choices=["kp", "bc"], required=True)
    p.add_argument("--cost", required=True, help="metric:P or table:FILE")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--oracle", action="store_true", help="force the brute-force route for bc")
    common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("check", help="causality / bicausality verdict with witness")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--causal", action="store_true")
    group.add_argument("--bicausal", action="store_true")
    p.add_argument("--pi", required=True)
    common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("lift", help="lift a coupling to a verified micro bijection")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--biadapted", action="store_true")
    group.add_argument("--static", action="store_true")
    p.add_argument("--pi", required=True)
    common(p)
    p.set_defaults(fn=cmd_lift)

    p = sub.add_parser("project", help="project a lift artifact back to the base")
    p.add_argument("--lift", required=True)
    common(p)
    p.set_defaults(fn=cmd_project)

    p = sub.add_parser("approx", help="denseness pipeline report over a mesh sequence")
    p.add_argument("--pi", required=True)
    p.add_argument("--mesh", required=True, help="comma-separated decimal targets; 0 means singleton cells")
    p.add_argument("--p", default="1")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--surjective-only", action="store_true", dest="surjective_only")
    p.add_argument("--csv", default=None, help="also write a flat CSV table")
    common(p)
    p.set_defaults(fn=cmd_approx)

    p = sub.add_parser("feasibility", help="base-level biadapted bijection search")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    common(p)
    p.set_defaults(fn=cmd_feasibility)

    p = sub.add_parser("gen", help="generate instances")
    p.add_argument("--kind", choices=["random-tree", "paper-example", "fixture"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=2)
    p.add_argument("--branching", type=int, default=2)
    p.add_argument("--denom", type=int, default=8)
    p.add_argument("--name", default=None, help="fixture name")
    p.add_argument("--out-mu", required=True, dest="out_mu")
    p.add_argument("--out-nu", required=True, dest="out_nu")
    p.add_argument("--out-pi", default=None, dest="out_pi")
    p.add_argument("--meta", action="store_true")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("verify", help="re-check all invariants of a serialized artifact")
    p.add_argument("--file", required=True)
    common(p)
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except UsageError as exc:
        sys.stderr.write(canonical_dumps({"schema": SCHEMA, "kind": "error", "error": exc.to_json()}))
        return 2
    except BicausalOTError as exc:
        sys.stderr.write(canonical_dumps({"schema": SCHEMA, "kind": "error", "error": exc.to_json()}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
