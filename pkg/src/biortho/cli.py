"""Command-line front end.

Subcommands: ``kernel``, ``poly``, ``corr``, ``sample``, ``verify``.
Ensembles: ``chgue`` (``--alpha``, ``--a``), ``laguerre``/``hermite``
(``--alpha``, ``--n`` orthogonal-polynomial ensembles), and ``confluent``
(``--b`` coalescence targets with ``--mult`` multiplicities).

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numeric
error.  Output as CSV (17 significant digits) or JSON
``{params, grid, values, metadata{seed, versions}}``.  Flags may be
preloaded from a JSON config file (``--config``); explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Callable, Sequence

import numpy as np
import scipy

from . import __version__
from .chgue import (
    ChgueParams,
    ConfluentSpec,
    chgue_gram,
    chgue_kernel,
    chgue_type_one,
    chgue_type_two,
    confluent_weights,
    ensemble_spec,
    kernel_sum_check,
    rank_decomposition,
    w_alpha,
)
from .charpoly import SourceModel, avg_charpoly, rho1_check, sample_spectra
from .ensembles import (
    EnsembleSpec,
    HalfLine,
    Segment,
    build_kernel,
    correlation,
    kernel_eval,
    op_from_weight,
)
from .errors import DomainError, NumericError
from .multipoly import (
    Composition,
    biortho_sequence,
    check_ortho_one,
    check_ortho_two,
    type_one,
    type_two,
    xi_family,
)
from .numerics import gauss_laguerre

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

_DEFAULT_TOLS = {
    "gram": 1e-8,
    "kernel": 1e-7,
    "trace": 1e-6,
    "ortho": 1e-8,
    "biortho": 1e-8,
    "corollary": 1e-6,
    "rankdecomp": 1e-6,
    "mc-sigma": 3.0,
    "mc-bins": 0.95,
}


def _parse_floats(text: str) -> list[float]:
    if not text.strip():
        raise DomainError("empty list")
    return [float(v) for v in text.split(",")]


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise DomainError(f"grid must be min:max:count, got {text!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise DomainError(f"grid count must be >= 1, got {count}")
    if count == 1:
        return np.array([lo])
    return np.linspace(lo, hi, count)


def _parse_overrides(items: Sequence[str] | None) -> dict:
    tols = dict(_DEFAULT_TOLS)
    for item in items or []:
        if "=" not in item:
            raise DomainError(f"--tol-override expects KEY=VAL, got {item!r}")
        key, val = item.split("=", 1)
        if key not in tols:
            raise DomainError(
                f"unknown tolerance key {key!r}; known: {sorted(tols)}"
            )
        tols[key] = float(val)
    return tols


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biortho",
        description="kernels, multiple orthogonal polynomials, and "
        "verification suites for biorthogonal ensembles",
    )
    parser.add_argument("--config", help="JSON file of flag defaults (flags win)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--ensemble", default="chgue",
                       choices=["chgue", "laguerre", "hermite", "confluent"])
        p.add_argument("--alpha", type=float, default=0.0)
        p.add_argument("--a", help="comma-separated source parameters")
        p.add_argument("--b", help="comma-separated coalescence targets (confluent)")
        p.add_argument("--mult", help="comma-separated multiplicities (confluent)")
        p.add_argument("--n", type=int, help="size for laguerre/hermite ensembles")
        p.add_argument("--format", default="csv", choices=["csv", "json"])
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("kernel", help="tabulate K_N on a grid")
    common(p)
    p.add_argument("--grid", default="0:8:17", help="inclusive span min:max:count")
    p.add_argument("--cross-check", action="store_true",
                   help="also compute the generic-path kernel and report the "
                        "max relative deviation")

    p = sub.add_parser("poly", help="tabulate a type I/II function")
    common(p)
    p.add_argument("--kind", required=True, choices=["I", "II"])
    p.add_argument("--grid", default="0:10:11")

    p = sub.add_parser("corr", help="n-point correlation at given points")
    common(p)
    p.add_argument("--points", required=True, help="comma-separated coordinates")

    p = sub.add_parser("sample", help="draw eigenvalue spectra")
    common(p)
    p.add_argument("--samples", type=int, default=1)

    p = sub.add_parser("verify", help="run a named invariant suite")
    common(p)
    p.add_argument("--suite", required=True,
                   choices=["gram", "kernel", "ortho", "corollary", "rankdecomp", "mc"])
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--tol-override", action="append", metavar="KEY=VAL")
    return parser


# ---------------------------------------------------------------------------
# ensemble plumbing
# ---------------------------------------------------------------------------

def _chgue_params(args) -> ChgueParams:
    if not args.a:
        raise DomainError("--a is required for the chgue ensemble")
    return ChgueParams(args.alpha, tuple(_parse_floats(args.a)))


def _op_system(args):
    n = args.n or 4
    if args.ensemble == "laguerre":
        alpha = args.alpha
        w = lambda t: t**alpha * np.exp(-t)
        return op_from_weight(w, HalfLine(), n, quad=gauss_laguerre(64, alpha)), w, n
    w = lambda t: np.exp(-t * t)
    return op_from_weight(w, Segment(-7.5, 7.5), n), w, n


def _confluent_system(args):
    if not args.b or not args.mult:
        raise DomainError("--b and --mult are required for the confluent ensemble")
    b = tuple(_parse_floats(args.b))
    mult = tuple(int(v) for v in args.mult.split(","))
    spec = ConfluentSpec(b=b, m=Composition(mult))
    return confluent_weights(spec, args.alpha)


def _confluent_ensemble(args) -> EnsembleSpec:
    ws, comp = _confluent_system(args)
    xi = tuple(xi_family(ws, comp))
    n = comp.weight
    eta = tuple((lambda x, i=i: np.asarray(x, dtype=float) ** i) for i in range(n))
    return EnsembleSpec(n=n, interval=HalfLine(), eta=eta, xi=xi, quad=ws.quad)


def _kernel_function(args) -> Callable:
    if args.ensemble == "chgue":
        params = _chgue_params(args)
        return lambda x, y: chgue_kernel(params, x, y)
    if args.ensemble == "confluent":
        kd = build_kernel(_confluent_ensemble(args))
        return lambda x, y: kernel_eval(kd, x, y)
    sys_, w, n = _op_system(args)

    def cd_kernel(x, y):
        total = sum(sys_.eval(k, x) * sys_.eval(k, y) / sys_.norms[k] for k in range(n))
        return float(w(np.asarray(y, dtype=float))) * total

    return cd_kernel


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _emit(args, header: list[str], rows: list[tuple], params: dict, extra=None) -> None:
    if args.format == "csv":
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(f"{v:.17g}" for v in row))
        text = "\n".join(lines) + "\n"
    else:
        doc = {
            "params": params,
            "grid": [list(row[:-1]) for row in rows],
            "values": [row[-1] for row in rows],
            "metadata": {
                "seed": args.seed,
                "versions": {
                    "biortho": __version__,
                    "numpy": np.__version__,
                    "scipy": scipy.__version__,
                },
            },
        }
        if extra:
            doc["metadata"].update(extra)
        text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params_dict(args) -> dict:
    keep = ("ensemble", "alpha", "a", "b", "mult", "n")
    return {k: getattr(args, k, None) for k in keep if getattr(args, k, None) is not None}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_kernel(args) -> int:
    grid = _parse_grid(args.grid)
    kernel = _kernel_function(args)
    rows = [(float(x), float(y), kernel(float(x), float(y))) for x in grid for y in grid]
    extra = None
    if args.cross_check:
        if args.ensemble != "chgue":
            raise DomainError("--cross-check applies to the chgue ensemble only")
        params = _chgue_params(args)
        kd = build_kernel(ensemble_spec(params))
        dev = 0.0
        for x, y, v in rows:
            ref = kernel_eval(kd, x, y)
            dev = max(dev, abs(v - ref) / max(abs(ref), 1e-12))
        extra = {"cross_check_max_rel_dev": dev}
        print(f"cross-check max relative deviation: {dev:.3e}", file=sys.stderr)
    _emit(args, ["x", "y", "K"], rows, _params_dict(args), extra)
    return EXIT_OK


def _cmd_poly(args) -> int:
    grid = _parse_grid(args.grid)
    selftest = None
    if args.ensemble == "chgue":
        params = _chgue_params(args)
        if args.kind == "II":
            f = chgue_type_two(params)
        else:
            f = chgue_type_one(params)
            rule = gauss_laguerre(64, params.alpha)
            m = float(np.dot(rule.dx_weights, rule.nodes ** (params.n - 1) * f(rule.nodes)))
            selftest = m
    elif args.ensemble == "confluent":
        ws, comp = _confluent_system(args)
        if args.kind == "II":
            f = type_two(ws, comp)
        else:
            f = type_one(ws, comp)
            res = check_ortho_one(f)
            selftest = float(res[-1])
    else:
        sys_, w, n = _op_system(args)
        if args.kind == "II":
            f = lambda x: sys_.eval(n, x)
        else:
            h = sys_.norms[n - 1]
            f = lambda x: w(np.asarray(x, dtype=float)) * sys_.eval(n - 1, x) / h
            rule = sys_.quad
            selftest = float(
                np.dot(rule.dx_weights, rule.nodes ** (n - 1) * f(rule.nodes))
            )
    if selftest is not None:
        print(f"type I self-test: final moment = {selftest:.12g} (should be 1)",
              file=sys.stderr)
    rows = [(float(x), float(f(float(x)))) for x in grid]
    _emit(args, ["x", "value"], rows, _params_dict(args))
    return EXIT_OK


def _cmd_corr(args) -> int:
    points = _parse_floats(args.points)
    if args.ensemble == "chgue":
        spec = ensemble_spec(_chgue_params(args))
    elif args.ensemble == "confluent":
        spec = _confluent_ensemble(args)
    else:
        raise DomainError("corr supports the chgue and confluent ensembles")
    value = correlation(build_kernel(spec), points)
    _emit(args, [*(f"x{i+1}" for i in range(len(points))), "rho"],
          [(*points, value)], _params_dict(args))
    return EXIT_OK


def _cmd_sample(args) -> int:
    if args.samples < 1:
        raise DomainError(f"--samples must be >= 1, got {args.samples}")
    if args.ensemble == "chgue":
        if not args.a:
            raise DomainError("--a is required for sampling the chgue ensemble")
        a = tuple(_parse_floats(args.a))
        model = SourceModel("chiral", len(a), a, int(args.alpha))
    elif args.ensemble == "hermite":
        n = args.n or 2
        model = SourceModel("hermitian", n, (0.0,) * n)
    else:
        raise DomainError("sample supports the chgue and hermite ensembles")
    spectra = sample_spectra(model, args.seed, args.samples)
    header = [f"lambda{i+1}" for i in range(model.n)]
    rows = [tuple(map(float, row)) for row in spectra]
    _emit(args, header, rows, _params_dict(args))
    return EXIT_OK


def _report(checks: list[tuple[str, float, float]]) -> int:
    failed = False
    for name, residual, tol in checks:
        ok = residual <= tol
        failed |= not ok
        print(f"{'PASS' if ok else 'FAIL'} {name} residual={residual:.3e} tol={tol:.3e}")
    print("SUITE " + ("FAIL" if failed else "PASS"))
    return EXIT_VERIFY if failed else EXIT_OK


def _cmd_verify(args) -> int:
    tols = _parse_overrides(args.tol_override)
    rng = np.random.default_rng(args.seed)
    if args.ensemble == "chgue" and not args.a:
        args.a = "1.3,0.7,0.2"
    checks: list[tuple[str, float, float]] = []
    if args.suite == "gram":
        params = _chgue_params(args)
        closed = chgue_gram(params)
        quad = ensemble_spec(params).gram
        dev = float(np.max(np.abs(closed - quad) / np.maximum(np.abs(closed), 1e-12)))
        checks.append(("gram closed-form vs quadrature", dev, tols["gram"]))
    elif args.suite == "kernel":
        params = _chgue_params(args)
        kd = build_kernel(ensemble_spec(params))
        dev = 0.0
        for _ in range(5):
            x, y = rng.uniform(0.2, 6.0, size=2)
            ref = kernel_eval(kd, x, y)
            dev = max(dev, abs(chgue_kernel(params, x, y) - ref) / max(abs(ref), 1e-12))
        checks.append(("residue-sum kernel vs generic path", dev, tols["kernel"]))
        # trace through the generic path: the residue sum is
        # cancellation-limited at the rule's largest nodes
        rule = gauss_laguerre(64, params.alpha)
        trace = float(
            np.dot(rule.dx_weights,
                   [kernel_eval(kd, t, t) for t in rule.nodes])
        )
        checks.append(("kernel trace = N", abs(trace - params.n), tols["trace"]))
    elif args.suite == "ortho":
        params = _chgue_params(args)
        q = chgue_type_one(params)
        rule = gauss_laguerre(64, params.alpha)
        moments = [
            float(np.dot(rule.dx_weights, rule.nodes**j * q(rule.nodes)))
            for j in range(params.n)
        ]
        res = max(abs(m) for m in moments[:-1]) if params.n > 1 else 0.0
        checks.append(("type I moments vanish", res, tols["ortho"]))
        checks.append(("type I final moment = 1", abs(moments[-1] - 1.0), tols["ortho"]))
        p = chgue_type_two(params)
        res2 = 0.0
        for ai in params.a:
            wv = w_alpha(params.alpha, ai)(rule.nodes)
            res2 = max(res2, abs(float(np.dot(rule.dx_weights, wv * p(rule.nodes)))))
        checks.append(("type II first moments vanish", res2, tols["ortho"]))
        a_sorted = tuple(sorted(params.a, reverse=True))
        dev = 0.0
        for i in range(params.n):
            for j in range(params.n):
                pi = (chgue_type_two(ChgueParams(params.alpha, a_sorted[:i]))
                      if i else None)
                qj = chgue_type_one(ChgueParams(params.alpha, a_sorted[: j + 1]))
                pv = pi(rule.nodes) if pi else np.ones_like(rule.nodes)
                val = float(np.dot(rule.dx_weights, pv * qj(rule.nodes)))
                dev = max(dev, abs(val - (1.0 if i == j else 0.0)))
        checks.append(("staircase biorthogonality", dev, tols["biortho"]))
    elif args.suite == "corollary":
        params = _chgue_params(args)
        a_sorted = tuple(sorted(params.a, reverse=True))
        params = ChgueParams(params.alpha, a_sorted)
        dev = 0.0
        for _ in range(5):
            x, y = rng.uniform(0.2, 6.0, size=2)
            kernel, total = kernel_sum_check(params, x, y)
            dev = max(dev, abs(kernel - total) / max(abs(kernel), 1e-12))
        checks.append(("kernel = staircase sum", dev, tols["corollary"]))
    elif args.suite == "rankdecomp":
        for n, r, a in ((3, 1, (0.9, 0.0, 0.0)), (4, 2, (1.2, 0.5, 0.0, 0.0))):
            params = ChgueParams(args.alpha, a)
            b = tuple(v for v in dict.fromkeys(a))
            mult = tuple(sum(1 for v in a if v == bv) for bv in b)
            ws, comp = confluent_weights(ConfluentSpec(b=b, m=Composition(mult)), args.alpha)
            xi = tuple(xi_family(ws, comp))
            eta = tuple((lambda x, i=i: np.asarray(x, dtype=float) ** i) for i in range(n))
            kd = build_kernel(EnsembleSpec(n=n, interval=HalfLine(), eta=eta, xi=xi, quad=ws.quad))
            x, y = 0.5, 1.4
            full, _, _ = rank_decomposition(params, r, x, y)
            ref = kernel_eval(kd, x, y)
            dev = abs(full - ref) / max(abs(ref), 1e-12)
            checks.append((f"rank decomposition N={n} r={r}", dev, tols["rankdecomp"]))
    elif args.suite == "mc":
        params = _chgue_params(args)
        if params.alpha != int(params.alpha):
            raise DomainError("mc suite needs integer alpha for chiral sampling")
        model = SourceModel("chiral", params.n, params.a, int(params.alpha))
        worst = 0.0
        for x in (0.8, 2.5):
            est = avg_charpoly(model, x, args.samples, args.seed)
            exact = chgue_type_two(params)(x)
            worst = max(worst, abs(est.value - exact) / max(est.std_error, 1e-300))
        checks.append(("MC <det> vs type II (sigmas)", worst, tols["mc-sigma"]))
        report = rho1_check(model, bins=40, samples=args.samples, seed=args.seed)
        checks.append(
            ("rho1 histogram bins outside 3 sigma (fraction)",
             1.0 - report.fraction_within, 1.0 - tols["mc-bins"])
        )
    return _report(checks)


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    # two-phase handling so a JSON config can predefine defaults (flags win)
    args_in = list(sys.argv[1:] if argv is None else argv)
    if "--config" in args_in:
        idx = args_in.index("--config")
        cfg_path = args_in[idx + 1]
        del args_in[idx : idx + 2]
        with open(cfg_path) as fh:
            cfg = json.load(fh)
        extra: list[str] = []
        for key, value in cfg.items():
            flag = "--" + key.replace("_", "-")
            if flag in args_in:
                continue  # explicit flags win over the config file
            if isinstance(value, bool):
                if value:
                    extra.append(flag)
            else:
                extra.extend([flag, str(value)])
        args_in = args_in + extra
    args = parser.parse_args(args_in)
    try:
        if args.command == "kernel":
            return _cmd_kernel(args)
        if args.command == "poly":
            return _cmd_poly(args)
        if args.command == "corr":
            return _cmd_corr(args)
        if args.command == "sample":
            return _cmd_sample(args)
        return _cmd_verify(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
