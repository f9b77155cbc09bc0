"""Command-line interface: ``mlrank <command> ...``.

Exit codes: 0 success, 1 a verification or inequality failed, 2 bad input,
3 a budget was exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .errors import BoundViolation, BudgetExceeded, MlrankError, NoProgress

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _emit(doc, out: str | None = None):
    text = json.dumps(doc, indent=2, ensure_ascii=False)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _int_list(text: str) -> list[int]:
    text = text.strip()
    if text.startswith("["):
        return [int(x) for x in json.loads(text)]
    return [int(x) for x in text.split(",") if x.strip()]


def _matrix(path: str):
    from .mlmatrix import FormMatrix

    return FormMatrix.from_json(_load(path))


def _frac(x: Fraction) -> str:
    return str(x)


# -- commands -------------------------------------------------------------------------------


def cmd_rank(args) -> int:
    from .ranks import avg_rank, comm_rank, max_rank

    if args.kind == "analytic":
        from .tensor3 import Tensor3, analytic_rank

        T = Tensor3.from_json(_load(args.input))
        bias, ar = analytic_rank(T, budget=args.budget)
        _emit({"kind": "analytic", "value": ar, "bias": _frac(bias), "exact": True,
               "mode": "exhaustive"})
        return EXIT_OK
    M = _matrix(args.input)
    if args.kind == "max":
        mode = args.mode or "exhaustive"
        value = max_rank(M, mode=mode, samples=args.trials, seed=args.seed, budget=args.budget)
        doc = {"kind": "max", "value": value, "exact": mode == "exhaustive", "mode": mode}
    elif args.kind == "comm":
        mode = args.mode or "auto"
        value = comm_rank(M, mode=mode, trials=args.trials, seed=args.seed, budget=args.budget)
        doc = {"kind": "comm", "value": value, "exact": mode != "probabilistic", "mode": mode}
    else:
        value = avg_rank(M, budget=args.budget)
        doc = {"kind": "avg", "value": _frac(value), "exact": True, "mode": "exhaustive"}
    doc["seed"] = args.seed
    _emit(doc)
    return EXIT_OK


def cmd_decompose(args) -> int:
    from .decomp import pr_decompose, verify

    M = _matrix(args.input)
    D = pr_decompose(M, allow_extension=args.allow_extension, eager_extension=args.eager_extension,
                     point_budget=args.budget, seed=args.seed)
    _emit(D.to_json(), args.out)
    e = int(D.log[0].get("extension_degree", 1)) if D.log else 1
    rep = verify(M, D, extension_degree=e)
    summary = rep.to_json()
    summary["seed"] = args.seed
    summary["extension_degree"] = e
    print(json.dumps(summary), file=sys.stderr if args.out is None else sys.stdout)
    return EXIT_OK


def cmd_decompose_d1(args) -> int:
    from .decomp import pr_decompose_d1

    M = _matrix(args.input)
    P, Q, r1, r2, D = pr_decompose_d1(M, point_budget=args.budget)
    doc = {"P": [list(r) for r in P.rows], "Q": [list(r) for r in Q.rows], "r1": r1, "r2": r2,
           "decomposition": D.to_json()}
    _emit(doc, args.out)
    if args.out:
        print(json.dumps({"r1": r1, "r2": r2, "terms": len(D)}))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .decomp import PartitionDecomposition, verify

    M = _matrix(args.matrix)
    doc = _load(args.decomp)
    if "decomposition" in doc and "terms" not in doc:
        doc = doc["decomposition"]
    D = PartitionDecomposition.from_json(doc, like=M)
    e = int(D.log[0].get("extension_degree", 1)) if D.log else 1
    rep = verify(M, D, extension_degree=e)
    _emit(rep.to_json())
    if not rep.equal or rep.within_bound is False:
        return EXIT_FAIL
    return EXIT_OK


def _point(path_or_json: str, ctx):
    text = path_or_json.strip()
    doc = json.loads(text) if text.startswith("[") else _load(path_or_json)
    if isinstance(doc, dict):
        doc = doc["point"]
    return tuple(tuple(ctx.elem_from_json(c) for c in v) for v in doc)


def cmd_schur(args) -> int:
    from .schur import diff_schur

    M = _matrix(args.input)
    res = diff_schur(M, _int_list(args.rows), _int_list(args.cols), _point(args.point, M.ctx))
    doc = res.to_json()
    if res.audit is not None:
        doc["audit"] = {"terms": res.audit.n_terms, "term_bound": res.audit.term_bound,
                        "remainder_comm_rank": res.audit.remainder_cr,
                        "rank_bound": res.audit.rank_bound}
    _emit(doc, args.out)
    return EXIT_OK


def cmd_tensor(args) -> int:
    from .tensor3 import Tensor3, analytic_rank, flatten, slice_bound_holds, slice_decompose

    T = Tensor3.from_json(_load(args.input))
    if args.op == "flatten":
        _emit(flatten(T).to_json(), args.out)
        return EXIT_OK
    bias, ar = analytic_rank(T, budget=args.budget)
    if args.op == "ar":
        _emit({"bias": _frac(bias), "analytic_rank": ar})
        return EXIT_OK
    a = Fraction(args.a) if args.a is not None else None
    S = slice_decompose(T, a=a, budget=args.budget)
    doc = S.to_json()
    q = T.ctx.q
    doc.update({"bias": _frac(bias), "analytic_rank": ar,
                "bound": (3 + 2 / (q - 1)) * ar, "within_bound": slice_bound_holds(q, S.count, bias)})
    _emit(doc, args.out)
    return EXIT_OK


def _poly(path: str):
    from .mform import Poly

    return Poly.from_json(_load(path))


def cmd_mult(args) -> int:
    from .polyops import mult

    f = _poly(args.poly)
    pt = [f.ctx.code(c) for c in _int_list(args.point)]
    m = mult(f, pt)
    _emit({"mult": m if m != float("inf") else "inf"})
    return EXIT_OK


def cmd_multsz(args) -> int:
    from .polyops import multsz_check

    f = _poly(args.poly)
    S = _int_list(args.S) if args.S else None
    lhs, rhs, holds = multsz_check(f, S, budget=args.budget)
    _emit({"lhs": lhs, "rhs": _frac(rhs), "holds": holds})
    return EXIT_OK if holds else EXIT_FAIL


def cmd_gen(args) -> int:
    from . import corpus

    if args.example == "random":
        M = corpus.gen_random(args.d if args.d is not None else 1, args.n or 2, args.rows, args.cols,
                              args.q, args.density, args.seed)
        doc = M.to_json()
        doc["seed"] = args.seed
    elif args.example == "random-tensor":
        from .tensor3 import Tensor3

        T = Tensor3(corpus.gen_random_tensor(args.n or 2, args.q, args.density, args.seed))
        doc = T.to_json()
        doc["seed"] = args.seed
        M = None
    else:
        params = {"q": args.q}
        if args.example in ("tight-diag", "tight-kron"):
            params["k"] = args.k
        if args.example == "tight-kron":
            params["d"] = args.d if args.d is not None else 2
        M = corpus.make_example(args.example, **params)
        doc = M.to_json()
    if args.pretty and M is not None:
        print(M.pretty(), file=sys.stderr)
    _emit(doc, args.out)
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    from .selfcheck import run_all

    rows = run_all()
    width = max(len(r[0]) for r in rows)
    for name, ok, detail, secs in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name.ljust(width)}  {secs:6.2f}s  {detail}")
    failed = sum(not r[1] for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return EXIT_OK if not failed else EXIT_FAIL


# -- parser ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    from .ranks import DEFAULT_BUDGET

    p = argparse.ArgumentParser(prog="mlrank", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=1,
                   help="thread cap (computations here are single-threaded)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rank", help="max, commutative, average or analytic rank")
    r.add_argument("--kind", choices=["max", "comm", "analytic", "avg"], required=True)
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--mode", choices=["exhaustive", "sample", "auto", "symbolic", "probabilistic"])
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trials", type=int, default=40)
    r.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    r.set_defaults(func=cmd_rank)

    d = sub.add_parser("decompose", help="partition-rank decomposition")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--out")
    d.add_argument("--allow-extension", action="store_true")
    d.add_argument("--eager-extension", action="store_true")
    d.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_decompose)

    d1 = sub.add_parser("decompose-d1", help="compression normal form of a linear matrix")
    d1.add_argument("--in", dest="input", required=True)
    d1.add_argument("--out")
    d1.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    d1.set_defaults(func=cmd_decompose_d1)

    v = sub.add_parser("verify", help="check a decomposition against a matrix")
    v.add_argument("--matrix", required=True)
    v.add_argument("--decomp", required=True)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("schur", help="differential Schur complement")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--rows", required=True, help="0-based, comma separated")
    s.add_argument("--cols", required=True)
    s.add_argument("--point", required=True, help="JSON file or inline list of vectors")
    s.add_argument("--out")
    s.set_defaults(func=cmd_schur)

    t = sub.add_parser("tensor", help="3-tensor operations")
    t.add_argument("--op", choices=["ar", "slice", "flatten"], required=True)
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--a", help="override of the subspace weight (rational)")
    t.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    t.add_argument("--out")
    t.set_defaults(func=cmd_tensor)

    m = sub.add_parser("mult", help="multiplicity of a polynomial at a point")
    m.add_argument("--poly", required=True)
    m.add_argument("--point", required=True)
    m.set_defaults(func=cmd_mult)

    ms = sub.add_parser("multsz", help="check the multiplicity Schwartz-Zippel inequality")
    ms.add_argument("--poly", required=True)
    ms.add_argument("--S", help="subset of the field (codes), default all of it")
    ms.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    ms.set_defaults(func=cmd_multsz)

    g = sub.add_parser("gen", help="write an example or random instance")
    g.add_argument("--example", required=True,
                   choices=["intro-diag", "intro-skew", "tight-diag", "tight-kron", "ex45",
                            "random", "random-tensor"])
    g.add_argument("--q", type=int, default=2)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--d", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--rows", type=int, default=3)
    g.add_argument("--cols", type=int, default=3)
    g.add_argument("--density", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--pretty", action="store_true", help="also print the matrix to stderr")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    sc = sub.add_parser("selfcheck", help="run the example suite")
    sc.set_defaults(func=cmd_selfcheck)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (BoundViolation, NoProgress) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InputError, ValueError, KeyError, TypeError, IndexError, ArithmeticError,
            MlrankError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
