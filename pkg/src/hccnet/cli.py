"""Command-line entry point.

Exit codes: 0 success, 1 validation failure (report on stdout), 2 malformed
input or usage error. Data goes to stdout as canonical JSON; diagnostics go
to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import jsonio

EXIT_OK, EXIT_INVALID, EXIT_MALFORMED = 0, 1, 2


class Malformed(Exception):
    pass


class Invalid(Exception):
    def __init__(self, report):
        super().__init__("validation failed")
        self.report = report


def _read(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise Malformed(f"{path}: no such file") from exc
    except json.JSONDecodeError as exc:
        raise Malformed(f"{path}: {exc}") from exc


def _emit(obj):
    sys.stdout.write(jsonio.dumps(obj) + "\n")


def _range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        return (int(lo), int(hi if sep else lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None


def _shape(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected AxBxC, got {text!r}") from None


# ---------------------------------------------------------------------------
# verbs

def cmd_check(a):
    if a.gt:
        from .pwohg import Pwohg, check_socc

        rep = check_socc(Pwohg.from_json(_read(a.gt)))
        ok = rep["connected"] and rep["consistent"]
    elif a.arch:
        from .network import Tem, validate_tem

        rep = validate_tem(Tem.from_json(_read(a.arch)))
        ok = rep["ok"]
    elif a.tom:
        from .mda import Mda
        from .ops import Tom, validate_tom

        tom = Tom.from_json(_read(a.tom))
        rep = validate_tom(tom, [Mda.from_json(_read(p)) for p in a.inputs]) if a.inputs else {"ok": True, "errors": []}
        ok = rep["ok"]
    else:
        from .modemap import ModeMap, verify_mode_map

        rep = verify_mode_map(ModeMap.from_json(_read(a.modemap)))
        ok = rep["ok"]
    if not ok:
        raise Invalid(rep)
    return rep


def cmd_eval(a):
    from .mda import Mda
    from .ops import PreconditionError, Tom, evaluate

    tom = Tom.from_json(_read(a.tom))
    operands = [Mda.from_json(_read(p)) for p in a.inputs]
    try:
        out = evaluate(tom, operands, a.ops or tom.base_ops, a.engine)
    except PreconditionError as exc:
        raise Invalid({"ok": False, "errors": [str(exc)]}) from exc
    return out.to_json()


def cmd_oracle(a):
    # independent route: only the nested-loop module is used here
    from .oracle import OracleTensor, oracle_evaluate

    tom = _read(a.tom)
    operands = [OracleTensor.from_file(_read(p)) for p in a.inputs]
    try:
        out = oracle_evaluate(tom, operands, a.ops)
    except ValueError as exc:
        raise Invalid({"ok": False, "errors": [str(exc)]}) from exc
    return out.to_file()


def cmd_forward(a):
    import numpy as np

    from .mda import Mda
    from .network import NetworkError, Tem, forward

    tem = Tem.from_json(_read(a.arch))
    inputs = {}
    raw = _read(a.inputs) if a.inputs else {}
    names = [t.name for t in tem.tensors if t.role == "input"]
    if "shape" in raw and len(names) == 1:
        raw = {names[0]: raw}
    for k, v in raw.items():
        inputs[k] = Mda.from_json(v)
    if not a.inputs:
        rng = np.random.default_rng(a.seed)
        inputs = {t.name: Mda.from_array(rng.standard_normal(t.shape)) for t in tem.tensors if t.role == "input"}
    weights = {k: Mda.from_json(v) for k, v in _read(a.weights).items()} if a.weights else None
    try:
        out = forward(tem, inputs, weights, seed=a.seed, batch=a.batch)
    except NetworkError as exc:
        raise Invalid({"ok": False, "errors": [str(exc)]}) from exc
    return {k: v.to_json() for k, v in out.items()}


def cmd_signature(a):
    from .network import Tem, signature

    return signature(Tem.from_json(_read(a.arch)), a.count_activations).to_json()


def cmd_decompose(a):
    from .ops import AlgebraError, Tom, decompose_to_binary

    tom = Tom.from_json(_read(a.tom))
    try:
        chain = decompose_to_binary(tom, a.ops or tom.base_ops)
    except AlgebraError as exc:
        raise Invalid({"ok": False, "errors": [str(exc)]}) from exc
    return {"chain": [t.to_json() for t in chain]}


def cmd_merge(a):
    from .ops import OpsError, Tom, merge_ops

    t1, t2 = Tom.from_json(_read(a.tom1)), Tom.from_json(_read(a.tom2))
    try:
        return merge_ops(t1, t2, a.bind, a.ops or t1.base_ops).to_json()
    except OpsError as exc:
        raise Invalid({"ok": False, "errors": [str(exc)]}) from exc


def cmd_sample(a):
    from .sampler import SampleConstraints, emit_dataset, write_dataset

    c = SampleConstraints(
        c_op=a.c_op, c_t=a.c_t, c_alpha=a.c_alpha, c_a=a.c_a, c_o_max=a.c_o_max, input_shape=a.input,
    )
    if a.out:
        return write_dataset(a.n, c, a.seed, a.out)
    return {"records": list(emit_dataset(a.n, c, a.seed))}


def cmd_convert(a):
    from .hcc import Hcc
    from .mda import Mda
    from .pwohg import Pwohg, decode_rank3, encode_rank3, gt_from_mda, mda_from_gt

    if a.mda:
        g = gt_from_mda(Mda.from_json(_read(a.mda)))
        if a.to == "hcc":
            return {"hcc": g.hcc.to_json(), "top": g.top}
        return g.pwohg.to_json()
    obj = _read(a.gt or a.hcc)
    g = decode_rank3(Hcc.from_json(obj["hcc"]), obj.get("top")) if a.hcc else Pwohg.from_json(obj)
    if a.to == "hcc":
        h, top = encode_rank3(g)
        return {"hcc": h.to_json(), "top": top}
    if a.to == "gt":
        return g.to_json()
    m = mda_from_gt(g)
    labels = m.scalars()
    return {
        "shape": list(m.shape),
        "present": m.present.astype(int).tolist(),
        "labels": labels.tolist(),
    }


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hccnet", description="Tensor operations and networks as combinatorial complexes.")
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("check", help="validate a generalized tensor, TOM, architecture or mode map")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--gt")
    g.add_argument("--tom")
    g.add_argument("--arch")
    g.add_argument("--modemap")
    s.add_argument("--in", dest="inputs", nargs="*", default=[])
    s.set_defaults(fn=cmd_check)

    for verb, fn, text in (("eval", cmd_eval, "evaluate a TOM"), ("oracle", cmd_oracle, "evaluate a TOM with nested loops")):
        s = sub.add_parser(verb, help=text)
        s.add_argument("--tom", required=True)
        s.add_argument("--in", dest="inputs", nargs="+", required=True)
        s.add_argument("--ops", default=None)
        if verb == "eval":
            s.add_argument("--engine", choices=["auto", "general", "einsum"], default="auto")
        s.set_defaults(fn=fn)

    s = sub.add_parser("forward", help="run an architecture")
    s.add_argument("--arch", required=True)
    s.add_argument("--in", dest="inputs")
    s.add_argument("--weights")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--batch", action="store_true")
    s.set_defaults(fn=cmd_forward)

    s = sub.add_parser("signature", help="complexity signature of an architecture")
    s.add_argument("--arch", required=True)
    s.add_argument("--count-activations", action="store_true")
    s.set_defaults(fn=cmd_signature)

    s = sub.add_parser("decompose", help="split a TOM into a binary chain")
    s.add_argument("--tom", required=True)
    s.add_argument("--ops", default=None)
    s.set_defaults(fn=cmd_decompose)

    s = sub.add_parser("merge", help="merge two TOMs at a bound operand")
    s.add_argument("--tom1", required=True)
    s.add_argument("--tom2", required=True)
    s.add_argument("--bind", type=int, required=True)
    s.add_argument("--ops", default=None)
    s.set_defaults(fn=cmd_merge)

    s = sub.add_parser("sample", help="sample architecture blocks")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--c-op", type=_range, default=(2, 5))
    s.add_argument("--c-t", type=_range, default=(5, 16))
    s.add_argument("--c-alpha", type=_range, default=(2, 4))
    s.add_argument("--c-a", type=_range, default=(2, 4))
    s.add_argument("--c-o-max", type=int, default=11)
    s.add_argument("--input", type=_shape, default=(64, 16, 16))
    s.add_argument("--out")
    s.set_defaults(fn=cmd_sample)

    s = sub.add_parser("convert", help="convert between arrays, hypergraphs and HCCs")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--mda")
    g.add_argument("--gt")
    g.add_argument("--hcc")
    s.add_argument("--to", choices=["mda", "gt", "hcc"], required=True)
    s.set_defaults(fn=cmd_convert)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_MALFORMED
    try:
        _emit(a.fn(a))
        return EXIT_OK
    except Invalid as exc:
        _emit(exc.report)
        return EXIT_INVALID
    except Malformed as exc:
        print(f"hccnet: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        print(f"hccnet: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
