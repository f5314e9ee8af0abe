"""Pretty-printing of programs, expressions and types.

The printer parenthesizes conservatively: its only contract is that
``parse(print(t)) == t``. Names inside types (singletons, permission
subjects) go through ``name``, which lets the permission checker print its
own variable objects with display names.
"""

from __future__ import annotations

from . import ast as A

_ESC = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def quote(s: str) -> str:
    return '"' + "".join(_ESC.get(c, c) for c in s) + '"'


# ---------------------------------------------------------------------------
# types: level 0 = forall/arrow, 1 = nominal application, 2 = atomic


def show_type(t, name=str, level: int = 0) -> str:
    match t:
        case A.IntT():
            return "int"
        case A.StringT():
            return "string"
        case A.TVar(n):
            return n
        case A.Singleton(v):
            # "=x" cannot start a type argument, since "=" would end the head
            return "=" + name(v) if level < 2 else f"(={name(v)})"
        case A.Nominal(n, args):
            if not args:
                return n
            s = n + " " + " ".join(show_type(a, name, 2) for a in args)
            return s if level <= 1 else f"({s})"
        case A.Tuple(items):
            return "(" + ", ".join(show_type(i, name) for i in items) + ")"
        case A.Structural(ctor, fields):
            if not fields:
                return ctor
            body = "; ".join(f"{f}: {show_type(ft, name)}" for f, ft in fields)
            return f"{ctor} {{ {body} }}"
        case A.Bar(inner, perms):
            return f"({show_type(inner, name)} | {show_perms(perms, name)})"
        case A.Arrow(params, ret):
            ps = ", ".join(show_param(p, name) for p in params)
            s = f"({ps}) -> {show_type(ret, name)}"
            return s if level == 0 else f"({s})"
        case A.Forall(vs, body):
            s = f"[{' '.join(vs)}] {show_type(body, name)}"
            return s if level == 0 else f"({s})"
    raise TypeError(f"not a type: {t!r}")


def show_param(p: A.Param, name=str) -> str:
    s = show_type(p.type, name)
    if p.binder is not None:
        s = f"{p.binder}: {s}"
    if p.consumed:
        s = "consumes " + s
    return s


def show_perms(perms, name=str) -> str:
    return " * ".join(f"{name(x)} @ {show_type(t, name)}" for x, t in perms)


# ---------------------------------------------------------------------------
# expressions: level 0 = seq, 1 = tuple, 2 = let/if/match/write,
# 3 = comparison, 4 = application/postfix/atom

_OPEN = (A.Let, A.If, A.FieldWrite)


def _level(e) -> int:
    match e:
        case A.Seq():
            return 0
        case A.TupleExpr(items) if items:
            return 1
        case A.Let() | A.If() | A.Match() | A.FieldWrite():
            return 2
        case A.Compare():
            return 3
    return 4


def show_expr(e, level: int = 0, tail: bool = True) -> str:
    """Render ``e``. ``tail`` is False when more tokens follow at the same
    nesting depth; open-ended forms (let, if, <-) are then parenthesized."""
    if _level(e) < level or (not tail and isinstance(e, _OPEN)):
        return "(" + show_expr(e, 0, True) + ")"
    match e:
        case A.EVar(n):
            return n
        case A.IntLit(v):
            return str(v)
        case A.StrLit(v):
            return quote(v)
        case A.TupleExpr(items):
            if not items:
                return "()"
            parts = [show_expr(x, 2, tail and i == len(items) - 1)
                     for i, x in enumerate(items)]
            return ", ".join(parts)
        case A.Seq(first, second):
            return show_expr(first, 1, False) + "; " + show_expr(second, 0, tail)
        case A.Let(pat, rhs, body):
            return f"let {show_pattern(pat)} = {show_expr(rhs)} in {show_expr(body, 0, tail)}"
        case A.If(cond, then, orelse):
            return (f"if {show_expr(cond)} then {show_expr(then, 2, False)} "
                    f"else {show_expr(orelse, 2, tail)}")
        case A.Match(scrut, branches):
            bs = " ".join(f"| {b.ctor} -> {show_expr(b.body)}" for b in branches)
            return f"match {show_expr(scrut)} with {bs} end"
        case A.FieldWrite(obj, f, rhs):
            return f"{show_expr(obj, 4, False)}.{f} <- {show_expr(rhs, 2, tail)}"
        case A.Compare(op, left, right):
            return f"{show_expr(left, 4, False)} {op} {show_expr(right, 4, False)}"
        case A.FieldRead(obj, f):
            return f"{show_expr(obj, 4, False)}.{f}"
        case A.Call(callee, targs, args):
            ts = ""
            if targs is not None:
                ts = " [" + ", ".join(show_type(t) for t in targs) + "]"
            parts = [show_expr(a, 2, i == len(args) - 1) for i, a in enumerate(args)]
            return f"{callee.name}{ts} ({', '.join(parts)})"
        case A.CtorAlloc(ctor, fields):
            if not fields:
                return ctor
            parts = [f"{f} = {show_expr(x, 1, i == len(fields) - 1)}"
                     for i, (f, x) in enumerate(fields)]
            return f"{ctor} {{ {'; '.join(parts)} }}"
    raise TypeError(f"not an expression: {e!r}")


def show_pattern(p) -> str:
    match p:
        case A.PVar(n):
            return n
        case A.PTuple(names):
            return ", ".join(names)
    raise TypeError(p)


# ---------------------------------------------------------------------------
# declarations


def show_decl(d) -> str:
    match d:
        case A.DataDecl(name, is_mutable, params, branches):
            head = "data " + ("mutable " if is_mutable else "") + " ".join((name,) + params)
            lines = [head + " ="]
            for b in branches:
                lines.append("  | " + show_type(A.Structural(b.name, b.fields)))
            return "\n".join(lines)
        case A.ValGroup(is_rec, defs):
            out = []
            for i, v in enumerate(defs):
                kw = ("val rec " if is_rec else "val ") if i == 0 else "and "
                out.append(kw + show_valdef(v))
            return "\n\n".join(out)
    raise TypeError(d)


def show_valdef(v: A.ValDef) -> str:
    if not v.is_function:
        return f"{v.name} = {show_expr(v.body)}"
    tps = f" [{' '.join(v.tparams)}]" if v.tparams else ""
    ps = ", ".join(show_param(p) for p in v.params)
    return f"{v.name}{tps} ({ps}): {show_type(v.ret)} =\n  {show_expr(v.body)}"


def show_program(prog: A.Program) -> str:
    return "\n\n".join(show_decl(d) for d in prog.declarations) + "\n"
