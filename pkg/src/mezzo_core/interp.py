"""A call-by-value interpreter over a heap of tagged blocks.

Evaluation is left to right. Every constructor application allocates a
block, nullary ones included, and blocks are never freed. Runtime checks
that a well-typed program can never fail raise ``RuntimeFault``.
"""

from __future__ import annotations

import sys
from collections import Counter
from dataclasses import dataclass, field

from .syntax import ast as A
from .syntax.pretty import quote

FAULT_KINDS = ("wrong-tag", "missing-field", "immutable-write", "unbound", "non-block-access")


class RuntimeFault(Exception):
    def __init__(self, kind: str, loc: A.Loc, message: str):
        assert kind in FAULT_KINDS
        super().__init__(f"{loc}: {kind}: {message}")
        self.kind = kind
        self.loc = loc
        self.message = message


@dataclass(frozen=True)
class Addr:
    id: int


@dataclass(frozen=True)
class Closure:
    name: str


@dataclass
class Block:
    tag: str
    mutable: bool
    fields: dict = field(default_factory=dict)


def _compare(a, b):
    return (a > b) - (a < b)


BUILTINS = {
    "compare_int": _compare,
    "add_int": lambda a, b: a + b,
    "sub_int": lambda a, b: a - b,
}

_CMP = {"<=": lambda a, b: a <= b, "<": lambda a, b: a < b,
        ">=": lambda a, b: a >= b, ">": lambda a, b: a > b}


class Interpreter:
    def __init__(self, program: A.Program):
        self.program = program
        self.heap: list[Block] = []
        self.ctors = {}
        for d in program.data_decls():
            for b in d.branches:
                self.ctors[b.name] = (d, b)
        self.functions = {v.name: v for v in program.val_defs() if v.is_function}
        self.globals: dict = {name: Closure(name) for name in BUILTINS}
        self.globals.update({name: Closure(name) for name in self.functions})
        for v in program.val_defs():
            if not v.is_function:
                self.globals[v.name] = self.eval(v.body, {})

    # -- heap --------------------------------------------------------------

    def alloc(self, tag: str, mutable: bool, fields: dict) -> Addr:
        self.heap.append(Block(tag, mutable, fields))
        return Addr(len(self.heap) - 1)

    def block(self, v, loc) -> Block:
        if not isinstance(v, Addr):
            raise RuntimeFault("non-block-access", loc, f"{self.render(v)} is not a heap block")
        return self.heap[v.id]

    # -- evaluation --------------------------------------------------------

    def call(self, name: str, args=(), loc: A.Loc = A.NOLOC):
        if name in BUILTINS:
            if len(args) != 2 or not all(isinstance(a, int) for a in args):
                raise RuntimeFault("wrong-tag", loc, f"{name} expects two integers")
            return BUILTINS[name](*args)
        fn = self.functions.get(name)
        if fn is None:
            raise RuntimeFault("unbound", loc, f"no function named {name}")
        if len(args) != len(fn.params):
            raise RuntimeFault("wrong-tag", loc, f"{name} expects {len(fn.params)} argument(s)")
        frame = {p.binder: a for p, a in zip(fn.params, args)}
        return self.eval(fn.body, frame)

    def lookup(self, name, env, loc):
        if name in env:
            return env[name]
        if name in self.globals:
            return self.globals[name]
        raise RuntimeFault("unbound", loc, f"unbound variable {name}")

    def eval(self, e, env: dict):
        match e:
            case A.EVar(n):
                return self.lookup(n, env, e.loc)
            case A.IntLit(v) | A.StrLit(v):
                return v
            case A.TupleExpr(items):
                return tuple(self.eval(i, env) for i in items)
            case A.Let(pat, rhs, body):
                v = self.eval(rhs, env)
                env = dict(env)
                if isinstance(pat, A.PVar):
                    env[pat.name] = v
                else:
                    if not isinstance(v, tuple) or len(v) != len(pat.names):
                        raise RuntimeFault("wrong-tag", e.loc, f"cannot destructure "
                                           f"{self.render(v)} into {len(pat.names)} components")
                    env.update(zip(pat.names, v))
                return self.eval(body, env)
            case A.Seq(first, second):
                self.eval(first, env)
                return self.eval(second, env)
            case A.If(cond, then, orelse):
                c = self.eval(cond, env)
                if not isinstance(c, int):
                    raise RuntimeFault("wrong-tag", e.loc, "condition is not an integer")
                return self.eval(then if c != 0 else orelse, env)
            case A.Match(scrut, branches):
                blk = self.block(self.eval(scrut, env), e.loc)
                for b in branches:
                    if b.ctor == blk.tag:
                        return self.eval(b.body, env)
                raise RuntimeFault("wrong-tag", e.loc, f"no branch for constructor {blk.tag}")
            case A.Compare(op, left, right):
                a, b = self.eval(left, env), self.eval(right, env)
                if not (isinstance(a, int) and isinstance(b, int)):
                    raise RuntimeFault("wrong-tag", e.loc, f"{op} expects two integers")
                return int(_CMP[op](a, b))
            case A.FieldRead(obj, f):
                blk = self.block(self.eval(obj, env), e.loc)
                if f not in blk.fields:
                    raise RuntimeFault("missing-field", e.loc, f"{blk.tag} has no field {f}")
                return blk.fields[f]
            case A.FieldWrite(obj, f, rhs):
                blk = self.block(self.eval(obj, env), e.loc)
                v = self.eval(rhs, env)
                if f not in blk.fields:
                    raise RuntimeFault("missing-field", e.loc, f"{blk.tag} has no field {f}")
                if not blk.mutable:
                    raise RuntimeFault("immutable-write", e.loc,
                                       f"{blk.tag} is an immutable constructor")
                blk.fields[f] = v
                return ()
            case A.Call(callee, _, args):
                fn = self.lookup(callee.name, env, callee.loc)
                vals = [self.eval(a, env) for a in args]
                if not isinstance(fn, Closure):
                    raise RuntimeFault("wrong-tag", e.loc, f"{callee.name} is not a function")
                return self.call(fn.name, vals, e.loc)
            case A.CtorAlloc(ctor, fields):
                if ctor not in self.ctors:
                    raise RuntimeFault("unbound", e.loc, f"unknown constructor {ctor}")
                d, b = self.ctors[ctor]
                vals = {f: self.eval(x, env) for f, x in fields}
                for f, _ in b.fields:
                    if f not in vals:
                        raise RuntimeFault("missing-field", e.loc, f"{ctor} needs field {f}")
                return self.alloc(ctor, d.is_mutable, {f: vals[f] for f, _ in b.fields})
        raise RuntimeFault("unbound", getattr(e, "loc", A.NOLOC), f"cannot evaluate {e!r}")

    # -- printing ----------------------------------------------------------

    def render(self, v, _active=None) -> str:
        active = _active if _active is not None else set()
        match v:
            case bool():
                return str(int(v))
            case int():
                return str(v)
            case str():
                return quote(v)
            case tuple():
                return "(" + ", ".join(self.render(x, active) for x in v) + ")"
            case Closure(name):
                return f"<fun {name}>"
            case Addr(i):
                if i in active:
                    return f"<cycle #{i}>"
                blk = self.heap[i]
                if not blk.fields:
                    return blk.tag
                active.add(i)
                body = "; ".join(f"{f} = {self.render(x, active)}" for f, x in blk.fields.items())
                active.discard(i)
                return f"{blk.tag} {{ {body} }}"
        return repr(v)

    def reachable(self, v) -> set:
        """Ids of all blocks reachable from ``v``."""
        seen, todo = set(), [v]
        while todo:
            x = todo.pop()
            if isinstance(x, tuple):
                todo.extend(x)
            elif isinstance(x, Addr) and x.id not in seen:
                seen.add(x.id)
                todo.extend(self.heap[x.id].fields.values())
        return seen


def eval_program(program: A.Program, entry: str = "main"):
    """Run ``entry`` with no arguments; return (value, interpreter)."""
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20000))
    try:
        interp = Interpreter(program)
        if entry in interp.functions:
            return interp.call(entry, (), A.NOLOC), interp
        if entry in interp.globals:
            return interp.globals[entry], interp
        raise RuntimeFault("unbound", A.NOLOC, f"no entry point named {entry}")
    finally:
        sys.setrecursionlimit(limit)


def render_value(interp: Interpreter, v) -> str:
    return interp.render(v)


def partition_oracle(values, k):
    """Split a multiset of integers into those <= k and those > k."""
    values = Counter(values)
    low = Counter({v: n for v, n in values.items() if v <= k})
    high = Counter({v: n for v, n in values.items() if v > k})
    return low, high
