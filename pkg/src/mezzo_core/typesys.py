"""Type contexts, well-formedness checks and mode inference.

Modes form a three-point lattice: duplicable and exclusive are incomparable
and both sit below affine. Immutable data types get a *duplicability fact*
computed as a greatest fixed point over all declarations: either the type
is never duplicable, or it is duplicable exactly when a given subset of its
parameters is instantiated with duplicable types.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

from .syntax import ast as A


class Mode(enum.Enum):
    DUPLICABLE = "duplicable"
    EXCLUSIVE = "exclusive"
    AFFINE = "affine"

    def join(self, other: "Mode") -> "Mode":
        if self is other:
            return self
        return Mode.AFFINE

    def __le__(self, other: "Mode") -> bool:
        return self is other or other is Mode.AFFINE

    def __lt__(self, other: "Mode") -> bool:
        return self is not other and self <= other

    def __str__(self):
        return self.value


DUPLICABLE, EXCLUSIVE, AFFINE = Mode.DUPLICABLE, Mode.EXCLUSIVE, Mode.AFFINE


class KindError(Exception):
    def __init__(self, loc: A.Loc, message: str):
        super().__init__(f"{loc}: {message}")
        self.loc = loc
        self.message = message


# A fact is None (never duplicable) or a frozenset of parameter indices
# whose arguments must be duplicable.
NEVER = None


@dataclass
class TypeContext:
    decls: dict = field(default_factory=dict)
    tvars: frozenset = frozenset()

    @classmethod
    def from_decls(cls, decls) -> "TypeContext":
        ctx = cls()
        for d in decls:
            ctx.decls[d.name] = d
        return ctx

    @classmethod
    def from_program(cls, prog: A.Program) -> "TypeContext":
        return cls.from_decls(prog.data_decls())

    def with_tvars(self, names) -> "TypeContext":
        ctx = TypeContext(self.decls, self.tvars | frozenset(names))
        ctx.__dict__["facts"] = self.facts
        ctx.__dict__["ctors"] = self.ctors
        return ctx

    @cached_property
    def ctors(self) -> dict:
        """constructor name -> (DataDecl, CtorDecl)"""
        out = {}
        for d in self.decls.values():
            for b in d.branches:
                out.setdefault(b.name, (d, b))
        return out

    def ctor_decl(self, ctor: str):
        return self.ctors.get(ctor, (None, None))

    def is_mutable_ctor(self, ctor: str) -> bool:
        d, _ = self.ctor_decl(ctor)
        return d is not None and d.is_mutable

    def unfold(self, name: str, args, ctor: str):
        """Field list of ``ctor`` with the declaration's parameters replaced
        by ``args``, or None if ``ctor`` is not a branch of ``name``."""
        d = self.decls.get(name)
        if d is None:
            return None
        for b in d.branches:
            if b.name == ctor:
                sub = dict(zip(d.params, args))
                return tuple((f, subst_tvars(t, sub)) for f, t in b.fields)
        return None

    def branches(self, name: str, args):
        d = self.decls[name]
        return [(b.name, self.unfold(name, args, b.name)) for b in d.branches]

    @cached_property
    def facts(self) -> dict:
        return _infer_facts(self.decls)


# ---------------------------------------------------------------------------
# substitution helpers shared with the permission checker


def subst_tvars(t, sub: dict):
    if not sub:
        return t
    match t:
        case A.TVar(n):
            return sub.get(n, t)
        case A.Nominal(n, args):
            return A.Nominal(n, tuple(subst_tvars(a, sub) for a in args))
        case A.Tuple(items):
            return A.Tuple(tuple(subst_tvars(i, sub) for i in items))
        case A.Structural(c, fields):
            return A.Structural(c, tuple((f, subst_tvars(ft, sub)) for f, ft in fields))
        case A.Bar(inner, perms):
            return A.Bar(subst_tvars(inner, sub),
                         tuple((x, subst_tvars(pt, sub)) for x, pt in perms))
        case A.Arrow(params, ret):
            return A.Arrow(tuple(A.Param(p.binder, p.consumed, subst_tvars(p.type, sub))
                                 for p in params), subst_tvars(ret, sub))
        case A.Forall(vs, body):
            inner = {k: v for k, v in sub.items() if k not in vs}
            return A.Forall(vs, subst_tvars(body, inner))
    return t


# ---------------------------------------------------------------------------
# well-formedness


def kind_check(ctx: TypeContext, t, binders=frozenset(), loc: A.Loc = A.NOLOC) -> list[KindError]:
    """Return every well-formedness violation in ``t`` (empty when fine)."""
    errors: list[KindError] = []

    def err(msg):
        errors.append(KindError(loc, msg))

    def go(t, tvars, names):
        match t:
            case A.IntT() | A.StringT():
                pass
            case A.TVar(n):
                if n not in tvars:
                    err(f"unbound type variable {n}")
            case A.Singleton(v):
                if isinstance(v, str) and v not in names:
                    err(f"singleton type ={v} refers to an unknown binder")
            case A.Nominal(n, args):
                d = ctx.decls.get(n)
                if d is None:
                    err(f"unknown type {n}")
                elif len(args) != len(d.params):
                    err(f"type {n} expects {len(d.params)} argument(s), got {len(args)}")
                for a in args:
                    go(a, tvars, names)
            case A.Tuple(items):
                for i in items:
                    go(i, tvars, names)
            case A.Structural(c, fields):
                d, b = ctx.ctor_decl(c)
                if d is None:
                    err(f"unknown constructor {c}")
                else:
                    have = [f for f, _ in fields]
                    want = [f for f, _ in b.fields]
                    if len(set(have)) != len(have):
                        err(f"duplicate field in {c}")
                    missing = [f for f in want if f not in have]
                    extra = [f for f in have if f not in want]
                    if missing:
                        err(f"constructor {c} is missing field(s) {', '.join(missing)}")
                    if extra:
                        err(f"constructor {c} has no field(s) {', '.join(extra)}")
                for _, ft in fields:
                    go(ft, tvars, names)
            case A.Bar(inner, perms):
                go(inner, tvars, names)
                for x, pt in perms:
                    if isinstance(x, str) and x not in names:
                        err(f"permission mentions unknown binder {x}")
                    go(pt, tvars, names)
            case A.Arrow(params, ret):
                inner = set(names)
                for p in params:
                    if p.binder is not None:
                        inner.add(p.binder)
                for p in params:
                    go(p.type, tvars, inner)
                go(ret, tvars, inner)
            case A.Forall(vs, body):
                go(body, tvars | frozenset(vs), names)
            case _:
                err(f"malformed type {t!r}")

    go(t, ctx.tvars, frozenset(binders))
    return errors


def check_data_decls(decls) -> list[KindError]:
    errors = []
    seen_types, seen_ctors = {}, {}
    ctx = TypeContext.from_decls(decls)
    for d in decls:
        if d.name in seen_types or d.name in ("int", "string"):
            errors.append(KindError(d.loc, f"duplicate data type {d.name}"))
        seen_types[d.name] = d
        if len(set(d.params)) != len(d.params):
            errors.append(KindError(d.loc, f"duplicate parameter in {d.name}"))
        pctx = ctx.with_tvars(d.params)
        for b in d.branches:
            if b.name in seen_ctors:
                errors.append(KindError(b.loc, f"constructor {b.name} is already declared"))
            seen_ctors[b.name] = d
            names = [f for f, _ in b.fields]
            if len(set(names)) != len(names):
                errors.append(KindError(b.loc, f"duplicate field in {b.name}"))
            for _, ft in b.fields:
                errors.extend(kind_check(pctx, ft, loc=b.loc))
    return errors


# ---------------------------------------------------------------------------
# mode inference


def _requirements(t, params, facts, decls):
    """Parameter indices that must be duplicable for ``t`` to be, or NEVER."""
    match t:
        case A.IntT() | A.StringT() | A.Singleton() | A.Arrow() | A.Forall():
            return frozenset()
        case A.TVar(n):
            if n in params:
                return frozenset({params.index(n)})
            return NEVER
        case A.Tuple(items):
            return _union(_requirements(i, params, facts, decls) for i in items)
        case A.Structural(c, fields):
            for d in decls.values():
                if d.is_mutable and any(b.name == c for b in d.branches):
                    return NEVER
            return _union(_requirements(ft, params, facts, decls) for _, ft in fields)
        case A.Nominal(n, args):
            d = decls.get(n)
            if d is None or d.is_mutable or facts.get(n) is NEVER:
                return NEVER
            return _union(_requirements(args[i], params, facts, decls)
                          for i in sorted(facts[n]))
        case A.Bar(inner, perms):
            return _union([_requirements(inner, params, facts, decls)]
                          + [_requirements(pt, params, facts, decls) for _, pt in perms])
    return NEVER


def _union(reqs):
    out = frozenset()
    for r in reqs:
        if r is NEVER:
            return NEVER
        out |= r
    return out


def _infer_facts(decls: dict) -> dict:
    # Greatest fixed point: start from "always duplicable" and only weaken.
    facts = {n: frozenset() for n, d in decls.items() if not d.is_mutable}
    changed = True
    while changed:
        changed = False
        for n in list(facts):
            if facts[n] is NEVER:
                continue
            d = decls[n]
            req = _union(_requirements(ft, list(d.params), facts, decls)
                         for b in d.branches for _, ft in b.fields)
            if req != facts[n]:
                facts[n] = req
                changed = True
    return facts


def infer_mode(ctx: TypeContext, t) -> Mode:
    match t:
        case A.IntT() | A.StringT() | A.Singleton() | A.Arrow():
            return DUPLICABLE
        case A.TVar():
            return AFFINE
        case A.Forall(_, body):
            return infer_mode(ctx, body)
        case A.Tuple(items):
            return _immutable_join(infer_mode(ctx, i) for i in items)
        case A.Structural(c, fields):
            if ctx.is_mutable_ctor(c):
                return EXCLUSIVE
            return _immutable_join(infer_mode(ctx, ft) for _, ft in fields)
        case A.Nominal(n, args):
            d = ctx.decls.get(n)
            if d is None:
                return AFFINE
            if d.is_mutable:
                return EXCLUSIVE
            fact = ctx.facts.get(n)
            if fact is NEVER:
                return AFFINE
            return _immutable_join(infer_mode(ctx, args[i]) for i in sorted(fact))
        case A.Bar(inner, perms):
            return _immutable_join([infer_mode(ctx, inner)]
                                   + [infer_mode(ctx, pt) for _, pt in perms])
    return AFFINE


def _immutable_join(modes) -> Mode:
    # An immutable aggregate is duplicable only if all its parts are; it is
    # never exclusive since it grants no write access of its own.
    for m in modes:
        if m is not DUPLICABLE:
            return AFFINE
    return DUPLICABLE


def is_duplicable(ctx: TypeContext, t) -> bool:
    return infer_mode(ctx, t) is DUPLICABLE


def is_exclusive(ctx: TypeContext, t) -> bool:
    return infer_mode(ctx, t) is EXCLUSIVE
