"""Checking function bodies and whole programs against their signatures."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..syntax import ast as A
from ..typesys import TypeContext, check_data_decls, kind_check, subst_tvars
from .diagnostics import Diagnostic
from .env import (Atom, PermEnv, Var, add_equality, add_permission, canonicalize,
                  empty_env, namer, render, subst_names)
from .merge import merge_branches
from .subtract import (CheckError, SubtractFailure, check_field_write, field_target,
                       match_var, refine_match, subtract)

_INT2 = A.Arrow((A.Param(None, False, A.INT), A.Param(None, False, A.INT)), A.INT)
PRELUDE = {"compare_int": _INT2, "add_int": _INT2, "sub_int": _INT2}


@dataclass(frozen=True)
class FnSignature:
    name: str
    universals: tuple
    params: tuple  # of A.Param
    ret: object

    @classmethod
    def of_valdef(cls, v: A.ValDef) -> "FnSignature":
        return cls(v.name, v.tparams, v.params, v.ret)

    @classmethod
    def of_type(cls, name: str, t):
        if isinstance(t, A.Forall) and isinstance(t.body, A.Arrow):
            return cls(name, t.vars, t.body.params, t.body.ret)
        if isinstance(t, A.Arrow):
            return cls(name, (), t.params, t.ret)
        return None

    def type(self):
        arrow = A.Arrow(self.params, self.ret)
        return A.Forall(self.universals, arrow) if self.universals else arrow


def check_call(env: PermEnv, sig: FnSignature, type_args, args) -> tuple[Var, PermEnv]:
    """Check a call of ``sig`` on the argument variables ``args``."""
    if len(args) != len(sig.params):
        raise CheckError("E-KIND", f"{sig.name} expects {len(sig.params)} argument(s), "
                         f"got {len(args)}")
    names = {p.binder: a for p, a in zip(sig.params, args) if p.binder is not None}
    params = [subst_names(p.type, names) for p in sig.params]
    ret = subst_names(sig.ret, names)

    if sig.universals:
        if type_args is not None:
            if len(type_args) != len(sig.universals):
                raise CheckError("E-INSTANTIATE", f"{sig.name} expects {len(sig.universals)} "
                                 f"type argument(s), got {len(type_args)}")
            sub = dict(zip(sig.universals, type_args))
        else:
            flex = frozenset(sig.universals)
            sub: dict = {}
            for pt, a in zip(params, args):
                match_var(env, pt, a, flex, sub)
            missing = [v for v in sig.universals if v not in sub]
            if missing:
                raise CheckError("E-INSTANTIATE", f"cannot infer type argument(s) "
                                 f"{', '.join(missing)} of {sig.name}; pass them explicitly "
                                 f"as {sig.name} [...] (...)")
        params = [subst_tvars(pt, sub) for pt in params]
        ret = subst_tvars(ret, sub)
    elif type_args:
        raise CheckError("E-INSTANTIATE", f"{sig.name} takes no type arguments")

    for i, (pt, a) in enumerate(zip(params, args)):
        try:
            env = subtract(env, a, pt)
        except SubtractFailure as f:
            raise CheckError("E-SUBTRACT", f"argument {i + 1} of {sig.name}: {f.describe()}",
                             trace=f.goals) from None
    for p, pt, a in zip(sig.params, params, args):
        if not p.consumed:
            env = add_permission(env, a, pt)
    r = Var.fresh("ret")
    return r, add_permission(env, r, ret)


@dataclass
class CheckReport:
    diagnostics: list = field(default_factory=list)
    dumps: dict = field(default_factory=dict)  # line -> rendered environment

    @property
    def errors(self) -> list:
        return [d for d in self.diagnostics if d.is_error]

    @property
    def ok(self) -> bool:
        return not self.errors


class Checker:
    def __init__(self, program: A.Program, file: str = "<input>", dump_lines=()):
        self.program = program
        self.file = file
        self.dump_lines = set(dump_lines)
        self.report = CheckReport()
        self.ctx = TypeContext.from_program(program)
        self.globals: dict[str, Var] = {}
        self.global_env = empty_env(self.ctx)
        self.restricted: set = set()

    # -- reporting ---------------------------------------------------------

    def diag(self, code, message, loc, trace=()):
        loc = loc or A.NOLOC
        self.report.diagnostics.append(
            Diagnostic(self.file, loc.line, loc.col, code, message, tuple(trace)))

    def hook(self, env, e):
        line = getattr(e, "loc", A.NOLOC).line
        if line in self.dump_lines and line not in self.report.dumps:
            self.report.dumps[line] = render(env)

    def dead(self, env, loc):
        if not env.dead_reported:
            self.diag("W-DEADCODE", "unreachable code: the permissions available here "
                      "are inconsistent", loc)
        return replace(env, dead_reported=True)

    # -- program level -----------------------------------------------------

    def check_program(self) -> CheckReport:
        for err in check_data_decls(self.program.data_decls()):
            self.diag("E-KIND", err.message, err.loc)
        for name, t in PRELUDE.items():
            self.declare(name, t)
        seen = set(PRELUDE)
        for group in self.program.declarations:
            if not isinstance(group, A.ValGroup):
                continue
            fns = []
            for v in group.defs:
                if v.name in seen:
                    self.diag("E-KIND", f"{v.name} is already defined", v.loc)
                seen.add(v.name)
                if v.is_function and self.check_signature(v):
                    fns.append(v)
            if group.is_rec:
                for v in fns:
                    self.declare(v.name, v.signature_type())
            for v in group.defs:
                if not v.is_function:
                    self.check_value(v)
                elif v in fns:
                    self.check_function(v)
            if not group.is_rec:
                for v in fns:
                    self.declare(v.name, v.signature_type())
        return self.report

    def declare(self, name, t):
        v = Var.fresh(name)
        self.global_env = add_permission(self.global_env, v, t)
        self.globals[name] = v

    def check_signature(self, v: A.ValDef) -> bool:
        ctx = self.ctx.with_tvars(v.tparams)
        binders = [p.binder for p in v.params]
        ok = True
        if len(set(binders)) != len(binders):
            self.diag("E-KIND", f"duplicate parameter name in {v.name}", v.loc)
            ok = False
        for t in [p.type for p in v.params] + [v.ret]:
            for err in kind_check(ctx, t, frozenset(binders), v.loc):
                self.diag("E-KIND", f"in the signature of {v.name}: {err.message}", v.loc)
                ok = False
        return ok

    def check_value(self, v: A.ValDef):
        self.restricted = set()
        try:
            r, env = self.check_expr(self.global_env, dict(self.globals), v.body)
        except CheckError as err:
            self.diag(err.code, err.message, err.loc or v.loc, err.trace)
            return
        u = Var.fresh(v.name, user=True)
        self.global_env = replace(add_equality(env, u, r), dead_reported=False)
        self.globals[v.name] = u

    def check_function(self, v: A.ValDef):
        g = self.global_env
        ctx = self.ctx.with_tvars(v.tparams)
        self.restricted = {x for x in self.globals.values()
                           if any(not g.is_dup(a.type) for a in g.atoms_on(x))}
        env = PermEnv(ctx, dict(g.eqs), tuple(a for a in g.atoms if g.is_dup(a.type)))
        pvars = {p.binder: Var.fresh(p.binder, user=True) for p in v.params}
        env = canonicalize(replace(env, atoms=env.atoms + tuple(
            Atom(pvars[p.binder], subst_names(p.type, pvars)) for p in v.params)))
        scope = dict(self.globals)
        scope.update(pvars)
        obligation = (subst_names(v.ret, pvars),
                      [(pvars[p.binder], subst_names(p.type, pvars))
                       for p in v.params if not p.consumed])
        try:
            self.check_tail(env, scope, v.body, obligation)
        except CheckError as err:
            self.diag(err.code, err.message, err.loc or v.loc, err.trace)

    # -- tails and return obligations ------------------------------------

    def check_tail(self, env, scope, e, obligation):
        """Check ``e`` in tail position: each path to a result discharges
        the return obligation on its own."""
        self.hook(env, e)
        if env.inconsistent:
            self.dead(env, e.loc)
            return
        match e:
            case A.Let(pat, rhs, body):
                x, env = self.check_expr(env, scope, rhs)
                env, scope = self.bind(env, scope, pat, x, e.loc)
                self.check_tail(env, scope, body, obligation)
            case A.Seq(first, second):
                _, env = self.check_expr(env, scope, first)
                self.check_tail(env, scope, second, obligation)
            case A.If(cond, then, orelse):
                env = self.check_cond(env, scope, cond)
                for arm in (then, orelse):
                    self.guarded(self.check_tail, env, scope, arm, obligation)
            case A.Match(scrut, _):
                x, env = self.check_expr(env, scope, scrut)
                for b, benv in self.refine_branches(env, x, e):
                    if benv is not None:
                        self.guarded(self.check_tail, benv, scope, b.body, obligation)
            case A.TupleExpr(items) if items and len(items) == len(_tuple_items(obligation[0])):
                # one goal per component, so a failure points at its component
                vs = []
                for item in items:
                    x, env = self.check_expr(env, scope, item)
                    vs.append(x)
                ret, params = obligation
                goals = [(x, t, item.loc) for x, t, item
                         in zip(vs, _tuple_items(ret), items)]
                goals += [(x, t, e.loc) for x, t in _extra_goals(ret, params)]
                self.discharge(env, goals, e.loc)
            case _:
                r, env = self.check_expr(env, scope, e)
                ret, params = obligation
                goals = [(r, ret.type if isinstance(ret, A.Bar) else ret, e.loc)]
                goals += [(x, t, e.loc) for x, t in _extra_goals(ret, params)]
                self.discharge(env, goals, e.loc)

    def guarded(self, fn, *args):
        try:
            fn(*args)
        except CheckError as err:
            self.diag(err.code, err.message, err.loc, err.trace)

    def discharge(self, env, goals, loc):
        """Subtract every goal, reporting all failures in one E-RETURN placed
        at the first failing goal."""
        failures = []
        for x, t, where in goals:
            try:
                env = subtract(env, x, t)
            except SubtractFailure as f:
                failures.append((f, where))
        if failures:
            why = "; ".join(f.describe() for f, _ in failures)
            self.diag("E-RETURN", f"cannot satisfy the return obligation: {why}",
                      failures[0][1], [g for f, _ in failures for g in f.goals])

    # -- expressions -------------------------------------------------------

    def check_expr(self, env: PermEnv, scope: dict, e) -> tuple[Var, PermEnv]:
        self.hook(env, e)
        if env.inconsistent:
            return Var.fresh("dead"), self.dead(env, e.loc)
        try:
            return self._expr(env, scope, e)
        except CheckError as err:
            if err.loc is None:
                err.loc = e.loc
            raise

    def _expr(self, env, scope, e):
        match e:
            case A.EVar():
                return self.lookup(scope, e), env
            case A.IntLit():
                v = Var.fresh("n")
                return v, env.add(v, A.INT)
            case A.StrLit():
                v = Var.fresh("s")
                return v, env.add(v, A.STRING)
            case A.TupleExpr(items):
                vs = []
                for item in items:
                    x, env = self.check_expr(env, scope, item)
                    vs.append(x)
                v = Var.fresh("tup" if items else "unit")
                return v, env.add(v, A.Tuple(tuple(A.Singleton(x) for x in vs)))
            case A.Let(pat, rhs, body):
                x, env = self.check_expr(env, scope, rhs)
                env, scope = self.bind(env, scope, pat, x, e.loc)
                return self.check_expr(env, scope, body)
            case A.Seq(first, second):
                _, env = self.check_expr(env, scope, first)
                return self.check_expr(env, scope, second)
            case A.If(cond, then, orelse):
                env = self.check_cond(env, scope, cond)
                res = Var.fresh("res")
                outs = [self.arm(env, scope, arm, res) for arm in (then, orelse)]
                return res, self.join(env, scope, res, outs)
            case A.Match(scrut, _):
                x, env = self.check_expr(env, scope, scrut)
                res = Var.fresh("res")
                outs = [None if benv is None else self.arm(benv, scope, b.body, res)
                        for b, benv in self.refine_branches(env, x, e)]
                return res, self.join(env, scope, res, outs)
            case A.Compare(_, left, right):
                a, env = self.check_expr(env, scope, left)
                b, env = self.check_expr(env, scope, right)
                env = self.require(env, a, A.INT, "left operand of comparison")
                env = self.require(env, b, A.INT, "right operand of comparison")
                v = Var.fresh("n")
                return v, env.add(v, A.INT)
            case A.FieldRead(obj, f):
                x, env = self.check_expr(env, scope, obj)
                return field_target(env, x, f), env
            case A.FieldWrite(obj, f, rhs):
                x, env = self.check_expr(env, scope, obj)
                y, env = self.check_expr(env, scope, rhs)
                env = check_field_write(env, x, f, y)
                v = Var.fresh("unit")
                return v, env.add(v, A.Tuple(()))
            case A.Call(callee, targs, args):
                fn = self.lookup(scope, callee)
                vs = []
                for a in args:
                    x, env = self.check_expr(env, scope, a)
                    vs.append(x)
                sig = self.signature_of(env, fn, callee.name)
                return check_call(env, sig, targs, vs)
            case A.CtorAlloc(ctor, fields):
                return self.alloc(env, scope, ctor, fields)
        raise CheckError("E-KIND", f"unsupported expression {e!r}")

    def arm(self, env, scope, body, res):
        r, env = self.check_expr(env, scope, body)
        return add_equality(env, res, r)

    def lookup(self, scope, e: A.EVar) -> Var:
        v = scope.get(e.name)
        if v is None:
            raise CheckError("E-KIND", f"unbound variable {e.name}", e.loc)
        if v in self.restricted:
            raise CheckError("E-MODE", f"global {e.name} is not duplicable and cannot be "
                             f"used inside a function", e.loc)
        return v

    def signature_of(self, env, fn, name) -> FnSignature:
        for a in env.atoms_on(fn):
            sig = FnSignature.of_type(name, a.type)
            if sig is not None:
                return sig
        raise CheckError("E-KIND", f"{name} is not known to be a function")

    def require(self, env, x, t, what):
        try:
            return subtract(env, x, t)
        except SubtractFailure as f:
            raise CheckError("E-SUBTRACT", f"{what}: {f.describe()}", trace=f.goals) from None

    def check_cond(self, env, scope, cond):
        c, env = self.check_expr(env, scope, cond)
        return self.require(env, c, A.INT, "condition")

    def alloc(self, env, scope, ctor, fields):
        d, b = self.ctx.ctor_decl(ctor)
        if d is None:
            raise CheckError("E-KIND", f"unknown constructor {ctor}")
        given = [f for f, _ in fields]
        declared = [f for f, _ in b.fields]
        if sorted(given) != sorted(declared):
            raise CheckError("E-KIND", f"constructor {ctor} takes fields "
                             f"{{{'; '.join(declared)}}}, got {{{'; '.join(given)}}}")
        out = []
        for f, x in fields:
            v, env = self.check_expr(env, scope, x)
            out.append((f, A.Singleton(v)))
        v = Var.fresh(ctor.lower())
        return v, env.add(v, A.Structural(ctor, tuple(out)))

    def bind(self, env, scope, pat, x, loc):
        match pat:
            case A.PVar(n):
                u = Var.fresh(n, user=True)
                return add_equality(env, u, x), {**scope, n: u}
            case A.PTuple(names):
                agg = env.aggregate_on(x)
                if not isinstance(getattr(agg, "type", None), A.Tuple) \
                        or len(agg.type.items) != len(names):
                    name = namer(env, [x])
                    raise CheckError("E-SUBTRACT", f"cannot destructure {name(x)} into "
                                     f"{len(names)} components: no such tuple permission", loc)
                scope = dict(scope)
                for n, item in zip(names, agg.type.items):
                    u = Var.fresh(n, user=True)
                    env = add_equality(env, u, item.var)
                    scope[n] = u
                return env, scope
        raise CheckError("E-KIND", f"bad pattern {pat!r}", loc)

    def refine_branches(self, env, x, e: A.Match):
        agg = env.aggregate_on(x)
        if agg is not None and isinstance(agg.type, A.Structural):
            required = {agg.type.ctor}
        else:
            required = set()
            for a in env.atoms_on(x):
                if isinstance(a.type, A.Nominal) and a.type.name in self.ctx.decls:
                    required = {b.name for b in self.ctx.decls[a.type.name].branches}
                    break
        out, seen = [], set()
        for b in e.branches:
            if b.ctor in seen:
                raise CheckError("E-KIND", f"duplicate branch {b.ctor}", b.loc)
            seen.add(b.ctor)
            try:
                benv = refine_match(env, x, b.ctor)
            except CheckError as err:
                err.loc = err.loc or b.loc
                raise
            if benv is None:
                self.diag("W-DEADCODE", f"branch {b.ctor} can never be taken", b.loc)
            out.append((b, benv))
        missing = sorted(required - seen)
        if missing:
            raise CheckError("E-KIND", f"non-exhaustive match: missing "
                             f"{', '.join(missing)}", e.loc)
        return out

    def join(self, pre, scope, res, outs):
        roots = [res] + sorted(set(scope.values()))
        hints = {}
        for v in roots[1:]:
            noms = [a.type for a in pre.atoms_on(v) if isinstance(a.type, A.Nominal)]
            if noms:
                hints[v] = noms
        merged = merge_branches(outs, roots, hints)
        return replace(merged, dead_reported=False)


def check_program(program: A.Program, file: str = "<input>", dump_lines=()) -> CheckReport:
    return Checker(program, file, dump_lines).check_program()


def _tuple_items(ret) -> tuple:
    if isinstance(ret, A.Bar):
        ret = ret.type
    return ret.items if isinstance(ret, A.Tuple) else ()


def _extra_goals(ret, params) -> list:
    """Goals of a return obligation beyond the result value itself."""
    return (list(ret.perms) if isinstance(ret, A.Bar) else []) + list(params)
