"""Permission subtraction and the operations built directly on it."""

from __future__ import annotations

from dataclasses import replace

from ..syntax import ast as A
from ..syntax.pretty import show_type
from .env import (Atom, PermEnv, canonicalize, fields_of, is_aggregate, namer,
                  rename)


class CheckError(Exception):
    """A type error; ``code`` is one of the E-* diagnostic codes."""

    def __init__(self, code: str, message: str, loc: A.Loc | None = None, trace=()):
        super().__init__(message)
        self.code = code
        self.message = message
        self.loc = loc
        self.trace = tuple(trace)


class SubtractFailure(Exception):
    """Raised when a permission cannot be extracted from an environment.

    ``goals`` is the chain of sub-goals leading to the one that failed, each
    already rendered with the display names of the environment at the point
    of failure."""

    def __init__(self, env: PermEnv, var, wanted, goals):
        name = namer(env, [var])
        self.var = var
        self.wanted = wanted
        self.subject = name(var)
        self.goal = f"{self.subject} @ {show_type(wanted, name)}"
        self.available = [show_type(a.type, name) for a in env.atoms_on(var)]
        self.goals = [f"{name(x)} @ {show_type(t, name)}" for x, t in goals]
        super().__init__(self.describe())

    def describe(self) -> str:
        if self.available:
            have = "; available: " + ", ".join(f"{self.subject} @ {t}"
                                               for t in self.available)
        else:
            have = " (no permission available)"
        return f"could not obtain {self.goal}{have}"


def subtract(env: PermEnv, x, t) -> PermEnv:
    """Extract ``x @ t`` from ``env``; return what is left.

    Duplicable atoms used by the proof are kept. Raises SubtractFailure."""
    if env.inconsistent:
        return env
    return _sub(env, x, t, ())


def _fail(env, x, t, trail):
    raise SubtractFailure(env, x, t, trail)


def _sub(env: PermEnv, x, t, trail) -> PermEnv:
    x = env.find(x)
    goal = (x, t)
    key = (x, rename(t, env.find))
    if any((y, rename(u, env.find)) == key for y, u in trail):
        _fail(env, x, t, trail + (goal,))
    trail = trail + (goal,)

    if isinstance(t, A.Singleton):
        if env.find(t.var) == x:
            return env
        _fail(env, x, t, trail)
    if isinstance(t, A.Bar):
        env = _sub(env, x, t.type, trail)
        for p, pt in t.perms:
            env = _sub(env, p, pt, trail)
        return env

    if not is_aggregate(t):
        for a in env.atoms_on(x):
            if env.same_type(a.type, t):
                return env.without(a)

    agg = env.aggregate_on(x)
    if isinstance(t, A.Nominal) and agg is not None and isinstance(agg.type, A.Structural):
        fields = env.ctx.unfold(t.name, t.args, agg.type.ctor)
        if fields is not None:
            return _fold_fields(env, agg, fields, trail)
    elif isinstance(t, A.Structural) and agg is not None and isinstance(agg.type, A.Structural):
        if agg.type.ctor == t.ctor:
            return _fold_fields(env, agg, t.fields, trail)
    elif isinstance(t, A.Tuple) and agg is not None and isinstance(agg.type, A.Tuple):
        if len(agg.type.items) == len(t.items):
            return _fold_fields(env, agg, fields_of(t), trail)
    _fail(env, x, t, trail)


def _fold_fields(env: PermEnv, agg: Atom, wanted, trail) -> PermEnv:
    have = dict(fields_of(agg.type))
    for label, ft in wanted:
        target = have.get(label)
        if target is None:
            _fail(env, agg.subject, A.Structural(label, ()), trail)
        env = _sub(env, target.var, ft, trail)
    if agg in env.atoms:
        return env.without(agg)
    if env.is_dup(agg.type):
        return env
    # the aggregate itself was consumed while proving one of its fields
    _fail(env, agg.subject, agg.type, trail)


# ---------------------------------------------------------------------------
# refinement and field updates


def refine_match(env: PermEnv, x, ctor: str):
    """Trade the permission on ``x`` for the branch ``ctor`` of its type.

    Returns None when the branch is unreachable (``x`` is already known to
    have another constructor)."""
    if env.inconsistent:
        return env
    x = env.find(x)
    agg = env.aggregate_on(x)
    if agg is not None and isinstance(agg.type, A.Structural):
        return env if agg.type.ctor == ctor else None
    name = namer(env)
    nominals = [a for a in env.atoms_on(x) if isinstance(a.type, A.Nominal)]
    for a in nominals:
        fields = env.ctx.unfold(a.type.name, a.type.args, ctor)
        if fields is not None:
            atoms = list(env.atoms)
            atoms.remove(a)
            atoms.append(Atom(x, A.Structural(ctor, fields)))
            return canonicalize(replace(env, atoms=tuple(atoms)))
    if nominals:
        raise CheckError("E-KIND", f"constructor {ctor} is not a branch of "
                         f"{show_type(nominals[0].type, name)}")
    raise CheckError("E-SUBTRACT", f"no permission to match on {name(x)}")


def check_field_write(env: PermEnv, x, field: str, y) -> PermEnv:
    if env.inconsistent:
        return env
    x = env.find(x)
    name = namer(env)
    agg = env.aggregate_on(x)
    if agg is None:
        held = ", ".join(show_type(a.type, name) for a in env.atoms_on(x)) or "nothing"
        raise CheckError("E-SUBTRACT", f"cannot write {name(x)}.{field}: no structural "
                         f"permission for {name(x)} (holding {held}); match on it first")
    if isinstance(agg.type, A.Tuple):
        raise CheckError("E-IMMUT-WRITE", f"cannot write {name(x)}.{field}: tuples are immutable")
    if not env.ctx.is_mutable_ctor(agg.type.ctor):
        raise CheckError("E-IMMUT-WRITE", f"cannot write {name(x)}.{field}: "
                         f"constructor {agg.type.ctor} belongs to an immutable type")
    if agg.type.field_type(field) is None:
        raise CheckError("E-KIND", f"constructor {agg.type.ctor} has no field {field}")
    fields = tuple((f, A.Singleton(env.find(y)) if f == field else ft)
                   for f, ft in agg.type.fields)
    atoms = list(env.atoms)
    atoms[atoms.index(agg)] = Atom(x, A.Structural(agg.type.ctor, fields))
    return canonicalize(replace(env, atoms=tuple(atoms)))


def field_target(env: PermEnv, x, field: str):
    """Variable stored in ``x.field`` according to a structural atom."""
    x = env.find(x)
    name = namer(env)
    agg = env.aggregate_on(x)
    if agg is None or not isinstance(agg.type, A.Structural):
        held = ", ".join(show_type(a.type, name) for a in env.atoms_on(x)) or "nothing"
        raise CheckError("E-SUBTRACT", f"cannot read {name(x)}.{field}: no structural "
                         f"permission for {name(x)} (holding {held}); match on it first")
    ft = agg.type.field_type(field)
    if ft is None:
        raise CheckError("E-KIND", f"constructor {agg.type.ctor} has no field {field}")
    return ft.var


# ---------------------------------------------------------------------------
# first-order matching, used to instantiate quantifiers and to guess the
# nominal type a structural permission folds back into


def match_types(pattern, t, flex, sub: dict):
    match pattern:
        case A.TVar(n) if n in flex:
            sub.setdefault(n, t)
        case A.Nominal(n, args) if isinstance(t, A.Nominal) and t.name == n \
                and len(t.args) == len(args):
            for p, u in zip(args, t.args):
                match_types(p, u, flex, sub)
        case A.Tuple(items) if isinstance(t, A.Tuple) and len(t.items) == len(items):
            for p, u in zip(items, t.items):
                match_types(p, u, flex, sub)
        case A.Structural(c, fields) if isinstance(t, A.Structural) and t.ctor == c:
            for f, p in fields:
                u = t.field_type(f)
                if u is not None:
                    match_types(p, u, flex, sub)
        case A.Arrow(params, ret) if isinstance(t, A.Arrow) and len(t.params) == len(params):
            for p, u in zip(params, t.params):
                match_types(p.type, u.type, flex, sub)
            match_types(ret, t.ret, flex, sub)
        case A.Bar(inner, _):
            match_types(inner, t, flex, sub)


def match_var(env: PermEnv, pattern, x, flex, sub: dict, depth: int = 0):
    """Solve the flexible type variables of ``pattern`` against the
    permissions currently held for ``x``."""
    if depth > 8 or not (flex - sub.keys()):
        return
    x = env.find(x)
    atoms = env.atoms_on(x)
    match pattern:
        case A.TVar(n) if n in flex:
            if n in sub:
                return
            for a in atoms:
                if not is_aggregate(a.type):
                    sub[n] = a.type
                    return
            guess = infer_nominal(env, x, depth + 1)
            if guess is not None:
                sub[n] = guess
        case A.Nominal(name, args):
            for a in atoms:
                if isinstance(a.type, A.Nominal) and a.type.name == name:
                    match_types(pattern, a.type, flex, sub)
                    return
            agg = env.aggregate_on(x)
            if agg is not None and isinstance(agg.type, A.Structural):
                solved = _solve_decl_params(env, name, agg, depth)
                if solved is not None:
                    d = env.ctx.decls[name]
                    for p, arg in zip(d.params, args):
                        if p in solved:
                            match_types(arg, solved[p], flex, sub)
        case A.Structural() | A.Tuple():
            agg = env.aggregate_on(x)
            if agg is None:
                return
            have = dict(fields_of(agg.type))
            for label, ft in fields_of(pattern):
                target = have.get(label)
                if target is not None:
                    match_var(env, ft, target.var, flex, sub, depth + 1)
        case A.Bar(inner, _):
            match_var(env, inner, x, flex, sub, depth)
        case A.Arrow() | A.Forall():
            for a in atoms:
                match_types(pattern, a.type, flex, sub)


def _solve_decl_params(env: PermEnv, name: str, agg: Atom, depth: int):
    d = env.ctx.decls.get(name)
    if d is None:
        return None
    for b in d.branches:
        if b.name == agg.type.ctor:
            solved: dict = {}
            have = dict(agg.type.fields)
            for f, ft in b.fields:
                target = have.get(f)
                if target is not None:
                    match_var(env, ft, target.var, frozenset(d.params), solved, depth + 1)
            return solved
    return None


def infer_nominal(env: PermEnv, x, depth: int = 0):
    """Guess the nominal type that the structural permission on ``x`` would
    fold into, or None when some type parameter cannot be determined."""
    agg = env.aggregate_on(x)
    if agg is None or not isinstance(agg.type, A.Structural):
        return None
    d, _ = env.ctx.ctor_decl(agg.type.ctor)
    if d is None:
        return None
    solved = _solve_decl_params(env, d.name, agg, depth)
    if solved is None or any(p not in solved for p in d.params):
        return None
    return A.Nominal(d.name, tuple(solved[p] for p in d.params))
