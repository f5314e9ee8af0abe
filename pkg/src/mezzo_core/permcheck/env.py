"""Permission environments.

A ``PermEnv`` is an immutable conjunction of atomic permissions ``x @ t``
together with equality classes of variables and an inconsistency flag.
Environments are kept *canonical*:

* atom subjects and singleton references use the class representative,
  which is always the oldest variable of the class;
* structural and tuple atoms are fully expanded, every field being a
  singleton ``=f`` with the field's real type held as a separate atom on
  ``f``;
* ``x @ =y`` atoms are turned into equalities, bar types are split;
* duplicable atoms are stored once;
* two exclusive atoms on one subject, or two structural atoms with
  different constructors, make the environment inconsistent.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field, replace

from ..syntax import ast as A
from ..syntax.pretty import show_type
from ..typesys import DUPLICABLE, EXCLUSIVE, TypeContext, infer_mode, subst_tvars

_ids = itertools.count(1)


@dataclass(frozen=True, order=True)
class Var:
    """A program or checker-introduced variable; identity is the id."""

    id: int
    name: str = field(compare=False)
    user: bool = field(default=False, compare=False)

    @classmethod
    def fresh(cls, hint: str, user: bool = False) -> "Var":
        return cls(next(_ids), hint, user)

    def __str__(self):
        return self.name

    def __repr__(self):
        return f"{self.name}#{self.id}"


@dataclass(frozen=True)
class Atom:
    subject: Var
    type: object

    def __str__(self):
        return f"{self.subject} @ {show_type(self.type)}"


def is_aggregate(t) -> bool:
    return isinstance(t, (A.Structural, A.Tuple))


def fields_of(t):
    """(label, type) pairs of a structural or tuple type."""
    if isinstance(t, A.Structural):
        return t.fields
    return tuple((str(i), x) for i, x in enumerate(t.items))


def with_fields(t, fields):
    if isinstance(t, A.Structural):
        return A.Structural(t.ctor, tuple(fields))
    return A.Tuple(tuple(ft for _, ft in fields))


def same_shape(t, u) -> bool:
    if isinstance(t, A.Structural) and isinstance(u, A.Structural):
        return t.ctor == u.ctor and len(t.fields) == len(u.fields)
    if isinstance(t, A.Tuple) and isinstance(u, A.Tuple):
        return len(t.items) == len(u.items)
    return False


# ---------------------------------------------------------------------------
# name-level type transformations


def rename(t, f):
    """Apply ``f`` to every variable occurring in ``t`` (singletons and
    permission subjects). Arrow binder names are left alone."""
    match t:
        case A.Singleton(v):
            return A.Singleton(f(v))
        case A.Nominal(n, args):
            return A.Nominal(n, tuple(rename(a, f) for a in args)) if args else t
        case A.Tuple(items):
            return A.Tuple(tuple(rename(i, f) for i in items))
        case A.Structural(c, fields):
            return A.Structural(c, tuple((k, rename(ft, f)) for k, ft in fields))
        case A.Bar(inner, perms):
            return A.Bar(rename(inner, f), tuple((f(x), rename(pt, f)) for x, pt in perms))
        case A.Arrow(params, ret):
            return A.Arrow(tuple(A.Param(p.binder, p.consumed, rename(p.type, f))
                                 for p in params), rename(ret, f))
        case A.Forall(vs, body):
            return A.Forall(vs, rename(body, f))
    return t


def subst_names(t, names: dict):
    """Replace binder names by ``names[binder]``, respecting shadowing by
    nested arrow binders."""
    if not names:
        return t
    match t:
        case A.Singleton(v):
            return A.Singleton(names.get(v, v)) if isinstance(v, str) else t
        case A.Nominal(n, args):
            return A.Nominal(n, tuple(subst_names(a, names) for a in args)) if args else t
        case A.Tuple(items):
            return A.Tuple(tuple(subst_names(i, names) for i in items))
        case A.Structural(c, fields):
            return A.Structural(c, tuple((k, subst_names(ft, names)) for k, ft in fields))
        case A.Bar(inner, perms):
            return A.Bar(subst_names(inner, names),
                         tuple((names.get(x, x) if isinstance(x, str) else x,
                                subst_names(pt, names)) for x, pt in perms))
        case A.Arrow(params, ret):
            bound = {p.binder for p in params if p.binder is not None}
            inner = {k: v for k, v in names.items() if k not in bound}
            return A.Arrow(tuple(A.Param(p.binder, p.consumed, subst_names(p.type, inner))
                                 for p in params), subst_names(ret, inner))
        case A.Forall(vs, body):
            return A.Forall(vs, subst_names(body, names))
    return t


def alpha_normal(t):
    """Rename arrow binders and quantified variables positionally so that
    alpha-equivalent types compare equal."""
    match t:
        case A.Arrow(params, ret):
            names = {p.binder: f"%{i}" for i, p in enumerate(params) if p.binder is not None}
            ps = tuple(A.Param(names.get(p.binder), p.consumed,
                               alpha_normal(subst_names(p.type, names))) for p in params)
            return A.Arrow(ps, alpha_normal(subst_names(ret, names)))
        case A.Forall(vs, body):
            sub = {v: A.TVar(f"%t{i}") for i, v in enumerate(vs)}
            return A.Forall(tuple(f"%t{i}" for i in range(len(vs))),
                            alpha_normal(subst_tvars(body, sub)))
        case A.Nominal(n, args):
            return A.Nominal(n, tuple(alpha_normal(a) for a in args)) if args else t
        case A.Tuple(items):
            return A.Tuple(tuple(alpha_normal(i) for i in items))
        case A.Structural(c, fields):
            return A.Structural(c, tuple((k, alpha_normal(ft)) for k, ft in fields))
        case A.Bar(inner, perms):
            return A.Bar(alpha_normal(inner), tuple((x, alpha_normal(pt)) for x, pt in perms))
    return t


def free_vars(t) -> list:
    out = []
    rename(t, lambda v: out.append(v) or v)
    return [v for v in out if isinstance(v, Var)]


# ---------------------------------------------------------------------------
# environments


@dataclass(frozen=True)
class PermEnv:
    ctx: TypeContext = field(default_factory=TypeContext, compare=False, repr=False)
    eqs: dict = field(default_factory=dict)  # non-canonical var -> canonical
    atoms: tuple = ()
    inconsistent: bool = False
    dead_reported: bool = field(default=False, compare=False, repr=False)

    def find(self, v):
        return self.eqs.get(v, v)

    def same(self, a, b) -> bool:
        return self.find(a) == self.find(b)

    def atoms_on(self, x) -> list[Atom]:
        x = self.find(x)
        return [a for a in self.atoms if a.subject == x]

    def aggregate_on(self, x):
        for a in self.atoms_on(x):
            if is_aggregate(a.type):
                return a
        return None

    def members(self, x) -> list[Var]:
        c = self.find(x)
        return sorted({c} | {k for k, v in self.eqs.items() if v == c})

    def variables(self) -> set:
        vs = set(self.eqs) | set(self.eqs.values())
        for a in self.atoms:
            vs.add(a.subject)
            vs.update(free_vars(a.type))
        return vs

    def canonical_vars(self) -> list[Var]:
        return sorted({self.find(v) for v in self.variables()})

    def mode(self, t):
        return infer_mode(self.ctx, t)

    def is_dup(self, t) -> bool:
        return infer_mode(self.ctx, t) is DUPLICABLE

    def same_type(self, t, u) -> bool:
        return alpha_normal(rename(t, self.find)) == alpha_normal(rename(u, self.find))

    def without(self, atom: Atom) -> "PermEnv":
        """Drop one copy of ``atom`` unless it is duplicable."""
        if self.is_dup(atom.type):
            return self
        atoms = list(self.atoms)
        atoms.remove(atom)
        return replace(self, atoms=tuple(atoms))

    def add(self, x, t) -> "PermEnv":
        return add_permission(self, x, t)

    def mark_inconsistent(self) -> "PermEnv":
        return replace(self, inconsistent=True)

    def __str__(self):
        return render(self)


def empty_env(ctx: TypeContext | None = None) -> PermEnv:
    return PermEnv(ctx if ctx is not None else TypeContext())


def add_permission(env: PermEnv, x, t) -> PermEnv:
    if env.inconsistent:
        return env
    return canonicalize(replace(env, atoms=env.atoms + (Atom(x, t),)))


def add_equality(env: PermEnv, x, y) -> PermEnv:
    return add_permission(env, x, A.Singleton(y))


def _field_hint(parent: Var, label: str) -> str:
    if label.isdigit():
        return f"{parent.name}{label}"
    return label[0]


def _declared_order(ctx: TypeContext, t):
    if not isinstance(t, A.Structural):
        return t
    _, decl = ctx.ctor_decl(t.ctor)
    if decl is None:
        return t
    order = {f: i for i, (f, _) in enumerate(decl.fields)}
    return A.Structural(t.ctor, tuple(sorted(t.fields, key=lambda p: order.get(p[0], len(order)))))


def canonicalize(env: PermEnv) -> PermEnv:
    if env.inconsistent:
        return env
    ctx = env.ctx
    eqs = dict(env.eqs)

    def find(v):
        return eqs.get(v, v)

    def union(a, b) -> bool:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        win, lose = min(ra, rb), max(ra, rb)
        for k, v in list(eqs.items()):
            if v == lose:
                eqs[k] = win
        eqs[lose] = win
        return True

    # Flatten: singletons to equalities, bars split, aggregates expanded.
    work = deque(env.atoms)
    flat: list[Atom] = []
    while work:
        a = work.popleft()
        t = a.type
        if isinstance(t, A.Singleton):
            union(a.subject, t.var)
        elif isinstance(t, A.Bar):
            work.append(Atom(a.subject, t.type))
            work.extend(Atom(p, pt) for p, pt in t.perms)
        elif is_aggregate(t):
            t = _declared_order(ctx, t)
            new_fields = []
            for label, ft in fields_of(t):
                if isinstance(ft, A.Singleton):
                    new_fields.append((label, ft))
                else:
                    v = Var.fresh(_field_hint(a.subject, label))
                    work.append(Atom(v, ft))
                    new_fields.append((label, A.Singleton(v)))
            flat.append(Atom(a.subject, with_fields(t, new_fields)))
        else:
            flat.append(a)

    # Rewrite onto representatives, merge aggregates, detect collisions;
    # merging may create new equalities, hence the loop.
    atoms = flat
    while True:
        atoms = [Atom(find(a.subject), rename(a.type, find)) for a in atoms]
        changed = False
        groups = defaultdict(list)
        for i, a in enumerate(atoms):
            groups[a.subject].append(i)
        drop = set()
        for subject, idxs in groups.items():
            aggs = [i for i in idxs if is_aggregate(atoms[i].type)]
            for i in aggs[1:]:
                first, other = atoms[aggs[0]].type, atoms[i].type
                if not same_shape(first, other):
                    return replace(env, eqs=eqs, atoms=tuple(atoms), inconsistent=True)
                if isinstance(first, A.Structural) and ctx.is_mutable_ctor(first.ctor):
                    return replace(env, eqs=eqs, atoms=tuple(atoms), inconsistent=True)
                for (_, f1), (_, f2) in zip(fields_of(first), fields_of(other)):
                    changed |= union(f1.var, f2.var)
                drop.add(i)
            exclusive = [i for i in idxs if i not in drop
                         and infer_mode(ctx, atoms[i].type) is EXCLUSIVE]
            if len(exclusive) >= 2:
                return replace(env, eqs=eqs, atoms=tuple(atoms), inconsistent=True)
        atoms = [a for i, a in enumerate(atoms) if i not in drop]
        if not changed:
            break

    out: list[Atom] = []
    seen_dup = set()
    for a in atoms:
        if infer_mode(ctx, a.type) is DUPLICABLE:
            key = (a.subject, alpha_normal(a.type))
            if key in seen_dup:
                continue
            seen_dup.add(key)
        out.append(a)
    return replace(env, eqs=eqs, atoms=tuple(out))


# ---------------------------------------------------------------------------
# display


def display_names(env: PermEnv, extra=()) -> dict:
    """Map every canonical variable to a unique human-readable name.

    A class is named after its oldest user-bound member when it has one;
    clashes are resolved with primes in order of age."""
    classes = sorted({env.find(v) for v in itertools.chain(env.variables(), extra)})
    base = {}
    for c in classes:
        users = [m for m in env.members(c) if m.user]
        base[c] = users[0].name if users else c.name
    counts = Counter()
    names = {}
    for c in classes:
        b = base[c]
        k = counts[b]
        counts[b] += 1
        names[c] = b if k == 0 else b + ("'" * k if k <= 2 else f"'{k}")
    return names


def namer(env: PermEnv, extra=()):
    names = display_names(env, extra)

    def name(v):
        if isinstance(v, Var):
            c = env.find(v)
            return names.get(c, c.name)
        return str(v)

    return name


def render(env: PermEnv, sugar: bool = True) -> str:
    """Print ``env`` in the ``x @ t * y @ u`` notation.

    With ``sugar``, a checker-introduced variable that holds exactly one
    permission and is referenced exactly once is printed inline in place of
    its singleton, and unreferenced checker variables holding only
    duplicable facts are omitted."""
    name = namer(env)
    atoms = sorted(enumerate(env.atoms), key=lambda p: (p[1].subject, p[0]))
    atoms = [a for _, a in atoms]
    user_class = {env.find(v) for v in env.variables() if isinstance(v, Var) and v.user}

    refs = Counter()
    referrer = {}
    for a in atoms:
        for v in free_vars(a.type):
            c = env.find(v)
            refs[c] += 1
            referrer[c] = a.subject
    by_subject = defaultdict(list)
    for a in atoms:
        by_subject[a.subject].append(a)

    inline = {}
    hidden = set()
    if sugar:
        for c, group in by_subject.items():
            if c in user_class:
                continue
            if refs[c] == 1 and len(group) == 1 and referrer[c] != c:
                inline[c] = group[0].type
            elif refs[c] == 0 and all(env.is_dup(a.type) for a in group):
                hidden.add(c)

    def expand(t, depth=0):
        if depth > 16:
            return t
        match t:
            case A.Singleton(v) if env.find(v) in inline:
                return expand(inline[env.find(v)], depth + 1)
            case A.Structural(c, fields):
                return A.Structural(c, tuple((f, expand(ft, depth)) for f, ft in fields))
            case A.Tuple(items):
                return A.Tuple(tuple(expand(i, depth) for i in items))
        return t

    parts = []
    for a in atoms:
        if a.subject in inline or a.subject in hidden:
            continue
        parts.append(f"{name(a.subject)} @ {show_type(expand(a.type), name)}")
    for c in sorted({env.find(v) for v in env.variables()}):
        users = [m for m in env.members(c) if m.user]
        for m in users[1:]:
            parts.append(f"{m.name} = {name(c)}")
    text = " * ".join(parts) if parts else "empty"
    if env.inconsistent:
        text = "inconsistent: " + text
    return text
