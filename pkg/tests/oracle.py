"""Brute-force entailment for conjunctions of permissions.

Used only to cross-check the checker's subtraction. It shares no code with
the checker beyond the AST: aliasing, duplicability and proof search are
implemented again here, and the search tries every resource for every
sub-goal, backtracking through all derivations up to a depth bound.
"""

from __future__ import annotations

import itertools

from mezzo_core.syntax import ast as A

# Immutable test types whose duplicability follows their single parameter;
# worked out by hand for the declarations in TEST_DECLS.
DUP_IF_PARAM = {"list", "box"}

TEST_DECLS = """
data mutable mtree a =
  | Null
  | Node { left: mtree a; value: a; right: mtree a }

data list a =
  | Nil
  | Cons { head: a; tail: list a }

data box a =
  | Box { contents: a }
"""


class Shape:
    """A known block layout: constructor (None for tuples) and field labels."""

    def __init__(self, ctor, labels, mutable):
        self.ctor = ctor
        self.labels = tuple(labels)
        self.mutable = mutable

    def key(self):
        return (self.ctor, self.labels)


class Oracle:
    def __init__(self, program: A.Program):
        self.decls = {d.name: d for d in program.data_decls()}
        self.ctor_of = {b.name: d for d in self.decls.values() for b in d.branches}

    # -- duplicability, by hand -------------------------------------------

    def dup(self, t) -> bool:
        if isinstance(t, Shape):
            return not t.mutable
        match t:
            case A.IntT() | A.StringT() | A.Singleton() | A.Arrow():
                return True
            case A.TVar():
                return False
            case A.Tuple(items):
                return all(self.dup(i) for i in items)
            case A.Nominal(n, args):
                if self.decls[n].is_mutable:
                    return False
                assert n in DUP_IF_PARAM
                return self.dup(args[0])
            case A.Structural(c, fields):
                if self.ctor_of[c].is_mutable:
                    return False
                return all(self.dup(ft) for _, ft in fields)
        raise AssertionError(t)

    def exclusive(self, t) -> bool:
        if isinstance(t, Shape):
            return t.mutable
        return isinstance(t, A.Nominal) and self.decls[t.name].is_mutable

    # -- entailment --------------------------------------------------------

    def entails(self, atoms, x, goal, depth: int = 6) -> bool:
        parent: dict = {}

        def find(v):
            while v in parent:
                v = parent[v]
            return v

        def union(a, b):
            a, b = find(a), find(b)
            if a != b:
                parent[a] = b

        res = []  # (subject, type-or-Shape, children)
        work = list(atoms)
        counter = itertools.count()
        while work:
            s, t = work.pop(0)
            if isinstance(t, A.Singleton):
                union(s, t.var)
            elif isinstance(t, (A.Tuple, A.Structural)):
                if isinstance(t, A.Tuple):
                    fields = [(str(i), ft) for i, ft in enumerate(t.items)]
                    shape = Shape(None, [f for f, _ in fields], False)
                else:
                    fields = sorted(t.fields)
                    shape = Shape(t.ctor, [f for f, _ in fields],
                                  self.ctor_of[t.ctor].is_mutable)
                kids = []
                for label, ft in fields:
                    node = ("path", next(counter), label)
                    if isinstance(ft, A.Singleton):
                        union(node, ft.var)
                    else:
                        work.append((node, ft))
                    kids.append(node)
                res.append((s, shape, kids))
            else:
                res.append((s, t, None))

        # Two layouts known for one block must agree; immutable ones then
        # describe the very same fields.
        changed = True
        while changed:
            changed = False
            first = {}
            keep = []
            for r in res:
                s, t, kids = r
                if not isinstance(t, Shape):
                    keep.append(r)
                    continue
                c = find(s)
                if c not in first:
                    first[c] = r
                    keep.append(r)
                    continue
                t0, kids0 = first[c][1], first[c][2]
                if t0.key() != t.key() or t.mutable:
                    return True  # inconsistent: anything follows
                for a, b in zip(kids0, kids):
                    if find(a) != find(b):
                        union(a, b)
                        changed = True
            res = keep
        by_class = {}
        for s, t, _ in res:
            if self.exclusive(t):
                by_class[find(s)] = by_class.get(find(s), 0) + 1
        if any(n >= 2 for n in by_class.values()):
            return True

        def norm(t):
            match t:
                case A.Singleton(v):
                    return ("=", find(v))
                case A.Nominal(n, args):
                    return (n,) + tuple(norm(a) for a in args)
                case A.Tuple(items):
                    return ("tuple",) + tuple(norm(a) for a in items)
            return t

        def prove(avail, goals, d):
            if not goals:
                yield avail
                return
            (c, t), rest = goals[0], goals[1:]
            for after in prove_one(avail, c, t, d):
                yield from prove(after, rest, d)

        def prove_one(avail, c, t, d):
            if d == 0:
                return
            c = find(c)
            if isinstance(t, A.Singleton):
                if find(t.var) == c:
                    yield avail
                return
            for i, (s, rt, kids) in enumerate(avail):
                if find(s) != c:
                    continue
                rest = avail if self.dup(rt) else avail[:i] + avail[i + 1:]
                if not isinstance(rt, Shape):
                    if not isinstance(t, (A.Tuple, A.Structural)) and norm(rt) == norm(t):
                        yield rest
                    continue
                kid = dict(zip(rt.labels, kids))
                wanted = None
                if isinstance(t, A.Tuple) and rt.ctor is None \
                        and len(t.items) == len(kids):
                    wanted = [(str(j), ft) for j, ft in enumerate(t.items)]
                elif isinstance(t, A.Structural) and t.ctor == rt.ctor \
                        and sorted(f for f, _ in t.fields) == list(rt.labels):
                    wanted = list(t.fields)
                elif isinstance(t, A.Nominal) and rt.ctor is not None:
                    d_ = self.decls[t.name]
                    for b in d_.branches:
                        if b.name == rt.ctor:
                            sub = dict(zip(d_.params, t.args))
                            wanted = [(f, _subst(ft, sub)) for f, ft in b.fields]
                if wanted is None:
                    continue
                yield from prove(rest, [(kid[f], ft) for f, ft in wanted], d - 1)

        return next(prove(res, [(x, goal)], depth), None) is not None


def _subst(t, sub):
    match t:
        case A.TVar(n):
            return sub.get(n, t)
        case A.Nominal(n, args):
            return A.Nominal(n, tuple(_subst(a, sub) for a in args))
        case A.Tuple(items):
            return A.Tuple(tuple(_subst(a, sub) for a in items))
    return t
