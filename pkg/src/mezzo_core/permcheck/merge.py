"""Joining the exit environments of the branches of a match or if.

The join walks the environments in lockstep starting from the variables
that were in scope before branching. Each tuple of corresponding branch
variables is mapped to one variable of the result; aggregates with the same
shape in every branch are joined field by field, other permissions are kept
when every branch holds them, and leftovers are folded to a common nominal
type when that succeeds in every branch. Permissions that cannot be matched
up are dropped. A non-duplicable permission of a branch is handed to at most
one result variable.
"""

from __future__ import annotations

from collections import deque
from dataclasses import replace

from ..syntax import ast as A
from .env import (Atom, PermEnv, Var, canonicalize, fields_of, is_aggregate,
                  same_shape, with_fields)
from .subtract import SubtractFailure, infer_nominal, subtract


def merge_branches(envs, roots, hints=None) -> PermEnv:
    """Join branch exit environments.

    ``envs`` may contain None for unreachable branches. ``roots`` are the
    variables whose identity survives the join, the branch result variable
    first. ``hints`` maps a root to nominal types worth folding towards."""
    live = [e for e in envs if e is not None and not e.inconsistent]
    if not live:
        base = next((e for e in envs if e is not None), PermEnv())
        return replace(base, inconsistent=True)
    if len(live) == 1:
        return live[0]
    return _Join(live, list(roots), hints or {}).run()


class _Join:
    def __init__(self, envs, roots, hints):
        self.cur = list(envs)
        self.ctx = envs[0].ctx
        self.roots = roots
        self.hints = hints
        self.joined: dict = {}
        self.queue: deque = deque()
        self.atoms: list[Atom] = []
        self.unions: list = []
        # atoms already joined; duplicable ones stay in the branch for folding
        # aliases but must not be folded again on their own
        self.handled = [set() for _ in envs]

    def key(self, per_branch) -> tuple:
        return tuple(e.find(v) for e, v in zip(self.cur, per_branch))

    def join_var(self, key, root=None) -> Var:
        j = self.joined.get(key)
        if j is not None:
            if root is not None and root != j:
                self.unions.append((root, j))
            return j
        if root is not None:
            j = root
        elif all(v == key[0] for v in key):
            j = key[0]
        else:
            j = Var.fresh(key[0].name)
        self.joined[key] = j
        self.queue.append((j, key))
        return j

    def run(self) -> PermEnv:
        for r in self.roots:
            self.join_var(self.key([r] * len(self.cur)), root=r)
        while self.queue:
            j, key = self.queue.popleft()
            self.join_common(j, key)
            self.join_by_folding(j, key)
        env = PermEnv(self.ctx, {}, tuple(self.atoms))
        for a, b in self.unions:
            env = replace(env, atoms=env.atoms + (Atom(a, A.Singleton(b)),))
        return canonicalize(env)

    def find_in(self, i, x, pred):
        for a in self.cur[i].atoms_on(x):
            if pred(a):
                return a
        return None

    def join_common(self, j, key):
        first = self.cur[0]
        for atom in first.atoms_on(key[0]):
            if atom not in self.cur[0].atoms:
                continue
            if is_aggregate(atom.type):
                others = [self.find_in(i, key[i], lambda a: same_shape(a.type, atom.type))
                          for i in range(1, len(self.cur))]
                if any(o is None for o in others):
                    continue
                matched = [atom] + others
                labels = [label for label, _ in fields_of(atom.type)]
                per_field = [dict(fields_of(m.type)) for m in matched]
                new_fields = []
                for label in labels:
                    fkey = self.key([pf[label].var for pf in per_field])
                    new_fields.append((label, A.Singleton(self.join_var(fkey))))
                self.atoms.append(Atom(j, with_fields(atom.type, new_fields)))
                self.consume(matched)
            else:
                others = [self.find_in(i, key[i], lambda a: self.cur[i].same_type(a.type, atom.type)
                                       if not is_aggregate(a.type) else False)
                          for i in range(1, len(self.cur))]
                if any(o is None for o in others):
                    continue
                self.atoms.append(Atom(j, atom.type))
                self.consume([atom] + others)

    def consume(self, matched):
        for i, a in enumerate(matched):
            self.handled[i].add(a)
        self.cur = [e.without(a) if a in e.atoms else e for e, a in zip(self.cur, matched)]

    def candidates(self, j, key):
        out = []
        for t in self.hints.get(j, ()):
            out.append(t)
        for e, x in zip(self.cur, key):
            for a in e.atoms_on(x):
                if isinstance(a.type, A.Nominal):
                    out.append(a.type)
            guess = infer_nominal(e, x)
            if guess is not None:
                out.append(guess)
        uniq = []
        for t in out:
            if t not in uniq:
                uniq.append(t)
        return uniq

    def join_by_folding(self, j, key):
        if not any(a not in self.handled[i]
                   for i, (e, x) in enumerate(zip(self.cur, key)) for a in e.atoms_on(x)):
            return
        for t in self.candidates(j, key):
            try:
                after = [subtract(e, x, t) for e, x in zip(self.cur, key)]
            except SubtractFailure:
                continue
            self.cur = after
            self.atoms.append(Atom(j, t))

