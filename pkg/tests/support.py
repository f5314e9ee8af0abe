"""Shared fixtures for the test-suite: paths, random environments and a
renaming-insensitive normal form for permission environments."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import replace
from pathlib import Path

from mezzo_core.permcheck.env import PermEnv, Var, canonicalize, empty_env, free_vars, subst_names
from mezzo_core.syntax import ast as A
from mezzo_core.syntax import parse_source
from mezzo_core.syntax.pretty import show_type
from mezzo_core.typesys import TypeContext
from oracle import TEST_DECLS

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
ACCEPTED = sorted((CORPUS / "accepted").glob("*.mz"))
REJECTED = sorted((CORPUS / "rejected").glob("*.mz"))

TEST_PROGRAM = parse_source(TEST_DECLS)
TEST_CTX = TypeContext.from_program(TEST_PROGRAM).with_tvars(["a"])

NAMES = ("x", "y", "z")
TA = A.TVar("a")


def nominal(n, arg):
    return A.Nominal(n, (arg,))


# ---------------------------------------------------------------------------
# random types and environments


def gen_plain(rng: random.Random, depth: int = 2):
    if depth == 0 or rng.random() < 0.4:
        return rng.choice([A.INT, A.STRING, TA])
    k = rng.randrange(4)
    if k == 3:
        return A.Tuple((gen_plain(rng, depth - 1), gen_plain(rng, depth - 1)))
    return nominal(("list", "mtree", "box")[k], gen_plain(rng, depth - 1))


def _or_sing(rng, t):
    return A.Singleton(rng.choice(NAMES)) if rng.random() < 0.3 else t


def gen_atom_type(rng: random.Random):
    """A type over the variable names x, y, z, as found in permissions."""
    k = rng.randrange(9)
    if k <= 2:
        return gen_plain(rng)
    if k == 3:
        return A.Singleton(rng.choice(NAMES))
    elem = gen_plain(rng, 1)
    if k == 4:
        return A.Structural("Node", (("left", _or_sing(rng, nominal("mtree", elem))),
                                     ("value", _or_sing(rng, elem)),
                                     ("right", _or_sing(rng, nominal("mtree", elem)))))
    if k == 5:
        return A.Structural("Cons", (("head", _or_sing(rng, elem)),
                                     ("tail", _or_sing(rng, nominal("list", elem)))))
    if k == 6:
        return A.Structural("Box", (("contents", _or_sing(rng, elem)),))
    if k == 7:
        return A.Structural(rng.choice(["Null", "Nil"]), ())
    return A.Tuple((_or_sing(rng, gen_plain(rng, 1)), _or_sing(rng, gen_plain(rng, 1))))


def gen_atoms(rng: random.Random, max_atoms: int = 4):
    return [(rng.choice(NAMES), gen_atom_type(rng)) for _ in range(rng.randint(1, max_atoms))]


def gen_goal(rng: random.Random, atoms):
    """Goals are biased towards things the environment may actually prove."""
    r = rng.random()
    if r < 0.35 and atoms:
        x, t = rng.choice(atoms)
        if isinstance(t, A.Structural) and t.ctor in FOLDS and rng.random() < 0.7:
            t = FOLDS[t.ctor](t, rng)
        return x, t
    return rng.choice(NAMES), gen_atom_type(rng)


def _elem_guess(t, rng):
    for _, ft in t.fields:
        if isinstance(ft, A.Nominal):
            return ft.args[0]
    return gen_plain(rng, 1)


FOLDS = {
    "Node": lambda t, rng: nominal("mtree", _elem_guess(t, rng)),
    "Null": lambda t, rng: nominal("mtree", gen_plain(rng, 1)),
    "Cons": lambda t, rng: nominal("list", _elem_guess(t, rng)),
    "Nil": lambda t, rng: nominal("list", gen_plain(rng, 1)),
    "Box": lambda t, rng: nominal("box", _elem_guess(t, rng)),
}


def user_vars():
    return {n: Var.fresh(n, user=True) for n in NAMES}


def build(atoms, vs, ctx: TypeContext = TEST_CTX) -> PermEnv:
    """Canonical environment holding ``atoms`` (written over names)."""
    raw = tuple(_atom(x, t, vs) for x, t in atoms)
    return canonicalize(replace(empty_env(ctx), atoms=raw))


def _atom(x, t, vs):
    from mezzo_core.permcheck.env import Atom
    return Atom(vs[x], subst_names(t, vs))


def over(t, vs):
    return subst_names(t, vs)


# ---------------------------------------------------------------------------
# comparing environments up to the choice of internal variables


def normal_form(env: PermEnv, collect: bool = False):
    """Sorted atom strings with user variables named after their users and
    internal ones numbered in breadth-first order from the user variables.

    With ``collect``, atoms on internal variables that no user variable
    reaches are dropped: the program has no way to name them."""
    if env.inconsistent:
        return ("inconsistent",)
    if collect:
        env = _collect(env)
    label = {}
    for v in sorted(env.variables()):
        if isinstance(v, Var) and v.user:
            c = env.find(v)
            label[c] = "+".join(sorted({m.name for m in env.members(c) if m.user}))
    counter = [0]

    def name(v):
        return label.get(env.find(v), "?")

    def visit(order):
        queue = deque(order)
        while queue:
            c = queue.popleft()
            atoms = sorted(env.atoms_on(c), key=lambda a: show_type(a.type, name))
            for a in atoms:
                for v in free_vars(a.type):
                    v = env.find(v)
                    if v not in label:
                        counter[0] += 1
                        label[v] = f"_{counter[0]}"
                        queue.append(v)

    visit(sorted(label, key=lambda c: label[c]))
    rest = [c for c in env.canonical_vars() if c not in label]
    while rest:
        rest.sort(key=lambda c: sorted(show_type(a.type, name) for a in env.atoms_on(c)))
        c = rest.pop(0)
        counter[0] += 1
        label[c] = f"_{counter[0]}"
        visit([c])
        rest = [c for c in rest if c not in label]
    out = [f"{name(a.subject)} @ {show_type(a.type, name)}" for a in env.atoms]
    for c in env.canonical_vars():
        users = sorted(m.name for m in env.members(c) if m.user)
        if len(users) > 1:
            out.append("=".join(users))
    return tuple(sorted(out))


def _collect(env: PermEnv) -> PermEnv:
    seen = {env.find(v) for v in env.variables() if isinstance(v, Var) and v.user}
    todo = list(seen)
    while todo:
        c = todo.pop()
        for a in env.atoms_on(c):
            for v in free_vars(a.type):
                v = env.find(v)
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
    return replace(env, atoms=tuple(a for a in env.atoms if env.find(a.subject) in seen))
