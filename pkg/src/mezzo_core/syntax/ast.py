"""Abstract syntax for Mezzo-core programs and type expressions.

Every node is a frozen dataclass. Source locations are carried in a ``loc``
field that is excluded from equality, so two trees parsed from differently
formatted text compare equal when they have the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True, order=True)
class Loc:
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOLOC = Loc()


def _loc():
    return field(default=NOLOC, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Types
#
# Singleton and permission subjects hold a *name*: a plain ``str`` in parsed
# programs, or a checker variable object once binder names have been
# substituted by the permission checker.


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class Nominal:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class Tuple:
    items: tuple = ()


@dataclass(frozen=True)
class Param:
    binder: Optional[str]
    consumed: bool
    type: "TypeExpr"


@dataclass(frozen=True)
class Arrow:
    params: tuple  # of Param
    ret: "TypeExpr"


@dataclass(frozen=True)
class Structural:
    ctor: str
    fields: tuple = ()  # of (field-name, TypeExpr)

    def field_type(self, name):
        for f, t in self.fields:
            if f == name:
                return t
        return None


@dataclass(frozen=True)
class Singleton:
    var: object


@dataclass(frozen=True)
class Bar:
    type: "TypeExpr"
    perms: tuple  # of (subject, TypeExpr)


@dataclass(frozen=True)
class Forall:
    vars: tuple
    body: "TypeExpr"


@dataclass(frozen=True)
class IntT:
    pass


@dataclass(frozen=True)
class StringT:
    pass


INT = IntT()
STRING = StringT()

TypeExpr = Union[TVar, Nominal, Tuple, Arrow, Structural, Singleton, Bar,
                 Forall, IntT, StringT]


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class EVar:
    name: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class IntLit:
    value: int
    loc: Loc = _loc()


@dataclass(frozen=True)
class StrLit:
    value: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class TupleExpr:
    items: tuple
    loc: Loc = _loc()


@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class PTuple:
    names: tuple


Pattern = Union[PVar, PTuple]


@dataclass(frozen=True)
class Let:
    pattern: Pattern
    rhs: "Expr"
    body: "Expr"
    loc: Loc = _loc()


@dataclass(frozen=True)
class Branch:
    ctor: str
    body: "Expr"
    loc: Loc = _loc()


@dataclass(frozen=True)
class Match:
    scrutinee: "Expr"
    branches: tuple  # of Branch
    loc: Loc = _loc()


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    loc: Loc = _loc()


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"
    loc: Loc = _loc()


@dataclass(frozen=True)
class FieldRead:
    obj: "Expr"
    field: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class FieldWrite:
    obj: "Expr"
    field: str
    rhs: "Expr"
    loc: Loc = _loc()


@dataclass(frozen=True)
class Call:
    callee: EVar
    type_args: Optional[tuple]
    args: tuple
    loc: Loc = _loc()


@dataclass(frozen=True)
class CtorAlloc:
    ctor: str
    fields: tuple  # of (field-name, Expr)
    loc: Loc = _loc()


@dataclass(frozen=True)
class Seq:
    first: "Expr"
    second: "Expr"
    loc: Loc = _loc()


Expr = Union[EVar, IntLit, StrLit, TupleExpr, Let, Match, If, Compare,
             FieldRead, FieldWrite, Call, CtorAlloc, Seq]

COMPARE_OPS = ("<=", "<", ">=", ">")


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class CtorDecl:
    name: str
    fields: tuple = ()  # of (field-name, TypeExpr)
    loc: Loc = _loc()


@dataclass(frozen=True)
class DataDecl:
    name: str
    is_mutable: bool
    params: tuple
    branches: tuple  # of CtorDecl
    loc: Loc = _loc()


@dataclass(frozen=True)
class ValDef:
    """A function (``params`` is a tuple) or a plain value (``params`` None)."""

    name: str
    tparams: tuple
    params: Optional[tuple]  # of Param, binder always set
    ret: Optional[TypeExpr]
    body: Expr
    loc: Loc = _loc()

    @property
    def is_function(self) -> bool:
        return self.params is not None

    def signature_type(self) -> TypeExpr:
        arrow = Arrow(self.params, self.ret)
        return Forall(self.tparams, arrow) if self.tparams else arrow


@dataclass(frozen=True)
class ValGroup:
    is_rec: bool
    defs: tuple  # of ValDef
    loc: Loc = _loc()


@dataclass(frozen=True)
class Program:
    declarations: tuple  # of DataDecl | ValGroup

    def data_decls(self):
        return [d for d in self.declarations if isinstance(d, DataDecl)]

    def val_defs(self):
        return [v for g in self.declarations if isinstance(g, ValGroup)
                for v in g.defs]


Ast = Program
