"""Recursive-descent parser for the Mezzo-core surface language.

Grammar summary (lowest precedence first)::

    program  ::= decl*
    decl     ::= 'data' ['mutable'] NAME ident* '=' ['|'] ctor ('|' ctor)*
               | 'val' ['rec'] valdef ('and' valdef)*
    valdef   ::= NAME ['[' ident+ ']'] '(' binders ')' ':' type '=' expr
               | NAME '=' expr
    expr     ::= tuple (';' expr)?
    tuple    ::= simple (',' simple)*
    simple   ::= 'let' pat '=' expr 'in' expr
               | 'if' expr 'then' simple 'else' simple
               | 'match' expr 'with' ('|' Ctor '->' expr)+ 'end'
               | compare ['<-' simple]
    compare  ::= postfix [('<=' | '<' | '>=' | '>') postfix]
    postfix  ::= primary ('.' ident)*
    primary  ::= ident ['[' type,* ']'] '(' args ')' | ident | INT | STRING
               | Ctor ['{' field '=' tuple (';' ...)* '}']
               | '(' [expr] ')' | 'begin' expr 'end'

Bare lowercase names in types are type variables when bound by an enclosing
``[a]`` or data parameter list, and nullary nominal types otherwise.
"""

from __future__ import annotations

from . import ast as A
from .lexer import LexError, Token, TokenKind, eof_token, lex

K, I, C, N, S, P = (TokenKind.KEYWORD, TokenKind.IDENT, TokenKind.CIDENT,
                    TokenKind.INT, TokenKind.STRING, TokenKind.PUNCT)


class ParseError(Exception):
    def __init__(self, loc: A.Loc, expected, found: str = ""):
        self.loc = loc
        self.expected = frozenset(expected)
        self.found = found
        super().__init__(f"{loc}: {self.message}")

    @property
    def message(self) -> str:
        exp = ", ".join(sorted(self.expected))
        return f"expected one of {{{exp}}} but found {self.found or 'end of input'}"


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = list(tokens)
        self.eof = eof_token(self.tokens)
        self.pos = 0
        self.tvars: list[frozenset] = [frozenset()]

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else self.eof

    def peek(self, k: int = 1) -> Token:
        j = self.pos + k
        return self.tokens[j] if j < len(self.tokens) else self.eof

    def at(self, kind, text=None) -> bool:
        return self.tok.is_(kind, text)

    def at_p(self, text) -> bool:
        return self.tok.is_(P, text)

    def at_k(self, text) -> bool:
        return self.tok.is_(K, text)

    def fail(self, *expected):
        raise ParseError(self.tok.loc, expected, self.tok.text)

    def next(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, kind, text=None) -> Token:
        if not self.at(kind, text):
            self.fail(text if text is not None else kind.value)
        return self.next()

    def accept(self, kind, text=None) -> bool:
        if self.at(kind, text):
            self.pos += 1
            return True
        return False

    def ident(self) -> str:
        return self.expect(I).text

    def scoped(self, names):
        parser = self

        class _Scope:
            def __enter__(self):
                parser.tvars.append(parser.tvars[-1] | frozenset(names))

            def __exit__(self, *exc):
                parser.tvars.pop()

        return _Scope()

    # -- program ----------------------------------------------------------

    def program(self) -> A.Program:
        decls = []
        while not self.at(TokenKind.EOF):
            if self.at_k("data"):
                decls.append(self.data_decl())
            elif self.at_k("val"):
                decls.append(self.val_group())
            else:
                self.fail("data", "val")
        return A.Program(tuple(decls))

    def data_decl(self) -> A.DataDecl:
        loc = self.expect(K, "data").loc
        is_mutable = self.accept(K, "mutable")
        name = self.ident()
        params = []
        while self.at(I):
            params.append(self.next().text)
        self.expect(P, "=")
        with self.scoped(params):
            self.accept(P, "|")
            branches = [self.ctor_decl()]
            while self.accept(P, "|"):
                branches.append(self.ctor_decl())
        return A.DataDecl(name, is_mutable, tuple(params), tuple(branches), loc)

    def ctor_decl(self) -> A.CtorDecl:
        tok = self.expect(C)
        fields = ()
        if self.at_p("{"):
            fields = self.type_fields()
        return A.CtorDecl(tok.text, fields, tok.loc)

    def val_group(self) -> A.ValGroup:
        loc = self.expect(K, "val").loc
        is_rec = self.accept(K, "rec")
        defs = [self.val_def()]
        while self.accept(K, "and"):
            defs.append(self.val_def())
        return A.ValGroup(is_rec, tuple(defs), loc)

    def val_def(self) -> A.ValDef:
        tok = self.expect(I)
        if self.accept(P, "="):
            return A.ValDef(tok.text, (), None, None, self.expr(), tok.loc)
        tparams = self.tvar_binders() if self.at_p("[") else []
        with self.scoped(tparams):
            self.expect(P, "(")
            params = []
            if not self.at_p(")"):
                params.append(self.binder())
                while self.accept(P, ","):
                    params.append(self.binder())
            self.expect(P, ")")
            self.expect(P, ":")
            ret = self.type_()
            self.expect(P, "=")
            body = self.expr()
        return A.ValDef(tok.text, tuple(tparams), tuple(params), ret, body, tok.loc)

    def tvar_binders(self) -> list[str]:
        self.expect(P, "[")
        names = [self.ident()]
        while self.at(I):
            names.append(self.next().text)
        self.expect(P, "]")
        return names

    def binder(self) -> A.Param:
        consumed = self.accept(K, "consumes")
        name = self.ident()
        self.expect(P, ":")
        return A.Param(name, consumed, self.type_())

    # -- types ------------------------------------------------------------

    def type_(self):
        if self.at_p("["):
            names = self.tvar_binders()
            with self.scoped(names):
                return A.Forall(tuple(names), self.type_())
        return self.arrow_type()

    def arrow_type(self):
        if self.at_p("("):
            start = self.pos
            items, perms = self.paren_items()
            if self.accept(P, "->"):
                if perms is not None:
                    raise ParseError(self.tokens[start].loc, {"parameter list"}, "|")
                return A.Arrow(tuple(items), self.type_())
            return self.paren_to_type(items, perms, self.tokens[start].loc)
        t = self.app_type()
        if self.accept(P, "->"):
            return A.Arrow((A.Param(None, False, t),), self.type_())
        return t

    def paren_items(self):
        self.expect(P, "(")
        items: list[A.Param] = []
        perms = None
        if not self.at_p(")") and not self.at_p("|"):
            items.append(self.paren_item())
            while self.accept(P, ","):
                items.append(self.paren_item())
        if self.accept(P, "|"):
            perms = self.perms()
        self.expect(P, ")")
        return items, perms

    def paren_item(self) -> A.Param:
        consumed = self.accept(K, "consumes")
        binder = None
        if self.at(I) and self.peek().is_(P, ":"):
            binder = self.next().text
            self.next()
        return A.Param(binder, consumed, self.type_())

    def paren_to_type(self, items, perms, loc):
        if any(p.binder is not None or p.consumed for p in items):
            raise ParseError(loc, {"->"}, self.tok.text)
        types = [p.type for p in items]
        t = types[0] if len(types) == 1 else A.Tuple(tuple(types))
        if perms is not None:
            if not perms:
                raise ParseError(loc, {"permission"}, ")")
            return A.Bar(t, tuple(perms))
        return t

    def perms(self):
        perms = [self.perm()]
        while self.accept(P, "*"):
            perms.append(self.perm())
        return perms

    def perm(self):
        name = self.ident()
        if self.accept(P, "="):
            return (name, A.Singleton(self.ident()))
        self.expect(P, "@")
        return (name, self.type_())

    def app_type(self):
        if self.at(I) and self.tok.text not in ("int", "string") \
                and self.tok.text not in self.tvars[-1]:
            name = self.next().text
            args = []
            while self.starts_atomic_type():
                args.append(self.atomic_type())
            return A.Nominal(name, tuple(args))
        return self.atomic_type()

    def starts_atomic_type(self) -> bool:
        t = self.tok
        return t.kind in (I, C) or t.is_(P, "(")

    def atomic_type(self):
        t = self.tok
        if t.is_(I):
            self.next()
            if t.text == "int":
                return A.INT
            if t.text == "string":
                return A.STRING
            if t.text in self.tvars[-1]:
                return A.TVar(t.text)
            return A.Nominal(t.text, ())
        if t.is_(P, "="):
            self.next()
            return A.Singleton(self.ident())
        if t.is_(C):
            self.next()
            fields = self.type_fields() if self.at_p("{") else ()
            return A.Structural(t.text, fields)
        if t.is_(P, "("):
            items, perms = self.paren_items()
            return self.paren_to_type(items, perms, t.loc)
        self.fail("type")

    def type_fields(self):
        self.expect(P, "{")
        fields = []
        while not self.at_p("}"):
            name = self.ident()
            if self.accept(P, "="):
                fields.append((name, A.Singleton(self.ident())))
            else:
                self.expect(P, ":")
                fields.append((name, self.type_()))
            if not self.accept(P, ";"):
                break
        self.expect(P, "}")
        return tuple(fields)

    # -- expressions ------------------------------------------------------

    def expr(self):
        first = self.tuple_expr()
        if self.accept(P, ";"):
            return A.Seq(first, self.expr(), _loc_of(first))
        return first

    def tuple_expr(self):
        first = self.simple()
        if not self.at_p(","):
            return first
        items = [first]
        while self.accept(P, ","):
            items.append(self.simple())
        return A.TupleExpr(tuple(items), _loc_of(first))

    def simple(self):
        t = self.tok
        if t.is_(K, "let"):
            self.next()
            pat = self.pattern()
            self.expect(P, "=")
            rhs = self.expr()
            self.expect(K, "in")
            return A.Let(pat, rhs, self.expr(), t.loc)
        if t.is_(K, "if"):
            self.next()
            cond = self.expr()
            self.expect(K, "then")
            then = self.simple()
            self.expect(K, "else")
            return A.If(cond, then, self.simple(), t.loc)
        if t.is_(K, "match"):
            self.next()
            scrut = self.expr()
            self.expect(K, "with")
            branches = []
            while self.at_p("|"):
                self.next()
                ctor = self.expect(C)
                self.expect(P, "->")
                branches.append(A.Branch(ctor.text, self.expr(), ctor.loc))
            if not branches:
                self.fail("|")
            self.expect(K, "end")
            return A.Match(scrut, tuple(branches), t.loc)
        lhs = self.compare()
        if self.at_p("<-"):
            if not isinstance(lhs, A.FieldRead):
                raise ParseError(self.tok.loc, {"field access before <-"}, "<-")
            self.next()
            return A.FieldWrite(lhs.obj, lhs.field, self.simple(), lhs.loc)
        return lhs

    def pattern(self):
        paren = self.accept(P, "(")
        names = [self.ident()]
        while self.accept(P, ","):
            names.append(self.ident())
        if paren:
            self.expect(P, ")")
        if len(names) == 1:
            return A.PVar(names[0])
        return A.PTuple(tuple(names))

    def compare(self):
        left = self.postfix()
        if self.tok.kind is P and self.tok.text in A.COMPARE_OPS:
            op = self.next().text
            return A.Compare(op, left, self.postfix(), _loc_of(left))
        return left

    def postfix(self):
        e = self.primary()
        while self.at_p("."):
            self.next()
            name = self.ident()
            e = A.FieldRead(e, name, _loc_of(e))
        return e

    def primary(self):
        t = self.tok
        if t.is_(I):
            self.next()
            var = A.EVar(t.text, t.loc)
            if self.at_p("[") or self.at_p("("):
                type_args = None
                if self.at_p("["):
                    self.next()
                    type_args = [self.type_()]
                    while self.accept(P, ","):
                        type_args.append(self.type_())
                    self.expect(P, "]")
                    type_args = tuple(type_args)
                self.expect(P, "(")
                args = []
                if not self.at_p(")"):
                    args.append(self.simple())
                    while self.accept(P, ","):
                        args.append(self.simple())
                self.expect(P, ")")
                return A.Call(var, type_args, tuple(args), t.loc)
            return var
        if t.is_(N):
            self.next()
            return A.IntLit(t.value, t.loc)
        if t.is_(S):
            self.next()
            return A.StrLit(t.value, t.loc)
        if t.is_(C):
            self.next()
            fields = []
            if self.at_p("{"):
                self.next()
                while not self.at_p("}"):
                    name = self.ident()
                    self.expect(P, "=")
                    fields.append((name, self.tuple_expr()))
                    if not self.accept(P, ";"):
                        break
                self.expect(P, "}")
            return A.CtorAlloc(t.text, tuple(fields), t.loc)
        if t.is_(P, "("):
            self.next()
            if self.accept(P, ")"):
                return A.TupleExpr((), t.loc)
            e = self.expr()
            self.expect(P, ")")
            return e
        if t.is_(K, "begin"):
            self.next()
            e = self.expr()
            self.expect(K, "end")
            return e
        self.fail("expression")


def _loc_of(e) -> A.Loc:
    return getattr(e, "loc", A.NOLOC)


def parse_program(tokens: list[Token]) -> A.Program:
    return Parser(tokens).program()


def parse_type(tokens: list[Token], tvars=()):
    p = Parser(tokens)
    with p.scoped(tvars):
        t = p.type_()
    if not p.at(TokenKind.EOF):
        p.fail("end of input")
    return t


def parse_expr(tokens: list[Token]):
    p = Parser(tokens)
    e = p.expr()
    if not p.at(TokenKind.EOF):
        p.fail("end of input")
    return e


def parse_source(source: str) -> A.Program:
    """Lex and parse in one step; raises LexError or ParseError."""
    return parse_program(lex(source))


__all__ = ["ParseError", "LexError", "parse_program", "parse_type",
           "parse_expr", "parse_source"]
