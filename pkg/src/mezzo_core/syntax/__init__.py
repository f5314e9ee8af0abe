"""Lexer, parser and printer for Mezzo-core source text."""

from . import ast
from .lexer import LexError, Token, TokenKind, lex
from .parser import ParseError, parse_expr, parse_program, parse_source, parse_type
from .pretty import show_expr, show_program, show_type

__all__ = ["ast", "LexError", "Token", "TokenKind", "lex", "ParseError", "parse_expr",
           "parse_program", "parse_source", "parse_type", "show_expr", "show_program",
           "show_type"]
