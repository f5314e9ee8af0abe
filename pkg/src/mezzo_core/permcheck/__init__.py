"""Permission environments and the permission checker."""

from .checker import Checker, CheckReport, FnSignature, check_call, check_program
from .diagnostics import Diagnostic
from .env import (Atom, PermEnv, Var, add_equality, add_permission, canonicalize,
                  empty_env, render)
from .merge import merge_branches
from .subtract import (CheckError, SubtractFailure, check_field_write, refine_match,
                       subtract)

__all__ = ["Checker", "CheckReport", "FnSignature", "check_call", "check_program",
           "Diagnostic", "Atom", "PermEnv", "Var", "add_equality", "add_permission",
           "canonicalize", "empty_env", "render", "merge_branches", "CheckError",
           "SubtractFailure", "check_field_write", "refine_match", "subtract"]
