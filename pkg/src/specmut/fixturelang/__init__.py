"""Bundled imperative subject language: parser, span labeling, interpreter.

The language is small on purpose (integers, booleans, strings, lists,
records, functions, if/while/for, return, assert) but rich enough to
exercise every labeled span kind and every run-outcome class without
touching a real compiler toolchain.
"""

from specmut.fixturelang.adapter import FixtureAdapter
from specmut.fixturelang.interp import Interpreter, RunTrace
from specmut.fixturelang.parser import parse_program

__all__ = ["FixtureAdapter", "Interpreter", "RunTrace", "parse_program"]
