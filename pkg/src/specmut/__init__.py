"""Mutation-based evaluation harness for method-level postconditions.

Decides whether a postcondition set is test-correct on a reference
implementation and bug-complete against a mutant set, and computes the
full metric and ablation suite over stored evaluation runs.
"""

__version__ = "0.1.0"
