"""Metric suite: Corr@k/Comp@k estimators, gap measures, FDR, ablations.

Rates are carried as exact rationals where feasible (everything except
the pass@k product estimator) and rendered at 3 decimals by the report
writer. Ratios with zero denominators are UNDEFINED (None), never 0.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from specmut.errors import (
    FractionOutOfRangeError,
    KExceedsNError,
    UnknownOperatorError,
)
from specmut.mutgen import Scheme
from specmut.validate import KillMatrix


@dataclass
class SampleStats:
    """Per-task sampling outcome counts feeding the @k estimators."""

    task_id: str
    n: int
    c_corr: int
    c_comp: int
    per_sample: list = field(default_factory=list)   # list of (correct, complete)
    model_tag: str = ""
    setting: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.c_comp <= self.c_corr <= self.n:
            raise ValueError("need 0 <= c_comp <= c_corr <= n")
        if self.per_sample:
            if len(self.per_sample) != self.n:
                raise ValueError("per_sample length must equal n")
            if sum(1 for c, _ in self.per_sample if c) != self.c_corr:
                raise ValueError("c_corr must match per_sample")
            if sum(1 for _, p in self.per_sample if p) != self.c_comp:
                raise ValueError("c_comp must match per_sample")
            if any(p and not c for c, p in self.per_sample):
                raise ValueError("complete implies correct per sample")


@dataclass
class MetricReport:
    k_values: list
    corr_at: dict
    comp_at: dict
    delta_at: dict
    rho_at: dict                    # None value renders as an em-less dash
    c2c: float | None
    per_method_gap: dict
    fdr: float | None = None
    ablation_rows: list = field(default_factory=list)


def pass_at_k(n: int, c: int, k: int) -> float:
    """Expected chance that at least one of k draws (without replacement,
    from n samples with c successes) succeeds: 1 - C(n-c,k)/C(n,k).

    Computed in product form so intermediate values never overflow.
    """
    if not 0 <= c <= n:
        raise ValueError("need 0 <= c <= n")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise KExceedsNError(f"k={k} exceeds n={n}")
    if n - c < k:
        return 1.0
    product = 1.0
    for i in range(n - c + 1, n + 1):
        product *= 1.0 - k / i
    return 1.0 - product


def corr_comp_at_k(stats: list, k: int) -> tuple:
    """(Corr@k, Comp@k): task-mean of the pass@k estimator on each count."""
    if not stats:
        raise ValueError("stats must be non-empty")
    corr_total = 0.0
    comp_total = 0.0
    for stat in stats:
        if k > stat.n:
            raise KExceedsNError(f"k={k} exceeds n={stat.n} for task {stat.task_id}")
        corr_total += pass_at_k(stat.n, stat.c_corr, k)
        comp_total += pass_at_k(stat.n, stat.c_comp, k)
    return corr_total / len(stats), comp_total / len(stats)


def gap_metrics(corr: float, comp: float) -> tuple:
    """Absolute gap and conditional completeness rate (None when corr is 0)."""
    if not 0 <= comp <= corr <= 1:
        raise ValueError("need 0 <= comp <= corr <= 1")
    delta = corr - comp
    rho = None if corr == 0 else comp / corr
    return delta, rho


def c2c_ratio(stats: list) -> float | None:
    """Complete sets over correct sets, pooled across all samples."""
    total_corr = sum(s.c_corr for s in stats)
    total_comp = sum(s.c_comp for s in stats)
    if total_corr == 0:
        return None
    return total_comp / total_corr


def method_level_gap(stats: SampleStats) -> float | None:
    """Per-method corr_rate minus comp_rate; None (excluded) when nothing is correct."""
    if stats.c_corr == 0:
        return None
    return (stats.c_corr - stats.c_comp) / stats.n


# --- cross-scheme false discovery rate ---------------------------------------


def _scheme_value(scheme) -> str:
    return scheme.value if isinstance(scheme, Scheme) else str(scheme)


def cross_scheme_fdr(matrix: KillMatrix, scheme_of: dict, s) -> float | None:
    """Among sets complete under scheme-S mutants alone, the fraction
    failing to kill at least one mutant of the other scheme.

    Undefined (None) when either scheme is absent or no set is
    S-complete.
    """
    target = _scheme_value(s)
    mutant_ids = matrix.mutant_ids()
    s_idx = []
    sbar_idx = []
    for offset, mutant_id in enumerate(mutant_ids, start=1):
        if _scheme_value(scheme_of[mutant_id]) == target:
            s_idx.append(offset)
        else:
            sbar_idx.append(offset)
    if not s_idx or not sbar_idx:
        return None
    s_complete_rows = [
        row for row in matrix.cells
        if row[0] == 1 and all(row[i] == 0 for i in s_idx)
    ]
    if not s_complete_rows:
        return None
    failing = sum(
        1 for row in s_complete_rows if any(row[i] != 0 for i in sbar_idx)
    )
    return failing / len(s_complete_rows)


# --- ablation suite ------------------------------------------------------------


class AblationKind(enum.Enum):
    OPERATOR_EXCLUDE = "OPERATOR_EXCLUDE"
    SCHEME_EXCLUDE = "SCHEME_EXCLUDE"
    BUDGET = "BUDGET"
    RANDOM_OPERATOR_REMOVAL = "RANDOM_OPERATOR_REMOVAL"
    RANDOM_LLM_REMOVAL = "RANDOM_LLM_REMOVAL"


@dataclass
class AblationSpec:
    kind: AblationKind
    operator_name: str = ""
    scheme: str = ""
    fraction: float = 1.0
    count: int = 0
    trials: int = 1

    @property
    def label(self) -> str:
        if self.kind is AblationKind.OPERATOR_EXCLUDE:
            return f"operator_exclude:{self.operator_name}"
        if self.kind is AblationKind.SCHEME_EXCLUDE:
            return f"scheme_exclude:{self.scheme}"
        if self.kind is AblationKind.BUDGET:
            return f"budget:{self.fraction}"
        if self.kind is AblationKind.RANDOM_OPERATOR_REMOVAL:
            return f"random_operator_removal:{self.count}"
        return f"random_llm_removal:{self.fraction}"


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def comp_at_1(matrices: list, keep=None) -> Fraction:
    """Exact Comp@1 over matrices, optionally restricted to a mutant subset.

    ``keep`` maps task_id to the set of retained mutant ids; None keeps
    everything. Completeness under a subset requires the original to
    pass and every retained mutant to be killed.
    """
    total = Fraction(0)
    for matrix in matrices:
        kept_ids = (
            set(matrix.mutant_ids()) if keep is None else keep[matrix.task_id]
        )
        indices = [
            i for i, mid in enumerate(matrix.mutant_ids(), start=1) if mid in kept_ids
        ]
        complete = 0
        for row in matrix.cells:
            if row[0] == 1 and all(row[i] == 0 for i in indices):
                complete += 1
        total += Fraction(complete, len(matrix.cells))
    return total / len(matrices)


def _operator_universe(matrices: list) -> list:
    names = set()
    for matrix in matrices:
        for meta in matrix.variant_meta.values():
            if meta.get("scheme") == Scheme.OPERATOR.value and meta.get("operator"):
                names.add(meta["operator"])
    return sorted(names)


def _mutants_by_scheme(matrix: KillMatrix, scheme_value: str) -> list:
    return [
        mid for mid in matrix.mutant_ids()
        if matrix.variant_meta.get(mid, {}).get("scheme") == scheme_value
    ]


def run_ablation(matrices: list, variant: AblationSpec, seed: int) -> dict:
    """Recompute Comp@1 under the requested mutant-set perturbation.

    Random variants draw per-trial seeds (seed + trial index) so runs
    are bit-identical for a fixed seed. Reported std is the population
    standard deviation over trials.
    """
    if not matrices:
        raise ValueError("matrices must be non-empty")
    kind = variant.kind

    if kind is AblationKind.OPERATOR_EXCLUDE:
        if variant.operator_name not in _operator_universe(matrices):
            raise UnknownOperatorError(
                f"operator {variant.operator_name!r} not present in matrices"
            )
        keep = {
            m.task_id: {
                mid for mid in m.mutant_ids()
                if m.variant_meta.get(mid, {}).get("operator") != variant.operator_name
            }
            for m in matrices
        }
        means = [comp_at_1(matrices, keep)]
    elif kind is AblationKind.SCHEME_EXCLUDE:
        excluded = variant.scheme
        keep = {
            m.task_id: {
                mid for mid in m.mutant_ids()
                if m.variant_meta.get(mid, {}).get("scheme") != excluded
            }
            for m in matrices
        }
        means = [comp_at_1(matrices, keep)]
    elif kind is AblationKind.BUDGET:
        if not 0 < variant.fraction <= 1:
            raise FractionOutOfRangeError(
                f"budget fraction must be in (0, 1], got {variant.fraction}"
            )
        means = []
        for trial in range(variant.trials):
            rng = random.Random(seed + trial)
            keep = {}
            for matrix in matrices:
                ids = matrix.mutant_ids()
                size = max(1, round_half_up(variant.fraction * len(ids)))
                keep[matrix.task_id] = set(rng.sample(ids, size))
            means.append(comp_at_1(matrices, keep))
    elif kind is AblationKind.RANDOM_OPERATOR_REMOVAL:
        universe = _operator_universe(matrices)
        if variant.count > len(universe):
            raise UnknownOperatorError(
                f"cannot remove {variant.count} of {len(universe)} operators"
            )
        means = []
        for trial in range(variant.trials):
            rng = random.Random(seed + trial)
            removed = set(rng.sample(universe, variant.count))
            keep = {
                m.task_id: {
                    mid for mid in m.mutant_ids()
                    if m.variant_meta.get(mid, {}).get("operator") not in removed
                }
                for m in matrices
            }
            means.append(comp_at_1(matrices, keep))
    elif kind is AblationKind.RANDOM_LLM_REMOVAL:
        if not 0 <= variant.fraction <= 1:
            raise FractionOutOfRangeError(
                f"removal fraction must be in [0, 1], got {variant.fraction}"
            )
        means = []
        for trial in range(variant.trials):
            rng = random.Random(seed + trial)
            keep = {}
            for matrix in matrices:
                llm_ids = _mutants_by_scheme(matrix, Scheme.LLM.value)
                drop = round_half_up(variant.fraction * len(llm_ids))
                removed = set(rng.sample(llm_ids, drop)) if drop else set()
                keep[matrix.task_id] = {
                    mid for mid in matrix.mutant_ids() if mid not in removed
                }
            means.append(comp_at_1(matrices, keep))
    else:
        raise AssertionError(f"unhandled ablation kind {kind}")

    mean = sum(means, Fraction(0)) / len(means)
    variance = sum((m - mean) ** 2 for m in means) / len(means)
    return {
        "label": variant.label,
        "mean": float(mean),
        "std": math.sqrt(float(variance)),
        "trials": len(means),
    }


# --- report assembly --------------------------------------------------------------


def build_metric_report(
    stats: list,
    k_values: list,
    fdr: float | None = None,
    ablation_rows: list | None = None,
) -> MetricReport:
    corr_at, comp_at, delta_at, rho_at = {}, {}, {}, {}
    for k in k_values:
        corr, comp = corr_comp_at_k(stats, k)
        corr_at[k], comp_at[k] = corr, comp
        delta_at[k], rho_at[k] = gap_metrics(corr, comp)
    per_method = {}
    for stat in stats:
        gap = method_level_gap(stat)
        if gap is not None:
            per_method[stat.task_id] = gap
    return MetricReport(
        k_values=list(k_values),
        corr_at=corr_at,
        comp_at=comp_at,
        delta_at=delta_at,
        rho_at=rho_at,
        c2c=c2c_ratio(stats),
        per_method_gap=per_method,
        fdr=fdr,
        ablation_rows=list(ablation_rows or []),
    )
