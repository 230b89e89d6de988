"""Paired and repeated-measures statistics over per-subject metric tables.

Test statistics are computed from their textbook formulas here; only the
t and F survival functions come from scipy. Inputs are subjects-by-
conditions matrices with complete cells (no missing data handling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as spstats


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    df: tuple
    p: float

    def to_dict(self):
        return {"name": self.name, "statistic": self.statistic, "df": list(self.df), "p": self.p}


def _as_matrix(data, min_subjects=2):
    mat = np.asarray(data, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat[:, None]
    if not np.all(np.isfinite(mat)):
        raise ValueError("per-subject data must be complete and finite")
    if mat.shape[0] < min_subjects:
        raise ValueError(f"need >= {min_subjects} subjects, got {mat.shape[0]}")
    return mat


def paired_t(x, y):
    """Two-tailed paired t-test; identical samples give t = 0, p = 1."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("paired t-test needs two equal-length 1-D samples")
    if len(x) < 2:
        raise ValueError("paired t-test needs >= 2 subjects")
    d = x - y
    n = len(d)
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TestResult("paired_t", 0.0, (n - 1,), 1.0)
        t = math.inf if mean > 0 else -math.inf
        return TestResult("paired_t", t, (n - 1,), 0.0)
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(spstats.t.sf(abs(t), n - 1))
    return TestResult("paired_t", t, (n - 1,), min(p, 1.0))


def rm_anova(data):
    """One-way repeated-measures ANOVA on a subjects x conditions matrix."""
    mat = _as_matrix(data)
    n, c = mat.shape
    if c < 2:
        raise ValueError("repeated-measures ANOVA needs >= 2 conditions")
    grand = mat.mean()
    ss_conditions = n * float(np.sum((mat.mean(axis=0) - grand) ** 2))
    ss_subjects = c * float(np.sum((mat.mean(axis=1) - grand) ** 2))
    ss_total = float(np.sum((mat - grand) ** 2))
    ss_error = ss_total - ss_conditions - ss_subjects
    df1 = c - 1
    df2 = (c - 1) * (n - 1)
    ms_conditions = ss_conditions / df1
    ms_error = ss_error / df2
    if ms_error <= 0.0:
        f = math.inf if ms_conditions > 0 else 0.0
        p = 0.0 if ms_conditions > 0 else 1.0
        return TestResult("rm_anova", f, (df1, df2), p)
    f = ms_conditions / ms_error
    p = float(spstats.f.sf(f, df1, df2))
    return TestResult("rm_anova", f, (df1, df2), p)


def within_subject_2x2(cells):
    """Main effects and interaction of a 2x2 within-subject design.

    `cells` maps (a, b) with a, b in {0, 1} to per-subject vectors. Each
    effect is a paired-difference contrast tested against zero; F = t^2
    with df (1, n-1). Returns {"main_a", "main_b", "interaction"}.
    """
    grids = {}
    for key in ((0, 0), (0, 1), (1, 0), (1, 1)):
        if key not in cells:
            raise ValueError(f"missing cell {key} in 2x2 design")
        grids[key] = np.asarray(cells[key], dtype=np.float64)
    lengths = {v.shape for v in grids.values()}
    if len(lengths) != 1:
        raise ValueError("all cells need the same subject count")

    def contrast_test(name, contrast):
        zeros = np.zeros_like(contrast)
        t_res = paired_t(contrast, zeros)
        f = t_res.statistic**2
        df = (1, t_res.df[0])
        return TestResult(name, f, df, t_res.p)

    main_a = (grids[(1, 0)] + grids[(1, 1)]) / 2 - (grids[(0, 0)] + grids[(0, 1)]) / 2
    main_b = (grids[(0, 1)] + grids[(1, 1)]) / 2 - (grids[(0, 0)] + grids[(1, 0)]) / 2
    interaction = (grids[(1, 1)] - grids[(1, 0)]) - (grids[(0, 1)] - grids[(0, 0)])
    return {
        "main_a": contrast_test("main_a", main_a),
        "main_b": contrast_test("main_b", main_b),
        "interaction": contrast_test("interaction", interaction),
    }


def bonferroni(p_values, n_comparisons=None):
    """Multiply each p by the comparison count, capped at 1."""
    if n_comparisons is None:
        n_comparisons = len(p_values)
    return [min(1.0, p * n_comparisons) for p in p_values]
