import math

import numpy as np
import pytest
from scipy import stats as spstats

from anchorlab.evalharness.stats import (
    bonferroni,
    paired_t,
    rm_anova,
    within_subject_2x2,
)


class TestPairedT:
    def test_identical_samples(self):
        res = paired_t([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert res.statistic == 0.0
        assert res.p == 1.0
        assert res.df == (2,)

    def test_textbook_hand_dataset_matches_scipy(self):
        x = [1.0, 2.0, 3.0, 4.0]
        y = [2.0, 3.0, 5.0, 7.0]
        res = paired_t(x, y)
        oracle = spstats.ttest_rel(x, y)
        assert res.statistic == pytest.approx(oracle.statistic, rel=1e-12)
        assert res.p == pytest.approx(oracle.pvalue, rel=1e-12)
        # explicit textbook computation: t = mean(d) / (sd(d)/sqrt(n))
        d = np.subtract(x, y)
        t_hand = d.mean() / (d.std(ddof=1) / math.sqrt(len(d)))
        assert res.statistic == pytest.approx(t_hand, rel=1e-12)

    def test_random_cases_match_scipy(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            n = int(rng.integers(3, 20))
            x = rng.normal(size=n)
            y = x + rng.normal(scale=0.5, size=n)
            res = paired_t(x, y)
            oracle = spstats.ttest_rel(x, y)
            assert res.statistic == pytest.approx(oracle.statistic, rel=1e-10)
            assert res.p == pytest.approx(oracle.pvalue, rel=1e-10)

    def test_constant_nonzero_difference(self):
        res = paired_t([2.0, 3.0, 4.0], [1.0, 2.0, 3.0])
        assert math.isinf(res.statistic) and res.statistic > 0
        assert res.p == 0.0

    def test_too_few_subjects(self):
        with pytest.raises(ValueError):
            paired_t([1.0], [2.0])


class TestRmAnova:
    def test_matches_statsmodels(self):
        import pandas as pd
        from statsmodels.stats.anova import AnovaRM

        rng = np.random.default_rng(7)
        n, c = 10, 4
        data = rng.normal(size=(n, c)) + rng.normal(size=(n, 1))
        res = rm_anova(data)
        frame = pd.DataFrame(
            [
                {"subject": i, "condition": j, "value": data[i, j]}
                for i in range(n)
                for j in range(c)
            ]
        )
        oracle = AnovaRM(frame, "value", "subject", within=["condition"]).fit()
        f_oracle = float(oracle.anova_table["F Value"].iloc[0])
        p_oracle = float(oracle.anova_table["Pr > F"].iloc[0])
        assert res.statistic == pytest.approx(f_oracle, rel=1e-9)
        assert res.p == pytest.approx(p_oracle, rel=1e-9)
        assert res.df == (c - 1, (c - 1) * (n - 1))

    def test_two_conditions_equals_squared_paired_t(self):
        rng = np.random.default_rng(3)
        data = rng.normal(size=(8, 2))
        res = rm_anova(data)
        t_res = paired_t(data[:, 0], data[:, 1])
        assert res.statistic == pytest.approx(t_res.statistic**2, rel=1e-9)
        assert res.p == pytest.approx(t_res.p, rel=1e-9)

    def test_requires_two_subjects(self):
        with pytest.raises(ValueError):
            rm_anova([[1.0, 2.0]])

    def test_requires_complete_data(self):
        with pytest.raises(ValueError):
            rm_anova([[1.0, np.nan], [2.0, 3.0]])


class TestWithinSubject2x2:
    def _cells(self, rng, effect_a=0.0, effect_b=0.0, interaction=0.0, n=12):
        base = rng.normal(size=n)
        cells = {}
        for a in (0, 1):
            for b in (0, 1):
                cells[(a, b)] = (
                    base
                    + effect_a * a
                    + effect_b * b
                    + interaction * a * b
                    + rng.normal(scale=0.3, size=n)
                )
        return cells

    def test_f_is_t_squared(self):
        rng = np.random.default_rng(11)
        cells = self._cells(rng, effect_a=1.0)
        res = within_subject_2x2(cells)
        contrast = (cells[(1, 0)] + cells[(1, 1)]) / 2 - (cells[(0, 0)] + cells[(0, 1)]) / 2
        t_res = paired_t(contrast, np.zeros_like(contrast))
        assert res["main_a"].statistic == pytest.approx(t_res.statistic**2, rel=1e-9)
        assert res["main_a"].df == (1, len(contrast) - 1)

    def test_detects_planted_effects(self):
        rng = np.random.default_rng(4)
        cells = self._cells(rng, effect_a=2.0, effect_b=0.0)
        res = within_subject_2x2(cells)
        assert res["main_a"].p < 0.01
        assert res["main_b"].p > 0.05

    def test_interaction_contrast(self):
        rng = np.random.default_rng(9)
        cells = self._cells(rng, interaction=3.0)
        res = within_subject_2x2(cells)
        assert res["interaction"].p < 0.01

    def test_missing_cell_raises(self):
        with pytest.raises(ValueError, match="missing cell"):
            within_subject_2x2({(0, 0): [1.0, 2.0]})


class TestBonferroni:
    def test_multiplication_rule(self):
        assert bonferroni([0.03], 3) == [pytest.approx(0.09)]

    def test_cap_at_one(self):
        assert bonferroni([0.5, 0.9], 3) == [1.0, 1.0]

    def test_default_count_is_length(self):
        assert bonferroni([0.01, 0.02]) == [pytest.approx(0.02), pytest.approx(0.04)]

    def test_never_below_uncorrected(self):
        rng = np.random.default_rng(6)
        ps = rng.uniform(size=50).tolist()
        for raw, corr in zip(ps, bonferroni(ps)):
            assert corr >= raw
