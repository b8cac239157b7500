import itertools
import math

import numpy as np
import pytest
from scipy.integrate import quad

from boosterlab import stats
from boosterlab.errors import ScreeningError, StatsError
from boosterlab.stats import (ScreeningOutcome, StatsRow, aggregate_bhld,
                              export_figure_data, screen_participants, t_cdf,
                              t_pdf, t_quantile, welch_t_test)

from conftest import TABLE_DUMMY_ADJUSTMENTS, dummy_records_from_table, make_record


def t_density(x: float, df: float) -> float:
    """Textbook t density, used as the independent integration oracle."""
    return math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)
                    - 0.5 * math.log(df * math.pi)
                    - (df + 1) / 2 * math.log1p(x * x / df))


def tail_by_quadrature(t: float, df: float) -> float:
    value, _ = quad(t_density, t, math.inf, args=(df,))
    return value


class TestTQuantile:
    @pytest.mark.parametrize("p", [0.5, 0.9, 0.975, 0.995])
    @pytest.mark.parametrize("df", [1, 5, 17, 53, 1000])
    def test_cdf_of_quantile_returns_p(self, p, df):
        q = t_quantile(p, df)
        assert abs(t_cdf(q, df) - p) <= 1e-9

    def test_median_is_exactly_zero(self):
        assert t_quantile(0.5, 7) == 0.0
        assert t_quantile(0.5, 1) == 0.0

    def test_large_df_approaches_normal(self):
        # oracle: invert the erf-based normal CDF by bisection
        def normal_cdf(z):
            return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
        lo, hi = 0.0, 10.0
        for _ in range(80):
            mid = (lo + hi) / 2
            if normal_cdf(mid) < 0.975:
                lo = mid
            else:
                hi = mid
        z = (lo + hi) / 2
        assert abs(z - 1.95996) <= 1e-4  # sanity on the oracle itself
        assert abs(t_quantile(0.975, 10 ** 6) - z) <= 1e-4

    def test_symmetry(self):
        assert t_quantile(0.1, 9) == pytest.approx(-t_quantile(0.9, 9), abs=1e-12)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.1])
    def test_rejects_out_of_range(self, p):
        with pytest.raises(StatsError):
            t_quantile(p, 5)

    def test_rejects_bad_df(self):
        with pytest.raises(StatsError):
            t_quantile(0.9, 0)


class TestTCdf:
    @pytest.mark.parametrize("df", [1, 2, 5, 17, 53, 240])
    @pytest.mark.parametrize("t", [-4.0, -1.3, 0.0, 0.5, 2.1, 6.0])
    def test_matches_quadrature(self, df, t):
        ours = t_cdf(t, df)
        oracle = 1.0 - tail_by_quadrature(t, df) if t >= 0 \
            else tail_by_quadrature(-t, df)
        assert abs(ours - oracle) <= 1e-9

    def test_pdf_integrates_to_cdf_slope(self):
        # derivative check at a couple of points
        for t, df in ((0.7, 9), (2.0, 33)):
            h = 1e-6
            numeric = (t_cdf(t + h, df) - t_cdf(t - h, df)) / (2 * h)
            assert abs(numeric - t_pdf(t, df)) <= 1e-6


class TestWelch:
    def test_identical_samples(self):
        r = welch_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert r.t_statistic == 0.0
        assert r.p_value == pytest.approx(1.0, abs=1e-12)

    def test_against_quadrature_oracle(self):
        r = welch_t_test([1, 2, 3, 4, 5], [3, 4, 5, 6, 7])
        oracle = 2.0 * tail_by_quadrature(abs(r.t_statistic), r.df)
        assert abs(r.p_value - oracle) <= 1e-6
        assert r.df == pytest.approx(8.0)

    def test_one_sided_is_half_two_sided_for_positive_t(self):
        a, b = [5, 6, 7, 9.5], [1, 2, 3, 4.5]
        two = welch_t_test(a, b, "two")
        one = welch_t_test(a, b, "one-greater")
        assert two.t_statistic > 0
        assert one.p_value == pytest.approx(two.p_value / 2, rel=1e-12)

    def test_degenerate_inputs(self):
        with pytest.raises(StatsError):
            welch_t_test([1.0], [1.0, 2.0])
        with pytest.raises(StatsError):
            welch_t_test([2.0, 2.0], [3.0, 3.0])
        with pytest.raises(StatsError):
            welch_t_test([1.0, 2.0], [3.0, 4.0], sided="one-less")

    @pytest.mark.parametrize("a,b", [
        ([1.0, 1.6, 1.1, -1.0, -1.4, 0.1, 0.9], [1.3, 2.6, 1.6, 1.4, 0.1, -0.3, 2.3]),
        ([0.0, 0.8, -1.4, -0.4, -1.3, -0.8, 0.9], [-0.7, 0.3, 1.0, 0.1, 0.5, 0.6, 1.2]),
        ([-2.1, 0.6, -1.2, 0.8, 1.8, -0.1, -1.1], [1.2, 1.6, 0.5, 0.8, 2.1, 2.1, 1.5]),
        ([-0.9, -0.1, 0.6, -0.2, -0.6, -0.8, -0.6], [0.1, 0.3, 1.9, -0.0, 1.7, 1.2, 0.9]),
    ])
    def test_against_exact_permutation_oracle(self, a, b):
        welch_p = welch_t_test(a, b).p_value
        pooled = a + b
        t_obs = abs(welch_t_test(a, b).t_statistic)
        hits = total = 0
        for combo in itertools.combinations(range(len(pooled)), len(a)):
            chosen = set(combo)
            aa = [pooled[i] for i in chosen]
            bb = [pooled[i] for i in range(len(pooled)) if i not in chosen]
            t = abs(welch_t_test(aa, bb).t_statistic)
            hits += t >= t_obs - 1e-12
            total += 1
        assert abs(welch_p - hits / total) <= 0.02


class TestScreening:
    def test_reference_table_excludes_only_p9(self):
        outcome = screen_participants(dummy_records_from_table())
        assert outcome.excluded == ("P9",)
        assert "P1" not in outcome.excluded  # one 4 dB miss is tolerated
        assert outcome.dummy_adjustments["P9"] == (2, 5, 1)

    def test_all_zero_dummies_keep_everyone(self):
        table = {f"P{i}": [0, 0, 0] for i in range(1, 5)}
        outcome = screen_participants(dummy_records_from_table(table))
        assert outcome.excluded == ()

    def test_negative_adjustments_count(self):
        table = {"P1": [0, -5, 0], "P2": [0, 0, 0]}
        outcome = screen_participants(dummy_records_from_table(table))
        assert outcome.excluded == ("P1",)

    def test_missing_dummies_raise(self):
        records = [make_record("P1", method="original", bhld=0, trial=i)
                   for i in range(3)]
        records.append(make_record("P2", method="low250", bhld=3))
        with pytest.raises(ScreeningError):
            screen_participants(records)

    def test_too_few_dummies_raise(self):
        table = {"P1": [0, 0]}
        with pytest.raises(ScreeningError):
            screen_participants(dummy_records_from_table(table))

    def test_threshold_is_monotone(self):
        records = dummy_records_from_table()
        sizes = [len(screen_participants(records, th).excluded)
                 for th in (1, 2, 3, 4, 5, 6)]
        assert sizes == sorted(sizes, reverse=True)

    def test_threshold_flag(self):
        outcome = screen_participants(dummy_records_from_table(), threshold_db=4)
        assert set(outcome.excluded) == {"P1", "P9"}


def synthetic_54(mean=5.91, sd=1.745):
    """54 values with the exact requested sample mean and sd."""
    d = sd * math.sqrt(53 / 54)
    values = [mean - d] * 27 + [mean + d] * 27
    return values


class TestAggregation:
    def _records_54(self):
        values = synthetic_54()
        return [make_record("P1", "A", "A", "all250", v, trial=i)
                for i, v in enumerate(values)]

    def test_reference_confidence_interval(self):
        rows = aggregate_bhld(self._records_54())
        assert len(rows) == 1
        row = rows[0]
        assert row.n == 54
        assert row.mean_db == pytest.approx(5.91, abs=1e-9)
        assert row.sd_db == pytest.approx(1.745, abs=1e-9)
        # published interval for this group: 5.42 .. 6.37
        assert abs(row.ci_low_db - 5.42) <= 0.06
        assert abs(row.ci_high_db - 6.37) <= 0.06
        # cross-check against the frozen t(0.975, 53) value
        half = 2.0057459953178687 * 1.745 / math.sqrt(54)
        assert row.ci_low_db == pytest.approx(5.91 - half, abs=1e-9)

    def test_constant_values_give_degenerate_ci(self):
        records = [make_record("P1", "A", "A", "low500", 3.0, trial=i)
                   for i in range(6)]
        row = aggregate_bhld(records)[0]
        assert (row.mean_db, row.sd_db) == (3.0, 0.0)
        assert row.ci_low_db == row.ci_high_db == 3.0

    def test_by_signal_grouping_counts(self):
        records = []
        i = 0
        for signal in "ABC":
            for noise in "ABC":
                for method in ("original", "low250", "all250"):
                    for rep in range(6):
                        records.append(make_record("P1", signal, noise, method,
                                                   1.0 + rep, trial=i))
                        i += 1
        rows = aggregate_bhld(records, "by-signal")
        assert len(rows) == 9  # 3 signals x 3 methods present
        assert all(r.n == 18 for r in rows)

    def test_permutation_invariance(self):
        records = self._records_54()
        rows_fwd = aggregate_bhld(records)
        rows_rev = aggregate_bhld(list(reversed(records)))
        assert rows_fwd == rows_rev

    def test_practice_records_are_ignored(self):
        records = self._records_54()
        records.append(make_record("P1", "A", "A", "all250", 25.0,
                                   scored=False, session=0))
        assert aggregate_bhld(records)[0].n == 54

    def test_unknown_grouping(self):
        with pytest.raises(StatsError):
            aggregate_bhld([], "by-speaker")

    def test_ci_shrinks_like_sqrt_n(self):
        values = synthetic_54()
        single = [make_record("P1", "A", "A", "all250", v, trial=i)
                  for i, v in enumerate(values)]
        doubled = [make_record("P1", "A", "A", "all250", v, trial=i)
                   for i, v in enumerate(values + values)]
        r1 = aggregate_bhld(single)[0]
        r2 = aggregate_bhld(doubled)[0]
        n = r1.n
        # duplication rescales sd by sqrt(2(n-1)/(2n-1)); account for it and
        # for the df change in the t factor
        sd_ratio = math.sqrt(2 * (n - 1) / (2 * n - 1))
        assert r2.sd_db == pytest.approx(r1.sd_db * sd_ratio, rel=1e-12)
        expected_half = (stats.t_quantile(0.975, 2 * n - 1) * r2.sd_db
                         / math.sqrt(2 * n))
        observed_half = (r2.ci_high_db - r2.ci_low_db) / 2
        assert observed_half == pytest.approx(expected_half, rel=1e-9)
        # and the dominant sqrt(2) shrink holds
        plain_ratio = ((r1.ci_high_db - r1.ci_low_db)
                       / (r2.ci_high_db - r2.ci_low_db))
        assert plain_ratio == pytest.approx(
            math.sqrt(2) / sd_ratio
            * stats.t_quantile(0.975, n - 1) / stats.t_quantile(0.975, 2 * n - 1),
            rel=1e-9)


class TestExport:
    def _full_grid_records(self):
        from boosterlab.planner import enumerate_conditions
        records = []
        for i, cond in enumerate(enumerate_conditions()):
            for rep in range(2):
                records.append(make_record("P1", cond.signal_id, cond.noise_id,
                                           cond.method.key, float(rep), trial=i))
        return records

    def test_overall_has_eight_rows(self):
        rows = aggregate_bhld(self._full_grid_records())
        csv_text = export_figure_data(rows)
        lines = csv_text.strip().splitlines()
        assert lines[0].startswith("grouping,group,method,fc_hz")
        assert len(lines) == 1 + 8

    def test_by_signal_has_twenty_four_rows(self):
        rows = aggregate_bhld(self._full_grid_records(), "by-signal")
        assert len(export_figure_data(rows).strip().splitlines()) == 1 + 24

    def test_empty_input_gives_header_only(self):
        assert export_figure_data([]).strip().splitlines() == [
            "grouping,group,method,fc_hz,n,mean_db,sd_db,ci_low_db,ci_high_db,level"]
