import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import poisson as poisson_dist

from matchcast.data import MatchRecord
from matchcast.poisson import (
    BivPoissonParams,
    TeamStrengths,
    TrainingWindow,
    _PoissonObjective,
    bivpois_pmf,
    link_rates,
    outcome_probs,
    outcome_probs_from_grid,
    poisson_fit,
    poisson_rolling_predict,
    score_grid,
    strengths_to_csv,
)
from matchcast.selftest import double_round_robin, simulate_poisson_matches


def pmf_by_exact_summation(params, y1, y2):
    """Direct-sum oracle: the k-sum evaluated in exact rational arithmetic.

    Only the final exp factor is floating point, so the comparison isolates
    the log-sum-exp evaluation path.
    """
    l1 = Fraction(params.lambda1)
    l2 = Fraction(params.lambda2)
    l3 = Fraction(params.lambda3)
    total = Fraction(0)
    for k in range(min(y1, y2) + 1):
        total += (
            l1 ** (y1 - k)
            * l2 ** (y2 - k)
            * l3**k
            / (
                Fraction(math.factorial(y1 - k))
                * Fraction(math.factorial(y2 - k))
                * Fraction(math.factorial(k))
            )
        )
    scale = math.exp(-(params.lambda1 + params.lambda2 + params.lambda3))
    return scale * float(total)


class TestPmf:
    def test_zero_zero_is_exponential_factor(self):
        params = BivPoissonParams(1.7, 0.6, 0.4)
        assert bivpois_pmf(params, 0, 0) == pytest.approx(
            math.exp(-(1.7 + 0.6 + 0.4)), rel=1e-14
        )

    def test_independent_case_factorizes(self):
        params = BivPoissonParams(1.2, 0.9, 0.0)
        for y1 in range(10):
            for y2 in range(10):
                want = float(
                    poisson_dist.pmf(y1, 1.2) * poisson_dist.pmf(y2, 0.9)
                )
                assert bivpois_pmf(params, y1, y2) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("y1,y2", [(2, 1), (0, 5), (5, 5), (3, 7), (10, 10)])
    def test_against_exact_summation_oracle(self, y1, y2):
        params = BivPoissonParams(1.2, 0.9, 0.3)
        want = pmf_by_exact_summation(params, y1, y2)
        assert bivpois_pmf(params, y1, y2) == pytest.approx(want, rel=1e-12)

    def test_grid_agrees_with_pointwise_pmf(self):
        params = BivPoissonParams(1.5, 1.1, 0.25)
        grid = score_grid(params, 1e-8)
        for i in range(min(grid.max_goals, 8) + 1):
            for j in range(min(grid.max_goals, 8) + 1):
                assert grid.mass[i, j] == pytest.approx(
                    bivpois_pmf(params, i, j), rel=1e-10
                )

    def test_negative_goals_rejected(self):
        with pytest.raises(ValueError):
            bivpois_pmf(BivPoissonParams(1, 1, 0), -1, 0)


class TestLinkRates:
    def _strengths(self, **kwargs):
        base = dict(
            mu=0.0,
            attack={"a": 0.0, "b": 0.0},
            defense={"a": 0.0, "b": 0.0},
            gamma_home=0.0,
            lambda3=0.0,
        )
        base.update(kwargs)
        return TeamStrengths(**base)

    def test_identity_links(self):
        rates = link_rates(self._strengths(), "a", "b")
        assert (rates.lambda1, rates.lambda2) == (1.0, 1.0)

    def test_home_advantage_multiplies(self):
        rates = link_rates(self._strengths(gamma_home=math.log(2)), "a", "b")
        assert rates.lambda1 == pytest.approx(2.0, rel=1e-15)
        assert rates.lambda2 == pytest.approx(1.0, rel=1e-15)

    def test_composite_exponent(self):
        strengths = TeamStrengths(
            mu=0.1,
            attack={"a": 0.2, "b": -0.2},
            defense={"a": 0.1, "b": -0.1},
            gamma_home=0.3,
            lambda3=0.0,
        )
        rates = link_rates(strengths, "a", "b")
        assert rates.lambda1 == pytest.approx(math.exp(0.1 + 0.2 + 0.1 + 0.3), rel=1e-15)
        assert rates.lambda2 == pytest.approx(math.exp(0.1 - 0.2 - 0.1), rel=1e-15)

    def test_unknown_team(self):
        with pytest.raises(KeyError):
            link_rates(self._strengths(), "a", "zz")

    def test_zero_sum_constraint_enforced(self):
        with pytest.raises(ValueError, match="sum to"):
            TeamStrengths(
                mu=0.0,
                attack={"a": 0.5, "b": 0.0},
                defense={"a": 0.0, "b": 0.0},
                gamma_home=0.0,
            )


class TestScoreGrid:
    @pytest.mark.parametrize("tail_tol", [1e-4, 1e-8, 1e-10])
    def test_mass_meets_tolerance(self, tail_tol):
        grid = score_grid(BivPoissonParams(1.0, 1.0, 0.0), tail_tol)
        assert float(grid.mass.sum()) >= 1.0 - tail_tol
        assert grid.truncation_deficit <= tail_tol

    def test_grid_size_is_minimal_for_the_marginal_bound(self):
        params = BivPoissonParams(1.3, 0.8, 0.2)
        tail_tol = 1e-8
        grid = score_grid(params, tail_tol)
        g = grid.max_goals
        m1, m2 = 1.3 + 0.2, 0.8 + 0.2
        assert poisson_dist.sf(g, m1) + poisson_dist.sf(g, m2) <= tail_tol
        assert poisson_dist.sf(g - 1, m1) + poisson_dist.sf(g - 1, m2) > tail_tol

    def test_total_plus_deficit_is_one(self):
        grid = score_grid(BivPoissonParams(2.0, 1.5, 0.3), 1e-10)
        assert float(grid.mass.sum()) + grid.truncation_deficit == pytest.approx(
            1.0, abs=1e-12
        )

    def test_near_point_mass(self):
        grid = score_grid(BivPoissonParams(1e-6, 1e-6, 0.0), 1e-10)
        assert grid.max_goals <= 2
        assert grid.mass[0, 0] == pytest.approx(1.0, abs=1e-5)

    def test_marginal_rows_match_poisson(self):
        params = BivPoissonParams(1.4, 1.0, 0.5)
        tail_tol = 1e-10
        grid = score_grid(params, tail_tol)
        row_sums = grid.mass.sum(axis=1)
        for i in range(grid.max_goals + 1):
            want = float(poisson_dist.pmf(i, params.lambda1 + params.lambda3))
            assert abs(row_sums[i] - want) <= tail_tol

    def test_tail_tol_range_enforced(self):
        with pytest.raises(ValueError):
            score_grid(BivPoissonParams(1, 1, 0), 0.01)

    def test_deficit_shrinks_as_tolerance_tightens(self):
        params = BivPoissonParams(1.8, 1.2, 0.4)
        deficits = [
            score_grid(params, tol).truncation_deficit
            for tol in (1e-4, 1e-6, 1e-8, 1e-10)
        ]
        assert all(a >= b for a, b in zip(deficits, deficits[1:]))
        assert deficits[-1] <= 1e-10


class TestOutcomeProbs:
    def test_symmetric_rates_balance_win_loss(self):
        p = outcome_probs(BivPoissonParams(1.3, 1.3, 0.2))
        assert p.p_home == pytest.approx(p.p_away, abs=1e-12)

    def test_monte_carlo_oracle(self, rng):
        params = BivPoissonParams(2.0, 0.5, 0.0)
        n = 1_000_000
        y1 = rng.poisson(2.0, size=n)
        y2 = rng.poisson(0.5, size=n)
        sim = np.array(
            [(y1 > y2).mean(), (y1 == y2).mean(), (y1 < y2).mean()]
        )
        p = np.array(outcome_probs(params).as_tuple())
        se = np.sqrt(sim * (1 - sim) / n)
        assert np.all(np.abs(p - sim) <= 3 * se)

    def test_independent_scores_have_near_zero_covariance(self, rng):
        n = 500_000
        y1 = rng.poisson(1.2, size=n).astype(float)
        y2 = rng.poisson(0.9, size=n).astype(float)
        prods = (y1 - y1.mean()) * (y2 - y2.mean())
        se = prods.std(ddof=1) / np.sqrt(n)
        assert abs(prods.mean()) <= 3 * se

    def test_point_mass_at_zero_is_certain_draw(self):
        p = outcome_probs(BivPoissonParams(1e-6, 1e-6, 0.0))
        assert p.p_draw == pytest.approx(1.0, abs=1e-5)

    def test_rejects_large_deficit(self):
        grid = score_grid(BivPoissonParams(1.0, 1.0, 0.0), 1e-4)
        with pytest.raises(ValueError, match="deficit"):
            outcome_probs_from_grid(grid)

    def test_on_simplex(self, rng):
        for _ in range(50):
            params = BivPoissonParams(
                float(rng.uniform(0.2, 4.0)),
                float(rng.uniform(0.2, 4.0)),
                float(rng.uniform(0.0, 1.0)),
            )
            p = outcome_probs(params)
            assert abs(sum(p.as_tuple()) - 1.0) < 1e-12


def _true_strengths(lambda3=0.0):
    return TeamStrengths(
        mu=0.15,
        attack={"a": 0.25, "b": 0.05, "c": -0.1, "d": -0.2},
        defense={"a": 0.15, "b": -0.05, "c": 0.0, "d": -0.1},
        gamma_home=0.3,
        lambda3=lambda3,
    )


class TestFit:
    def test_uniform_draws_give_zero_strengths(self):
        records = []
        for matchday, rnd in enumerate(double_round_robin(["a", "b", "c", "d"]), start=1):
            for h, a in rnd:
                records.append(MatchRecord(2014, matchday, h, a, 1, 1))
        strengths, report = poisson_fit(records)
        assert report.converged
        for team in strengths.attack:
            assert strengths.attack[team] == pytest.approx(0.0, abs=1e-6)
            assert strengths.defense[team] == pytest.approx(0.0, abs=1e-6)
        # All scores 1-1: both rates are 1, so mu = gamma = 0.
        assert strengths.mu == pytest.approx(0.0, abs=1e-6)
        assert strengths.gamma_home == pytest.approx(0.0, abs=1e-6)

    def test_gradient_matches_central_differences(self, rng):
        records = simulate_poisson_matches(_true_strengths(0.2), list("abcd"), 6, rng)
        for correlated in (False, True):
            objective = _PoissonObjective(list("abcd"), records, correlated)
            for _ in range(5):
                theta = rng.uniform(-0.8, 0.8, size=objective.n_params)
                _, grad = objective(theta)
                for i in range(theta.size):
                    h = 1e-6 * max(1.0, abs(theta[i]))
                    up, down = theta.copy(), theta.copy()
                    up[i] += h
                    down[i] -= h
                    fd = (objective(up)[0] - objective(down)[0]) / (2 * h)
                    assert abs(grad[i] - fd) / max(abs(grad[i]), abs(fd), 1.0) < 1e-5

    def test_recovers_known_strengths(self, rng):
        true = _true_strengths()
        records = simulate_poisson_matches(true, list("abcd"), 250, rng)
        strengths, report = poisson_fit(records)
        assert report.converged
        assert strengths.mu == pytest.approx(true.mu, abs=0.06)
        assert strengths.gamma_home == pytest.approx(true.gamma_home, abs=0.06)
        for t in "abcd":
            assert strengths.attack[t] == pytest.approx(true.attack[t], abs=0.06)
            assert strengths.defense[t] == pytest.approx(true.defense[t], abs=0.06)

    def test_recovers_shared_component(self, rng):
        true = _true_strengths(lambda3=0.2)
        records = simulate_poisson_matches(true, list("abcd"), 250, rng)
        strengths, report = poisson_fit(records, correlated=True)
        assert strengths.lambda3 == pytest.approx(0.2, abs=0.1)

    def test_independent_fit_pins_lambda3(self, rng):
        records = simulate_poisson_matches(_true_strengths(), list("abcd"), 5, rng)
        strengths, _ = poisson_fit(records, correlated=False)
        assert strengths.lambda3 == 0.0

    def test_zero_sum_exact_by_construction(self, rng):
        records = simulate_poisson_matches(_true_strengths(), list("abcd"), 20, rng)
        strengths, _ = poisson_fit(records)
        assert float(np.array(list(strengths.attack.values())).sum()) == 0.0
        assert float(np.array(list(strengths.defense.values())).sum()) == 0.0

    def test_unplayed_match_rejected(self):
        with pytest.raises(ValueError, match="played"):
            poisson_fit([MatchRecord(2014, 1, "a", "b")])

    def test_deterministic(self, rng):
        records = simulate_poisson_matches(_true_strengths(), list("abcd"), 10, rng)
        first, _ = poisson_fit(records)
        second, _ = poisson_fit(records)
        assert first == second


class TestTrainingWindow:
    def test_parse_forms(self):
        assert TrainingWindow.parse("season").kind == "season"
        assert TrainingWindow.parse("all").kind == "all"
        window = TrainingWindow.parse("last_n_rounds:3")
        assert (window.kind, window.n_rounds) == ("last_n_rounds", 3)
        with pytest.raises(ValueError):
            TrainingWindow.parse("bogus")

    def test_selection_semantics(self, mid_season, two_seasons):
        earlier = [m for m in two_seasons[0].matches]
        season = two_seasons[1]
        md = 6
        current = TrainingWindow("season").select(season, md)
        assert all(m.season == season.year and m.matchday < md for m in current)
        assert len(current) == 15  # matchdays 1..5, three matches each

        everything = TrainingWindow("all").select(season, md, earlier)
        assert len(everything) == len(earlier) + len(current)

        recent = TrainingWindow("last_n_rounds", 2).select(season, md)
        assert sorted({m.matchday for m in recent}) == [4, 5]


class TestRollingPredict:
    def test_current_season_window_composition(self, mid_season):
        md = 7
        rolling = poisson_rolling_predict(mid_season, md)
        training = [m for m in mid_season.matches if m.matchday < md]
        strengths, _ = poisson_fit(training)
        for fixture, prediction in rolling.items():
            direct = outcome_probs(link_rates(strengths, fixture.home, fixture.away))
            assert prediction == direct

    def test_cross_season_window_changes_fit(self, two_seasons):
        md = 6
        season = two_seasons[1]
        earlier = list(two_seasons[0].matches)
        lee_style = poisson_rolling_predict(season, md, window=TrainingWindow("season"))
        pooled = poisson_rolling_predict(
            season, md, window=TrainingWindow("all"), earlier_seasons=earlier
        )
        assert set(lee_style) == set(pooled)
        assert any(lee_style[f] != pooled[f] for f in lee_style)

    def test_repeat_call_is_bitwise_identical(self, mid_season):
        a = poisson_rolling_predict(mid_season, 6)
        b = poisson_rolling_predict(mid_season, 6)
        assert a == b

    def test_rejects_first_half(self, mid_season):
        with pytest.raises(ValueError, match="second half"):
            poisson_rolling_predict(mid_season, 3)


class TestCsvExport:
    def test_shape(self):
        text = strengths_to_csv(_true_strengths(0.1))
        lines = text.strip().splitlines()
        assert lines[0] == "team,att,def"
        assert len(lines) == 1 + 4 + 3
        assert lines[-3].startswith("mu,")
        assert lines[-1].startswith("lambda3,")
