"""Rolling second-half evaluation harness.

Every predictor is driven through the same protocol: for each second-half
matchday of each season it receives a :class:`PredictionContext` exposing
only strictly earlier results (plus the matchday's fixtures with goals
stripped) and returns a probability triple per fixture.  The context is
the leakage guard: a predictor cannot read the outcome of any match it is
asked to forecast, because that information never crosses the interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence, runtime_checkable

import numpy as np

from .data import (
    MatchRecord,
    Outcome,
    Prediction,
    Season,
    outcome_of,
    second_half_matchdays,
)
from .scoring import (
    CalibrationTable,
    GofResult,
    brier,
    calibration_curve,
    chi_square_gof,
    cond_home_win_given_no_draw,
    entropy,
    log_score,
    spherical,
    top_choice_error,
)


@dataclass(frozen=True)
class PredictionContext:
    """Everything a predictor may see when forecasting one matchday.

    ``history`` holds played matches strictly before the target matchday
    (earlier seasons included, for models with long training windows);
    ``fixtures`` are the target matchday's pairings with goals stripped.
    Construction enforces both properties.
    """

    season_year: int
    matchday: int
    season_rounds: int
    history: tuple[MatchRecord, ...]
    fixtures: tuple[MatchRecord, ...]

    def __post_init__(self) -> None:
        for r in self.history:
            if not r.played:
                raise ValueError(f"history contains an unplayed match: {r}")
            earlier = r.season < self.season_year or (
                r.season == self.season_year and r.matchday < self.matchday
            )
            if not earlier:
                raise ValueError(
                    f"history leaks match data from matchday {r.matchday} "
                    f"of season {r.season}"
                )
        for f in self.fixtures:
            if f.played:
                raise ValueError(f"fixture carries a result: {f}")
            if f.season != self.season_year or f.matchday != self.matchday:
                raise ValueError(f"fixture outside the target matchday: {f}")

    def current_season_history(self) -> tuple[MatchRecord, ...]:
        return tuple(r for r in self.history if r.season == self.season_year)


@runtime_checkable
class Predictor(Protocol):
    """A named model that maps a context to one prediction per fixture."""

    name: str

    def predict(self, ctx: PredictionContext) -> Mapping[MatchRecord, Prediction]:
        ...


def context_for(
    seasons: Sequence[Season], season: Season, matchday: int
) -> PredictionContext:
    """Build the context for one matchday from a full dataset."""
    earlier: list[MatchRecord] = []
    for other in sorted(seasons, key=lambda s: s.year):
        if other.year < season.year:
            earlier.extend(m for m in other.matches if m.played)
    earlier.extend(season.played_before(matchday))
    fixtures = tuple(m.scheduled_copy() for m in season.matches_of(matchday))
    return PredictionContext(
        season_year=season.year,
        matchday=matchday,
        season_rounds=season.rounds,
        history=tuple(earlier),
        fixtures=fixtures,
    )


@dataclass(frozen=True)
class ScoredMatch:
    """One second-half match scored under every rule."""

    match: MatchRecord
    prediction: Prediction
    outcome: Outcome
    brier: float
    log: float
    spherical: float
    top_choice_error: int
    top_choice_tied: bool
    entropy: float
    cond_home_win: float | None


@dataclass(frozen=True)
class ScoreStats:
    """Mean and total of one rule with standard errors (finite entries only)."""

    mean: float
    total: float
    se_mean: float
    se_total: float
    n: int
    infinite: int = 0


@dataclass(frozen=True)
class DistStats:
    mean: float
    minimum: float
    q25: float
    median: float
    q75: float
    maximum: float


@dataclass(frozen=True)
class Aggregates:
    n_scored: int
    brier: ScoreStats
    log: ScoreStats
    spherical: ScoreStats
    proportion_of_errors: float
    argmax_ties: int
    entropy: DistStats
    cond_home_win: DistStats | None
    cond_home_win_absent: int


@dataclass(frozen=True)
class YearSummary:
    season: int
    n_scored: int
    brier_mean: float
    log_mean: float
    spherical_mean: float
    proportion_of_errors: float
    entropy_mean: float
    gof: GofResult


@dataclass(frozen=True)
class SkippedMatchday:
    season: int
    matchday: int
    reason: str


@dataclass(frozen=True)
class ModelReport:
    """Scores and diagnostics for one predictor over the evaluation window."""

    model: str
    per_match: tuple[ScoredMatch, ...]
    aggregates: Aggregates
    per_year: tuple[YearSummary, ...]
    calibration: CalibrationTable | None
    gof: GofResult
    settings_by_year: Mapping[int, Mapping[str, str]]
    skipped_matchdays: tuple[SkippedMatchday, ...]
    missing_predictions: int

    @property
    def flagged_count(self) -> int:
        return (
            len(self.skipped_matchdays)
            + self.missing_predictions
            + self.aggregates.log.infinite
            + self.aggregates.argmax_ties
        )


def _score_stats(values: Sequence[float]) -> ScoreStats:
    finite = np.asarray([v for v in values if math.isfinite(v)], dtype=float)
    infinite = len(values) - finite.size
    if finite.size == 0:
        return ScoreStats(math.nan, math.nan, math.nan, math.nan, 0, infinite)
    sd = float(np.std(finite, ddof=1)) if finite.size > 1 else 0.0
    root_n = math.sqrt(finite.size)
    return ScoreStats(
        mean=float(finite.mean()),
        total=float(finite.sum()),
        se_mean=sd / root_n,
        se_total=sd * root_n,
        n=int(finite.size),
        infinite=infinite,
    )


def _dist_stats(values: Sequence[float]) -> DistStats:
    arr = np.asarray(values, dtype=float)
    q25, median, q75 = (float(q) for q in np.quantile(arr, [0.25, 0.5, 0.75]))
    return DistStats(
        mean=float(arr.mean()),
        minimum=float(arr.min()),
        q25=q25,
        median=median,
        q75=q75,
        maximum=float(arr.max()),
    )


def score_match(match: MatchRecord, prediction: Prediction) -> ScoredMatch:
    """Apply every rule to one played match."""
    outcome = outcome_of(match)
    error, tied = top_choice_error(outcome, prediction)
    return ScoredMatch(
        match=match,
        prediction=prediction,
        outcome=outcome,
        brier=brier(outcome, prediction),
        log=log_score(outcome, prediction),
        spherical=spherical(outcome, prediction),
        top_choice_error=error,
        top_choice_tied=tied,
        entropy=entropy(prediction),
        cond_home_win=cond_home_win_given_no_draw(prediction),
    )


def _aggregate(scored: Sequence[ScoredMatch]) -> Aggregates:
    cond_values = [s.cond_home_win for s in scored if s.cond_home_win is not None]
    return Aggregates(
        n_scored=len(scored),
        brier=_score_stats([s.brier for s in scored]),
        log=_score_stats([s.log for s in scored]),
        spherical=_score_stats([s.spherical for s in scored]),
        proportion_of_errors=sum(s.top_choice_error for s in scored) / len(scored),
        argmax_ties=sum(1 for s in scored if s.top_choice_tied),
        entropy=_dist_stats([s.entropy for s in scored]),
        cond_home_win=_dist_stats(cond_values) if cond_values else None,
        cond_home_win_absent=len(scored) - len(cond_values),
    )


def _year_summary(year: int, scored: Sequence[ScoredMatch]) -> YearSummary:
    finite_logs = [s.log for s in scored if math.isfinite(s.log)]
    return YearSummary(
        season=year,
        n_scored=len(scored),
        brier_mean=float(np.mean([s.brier for s in scored])),
        log_mean=float(np.mean(finite_logs)) if finite_logs else math.nan,
        spherical_mean=float(np.mean([s.spherical for s in scored])),
        proportion_of_errors=sum(s.top_choice_error for s in scored) / len(scored),
        entropy_mean=float(np.mean([s.entropy for s in scored])),
        gof=chi_square_gof([(s.match, s.prediction) for s in scored]),
    )


def check_evaluable(seasons: Sequence[Season]) -> None:
    """Every second-half match must be played before scoring can start."""
    for season in seasons:
        for matchday in second_half_matchdays(season):
            for m in season.matches_of(matchday):
                if not m.played:
                    raise ValueError(
                        f"season {season.year} matchday {matchday}: unplayed match "
                        f"{m.home} vs {m.away}"
                    )


def evaluate(
    predictors: Sequence[Predictor],
    seasons: Sequence[Season],
    *,
    calibration_bins: int = 10,
) -> list[ModelReport]:
    """Score every predictor over the second half of every season.

    Predictors are refit/updated per their own protocol through the context
    they receive; a predictor failure on a matchday skips that matchday for
    that predictor (flagged) and the run continues.  Reports come back in
    the predictor order given, each covering all seasons with a per-year
    breakdown.
    """
    ordered_seasons = sorted(seasons, key=lambda s: s.year)
    check_evaluable(ordered_seasons)
    reports = []
    for predictor in predictors:
        scored: list[ScoredMatch] = []
        skipped: list[SkippedMatchday] = []
        missing = 0
        for season in ordered_seasons:
            for matchday in second_half_matchdays(season):
                ctx = context_for(ordered_seasons, season, matchday)
                try:
                    predictions = predictor.predict(ctx)
                except Exception as exc:  # noqa: BLE001 - predictor failures are data
                    skipped.append(
                        SkippedMatchday(season.year, matchday, f"{type(exc).__name__}: {exc}")
                    )
                    continue
                for fixture, match in zip(ctx.fixtures, season.matches_of(matchday)):
                    prediction = predictions.get(fixture)
                    if prediction is None:
                        missing += 1
                        continue
                    scored.append(score_match(match, prediction))
        if not scored:
            raise ValueError(f"predictor {predictor.name!r} produced no predictions")

        by_year: dict[int, list[ScoredMatch]] = {}
        for s in scored:
            by_year.setdefault(s.match.season, []).append(s)
        per_year = tuple(_year_summary(y, by_year[y]) for y in sorted(by_year))
        gof = per_year[0].gof
        for summary in per_year[1:]:
            gof = gof + summary.gof

        pairs = [(s.outcome, s.prediction) for s in scored]
        calibration = None
        if len(pairs) * 3 >= 30:
            calibration = calibration_curve(pairs, bins=calibration_bins)

        settings: Mapping[int, Mapping[str, str]] = {}
        exporter = getattr(predictor, "settings_by_year", None)
        if callable(exporter):
            settings = exporter()

        reports.append(
            ModelReport(
                model=predictor.name,
                per_match=tuple(scored),
                aggregates=_aggregate(scored),
                per_year=per_year,
                calibration=calibration,
                gof=gof,
                settings_by_year=settings,
                skipped_matchdays=tuple(skipped),
                missing_predictions=missing,
            )
        )
    return reports
