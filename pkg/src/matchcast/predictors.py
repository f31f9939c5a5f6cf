"""Model adapters: each wires one engine into the evaluation Predictor protocol.

Model identifiers accepted on the command line and in config files:

    trivial         uniform (1/3, 1/3, 1/3) baseline
    mn-dir1         equal-weight Dirichlet count mixture, flat prior
    mn-dir2         weighted Dirichlet mixture, (w, alpha) cross-validated
                    on each season's first half
    bt              Davidson paired-comparison model, refit every matchday
    poisson-lee     independent bivariate Poisson, current season window
    poisson-biv     correlated bivariate Poisson, configurable window
    external:<path> third-party predictions from an interchange CSV
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Mapping

from .data import (
    MatchRecord,
    Prediction,
    TRIVIAL_PREDICTION,
    Venue,
    first_half_rounds,
    normalize_team,
    outcome_of,
    tally_records,
)
from .davidson import FitSettings, bt_fit, bt_outcome_probs, bt_params_to_csv
from .dirichlet import GridSpec, MnDir2Config, cv_select, mn_dir1_predict, mn_dir2_predict
from .evaluation import PredictionContext
from .poisson import (
    DEFAULT_TAIL_TOL,
    PoissonSettings,
    TrainingWindow,
    link_rates,
    outcome_probs,
    poisson_fit,
    strengths_to_csv,
)

KNOWN_MODELS = ("trivial", "mn-dir1", "mn-dir2", "bt", "poisson-lee", "poisson-biv")


class TrivialPredictor:
    """The baseline every model must beat: the uniform forecast."""

    name = "trivial"

    def predict(self, ctx: PredictionContext) -> Mapping[MatchRecord, Prediction]:
        return {fixture: TRIVIAL_PREDICTION for fixture in ctx.fixtures}


class MnDir1Predictor:
    """Equal-weight mixture of home-venue and away-venue count posteriors."""

    name = "mn-dir1"

    def predict(self, ctx: PredictionContext) -> Mapping[MatchRecord, Prediction]:
        current = ctx.current_season_history()
        out = {}
        for fixture in ctx.fixtures:
            home_counts = tally_records(current, fixture.home, Venue.HOME)
            away_counts = tally_records(current, fixture.away, Venue.AWAY)
            out[fixture] = mn_dir1_predict(home_counts, away_counts)
        return out


class MnDir2Predictor:
    """Weighted mixture: (w, alpha) picked by first-half Brier cross-validation.

    Selection happens once per season, the first time a second-half context
    of that season arrives; the completed first half is then guaranteed to
    be in the history.
    """

    name = "mn-dir2"

    def __init__(self, grid: GridSpec | None = None):
        self.grid = grid or GridSpec.default()
        self._selected: dict[int, MnDir2Config] = {}

    def _config_for(self, ctx: PredictionContext) -> MnDir2Config:
        year = ctx.season_year
        if year not in self._selected:
            half = first_half_rounds(ctx.season_rounds)
            if ctx.matchday <= half:
                raise ValueError("mn-dir2 needs the completed first half for tuning")
            first_half = [
                (r, outcome_of(r))
                for r in ctx.current_season_history()
                if r.matchday <= half
            ]
            self._selected[year] = cv_select(first_half, self.grid)
        return self._selected[year]

    def predict(self, ctx: PredictionContext) -> Mapping[MatchRecord, Prediction]:
        cfg = self._config_for(ctx)
        current = ctx.current_season_history()
        out = {}
        for fixture in ctx.fixtures:
            home_counts = tally_records(current, fixture.home, Venue.HOME)
            away_counts = tally_records(current, fixture.away, Venue.AWAY)
            out[fixture] = mn_dir2_predict(home_counts, away_counts, cfg)
        return out

    def settings_by_year(self) -> dict[int, dict[str, str]]:
        return {
            year: {
                "w": f"{cfg.weights.w_home:.6f}",
                "alpha": f"{cfg.alpha:.6f}",
            }
            for year, cfg in sorted(self._selected.items())
        }


class DavidsonPredictor:
    """Paired-comparison model refit on all earlier matches of the season."""

    name = "bt"

    def __init__(self, settings: FitSettings | None = None):
        self.settings = settings or FitSettings()
        self.last_fit = None

    def predict(self, ctx: PredictionContext) -> Mapping[MatchRecord, Prediction]:
        training = [(r, outcome_of(r)) for r in ctx.current_season_history()]
        fitted = bt_fit(training, self.settings)
        self.last_fit = fitted
        return {
            fixture: bt_outcome_probs(fitted.params, fixture.home, fixture.away)
            for fixture in ctx.fixtures
        }

    def export_params_csv(self) -> str | None:
        """Fitted worths from the most recent refit, or None before any fit."""
        if self.last_fit is None:
            return None
        return bt_params_to_csv(self.last_fit.params)


class PoissonPredictor:
    """Goals model refit on a training window, scores summed into outcomes."""

    def __init__(
        self,
        name: str,
        correlated: bool,
        window: TrainingWindow,
        tail_tol: float = DEFAULT_TAIL_TOL,
        settings: PoissonSettings | None = None,
    ):
        self.name = name
        self.correlated = correlated
        self.window = window
        self.tail_tol = tail_tol
        self.settings = settings or PoissonSettings()
        self.last_strengths = None

    def _training(self, ctx: PredictionContext) -> list[MatchRecord]:
        current = list(ctx.current_season_history())
        if self.window.kind == "season":
            return current
        if self.window.kind == "all":
            return list(ctx.history)
        assert self.window.n_rounds is not None
        return [m for m in current if m.matchday >= ctx.matchday - self.window.n_rounds]

    def predict(self, ctx: PredictionContext) -> Mapping[MatchRecord, Prediction]:
        strengths, _ = poisson_fit(
            self._training(ctx), correlated=self.correlated, settings=self.settings
        )
        self.last_strengths = strengths
        out = {}
        for fixture in ctx.fixtures:
            rates = link_rates(strengths, fixture.home, fixture.away)
            out[fixture] = outcome_probs(rates, self.tail_tol)
        return out

    def export_params_csv(self) -> str | None:
        """Fitted strengths from the most recent refit, or None before any fit."""
        if self.last_strengths is None:
            return None
        return strengths_to_csv(self.last_strengths)


PREDICTIONS_CSV_HEADER = ("season", "matchday", "home", "away", "p1", "p2", "p3")


def parse_prediction_rows(
    csv_text: str,
) -> dict[tuple[int, int, str, str], Prediction]:
    """Parse the prediction interchange CSV into a fixture-keyed table.

    Probability triples off the simplex by at most 1e-3 (rounded published
    numbers) are renormalized; anything worse is rejected.
    """
    reader = csv.reader(io.StringIO(csv_text))
    header = next(reader, None)
    if header is None or tuple(h.strip().lower() for h in header) != PREDICTIONS_CSV_HEADER:
        raise ValueError(
            f"bad predictions header {header!r}, expected {','.join(PREDICTIONS_CSV_HEADER)}"
        )
    table: dict[tuple[int, int, str, str], Prediction] = {}
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 7:
            raise ValueError(f"line {line}: expected 7 fields, got {len(row)}")
        try:
            season, matchday = int(row[0]), int(row[1])
            probs = [float(x) for x in row[4:7]]
        except ValueError as exc:
            raise ValueError(f"line {line}: {exc}") from None
        total = sum(probs)
        if any(p < 0.0 for p in probs) or not 1.0 - 1e-3 <= total <= 1.0 + 1e-3:
            raise ValueError(f"line {line}: probabilities {probs} are not a distribution")
        probs = [p / total for p in probs]
        key = (season, matchday, normalize_team(row[2]), normalize_team(row[3]))
        if key in table:
            raise ValueError(f"line {line}: duplicate prediction for {key}")
        table[key] = Prediction(*probs)
    return table


class ExternalPredictor:
    """Published third-party forecasts, matched to fixtures by key.

    Fixtures absent from the file simply get no prediction; the evaluation
    harness records and flags them.
    """

    def __init__(self, path: str | Path, name: str | None = None):
        self.name = name or f"external:{path}"
        self.table = parse_prediction_rows(Path(path).read_text(encoding="utf-8"))

    def predict(self, ctx: PredictionContext) -> Mapping[MatchRecord, Prediction]:
        out = {}
        for fixture in ctx.fixtures:
            key = (fixture.season, fixture.matchday, fixture.home, fixture.away)
            found = self.table.get(key)
            if found is not None:
                out[fixture] = found
        return out


def build_predictor(
    spec: str,
    *,
    grid: GridSpec | None = None,
    bt_settings: FitSettings | None = None,
    poisson_settings: PoissonSettings | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
    window: TrainingWindow | None = None,
    correlated: bool = True,
):
    """Instantiate a predictor from its command-line identifier.

    ``window`` and ``correlated`` configure the ``poisson-biv`` model only;
    ``poisson-lee`` is pinned to an independent fit on the current season.
    """
    if spec == "trivial":
        return TrivialPredictor()
    if spec == "mn-dir1":
        return MnDir1Predictor()
    if spec == "mn-dir2":
        return MnDir2Predictor(grid)
    if spec == "bt":
        return DavidsonPredictor(bt_settings)
    if spec == "poisson-lee":
        return PoissonPredictor(
            "poisson-lee",
            correlated=False,
            window=TrainingWindow("season"),
            tail_tol=tail_tol,
            settings=poisson_settings,
        )
    if spec == "poisson-biv":
        return PoissonPredictor(
            "poisson-biv",
            correlated=correlated,
            window=window or TrainingWindow("all"),
            tail_tol=tail_tol,
            settings=poisson_settings,
        )
    if spec.startswith("external:"):
        return ExternalPredictor(spec.split(":", 1)[1])
    raise ValueError(f"unknown model {spec!r}; known: {', '.join(KNOWN_MODELS)} or external:<path>")
