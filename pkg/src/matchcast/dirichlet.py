"""Conjugate Dirichlet updating, opinion pooling and the count-based predictors.

The categorical outcome of a match (win/draw/loss) under a Dirichlet prior
has a closed-form posterior predictive: each outcome probability is
(count + concentration) / (total + concentration sum).  Two observers --
one watching the home side at home, one watching the away side away --
are combined by linear opinion pooling with the away observer's win/loss
components swapped into the home team's frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .data import CountVector, MatchRecord, Outcome, Prediction, Venue
from .scoring import brier


@dataclass(frozen=True)
class DirichletParams:
    """Dirichlet concentrations over (win, draw, loss).

    The prior base is kept apart from accumulated integer match counts so
    that sequential conjugate updates compose exactly: updating with c1 and
    then c2 produces the same object, bit for bit, as updating once with
    c1 + c2.  The effective concentrations are ``a_win``, ``a_draw``,
    ``a_loss``.
    """

    base_win: float
    base_draw: float
    base_loss: float
    wins: int = 0
    draws: int = 0
    losses: int = 0

    def __post_init__(self) -> None:
        if min(self.base_win, self.base_draw, self.base_loss) <= 0.0:
            raise ValueError("concentration parameters must be positive")
        if min(self.wins, self.draws, self.losses) < 0:
            raise ValueError("counts must be non-negative")

    @classmethod
    def of(cls, a_win: float, a_draw: float, a_loss: float) -> "DirichletParams":
        return cls(a_win, a_draw, a_loss)

    @classmethod
    def uniform(cls) -> "DirichletParams":
        """The flat prior over the simplex: all concentrations 1."""
        return cls(1.0, 1.0, 1.0)

    @classmethod
    def symmetric(cls, alpha: float) -> "DirichletParams":
        return cls(alpha, alpha, alpha)

    @property
    def a_win(self) -> float:
        return self.base_win + self.wins

    @property
    def a_draw(self) -> float:
        return self.base_draw + self.draws

    @property
    def a_loss(self) -> float:
        return self.base_loss + self.losses

    @property
    def a_total(self) -> float:
        return (
            self.base_win
            + self.base_draw
            + self.base_loss
            + (self.wins + self.draws + self.losses)
        )


def posterior(prior: DirichletParams, counts: CountVector) -> DirichletParams:
    """Conjugate update: add observed (win, draw, loss) counts component-wise."""
    return DirichletParams(
        prior.base_win,
        prior.base_draw,
        prior.base_loss,
        prior.wins + counts.wins,
        prior.draws + counts.draws,
        prior.losses + counts.losses,
    )


def predictive(params: DirichletParams) -> Prediction:
    """Posterior predictive outcome probabilities: the Dirichlet mean."""
    total = params.a_total
    return Prediction(
        params.a_win / total, params.a_draw / total, params.a_loss / total
    )


@dataclass(frozen=True)
class PoolWeights:
    """Linear-pool weight of the home-side observer; the away side gets 1-w."""

    w_home: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.w_home <= 1.0:
            raise ValueError(f"w_home must lie in [0, 1], got {self.w_home}")


def pool(
    home_view: Prediction, away_view: Prediction, weights: PoolWeights
) -> Prediction:
    """Linear opinion pool of the two observers, in the home team's frame.

    ``away_view`` is expressed from the away team's perspective, so its
    win/loss components swap roles: the away observer's *loss* probability
    feeds the pooled *home-win* slot and vice versa.
    """
    w = weights.w_home
    v = 1.0 - w
    return Prediction(
        w * home_view.p_home + v * away_view.p_away,
        w * home_view.p_draw + v * away_view.p_draw,
        w * home_view.p_away + v * away_view.p_home,
    )


def mn_dir1_predict(
    home_counts: CountVector,
    away_counts: CountVector,
    prior: DirichletParams | None = None,
) -> Prediction:
    """Equal-weight mixture of the two posterior predictives (flat prior).

    ``home_counts`` tallies the home team's past home matches,
    ``away_counts`` the away team's past away matches, each from that
    team's own perspective.
    """
    if prior is None:
        prior = DirichletParams.uniform()
    home_view = predictive(posterior(prior, home_counts))
    away_view = predictive(posterior(prior, away_counts))
    return pool(home_view, away_view, PoolWeights(0.5))


@dataclass(frozen=True)
class MnDir2Config:
    """Tuned variant: symmetric prior concentration and a free pool weight."""

    alpha: float
    weights: PoolWeights

    def __post_init__(self) -> None:
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


def mn_dir2_predict(
    home_counts: CountVector, away_counts: CountVector, cfg: MnDir2Config
) -> Prediction:
    """Pooled predictive with symmetric prior D(alpha, alpha, alpha) and weight w."""
    prior = DirichletParams.symmetric(cfg.alpha)
    home_view = predictive(posterior(prior, home_counts))
    away_view = predictive(posterior(prior, away_counts))
    return pool(home_view, away_view, cfg.weights)


@dataclass(frozen=True)
class GridSpec:
    """Candidate (w, alpha) values for cross-validated selection."""

    w_points: tuple[float, ...]
    alpha_points: tuple[float, ...]

    def __post_init__(self) -> None:
        for name, pts in (("w_points", self.w_points), ("alpha_points", self.alpha_points)):
            if not pts:
                raise ValueError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(pts, pts[1:])):
                raise ValueError(f"{name} must be strictly increasing")
        if self.w_points[0] < 0.0 or self.w_points[-1] > 1.0:
            raise ValueError("w_points must lie in [0, 1]")
        if self.alpha_points[0] <= 0.0:
            raise ValueError("alpha_points must be positive")

    @classmethod
    def default(cls) -> "GridSpec":
        """20 equally spaced weights on [0, 1] and concentrations on (0.001, 20]."""
        w = tuple(k / 19.0 for k in range(20))
        alpha = tuple(0.001 + k * (19.999 / 19.0) for k in range(20))
        return cls(w, alpha)


def _outcome_indicator(outcome: Outcome) -> Prediction:
    return Prediction(
        1.0 if outcome is Outcome.HOME_WIN else 0.0,
        1.0 if outcome is Outcome.DRAW else 0.0,
        1.0 if outcome is Outcome.AWAY_WIN else 0.0,
    )


def cv_select(
    first_half: Sequence[tuple[MatchRecord, Outcome]], grid: GridSpec
) -> MnDir2Config:
    """Pick the (w, alpha) grid point with the smallest total first-half Brier.

    Scoring is sequential: each match is predicted from the venue counts of
    matchdays strictly before its own (the symmetric prior alone before the
    first matchday), then its outcome is added to the running tallies.
    Ties are broken toward the smallest alpha, then the smallest w, so the
    result does not depend on grid enumeration order.
    """
    if not first_half:
        raise ValueError("first_half must be non-empty")

    # Counts are grid-independent; accumulate them once per match.
    ordered = sorted(enumerate(first_half), key=lambda item: (item[1][0].matchday, item[0]))
    home_tallies: dict[str, CountVector] = {}
    away_tallies: dict[str, CountVector] = {}
    prepared: list[tuple[CountVector, CountVector, Outcome]] = []
    current_matchday: int | None = None
    pending: list[tuple[MatchRecord, Outcome]] = []

    def flush() -> None:
        for match, outcome in pending:
            home_tallies[match.home] = home_tallies.get(match.home, CountVector()).add_outcome(
                outcome, Venue.HOME
            )
            away_tallies[match.away] = away_tallies.get(match.away, CountVector()).add_outcome(
                outcome, Venue.AWAY
            )
        pending.clear()

    for _, (match, outcome) in ordered:
        if current_matchday is not None and match.matchday != current_matchday:
            flush()
        current_matchday = match.matchday
        prepared.append(
            (
                home_tallies.get(match.home, CountVector()),
                away_tallies.get(match.away, CountVector()),
                outcome,
            )
        )
        pending.append((match, outcome))

    best: tuple[float, float, float] | None = None
    for alpha in grid.alpha_points:
        for w in grid.w_points:
            cfg = MnDir2Config(alpha=alpha, weights=PoolWeights(w))
            total = 0.0
            for h, a, outcome in prepared:
                total += brier(outcome, mn_dir2_predict(h, a, cfg))
            key = (total, alpha, w)
            if best is None or key < best:
                best = key
    assert best is not None
    return MnDir2Config(alpha=best[1], weights=PoolWeights(best[2]))
