"""Second walk: from preference concordances to per-item scores.

A restart walk on the preference/pole graph spreads the refined
concordance mass over the full universe of ordered item pairs and
collapses it onto per-item win/loss poles:

    pref_mass' = (1 - beta) * pole_to_pref(pole_mass) + beta * restart
    pole_mass' = (1 - beta) * pref_to_pole(pref_mass)

Materializing pref_mass costs n_items**2 memory, but the walk itself
never needs to: pole_to_pref output always has the two-sided form
a[winner] + b[loser] (+ restart), so the state is carried as the pair
(a, b) plus a restart coefficient and a constant.  One sweep is then
O(n_items), and the exact L1 residual over the whole universe comes
from a sort-and-prefix-sum pass.  The dense form is materialized
lazily only when asked for.

An item's score is the share of its win pole in its total pole mass;
items whose poles received (numerically) no mass at all score zero and
are flagged undefined.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import NumericalError
from .preferences import decode_pair, universe_size

SCORE_FLOOR = 1e-15  # pole mass below this counts as "never reached"


@dataclass
class ItemWalkConfig:
    beta: float = 0.15    # restart probability
    tol: float = 1e-10    # joint L1 stopping threshold
    max_iter: int = 100

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must be in (0, 1]")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class RestartVector:
    """Sparse distribution over the preference universe, with the
    per-item marginals the structured sweep needs."""

    n_items: int
    pair_ids: np.ndarray  # sorted int64
    weights: np.ndarray   # same length, sums to 1
    winners: np.ndarray = field(init=False)
    losers: np.ndarray = field(init=False)
    win_sums: np.ndarray = field(init=False)   # weight per winning item
    loss_sums: np.ndarray = field(init=False)  # weight per losing item

    def __post_init__(self):
        if self.pair_ids.shape != self.weights.shape:
            raise ValueError("pair_ids and weights must align")
        if self.pair_ids.size == 0:
            raise ValueError("restart vector needs at least one preference")
        if abs(self.weights.sum() - 1.0) > 1e-9 or np.any(self.weights < 0):
            raise ValueError("weights must be a distribution")
        self.winners, self.losers = decode_pair(self.pair_ids, self.n_items)
        self.win_sums = np.bincount(self.winners, weights=self.weights,
                                    minlength=self.n_items)
        self.loss_sums = np.bincount(self.losers, weights=self.weights,
                                     minlength=self.n_items)


def build_restart(concordances: np.ndarray, observed_ids: np.ndarray,
                  n_items: int) -> RestartVector:
    """Normalize first-walk concordances into a restart distribution
    over the full pair universe (zero off the observed support)."""
    total = concordances.sum()
    if total <= 0:
        raise ValueError("concordances carry no mass")
    return RestartVector(n_items, np.asarray(observed_ids, dtype=np.int64),
                         np.asarray(concordances, dtype=np.float64) / total)


@dataclass
class ItemWalkResult:
    n_items: int
    pole_mass: np.ndarray  # (2 * n_items,): win poles then loss poles
    iterations: int
    residual: float
    converged: bool
    # pref_mass(w, l) = _outer_a[w] + _outer_b[l] + _bias + _restart_rate * q(w, l)
    _outer_a: np.ndarray
    _outer_b: np.ndarray
    _bias: float
    _restart_rate: float
    _restart: RestartVector

    @property
    def win_mass(self) -> np.ndarray:
        return self.pole_mass[:self.n_items]

    @property
    def loss_mass(self) -> np.ndarray:
        return self.pole_mass[self.n_items:]

    @cached_property
    def pref_mass(self) -> np.ndarray:
        """Dense walk mass per ordered pair, flat over n_items**2 pair
        ids (diagonal entries zero).  O(n_items**2) memory."""
        n = self.n_items
        h = np.add.outer(self._outer_a, self._outer_b) + self._bias
        h.flat[:: n + 1] = 0.0
        h = h.ravel()
        if self._restart_rate != 0.0:
            h[self._restart.pair_ids] += self._restart_rate * self._restart.weights
        return h


def _abs_outer_sum(x: np.ndarray, y: np.ndarray) -> float:
    """Sum of |x[i] + y[j]| over the full cross product, without
    forming it: sort y once, then each x[i] splits y at -x[i]."""
    ys = np.sort(y)
    prefix = np.concatenate(([0.0], np.cumsum(ys)))
    cnt = np.searchsorted(ys, -x, side="left")
    below = prefix[cnt]
    return float(np.sum(x * (ys.size - 2 * cnt) + (prefix[-1] - 2 * below)))


def _offdiag_abs_delta(da: np.ndarray, db: np.ndarray, dk: float, dr: float,
                       restart: RestartVector) -> float:
    """L1 change of the structured pref mass over all off-diagonal pairs."""
    y = db + dk
    total = _abs_outer_sum(da, y) - float(np.abs(da + y).sum())
    if dr != 0.0:
        plain = da[restart.winners] + y[restart.losers]
        total += float((np.abs(plain + dr * restart.weights) - np.abs(plain)).sum())
    return total


def run_item_walk(pole_to_pref, pref_to_pole, restart: RestartVector,
                  config: ItemWalkConfig | None = None) -> ItemWalkResult:
    """Iterate the walk from a uniform joint start (half the mass spread
    over the pair universe, half over the poles)."""
    cfg = config or ItemWalkConfig()
    n = restart.n_items
    if pole_to_pref.n_items != n or pref_to_pole.n_items != n:
        raise ValueError("operators and restart vector disagree on the item count")
    uni = universe_size(n)
    beta, keep = cfg.beta, 1.0 - cfg.beta
    coef = keep / (n - 1)

    a = np.zeros(n)
    b = np.zeros(n)
    rate, bias = 0.0, 0.5 / uni
    win = np.full(n, 0.25 / n)
    loss = np.full(n, 0.25 / n)
    iterations, residual, converged = 0, np.inf, False
    for _ in range(cfg.max_iter):
        a_next = coef * win
        b_next = coef * loss
        row = (n - 1) * (a + bias) + (b.sum() - b) + rate * restart.win_sums
        col = (n - 1) * (b + bias) + (a.sum() - a) + rate * restart.loss_sums
        win_next = 0.5 * keep * row
        loss_next = 0.5 * keep * col
        residual = (
            _offdiag_abs_delta(a_next - a, b_next - b, -bias, beta - rate, restart)
            + float(np.abs(win_next - win).sum() + np.abs(loss_next - loss).sum())
        )
        a, b, rate, bias = a_next, b_next, beta, 0.0
        win, loss = win_next, loss_next
        iterations += 1
        if residual < cfg.tol:
            converged = True
            break
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))
            and np.all(np.isfinite(win)) and np.all(np.isfinite(loss))):
        raise NumericalError("item walk produced non-finite values")

    pref_total = (n - 1) * (a.sum() + b.sum()) + uni * bias + rate
    mass = pref_total + win.sum() + loss.sum()
    return ItemWalkResult(
        n_items=n,
        pole_mass=np.concatenate([win, loss]) / mass,
        iterations=iterations,
        residual=residual,
        converged=converged,
        _outer_a=a / mass,
        _outer_b=b / mass,
        _bias=bias / mass,
        _restart_rate=rate / mass,
        _restart=restart,
    )


@dataclass
class ScoredItems:
    scores: np.ndarray   # in [0, 1]
    defined: np.ndarray  # False where both poles stayed at zero


def score_items(result: ItemWalkResult) -> ScoredItems:
    """score(i) = win_mass / (win_mass + loss_mass), 0 when undefined."""
    denom = result.win_mass + result.loss_mass
    defined = denom > SCORE_FLOOR
    scores = np.where(defined, result.win_mass / np.where(defined, denom, 1.0), 0.0)
    return ScoredItems(scores, defined)


def recommend_topk(scored: ScoredItems, k: int, exclude=()) -> np.ndarray:
    """Top-k item ids by score, ties broken toward the smaller id."""
    if k < 0:
        raise ValueError("k must be >= 0")
    order = np.argsort(-scored.scores, kind="stable")
    if len(exclude):
        banned = np.zeros(scored.scores.size, dtype=bool)
        banned[np.asarray(list(exclude), dtype=np.int64)] = True
        order = order[~banned[order]]
    return order[:k].astype(np.int64)
