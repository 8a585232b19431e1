"""Ranking quality protocol and structural diagnostics.

The protocol: for each requested per-user profile size, repeatedly
split the dataset (keeping that many train ratings per user, the rest
as test), rank each kept user's unseen items, and average NDCG at the
requested cutoffs over users; repetitions differ only in the split
seed.  Reported std is the population std over repetition means.

Diagnostics probe how far each walk's mass actually spreads: the
fraction of users / preference pairs reached, and how many distinct
value levels the reached mass forms (two values count as one level when
they agree to 12 significant digits).
"""

import math
import multiprocessing
import time
from dataclasses import dataclass, field

import numpy as np

from .datasets import RatingsDataset, SplitSpec, upl_split
from .errors import ColdStartError
from .graph import (UserPrefGraph, UserPrefOperators, connectivity_report,
                    item_pole_operators, user_pref_operators)
from .item_walk import (ItemWalkConfig, ItemWalkResult, ScoredItems, build_restart,
                        recommend_topk, run_item_walk, score_items)
from .preferences import derive_preferences, universe_size
from .user_walk import UserWalkConfig, UserWalkResult, restart_vector, run_user_walk

NONZERO_EPS = 1e-15
LEVEL_DIGITS = 12


@dataclass
class RankOutcome:
    items: np.ndarray
    scored: ScoredItems
    first: UserWalkResult
    second: ItemWalkResult


def rank_items_for_user(ops: UserPrefOperators, pole_to_pref, pref_to_pole,
                        target: int, k: int = 10, exclude=(),
                        walk1: UserWalkConfig | None = None,
                        walk2: ItemWalkConfig | None = None) -> RankOutcome:
    """Run both walks for one user and rank their unseen items."""
    d = restart_vector(ops, target)
    first = run_user_walk(ops.pref_to_user, ops.user_to_pref, d, walk1)
    q = build_restart(first.concordances, ops.observed_ids, ops.n_items)
    second = run_item_walk(pole_to_pref, pref_to_pole, q, walk2)
    scored = score_items(second)
    return RankOutcome(recommend_topk(scored, k, exclude), scored, first, second)


def ndcg_at_k(recommended, test_ratings: dict, k: int) -> float:
    """NDCG with exponential gain and log2 position discount.

    test_ratings maps item id -> rating; an item contributes gain
    2**rating - 1 at discount log2(position + 1) (1-based positions).
    Items missing from the map gain nothing.  The ideal ordering is the
    user's test items sorted by rating, truncated at k.
    """
    dcg = 0.0
    for pos, item in enumerate(recommended[:k]):
        rel = test_ratings.get(int(item), 0.0)
        if rel:
            dcg += (2.0 ** rel - 1.0) / math.log2(pos + 2)
    idcg = 0.0
    for pos, rel in enumerate(sorted(test_ratings.values(), reverse=True)[:k]):
        idcg += (2.0 ** rel - 1.0) / math.log2(pos + 2)
    return dcg / idcg if idcg > 0 else 0.0


# -- evaluation protocol ----------------------------------------------------

_WORKER: dict = {}


def _init_worker(payload):
    _WORKER["payload"] = payload


def _eval_one(task):
    user, exclude, gains = task
    ops, w_op, t_op, walk1, walk2, cutoffs = _WORKER["payload"]
    try:
        outcome = rank_items_for_user(ops, w_op, t_op, user, k=max(cutoffs),
                                      exclude=exclude, walk1=walk1, walk2=walk2)
    except ColdStartError:
        return user, None
    return user, [ndcg_at_k(outcome.items, gains, k) for k in cutoffs]


@dataclass
class NdcgCell:
    mean: float
    std: float
    per_rep: list


@dataclass
class EvalReport:
    upls: list
    cutoffs: list
    repetitions: int
    cells: dict = field(default_factory=dict)            # (upl, cutoff) -> NdcgCell
    evaluated_users: dict = field(default_factory=dict)  # (upl, rep) -> count
    cold_skipped: dict = field(default_factory=dict)     # (upl, rep) -> count
    runtime_s: dict = field(default_factory=dict)        # upl -> seconds
    config: dict = field(default_factory=dict)

    def format_table(self) -> str:
        lines = [f"{'upl':>5} {'cutoff':>6} {'mean':>8} {'std':>8}  per-repetition"]
        for upl in self.upls:
            for k in self.cutoffs:
                cell = self.cells[(upl, k)]
                reps = ", ".join(f"{v:.4f}" for v in cell.per_rep)
                lines.append(f"{upl:>5} {k:>6} {cell.mean:>8.4f} {cell.std:>8.4f}  {reps}")
        return "\n".join(lines)

    def to_tsv(self) -> str:
        lines = [f"# {key}={val}" for key, val in sorted(self.config.items())]
        lines.append("# std is population std over repetition means")
        for upl in self.upls:
            cold = [self.cold_skipped[(upl, r)] for r in range(self.repetitions)]
            if any(cold):
                lines.append(f"# upl={upl} cold_skipped={cold}")
        lines.append("upl\tcutoff\tmean\tstd\tn_users\truntime_ms\t" + "\t".join(
            f"rep{r}" for r in range(self.repetitions)))
        for upl in self.upls:
            users = [self.evaluated_users[(upl, r)] for r in range(self.repetitions)]
            n_users = float(np.mean(users))
            ms = self.runtime_s[upl] * 1e3
            for k in self.cutoffs:
                cell = self.cells[(upl, k)]
                reps = "\t".join(f"{v:.6f}" for v in cell.per_rep)
                lines.append(f"{upl}\t{k}\t{cell.mean:.6f}\t{cell.std:.6f}\t"
                             f"{n_users:g}\t{ms:.0f}\t{reps}")
        return "\n".join(lines) + "\n"


def _rep_tasks(train: RatingsDataset, test: RatingsDataset, users) -> list:
    tasks = []
    for u in users:
        train_items, _ = train.user_rows(int(u))
        test_items, test_ratings = test.user_rows(int(u))
        gains = {int(i): float(r) for i, r in zip(test_items, test_ratings)}
        tasks.append((int(u), train_items, gains))
    return tasks


def run_evaluation(dataset: RatingsDataset, upls, cutoffs=(1, 3, 5, 10),
                   repetitions: int = 5, seed: int = 0, min_test: int = 10,
                   walk1: UserWalkConfig | None = None,
                   walk2: ItemWalkConfig | None = None,
                   jobs: int = 1, user_sample: int | None = None,
                   progress=None) -> EvalReport:
    """Full protocol over several profile sizes.

    user_sample, when set, evaluates only that many kept users per
    repetition (sampled reproducibly) — a cheap preview of the full run.
    jobs > 1 fans user evaluations out over a process pool; results are
    independent of jobs.
    """
    upls = list(upls)
    cutoffs = list(cutoffs)
    walk1 = walk1 or UserWalkConfig()
    walk2 = walk2 or ItemWalkConfig()
    report = EvalReport(upls, cutoffs, repetitions, config={
        "alpha": walk1.alpha, "beta": walk2.beta, "tol": walk1.tol,
        "max_iter": walk1.max_iter, "seed": seed, "min_test": min_test,
        "repetitions": repetitions, "user_sample": user_sample,
        "cutoffs": ",".join(str(k) for k in cutoffs),
    })
    for upl in upls:
        t0 = time.perf_counter()
        rep_means = {k: [] for k in cutoffs}
        for rep in range(repetitions):
            train, test, kept = upl_split(
                dataset, SplitSpec(upl, min_test=min_test, seed=seed,
                                   repetitions=repetitions), rep)
            if user_sample is not None and user_sample < kept.size:
                rng = np.random.default_rng(np.random.SeedSequence([seed, upl, rep, 1]))
                kept = np.sort(rng.choice(kept, size=user_sample, replace=False))
            store = derive_preferences(train)
            if store.total == 0:
                # every sampled profile is all-ties: nobody can be ranked
                report.evaluated_users[(upl, rep)] = 0
                report.cold_skipped[(upl, rep)] = int(kept.size)
                for k in cutoffs:
                    rep_means[k].append(0.0)
                continue
            ops = user_pref_operators(UserPrefGraph.from_store(store))
            w_op, t_op = item_pole_operators(dataset.n_items)
            tasks = _rep_tasks(train, test, kept)
            payload = (ops, w_op, t_op, walk1, walk2, cutoffs)
            if jobs > 1:
                ctx = multiprocessing.get_context("fork")
                with ctx.Pool(jobs, initializer=_init_worker, initargs=(payload,)) as pool:
                    rows = pool.map(_eval_one, tasks,
                                    chunksize=max(1, len(tasks) // (jobs * 8)))
            else:
                _init_worker(payload)
                rows = [_eval_one(t) for t in tasks]
            scored = [vals for _, vals in rows if vals is not None]
            report.evaluated_users[(upl, rep)] = len(scored)
            report.cold_skipped[(upl, rep)] = len(rows) - len(scored)
            per_user = np.array(scored)  # (users, cutoffs)
            for j, k in enumerate(cutoffs):
                rep_means[k].append(float(per_user[:, j].mean()) if len(scored) else 0.0)
            if progress:
                progress(f"upl={upl} rep={rep}: {len(scored)} users, "
                         + " ".join(f"ndcg@{k}={rep_means[k][-1]:.4f}" for k in cutoffs))
        for k in cutoffs:
            vals = rep_means[k]
            report.cells[(upl, k)] = NdcgCell(
                float(np.mean(vals)), float(np.std(vals)), vals)
        report.runtime_s[upl] = time.perf_counter() - t0
    return report


# -- diagnostics ------------------------------------------------------------

def distinct_levels(values, sig_digits: int = LEVEL_DIGITS) -> int:
    """Distinct positive values after rounding to sig_digits significant
    digits.  Zero and negative entries are ignored."""
    v = np.asarray(values, dtype=np.float64)
    v = v[v > 0]
    if v.size == 0:
        return 0
    exp = np.floor(np.log10(v)).astype(np.int64)
    mant = np.round(v / np.power(10.0, exp - (sig_digits - 1))).astype(np.int64)
    roll = mant >= 10 ** sig_digits  # e.g. 9.9999..e-3 rounding up to 1e-2
    mant[roll] //= 10
    exp[roll] += 1
    return int(np.unique(mant * 1000 + (exp + 500)).size)


@dataclass
class UserDiagnostics:
    user: int
    similarity_fraction: float   # share of other active users reached
    similarity_levels: int
    concordance_fraction: float  # share of the pair universe, first walk
    concordance_levels: int
    pref_mass_fraction: float    # share of the pair universe, second walk
    pref_mass_levels: int
    first_iterations: int
    first_converged: bool
    second_iterations: int
    second_converged: bool


@dataclass
class DiagnosticsReport:
    n_users: int
    n_items: int
    n_observed_prefs: int
    universe: int
    connected: bool
    n_components: int
    n_active_users: int
    n_isolated_users: int
    users: list = field(default_factory=list)  # UserDiagnostics, sampled

    def mean_of(self, attr: str) -> float:
        return float(np.mean([getattr(u, attr) for u in self.users])) if self.users else 0.0

    def format_table(self) -> str:
        lines = [
            f"graph: {self.n_users} users ({self.n_active_users} active, "
            f"{self.n_isolated_users} isolated), {self.n_items} items, "
            f"{self.n_observed_prefs} observed of {self.universe} possible preferences",
            f"connected: {'yes' if self.connected else f'no ({self.n_components} components)'}",
            f"sampled users: {len(self.users)}",
        ]
        if self.users:
            lines += [
                f"mean similarity coverage:   {self.mean_of('similarity_fraction'):.4f} "
                f"({self.mean_of('similarity_levels'):.1f} levels)",
                f"mean first-walk coverage:   {self.mean_of('concordance_fraction'):.4f} "
                f"({self.mean_of('concordance_levels'):.1f} levels)",
                f"mean second-walk coverage:  {self.mean_of('pref_mass_fraction'):.4f} "
                f"({self.mean_of('pref_mass_levels'):.1f} levels)",
                f"first walk converged for  {self.mean_of('first_converged'):.0%} of "
                f"sampled users (mean {self.mean_of('first_iterations'):.1f} iterations)",
                f"second walk converged for {self.mean_of('second_converged'):.0%} of "
                f"sampled users (mean {self.mean_of('second_iterations'):.1f} iterations)",
            ]
        return "\n".join(lines)

    def to_tsv(self) -> str:
        head = ("user\tsim_frac\tsim_levels\tconc_frac\tconc_levels\t"
                "pref_frac\tpref_levels\titer1\tconv1\titer2\tconv2")
        lines = [head]
        for u in self.users:
            lines.append(
                f"{u.user}\t{u.similarity_fraction:.6f}\t{u.similarity_levels}\t"
                f"{u.concordance_fraction:.8f}\t{u.concordance_levels}\t"
                f"{u.pref_mass_fraction:.8f}\t{u.pref_mass_levels}\t"
                f"{u.first_iterations}\t{int(u.first_converged)}\t"
                f"{u.second_iterations}\t{int(u.second_converged)}")
        return "\n".join(lines) + "\n"


def collect_diagnostics(graph: UserPrefGraph, users=None, sample: int | None = None,
                        seed: int = 0, walk1: UserWalkConfig | None = None,
                        walk2: ItemWalkConfig | None = None,
                        progress=None) -> DiagnosticsReport:
    """Walk-coverage diagnostics for a sample of users with preferences."""
    conn = connectivity_report(graph)
    ops = user_pref_operators(graph)
    w_op, t_op = item_pole_operators(graph.n_items)
    uni = universe_size(graph.n_items)
    report = DiagnosticsReport(
        n_users=graph.n_users, n_items=graph.n_items,
        n_observed_prefs=int(ops.observed_ids.size), universe=uni,
        connected=conn.connected, n_components=conn.n_components,
        n_active_users=conn.n_active_users, n_isolated_users=conn.n_isolated_users,
    )
    active = np.flatnonzero(ops.user_degrees > 0)
    if users is None:
        users = active
    users = np.asarray(users, dtype=np.int64)
    if sample is not None and sample < users.size:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
        users = np.sort(rng.choice(users, size=sample, replace=False))
    for u in users:
        outcome = rank_items_for_user(ops, w_op, t_op, int(u), k=0,
                                      walk1=walk1, walk2=walk2)
        sims = outcome.first.similarities
        others = active[active != int(u)]
        sim_vals = sims[others] if others.size else np.empty(0)
        conc = outcome.first.concordances
        conc_vals = conc[conc > NONZERO_EPS]
        pref = outcome.second.pref_mass
        pref_vals = pref[pref > NONZERO_EPS]
        report.users.append(UserDiagnostics(
            user=int(u),
            similarity_fraction=float((sim_vals > NONZERO_EPS).mean()) if others.size else 0.0,
            similarity_levels=distinct_levels(sim_vals),
            concordance_fraction=conc_vals.size / uni,
            concordance_levels=distinct_levels(conc_vals),
            pref_mass_fraction=pref_vals.size / uni,
            pref_mass_levels=distinct_levels(pref_vals),
            first_iterations=outcome.first.iterations,
            first_converged=outcome.first.converged,
            second_iterations=outcome.second.iterations,
            second_converged=outcome.second.converged,
        ))
        if progress:
            progress(f"user {u}: sim {report.users[-1].similarity_fraction:.3f}, "
                     f"walk2 coverage {report.users[-1].pref_mass_fraction:.4f}")
    return report
