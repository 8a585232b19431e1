"""Bipartite graphs behind the two walks, and their stochastic operators.

The first walk runs on a user/preference graph: an edge joins a user to
every preference observed in their profile.  The second walk runs on a
preference/pole graph that never needs to be stored: every item
contributes two pole nodes (a "win" pole and a "loss" pole), and the
preference (w, l) — over the full universe of ordered pairs — connects
to w's win pole and l's loss pole.  Both graphs are only ever consumed
through column-stochastic transition operators.

Pole indexing: win pole of item i is i, loss pole is n_items + i.
"""

import struct
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DataError, EmptyGraphError, ParseError, PreferenceConflictError
from .preferences import PreferenceStore, decode_pair, encode_pair

_SNAPSHOT_MAGIC = b"UPGS"
_SNAPSHOT_VERSION = 1


class UserPrefGraph:
    """Mutable bipartite user/preference graph.

    Preference nodes exist only once some user holds the preference;
    adding an edge a user already has is a no-op, and adding the
    reverse orientation of one of their pairs is an error.
    """

    def __init__(self, n_users: int, n_items: int):
        if n_users < 0 or n_items < 0:
            raise ValueError("negative node counts")
        self.n_users = n_users
        self.n_items = n_items
        self._prefs = [set() for _ in range(n_users)]

    @classmethod
    def from_store(cls, store: PreferenceStore) -> "UserPrefGraph":
        g = cls(store.n_users, store.n_items)
        for u, ids in enumerate(store.pair_ids):
            g._prefs[u].update(int(p) for p in ids)
        return g

    def to_store(self) -> PreferenceStore:
        arrays = [np.array(sorted(s), dtype=np.int64) for s in self._prefs]
        return PreferenceStore(self.n_users, self.n_items, arrays)

    # -- mutation ---------------------------------------------------------

    def add_user(self) -> int:
        """Append an isolated user; returns its id."""
        self._prefs.append(set())
        self.n_users += 1
        return self.n_users - 1

    def add_item(self) -> int:
        """Grow the item universe; returns the new item's id.

        Pair ids depend on the item count, so every stored id is
        re-encoded.  Linear in the number of edges.
        """
        old_n, new_n = self.n_items, self.n_items + 1
        for s in self._prefs:
            if s:
                ids = np.fromiter(s, dtype=np.int64, count=len(s))
                w, l = decode_pair(ids, old_n)
                s.clear()
                s.update(int(p) for p in encode_pair(w, l, new_n))
        self.n_items = new_n
        return new_n - 1

    def add_preference(self, user: int, pair) -> None:
        """Attach one (winner, loser) preference to a user."""
        w, l = int(pair[0]), int(pair[1])
        if not 0 <= user < self.n_users:
            raise ValueError(f"user {user} out of range")
        if w == l or not (0 <= w < self.n_items and 0 <= l < self.n_items):
            raise ValueError(f"invalid item pair ({w}, {l})")
        pid = w * self.n_items + l
        flipped = l * self.n_items + w
        if flipped in self._prefs[user]:
            raise PreferenceConflictError(
                f"user {user}: both orientations of items ({w}, {l}) asserted"
            )
        self._prefs[user].add(pid)

    # -- inspection -------------------------------------------------------

    def prefs_of(self, user: int) -> np.ndarray:
        return np.array(sorted(self._prefs[user]), dtype=np.int64)

    def user_degree(self, user: int) -> int:
        return len(self._prefs[user])

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self._prefs)

    def edge_arrays(self):
        """(users, pair_ids) for every edge, sorted by (user, pair_id)."""
        n = self.n_edges
        users = np.empty(n, dtype=np.int64)
        pids = np.empty(n, dtype=np.int64)
        at = 0
        for u, s in enumerate(self._prefs):
            k = len(s)
            users[at:at + k] = u
            pids[at:at + k] = sorted(s)
            at += k
        return users, pids

    def __eq__(self, other) -> bool:
        if not isinstance(other, UserPrefGraph):
            return NotImplemented
        return (self.n_users == other.n_users and self.n_items == other.n_items
                and self._prefs == other._prefs)

    # -- snapshot ---------------------------------------------------------

    def save(self, path) -> None:
        """Binary snapshot: magic, version, counts, then (user, pair_id)
        edge pairs as little-endian 32-bit unsigned ints."""
        users, pids = self.edge_arrays()
        limit = 2 ** 32
        if self.n_users >= limit or self.n_items * self.n_items >= limit:
            raise DataError("graph too large for the 32-bit snapshot format")
        header = _SNAPSHOT_MAGIC + struct.pack(
            "<III", _SNAPSHOT_VERSION, self.n_users, self.n_items
        ) + struct.pack("<I", len(users))
        edges = np.empty((len(users), 2), dtype="<u4")
        edges[:, 0] = users
        edges[:, 1] = pids
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(edges.tobytes())

    @classmethod
    def load(cls, path) -> "UserPrefGraph":
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < 20 or blob[:4] != _SNAPSHOT_MAGIC:
            raise ParseError(f"{path}: not a graph snapshot")
        version, n_users, n_items, n_edges = struct.unpack("<IIII", blob[4:20])
        if version != _SNAPSHOT_VERSION:
            raise ParseError(f"{path}: unsupported snapshot version {version}")
        body = np.frombuffer(blob[20:], dtype="<u4")
        if body.size != 2 * n_edges:
            raise ParseError(f"{path}: expected {n_edges} edges, found {body.size // 2}")
        edges = body.reshape(-1, 2).astype(np.int64)
        g = cls(n_users, n_items)
        for u, pid in edges:
            w, l = int(pid) // n_items, int(pid) % n_items
            if w == l or w >= n_items or u >= n_users:
                raise ParseError(f"{path}: edge ({u}, {pid}) out of range")
            g.add_preference(int(u), (w, l))
        return g


@dataclass
class StochasticOperator:
    """A column-stochastic transition, applied as a matrix-vector product."""

    direction: str
    matrix: sparse.csr_matrix

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()


@dataclass
class UserPrefOperators:
    """Everything the first walk needs, built once per graph."""

    n_users: int
    n_items: int
    observed_ids: np.ndarray     # sorted pair ids with >= 1 holder
    pref_support: np.ndarray     # holders per observed preference
    user_degrees: np.ndarray     # preferences per user
    pref_to_user: StochasticOperator  # (n_users x P), columns sum to 1
    user_to_pref: StochasticOperator  # (P x n_users), non-empty columns sum to 1
    pref_col_indptr: np.ndarray  # user -> slice into pref_col_indices
    pref_col_indices: np.ndarray  # column index of each of the user's prefs

    def pref_columns(self, user: int) -> np.ndarray:
        """Column indices (into observed_ids) of one user's preferences."""
        return self.pref_col_indices[self.pref_col_indptr[user]:self.pref_col_indptr[user + 1]]


def user_pref_operators(g: UserPrefGraph) -> UserPrefOperators:
    """Column-normalized transition operators of the user/preference graph."""
    users, pids = g.edge_arrays()
    if users.size == 0:
        raise EmptyGraphError("graph has no edges")
    observed = np.unique(pids)
    cols = np.searchsorted(observed, pids)
    support = np.bincount(cols, minlength=observed.size).astype(np.float64)
    degrees = np.bincount(users, minlength=g.n_users).astype(np.float64)

    to_user = sparse.csr_matrix(
        (1.0 / support[cols], (users, cols)), shape=(g.n_users, observed.size)
    )
    to_pref = sparse.csr_matrix(
        (1.0 / degrees[users], (cols, users)), shape=(observed.size, g.n_users)
    )
    indptr = np.zeros(g.n_users + 1, dtype=np.int64)
    np.cumsum(degrees.astype(np.int64), out=indptr[1:])
    return UserPrefOperators(
        n_users=g.n_users,
        n_items=g.n_items,
        observed_ids=observed,
        pref_support=support,
        user_degrees=degrees,
        pref_to_user=StochasticOperator("pref_to_user", to_user),
        user_to_pref=StochasticOperator("user_to_pref", to_pref),
        pref_col_indptr=indptr,
        pref_col_indices=cols,  # edge_arrays is sorted by user, so this aligns
    )


class PoleToPrefOperator:
    """Spread pole mass over the full preference universe.

    Preference (w, l) draws 1/(n_items - 1) of w's win-pole mass and
    1/(n_items - 1) of l's loss-pole mass.  Output is a flat length
    n_items**2 vector indexed by pair id, zero on the diagonal.
    """

    direction = "pole_to_pref"

    def __init__(self, n_items: int):
        if n_items < 2:
            raise ValueError("need at least 2 items for pairwise poles")
        self.n_items = n_items

    def apply(self, pole_mass: np.ndarray) -> np.ndarray:
        n = self.n_items
        win, loss = pole_mass[:n], pole_mass[n:]
        h = (win[:, None] + loss[None, :]) / (n - 1)
        h.flat[:: n + 1] = 0.0
        return h.ravel()

    def column_sums(self) -> np.ndarray:
        return np.ones(2 * self.n_items)


class PrefToPoleOperator:
    """Collapse preference mass onto poles: half to the winner's win
    pole, half to the loser's loss pole."""

    direction = "pref_to_pole"

    def __init__(self, n_items: int):
        if n_items < 2:
            raise ValueError("need at least 2 items for pairwise poles")
        self.n_items = n_items

    def apply(self, pref_mass: np.ndarray) -> np.ndarray:
        n = self.n_items
        h = pref_mass.reshape(n, n)
        return 0.5 * np.concatenate([h.sum(axis=1) - h.diagonal(),
                                     h.sum(axis=0) - h.diagonal()])

    def column_sums(self) -> np.ndarray:
        n = self.n_items
        sums = np.ones(n * n)
        sums[:: n + 1] = 0.0  # diagonal pair ids are structurally absent
        return sums


def item_pole_operators(n_items: int):
    """Both transition operators of the preference/pole graph."""
    return PoleToPrefOperator(n_items), PrefToPoleOperator(n_items)


@dataclass
class ConnectivityReport:
    connected: bool
    n_components: int
    n_active_users: int
    n_isolated_users: int


def connectivity_report(g: UserPrefGraph) -> ConnectivityReport:
    """Connected components over users-with-edges plus preference nodes."""
    users, pids = g.edge_arrays()
    if users.size == 0:
        return ConnectivityReport(False, 0, 0, g.n_users)
    observed = np.unique(pids)
    active = np.unique(users)
    user_pos = np.searchsorted(active, users)
    pref_pos = active.size + np.searchsorted(observed, pids)
    n_nodes = active.size + observed.size
    adj = sparse.coo_matrix(
        (np.ones(users.size), (user_pos, pref_pos)), shape=(n_nodes, n_nodes)
    )
    n_comp, _ = csgraph.connected_components(adj, directed=False)
    return ConnectivityReport(
        connected=bool(n_comp == 1),
        n_components=int(n_comp),
        n_active_users=int(active.size),
        n_isolated_users=int(g.n_users - active.size),
    )
