"""Perfect-recall extensive-form games stored as indexed arrays.

Nodes are kept in BFS order (parents before children, children of one node
contiguous), so reach probabilities, expected values and counterfactual
values are computed by single sweeps over flat arrays. Behavioral
strategies are flat probability tables indexed by per-player
(infoset, action) offsets.
"""

from __future__ import annotations

import json
from collections import deque

import numpy as np

LEADER = 0
FOLLOWER = 1
CHANCE = 2
TERMINAL = -1

PLAYER_NAMES = {LEADER: "leader", FOLLOWER: "follower", CHANCE: "chance", TERMINAL: "terminal"}
PLAYER_IDS = {v: k for k, v in PLAYER_NAMES.items()}

CHANCE_SUM_TOL = 1e-12
STRATEGY_SUM_TOL = 1e-9


class GameValidationError(ValueError):
    pass


class _Node:
    __slots__ = ("parent", "player", "key", "actions", "probs", "util", "children")

    def __init__(self, parent, player, key=None, actions=None, probs=None, util=None):
        self.parent = parent
        self.player = player
        self.key = key
        self.actions = actions
        self.probs = probs
        self.util = util
        self.children = []


class TreeBuilder:
    """Incremental constructor; children are attached in call order.

    Decision nodes sharing an infoset key must list identical actions, and
    the number of children added under a node must match its action count
    (or chance outcome count).
    """

    def __init__(self, zero_sum: bool = False):
        self.zero_sum = zero_sum
        self._nodes: list[_Node] = []

    def _add(self, node: _Node) -> int:
        nid = len(self._nodes)
        if node.parent is None:
            if nid != 0:
                raise GameValidationError("root must be created first")
        else:
            if not 0 <= node.parent < nid:
                raise GameValidationError(f"unknown parent {node.parent}")
            self._nodes[node.parent].children.append(nid)
        self._nodes.append(node)
        return nid

    def decision(self, parent, player: int, key: str, actions: list[str]) -> int:
        if player not in (LEADER, FOLLOWER):
            raise GameValidationError("decision player must be leader or follower")
        if not actions:
            raise GameValidationError("decision node needs at least one action")
        return self._add(_Node(parent, player, key=key, actions=list(actions)))

    def chance(self, parent, probs) -> int:
        p = np.asarray(probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise GameValidationError("chance probabilities must be a non-empty vector")
        if np.any(p < 0) or abs(p.sum() - 1.0) > CHANCE_SUM_TOL:
            raise GameValidationError(f"chance distribution invalid (sum {p.sum()!r})")
        return self._add(_Node(parent, CHANCE, probs=p))

    def terminal(self, parent, leader_util: float, follower_util: float | None = None) -> int:
        if self.zero_sum:
            if follower_util is not None and follower_util != -leader_util:
                raise GameValidationError("zero-sum terminal must negate leader utility")
            follower_util = -leader_util
        elif follower_util is None:
            raise GameValidationError("general-sum terminal needs an explicit follower utility")
        return self._add(_Node(parent, TERMINAL, util=(float(leader_util), float(follower_util))))

    def build(self) -> "ExtensiveFormGame":
        if not self._nodes:
            raise GameValidationError("empty game")
        for nid, nd in enumerate(self._nodes):
            if nd.player == TERMINAL and nd.children:
                raise GameValidationError(f"terminal node {nid} has children")
            if nd.player == CHANCE and len(nd.children) != len(nd.probs):
                raise GameValidationError(f"chance node {nid}: outcome/child count mismatch")
            if nd.player in (LEADER, FOLLOWER) and len(nd.children) != len(nd.actions):
                raise GameValidationError(f"decision node {nid}: action/child count mismatch")
        return ExtensiveFormGame._from_builder(self)


class ExtensiveFormGame:
    """Immutable array-form game; construct through :class:`TreeBuilder`."""

    @classmethod
    def _from_builder(cls, bld: TreeBuilder) -> "ExtensiveFormGame":
        nodes = bld._nodes
        # BFS order: parents first, siblings contiguous in creation order.
        order = []
        q = deque([0])
        while q:
            nid = q.popleft()
            order.append(nid)
            q.extend(nodes[nid].children)
        if len(order) != len(nodes):
            raise GameValidationError("tree contains unreachable nodes")
        old2new = {old: new for new, old in enumerate(order)}

        g = object.__new__(cls)
        n = len(nodes)
        g.zero_sum = bld.zero_sum
        g.n_nodes = n
        g.parent = np.full(n, -1, dtype=np.int32)
        g.player = np.empty(n, dtype=np.int8)
        g.first_child = np.zeros(n, dtype=np.int32)
        g.num_children = np.zeros(n, dtype=np.int32)
        g.edge_player = np.full(n, -1, dtype=np.int8)
        g.edge_chance_prob = np.ones(n, dtype=np.float64)
        g.edge_flat = np.full(n, -1, dtype=np.int32)
        g.depth = np.zeros(n, dtype=np.int32)
        g.util = np.zeros((n, 2), dtype=np.float64)
        g.node_infoset = np.full(n, -1, dtype=np.int32)

        for new, old in enumerate(order):
            nd = nodes[old]
            g.player[new] = nd.player
            if nd.parent is not None:
                g.parent[new] = old2new[nd.parent]
                g.depth[new] = g.depth[g.parent[new]] + 1
            if nd.player == TERMINAL:
                g.util[new] = nd.util
            if nd.children:
                g.first_child[new] = old2new[nd.children[0]]
                g.num_children[new] = len(nd.children)

        # Infosets in order of first BFS appearance.
        iset_ids: dict[tuple[int, str], int] = {}
        g.iset_player = []
        g.iset_actions = []
        g.iset_key = []
        members: list[list[int]] = []
        for new, old in enumerate(order):
            nd = nodes[old]
            if nd.player not in (LEADER, FOLLOWER):
                continue
            k = (nd.player, nd.key)
            if k not in iset_ids:
                iset_ids[k] = len(members)
                members.append([])
                g.iset_player.append(nd.player)
                g.iset_actions.append(list(nd.actions))
                g.iset_key.append(nd.key)
            iid = iset_ids[k]
            if g.iset_actions[iid] != list(nd.actions):
                raise GameValidationError(f"infoset {nd.key!r}: inconsistent action lists")
            g.node_infoset[new] = iid
            members[iid].append(new)
        m = len(members)
        g.n_infosets = m
        g.iset_player = np.array(g.iset_player, dtype=np.int8) if m else np.zeros(0, np.int8)
        g.iset_members = [np.array(mm, dtype=np.int32) for mm in members]
        g.iset_nact = np.array([len(a) for a in g.iset_actions], dtype=np.int32)

        # Per-player table layout.
        g.player_isets = [
            np.array([i for i in range(m) if g.iset_player[i] == p], dtype=np.int32)
            for p in (LEADER, FOLLOWER)
        ]
        g.iset_offset = np.zeros(m, dtype=np.int32)
        g.table_size = [0, 0]
        for p in (LEADER, FOLLOWER):
            off = 0
            for i in g.player_isets[p]:
                g.iset_offset[i] = off
                off += int(g.iset_nact[i])
            g.table_size[p] = off

        # Edge annotations (player/flat-index/chance prob of the incoming edge).
        for new, old in enumerate(order):
            nd = nodes[old]
            for pos, child_old in enumerate(nd.children):
                c = old2new[child_old]
                g.edge_player[c] = nd.player
                if nd.player == CHANCE:
                    g.edge_chance_prob[c] = nd.probs[pos]
                else:
                    g.edge_flat[c] = g.iset_offset[g.node_infoset[new]] + pos

        # Owner sequences (perfect recall check + sequence-form layout).
        g.iset_seqlen = np.zeros(m, dtype=np.int32)
        g.iset_parent_seq = np.zeros(m, dtype=np.int32)
        for i in range(m):
            p = int(g.iset_player[i])
            sigs = []
            for h in g.iset_members[i]:
                sig = []
                node = int(g.parent[h])
                child = int(h)
                while node >= 0:
                    if g.player[node] == p:
                        sig.append((g.iset_key[g.node_infoset[node]], int(g.edge_flat[child])))
                    child = node
                    node = int(g.parent[node])
                sigs.append(tuple(reversed(sig)))
            if any(s != sigs[0] for s in sigs[1:]):
                raise GameValidationError(
                    f"infoset {g.iset_key[i]!r} violates perfect recall"
                )
            g.iset_seqlen[i] = len(sigs[0])
            g.iset_parent_seq[i] = sigs[0][-1][1] + 1 if sigs[0] else 0

        g._finalize_levels()
        return g

    def _finalize_levels(self):
        n = self.n_nodes
        max_depth = int(self.depth.max()) if n else 0
        self.level_start = np.zeros(max_depth + 2, dtype=np.int32)
        for d in range(max_depth + 1):
            self.level_start[d + 1] = np.searchsorted(self.depth, d, side="right")
        # Non-terminal nodes per level (reduceat parents for backward sweeps).
        self.level_parents = [
            np.nonzero(
                (self.num_children[self.level_start[d] : self.level_start[d + 1]] > 0)
            )[0].astype(np.int32)
            + self.level_start[d]
            for d in range(max_depth + 1)
        ]

        # Flat gather arrays per player, ordered by (seqlen, infoset, member, action).
        self.g_out = [None, None]
        self.g_child = [None, None]
        self.g_node = [None, None]
        self.g_levels = [None, None]
        self.g_bounds = [None, None]
        self.lv_isets = [None, None]
        self.lv_flat_idx = [None, None]
        self.lv_starts = [None, None]
        self.member_node = [None, None]
        self.member_pos = [None, None]
        self.table_starts = [None, None]
        for p in (LEADER, FOLLOWER):
            isets = self.player_isets[p]
            order = sorted(isets, key=lambda i: (int(self.iset_seqlen[i]), int(i)))
            out, child, nod = [], [], []
            levels, bounds = [], [0]
            lv_isets, lv_idx, lv_starts = [], [], []
            cur_level = None
            for i in order:
                L = int(self.iset_seqlen[i])
                if L != cur_level:
                    if cur_level is not None:
                        levels.append(cur_level)
                        bounds.append(len(out))
                        lv_idx.append(np.array(cur_idx, dtype=np.int64))
                        lv_starts.append(np.array(cur_starts, dtype=np.int64))
                        lv_isets.append(np.array(cur_isets, dtype=np.int32))
                    cur_level = L
                    cur_idx, cur_starts, cur_isets = [], [], []
                off, k = int(self.iset_offset[i]), int(self.iset_nact[i])
                cur_starts.append(len(cur_idx))
                cur_idx.extend(range(off, off + k))
                cur_isets.append(int(i))
                for h in self.iset_members[i]:
                    fc = int(self.first_child[h])
                    for a in range(k):
                        out.append(off + a)
                        child.append(fc + a)
                        nod.append(int(h))
            if cur_level is not None:
                levels.append(cur_level)
                bounds.append(len(out))
                lv_idx.append(np.array(cur_idx, dtype=np.int64))
                lv_starts.append(np.array(cur_starts, dtype=np.int64))
                lv_isets.append(np.array(cur_isets, dtype=np.int32))
            self.g_out[p] = np.array(out, dtype=np.int32)
            self.g_child[p] = np.array(child, dtype=np.int32)
            self.g_node[p] = np.array(nod, dtype=np.int32)
            self.g_levels[p] = levels
            self.g_bounds[p] = bounds
            self.lv_isets[p] = lv_isets
            self.lv_flat_idx[p] = lv_idx
            self.lv_starts[p] = lv_starts
            mn, mp = [], []
            for pos, i in enumerate(isets):
                for h in self.iset_members[i]:
                    mn.append(int(h))
                    mp.append(pos)
            self.member_node[p] = np.array(mn, dtype=np.int32)
            self.member_pos[p] = np.array(mp, dtype=np.int64)
            self.table_starts[p] = np.array(
                [self.iset_offset[i] for i in isets], dtype=np.int64
            )

    # -- convenience ---------------------------------------------------

    @property
    def n_terminals(self) -> int:
        return int(np.sum(self.player == TERMINAL))

    def infosets_of(self, player: int) -> np.ndarray:
        return self.player_isets[player]

    def iset_slice(self, iset: int) -> slice:
        off = int(self.iset_offset[iset])
        return slice(off, off + int(self.iset_nact[iset]))

    def children(self, node: int) -> range:
        fc = int(self.first_child[node])
        return range(fc, fc + int(self.num_children[node]))

    def __repr__(self):
        kind = "zero-sum" if self.zero_sum else "general-sum"
        return (
            f"ExtensiveFormGame({self.n_nodes} nodes, {self.n_infosets} infosets, {kind})"
        )

    # -- serialization -------------------------------------------------

    def to_json(self) -> str:
        nodes = []
        for i in range(self.n_nodes):
            nd = {"id": int(i), "parent": int(self.parent[i]) if self.parent[i] >= 0 else None}
            par = int(self.parent[i])
            if par >= 0:
                if self.player[par] == CHANCE:
                    nd["action"] = str(i - int(self.first_child[par]))
                else:
                    acts = self.iset_actions[self.node_infoset[par]]
                    nd["action"] = acts[i - int(self.first_child[par])]
            else:
                nd["action"] = None
            nd["player"] = PLAYER_NAMES[int(self.player[i])]
            if self.player[i] == CHANCE:
                nd["chance_probs"] = [
                    float(self.edge_chance_prob[c]) for c in self.children(i)
                ]
            if self.player[i] == TERMINAL:
                if self.zero_sum:
                    nd["utility"] = float(self.util[i, 0])
                else:
                    nd["utility"] = [float(self.util[i, 0]), float(self.util[i, 1])]
            nodes.append(nd)
        infosets = [
            {
                "player": PLAYER_NAMES[int(self.iset_player[i])],
                "node_ids": [int(h) for h in self.iset_members[i]],
                "actions": list(self.iset_actions[i]),
            }
            for i in range(self.n_infosets)
        ]
        return json.dumps(
            {"players": ["leader", "follower"], "zero_sum": self.zero_sum,
             "nodes": nodes, "infosets": infosets}
        )

    @classmethod
    def from_json(cls, text: str) -> "ExtensiveFormGame":
        d = json.loads(text)
        nodes = d["nodes"]
        infosets = d["infosets"]
        node_iset: dict[int, int] = {}
        for k, iset in enumerate(infosets):
            for nid in iset["node_ids"]:
                node_iset[nid] = k

        by_id = {nd["id"]: nd for nd in nodes}
        kids: dict[int, list[dict]] = {}
        root = None
        for nd in nodes:
            if nd["parent"] is None:
                if root is not None:
                    raise GameValidationError("multiple roots")
                root = nd
            else:
                kids.setdefault(nd["parent"], []).append(nd)

        def child_order(nd):
            cs = kids.get(nd["id"], [])
            if nd["player"] == "chance":
                return sorted(cs, key=lambda c: int(c["action"]))
            acts = infosets[node_iset[nd["id"]]]["actions"]
            return sorted(cs, key=lambda c: acts.index(c["action"]))

        bld = TreeBuilder(zero_sum=bool(d.get("zero_sum", False)))
        new_id: dict[int, int] = {}

        def add(nd, parent_new):
            p = nd["player"]
            if p == "terminal":
                u = nd["utility"]
                if isinstance(u, list):
                    nid = bld.terminal(parent_new, u[0], u[1])
                elif bld.zero_sum:
                    nid = bld.terminal(parent_new, u)
                else:
                    nid = bld.terminal(parent_new, u, -u)
            elif p == "chance":
                nid = bld.chance(parent_new, nd["chance_probs"])
            else:
                iid = node_iset[nd["id"]]
                nid = bld.decision(
                    parent_new, PLAYER_IDS[p], f"I{iid}", infosets[iid]["actions"]
                )
            new_id[nd["id"]] = nid
            return nid

        q = deque([(root, None)])
        while q:
            nd, parent_new = q.popleft()
            nid = add(nd, parent_new)
            if nd["player"] != "terminal":
                for c in child_order(nd):
                    q.append((c, nid))
        if len(new_id) != len(by_id):
            raise GameValidationError("disconnected nodes in JSON game")
        return bld.build()


# -- strategies --------------------------------------------------------


class BehavioralStrategy:
    """Per-infoset action distributions for one player, as a flat table."""

    def __init__(self, game: ExtensiveFormGame, player: int, table=None):
        if player not in (LEADER, FOLLOWER):
            raise ValueError("player must be leader or follower")
        self.game = game
        self.player = player
        size = game.table_size[player]
        if table is None:
            self.table = uniform_table(game, player)
        else:
            t = np.asarray(table, dtype=np.float64)
            if t.shape != (size,):
                raise ValueError(f"table has shape {t.shape}, expected ({size},)")
            self.table = t.copy()

    @classmethod
    def uniform(cls, game, player):
        return cls(game, player)

    def probs(self, iset: int) -> np.ndarray:
        if self.game.iset_player[iset] != self.player:
            raise ValueError("infoset belongs to the other player")
        return self.table[self.game.iset_slice(iset)]

    def validate(self):
        for i in self.game.player_isets[self.player]:
            pr = self.table[self.game.iset_slice(i)]
            if np.any(pr < -STRATEGY_SUM_TOL) or abs(pr.sum() - 1.0) > STRATEGY_SUM_TOL:
                raise ValueError(
                    f"infoset {self.game.iset_key[i]!r}: invalid distribution {pr}"
                )
        return self

    def copy(self) -> "BehavioralStrategy":
        return BehavioralStrategy(self.game, self.player, self.table)

    def to_dict(self) -> dict:
        return {
            "player": PLAYER_NAMES[self.player],
            "infosets": [
                {
                    "id": int(i),
                    "actions": list(self.game.iset_actions[i]),
                    "probs": [float(x) for x in self.table[self.game.iset_slice(i)]],
                }
                for i in self.game.player_isets[self.player]
            ],
        }

    @classmethod
    def from_dict(cls, game, d) -> "BehavioralStrategy":
        player = PLAYER_IDS[d["player"]]
        s = cls(game, player)
        for ent in d["infosets"]:
            s.table[game.iset_slice(ent["id"])] = ent["probs"]
        return s.validate()


def uniform_table(game: ExtensiveFormGame, player: int) -> np.ndarray:
    t = np.empty(game.table_size[player], dtype=np.float64)
    for i in game.player_isets[player]:
        t[game.iset_slice(i)] = 1.0 / game.iset_nact[i]
    return t


def _tables(game, profile):
    """Extract (leader_table, follower_table) from a strategy pair."""
    out = []
    for want, s in zip((LEADER, FOLLOWER), profile):
        if isinstance(s, BehavioralStrategy):
            if s.game is not game or s.player != want:
                raise ValueError("strategy does not match game/player slot")
            out.append(s.table)
        else:
            t = np.asarray(s, dtype=np.float64)
            if t.shape != (game.table_size[want],):
                raise ValueError(
                    f"table for {PLAYER_NAMES[want]} has shape {t.shape}, "
                    f"expected ({game.table_size[want]},)"
                )
            out.append(t)
    return out[0], out[1]


class RealizationPlan:
    """Sequence-form weights: entry 0 is the empty sequence, then one entry
    per (infoset, action) in table order shifted by one."""

    def __init__(self, game: ExtensiveFormGame, player: int, weights):
        self.game = game
        self.player = player
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (game.table_size[player] + 1,):
            raise ValueError("weight vector has the wrong length")
        self.weights = w.copy()

    def validate(self, tol=1e-9):
        w = self.weights
        if abs(w[0] - 1.0) > tol:
            raise ValueError("empty sequence must have weight 1")
        if np.any(w < -tol) or np.any(w > 1 + tol):
            raise ValueError("sequence weights must lie in [0, 1]")
        g = self.game
        for i in g.player_isets[self.player]:
            sl = g.iset_slice(i)
            total = w[1 + sl.start : 1 + sl.stop].sum()
            if abs(total - w[g.iset_parent_seq[i]]) > tol:
                raise ValueError(
                    f"flow conservation violated at infoset {g.iset_key[i]!r}"
                )
        return self


def to_realization_plan(strategy: BehavioralStrategy) -> RealizationPlan:
    g, p = strategy.game, strategy.player
    w = np.zeros(g.table_size[p] + 1)
    w[0] = 1.0
    for i in sorted(g.player_isets[p], key=lambda i: int(g.iset_seqlen[i])):
        sl = g.iset_slice(i)
        w[1 + sl.start : 1 + sl.stop] = w[g.iset_parent_seq[i]] * strategy.table[sl]
    return RealizationPlan(g, p, w)


def from_realization_plan(plan: RealizationPlan):
    """Invert a plan to a behavioral strategy.

    Returns (strategy, flagged) where ``flagged`` lists infosets whose
    parent sequence carries zero mass; those fall back to uniform.
    """
    g, p = plan.game, plan.player
    s = BehavioralStrategy(g, p)
    flagged = []
    for i in g.player_isets[p]:
        sl = g.iset_slice(i)
        denom = plan.weights[g.iset_parent_seq[i]]
        if denom <= 0.0:
            flagged.append(int(i))
            continue
        s.table[sl] = plan.weights[1 + sl.start : 1 + sl.stop] / denom
    return s, flagged


def sequence_reaches(game: ExtensiveFormGame, player: int, table) -> np.ndarray:
    """Realization weight of every own sequence under a flat table.

    Entry 0 is the empty sequence; entry 1+k mirrors table entry k. The
    weight of (I, a) equals the product of the player's own action
    probabilities along the unique own path to I times table[(I, a)].
    """
    w = np.empty(game.table_size[player] + 1)
    w[0] = 1.0
    for lev in range(len(game.g_levels[player])):
        idx = game.lv_flat_idx[player][lev]
        starts = game.lv_starts[player][lev]
        isets = game.lv_isets[player][lev]
        counts = np.diff(np.append(starts, len(idx)))
        w[idx + 1] = np.repeat(w[game.iset_parent_seq[isets]], counts) * table[idx]
    return w


# -- values ------------------------------------------------------------


class ReachProbs:
    """Per-history reach contributions split by source."""

    def __init__(self, leader, follower, chance):
        self.leader = leader
        self.follower = follower
        self.chance = chance

    @property
    def total(self) -> np.ndarray:
        return self.leader * self.follower * self.chance

    def own(self, player: int) -> np.ndarray:
        return self.leader if player == LEADER else self.follower

    def minus(self, player: int) -> np.ndarray:
        if player == LEADER:
            return self.follower * self.chance
        return self.leader * self.chance


def reach_probabilities(game: ExtensiveFormGame, profile) -> ReachProbs:
    from . import kernels

    lt, ft = _tables(game, profile)
    pl = kernels.forward_products(game, kernels.edge_probs(game, lt, None, chance=False))
    pf = kernels.forward_products(game, kernels.edge_probs(game, None, ft, chance=False))
    pc = kernels.forward_products(game, kernels.edge_probs(game, None, None, chance=True))
    return ReachProbs(pl, pf, pc)


def expected_utility(game, profile) -> tuple[float, float]:
    """Expected payoff pair; dispatches on matrix vs tree games."""
    from . import kernels
    from .nfg import NormalFormGame, nfg_expected_utility

    if isinstance(game, NormalFormGame):
        return nfg_expected_utility(game, profile[0], profile[1])
    lt, ft = _tables(game, profile)
    ep = kernels.edge_probs(game, lt, ft)
    ul = kernels.backward_values(game, ep, game.util[:, 0])[0]
    if game.zero_sum:
        return float(ul), float(-ul)
    uf = kernels.backward_values(game, ep, game.util[:, 1])[0]
    return float(ul), float(uf)


def counterfactual_values(game: ExtensiveFormGame, profile, player: int):
    """All of one player's infoset and per-action counterfactual values.

    Returns (per-infoset values aligned with ``game.infosets_of(player)``,
    flat per-action values in table layout).
    """
    from . import kernels

    lt, ft = _tables(game, profile)
    ep = kernels.edge_probs(game, lt, ft)
    val = kernels.backward_values(game, ep, game.util[:, player])
    pm_ep = kernels.edge_probs(
        game,
        None if player == LEADER else lt,
        None if player == FOLLOWER else ft,
    )
    pi_minus = kernels.forward_products(game, pm_ep)
    v_act = kernels.infoset_action_values(game, player, pi_minus, val)
    own = lt if player == LEADER else ft
    starts = game.table_starts[player]
    if len(starts) == 0:
        return np.zeros(0), v_act
    v_iset = np.add.reduceat(own * v_act, starts)
    return v_iset, v_act
