import numpy as np
import pytest

from quantalgames import (BehavioralStrategy, GameValidationError, TreeBuilder,
                          counterfactual_values, expected_utility,
                          from_realization_plan, reach_probabilities,
                          sequence_reaches, to_realization_plan, uniform_table)
from quantalgames.efg import CHANCE, FOLLOWER, LEADER, TERMINAL, ExtensiveFormGame
from quantalgames.zoo import random_efg

from oracles import (brute_counterfactual_values, walk_expected_utility,
                     walk_reach, walk_terminal_reaches)


def build_tiny():
    """Leader picks L/R, follower answers a/b from one infoset (cannot
    see the leader's move), fixed terminal payoffs."""
    b = TreeBuilder(zero_sum=True)
    root = b.decision(None, LEADER, "root", ["L", "R"])
    fl = b.decision(root, FOLLOWER, "resp", ["a", "b"])
    fr = b.decision(root, FOLLOWER, "resp", ["a", "b"])
    b.terminal(fl, 3.0)
    b.terminal(fl, -2.0)
    b.terminal(fr, -1.0)
    b.terminal(fr, 4.0)
    return b.build()


def random_tables(game, seed=0):
    rng = np.random.default_rng(seed)
    tables = []
    for p in (LEADER, FOLLOWER):
        t = np.empty(game.table_size[p])
        for i in game.player_isets[p]:
            t[game.iset_slice(i)] = rng.dirichlet(np.ones(int(game.iset_nact[i])))
        tables.append(t)
    return tables


def test_builder_rejects_terminal_children():
    b = TreeBuilder(zero_sum=True)
    root = b.decision(None, LEADER, "root", ["x"])
    t = b.terminal(root, 0.0)
    b.terminal(t, 1.0)
    with pytest.raises(GameValidationError):
        b.build()


def test_builder_rejects_chance_count_mismatch():
    b = TreeBuilder(zero_sum=True)
    c = b.chance(None, [0.5, 0.5])
    b.terminal(c, 1.0)
    with pytest.raises(GameValidationError):
        b.build()


def test_builder_rejects_action_count_mismatch():
    b = TreeBuilder(zero_sum=True)
    root = b.decision(None, LEADER, "root", ["x", "y"])
    b.terminal(root, 1.0)
    with pytest.raises(GameValidationError):
        b.build()


def test_builder_rejects_unnormalized_chance():
    b = TreeBuilder(zero_sum=True)
    with pytest.raises(GameValidationError):
        b.chance(None, [0.6, 0.6])


def test_builder_rejects_inconsistent_infoset_actions():
    b = TreeBuilder(zero_sum=True)
    c = b.chance(None, [0.5, 0.5])
    d1 = b.decision(c, LEADER, "same", ["x", "y"])
    d2 = b.decision(c, LEADER, "same", ["x", "z"])
    for d in (d1, d2):
        b.terminal(d, 0.0)
        b.terminal(d, 0.0)
    with pytest.raises(GameValidationError):
        b.build()


def test_builder_rejects_imperfect_recall():
    # the leader forgets their own first move: one infoset spans histories
    # with different own action prefixes
    b = TreeBuilder(zero_sum=True)
    root = b.decision(None, LEADER, "root", ["L", "R"])
    d1 = b.decision(root, LEADER, "forgot", ["x", "y"])
    d2 = b.decision(root, LEADER, "forgot", ["x", "y"])
    for d in (d1, d2):
        b.terminal(d, 0.0)
        b.terminal(d, 0.0)
    with pytest.raises(GameValidationError, match="perfect recall"):
        b.build()


def test_bfs_layout_invariants():
    g = random_efg(3, 2, 2, seed=5)
    assert g.parent[0] == -1
    for node in range(1, g.n_nodes):
        assert g.parent[node] < node
    # children contiguous and after the parent
    for node in range(g.n_nodes):
        for c in g.children(node):
            assert g.parent[c] == node
            assert g.depth[c] == g.depth[node] + 1
    assert np.all(np.diff(g.depth) >= 0)
    # level_start brackets each depth band
    for d in range(int(g.depth.max()) + 1):
        lo, hi = g.level_start[d], g.level_start[d + 1]
        assert np.all(g.depth[lo:hi] == d)


def test_tiny_game_expected_utility_by_hand():
    g = build_tiny()
    lt = np.array([0.25, 0.75])
    ft = np.array([0.6, 0.4])
    # 0.25*(0.6*3 + 0.4*-2) + 0.75*(0.6*-1 + 0.4*4)
    expect = 0.25 * 1.0 + 0.75 * 1.0
    eu = expected_utility(g, (lt, ft))
    assert eu[0] == pytest.approx(expect, abs=1e-12)
    assert eu[1] == pytest.approx(-expect, abs=1e-12)


def test_expected_utility_matches_tree_walk():
    for seed in range(4):
        g = random_efg(3, 2, 2, seed=seed)
        lt, ft = random_tables(g, seed)
        ref = walk_expected_utility(g, lt, ft)
        got = expected_utility(g, (lt, ft))
        assert got[0] == pytest.approx(ref[0], abs=1e-12)
        assert got[1] == pytest.approx(ref[1], abs=1e-12)


def test_expected_utility_rejects_wrong_table_shape():
    g = build_tiny()
    with pytest.raises(ValueError):
        expected_utility(g, (np.array([0.5, 0.5, 0.0]), np.array([0.5, 0.5])))


def test_expected_utility_rejects_swapped_strategy_players():
    g = build_tiny()
    s = BehavioralStrategy.uniform(g, FOLLOWER)
    with pytest.raises(ValueError):
        expected_utility(g, (s, s))


def test_reach_probabilities_match_path_products():
    g = random_efg(5, 3, 2, seed=2)
    lt, ft = random_tables(g, 3)
    ref = walk_reach(g, lt, ft)
    rp = reach_probabilities(g, (lt, ft))
    assert np.allclose(rp.leader, ref[:, LEADER], atol=1e-12)
    assert np.allclose(rp.follower, ref[:, FOLLOWER], atol=1e-12)
    assert np.allclose(rp.chance, ref[:, CHANCE], atol=1e-12)
    assert np.allclose(rp.total, ref.prod(axis=1), atol=1e-12)
    assert rp.total[0] == 1.0


def test_terminal_reaches_sum_to_one():
    g = random_efg(3, 2, 2, seed=9)
    lt, ft = random_tables(g, 1)
    rp = reach_probabilities(g, (lt, ft))
    terminal = g.player == TERMINAL
    assert rp.total[terminal].sum() == pytest.approx(1.0, abs=1e-12)
    pairs = walk_terminal_reaches(g, lt, ft)
    assert sum(p for _, p in pairs) == pytest.approx(1.0, abs=1e-12)


def test_counterfactual_values_match_double_sum():
    g = random_efg(3, 2, 2, seed=4)
    lt, ft = random_tables(g, 7)
    for player in (LEADER, FOLLOWER):
        ref = brute_counterfactual_values(g, lt, ft, player)
        v_iset, v_act = counterfactual_values(g, (lt, ft), player)
        assert np.allclose(v_act, ref, atol=1e-12)
        # infoset value is the own-probability mixture of action values
        for pos, i in enumerate(g.infosets_of(player)):
            sl = g.iset_slice(i)
            own = lt if player == LEADER else ft
            assert v_iset[pos] == pytest.approx(float(own[sl] @ v_act[sl]), abs=1e-12)


def test_root_infoset_values_reconstruct_expected_utility():
    g = random_efg(3, 2, 2, seed=6)
    lt, ft = random_tables(g, 11)
    eu = expected_utility(g, (lt, ft))
    for player in (LEADER, FOLLOWER):
        v_iset, _ = counterfactual_values(g, (lt, ft), player)
        isets = g.infosets_of(player)
        top = [pos for pos, i in enumerate(isets) if g.iset_seqlen[i] == 0]
        assert sum(v_iset[pos] for pos in top) == pytest.approx(eu[player], abs=1e-9)


def test_counterfactual_values_ignore_own_strategy_above():
    g = random_efg(3, 2, 2, seed=8)
    lt, ft = random_tables(g, 13)
    _, base = counterfactual_values(g, (lt, ft), LEADER)
    # redistribute the leader's root infoset; deeper leader infosets keep
    # their counterfactual values exactly
    root_iset = int(g.node_infoset[0])
    assert g.iset_player[root_iset] == LEADER
    lt2 = lt.copy()
    rng = np.random.default_rng(99)
    lt2[g.iset_slice(root_iset)] = rng.dirichlet(np.ones(int(g.iset_nact[root_iset])))
    _, moved = counterfactual_values(g, (lt2, ft), LEADER)
    for i in g.infosets_of(LEADER):
        if g.iset_seqlen[i] > 0:
            sl = g.iset_slice(i)
            assert np.allclose(moved[sl], base[sl], atol=1e-12)


def test_serialization_round_trip():
    g = random_efg(3, 2, 2, seed=10)
    h = ExtensiveFormGame.from_json(g.to_json())
    assert h.n_nodes == g.n_nodes
    assert np.array_equal(h.parent, g.parent)
    assert np.array_equal(h.player, g.player)
    assert np.array_equal(h.util, g.util)
    # keys are relabeled on export; the partition itself must survive
    assert np.array_equal(h.node_infoset, g.node_infoset)
    assert h.iset_actions == g.iset_actions
    assert h.table_size == g.table_size
    lt, ft = random_tables(g, 17)
    assert expected_utility(h, (lt, ft)) == expected_utility(g, (lt, ft))


def test_behavioral_strategy_validation_and_dict_round_trip():
    g = random_efg(3, 2, 1, seed=0)
    s = BehavioralStrategy.uniform(g, LEADER)
    s.validate()
    bad = s.copy()
    bad.table[g.iset_slice(int(g.player_isets[LEADER][0]))] = 0.9
    with pytest.raises(ValueError):
        bad.validate()
    lt, _ = random_tables(g, 21)
    s2 = BehavioralStrategy(g, LEADER, lt)
    back = BehavioralStrategy.from_dict(g, s2.to_dict())
    assert np.allclose(back.table, s2.table, atol=1e-15)


def test_single_infoset_plan_by_hand():
    b = TreeBuilder(zero_sum=True)
    root = b.decision(None, LEADER, "root", ["a1", "a2"])
    b.terminal(root, 1.0)
    b.terminal(root, -1.0)
    g = b.build()
    s = BehavioralStrategy(g, LEADER, np.array([0.3, 0.7]))
    plan = to_realization_plan(s)
    assert np.allclose(plan.weights, [1.0, 0.3, 0.7], atol=1e-15)
    plan.validate()


def test_realization_plan_round_trip_and_flow():
    g = random_efg(3, 2, 2, seed=12)
    for player in (LEADER, FOLLOWER):
        table = random_tables(g, 31 + player)[player]
        s = BehavioralStrategy(g, player, table)
        plan = to_realization_plan(s)
        plan.validate()
        back, flagged = from_realization_plan(plan)
        assert not flagged
        assert np.allclose(back.table, s.table, atol=1e-12)
        # plan weights equal the sequence reaches of the table
        assert np.allclose(plan.weights, sequence_reaches(g, player, table), atol=1e-12)


def test_realization_plan_zero_mass_falls_back_uniform():
    g = random_efg(3, 2, 2, seed=13)
    # kill the leader's first root action so every infoset behind it gets
    # zero sequence mass
    table = uniform_table(g, LEADER)
    root_iset = int(g.node_infoset[0])
    sl = g.iset_slice(root_iset)
    table[sl] = 0.0
    table[sl.start] = 1.0
    dead = [
        int(i)
        for i in g.player_isets[LEADER]
        if g.iset_seqlen[i] > 0 and g.iset_parent_seq[i] != sl.start + 1
    ]
    assert dead
    s = BehavioralStrategy(g, LEADER, table)
    back, flagged = from_realization_plan(to_realization_plan(s))
    assert set(flagged) == set(dead)
    for i in dead:
        pr = back.probs(i)
        assert np.allclose(pr, 1.0 / pr.size, atol=1e-15)
