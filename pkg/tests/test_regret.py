import numpy as np
import pytest

from quantalgames import (BehavioralStrategy, QuantalModel, TreeBuilder,
                          convex_combine_efg, epsilon_br_certificate,
                          expected_utility, nash_value, nfg_quantal_response,
                          solve_cfr_br, solve_comb, solve_nash, solve_qne,
                          solve_restricted, solve_rqr, uniform_mixed,
                          zero_sum_nfg)
from quantalgames.efg import FOLLOWER, LEADER
from quantalgames.regret import _significant_change
from quantalgames.zoo import example_nfg, random_efg, random_nfg

from oracles import lp_game_value, support_enumeration_value

LAM1 = QuantalModel.logit(1.0)
PENNIES = zero_sum_nfg([[1, -1], [-1, 1]])


def leader_mix(report):
    s = report.output_strategy()
    return s.table if isinstance(s, BehavioralStrategy) else np.asarray(s)


def test_matching_pennies_self_play_finds_uniform():
    rep = solve_nash(PENNIES, 10000)
    assert np.allclose(leader_mix(rep), 0.5, atol=1e-3)
    assert np.allclose(rep.follower_strategy, 0.5, atol=1e-3)
    assert rep.epsilon_br_of_opponent < 2e-3


def test_rock_paper_scissors_cfr_br_finds_uniform():
    rps = zero_sum_nfg([[0, -1, 1], [1, 0, -1], [-1, 1, 0]])
    assert np.allclose(leader_mix(solve_cfr_br(rps, 10000)), 1 / 3, atol=1e-3)
    assert np.allclose(leader_mix(solve_cfr_br(PENNIES, 10000)), 0.5, atol=1e-3)


def test_iterations_must_be_positive():
    with pytest.raises(ValueError):
        solve_nash(PENNIES, 0)
    with pytest.raises(ValueError):
        solve_rqr(PENNIES, LAM1, 0, 10)
    with pytest.raises(ValueError):
        solve_restricted(PENNIES, LAM1, 1.5, 10)


def test_nash_reference_matches_lp_and_support_enumeration():
    for seed in range(3):
        g = random_nfg(3, 3, seed=seed)
        value, gap = nash_value(g, iterations=100000, tolerance=1e-6)
        assert gap < 1e-4
        lp = lp_game_value(g.leader_payoffs)
        assert value == pytest.approx(lp, abs=1e-4)
        se = support_enumeration_value(g.leader_payoffs)
        assert se is not None
        assert value == pytest.approx(se, abs=1e-4)


def test_large_random_game_gap_closes():
    g = random_nfg(20, 20, seed=1)
    rep = solve_nash(g, 100000, tolerance=1e-4)
    assert rep.epsilon_br_of_opponent < 1e-4
    assert rep.converged
    assert rep.iterations < 100000  # early stop engaged


def test_badqne_nash_and_qne_fixed_points():
    g = example_nfg("badqne")
    ne = solve_nash(g, 100000, tolerance=1e-7)
    assert np.allclose(leader_mix(ne), [1 / 6, 5 / 6], atol=5e-3)
    qne = solve_qne(g, LAM1, 100000, tolerance=1e-7)
    assert np.allclose(leader_mix(qne), [0.1744, 0.8256], atol=5e-3)
    # the certificate is taken against the response to the average
    x = leader_mix(qne)
    y = nfg_quantal_response(g, x, LAM1)
    assert epsilon_br_certificate(g, (x, y), LEADER) < 1e-6

    v = lp_game_value(g.leader_payoffs)
    gain_ne = float(leader_mix(ne) @ g.leader_payoffs @ nfg_quantal_response(g, leader_mix(ne), LAM1)) - v
    gain_qne = float(x @ g.leader_payoffs @ y) - v
    assert gain_ne > gain_qne


def test_qne_certificate_converges_on_tree_game():
    g = random_efg(3, 2, 2, seed=21)
    rep = solve_qne(g, LAM1, 100000, tolerance=1e-6)
    assert rep.converged
    assert rep.epsilon_br_of_opponent < 1e-6


def test_cfr_br_leader_value_hits_game_value():
    from quantalgames import best_response

    g = zero_sum_nfg([[-4, -5, 8, -4], [-5, -4, -4, 8]])
    value, _ = nash_value(g, iterations=100000, tolerance=1e-7)
    rep = solve_cfr_br(g, 20000)
    _, br_val = best_response(g, leader_mix(rep), FOLLOWER)
    assert -br_val == pytest.approx(value, abs=1e-3)


def test_restricted_p_endpoints_reduce_to_pure_oracles():
    g = example_nfg("badqne")
    r1 = solve_restricted(g, LAM1, 1.0, 5000)
    q = solve_qne(g, LAM1, 5000)
    assert np.allclose(leader_mix(r1), leader_mix(q), atol=1e-9)
    r0 = solve_restricted(g, LAM1, 0.0, 5000)
    b = solve_cfr_br(g, 5000)
    assert np.allclose(leader_mix(r0), leader_mix(b), atol=1e-9)


def test_significant_change_band():
    th = 1.00001
    assert _significant_change(1.0, 1.0, th) == 0
    assert _significant_change(1.0, 1.0000099, th) == 0
    assert _significant_change(1.0, 1.0000101, th) == 1
    assert _significant_change(1.0, 0.9999899, th) == -1
    # negative gains flip the band, not the direction
    assert _significant_change(-1.0, -0.99, th) == 1
    assert _significant_change(-1.0, -1.01, th) == -1
    assert _significant_change(-1.0, -1.0000099, th) == 0


def test_rqr_reports_frozen_p_and_is_deterministic():
    g = example_nfg("badqne")
    a = solve_rqr(g, LAM1, 500, 500, seed=3)
    b = solve_rqr(g, LAM1, 500, 500, seed=3)
    assert 0.0 <= a.tuned_param <= 1.0
    assert a.tuned_param == b.tuned_param
    assert np.array_equal(leader_mix(a), leader_mix(b))
    c = solve_rqr(g, LAM1, 500, 500, seed=4)
    assert a.tuned_param != c.tuned_param  # different draws move p differently


def test_rqr_output_comes_from_the_frozen_phase():
    g = example_nfg("badqne")
    rep = solve_rqr(g, LAM1, 400, 600, seed=0)
    assert rep.iterations == 1000
    assert rep.algorithm == "rqr"
    s = leader_mix(rep)
    assert s.min() >= 0 and s.sum() == pytest.approx(1.0, abs=1e-9)


def test_comb_endpoints_and_guarantee():
    g = example_nfg("badqne")
    ne = leader_mix(solve_nash(g, 20000))
    qn = leader_mix(solve_qne(g, LAM1, 20000))
    rep = solve_comb(g, LAM1, ne, qn)
    assert rep.iterations == 11
    assert 0.0 <= rep.tuned_param <= 1.0
    score_ne = float(ne @ g.leader_payoffs @ nfg_quantal_response(g, ne, LAM1))
    assert rep.eu_vs_qr is None  # metrics attached separately
    best = float(np.asarray(rep.final_strategy) @ g.leader_payoffs
                 @ nfg_quantal_response(g, np.asarray(rep.final_strategy), LAM1))
    assert best >= score_ne - 1e-12


def test_comb_single_infoset_is_pointwise_mixture():
    g = zero_sum_nfg([[2, -1], [0, 1]])
    ne = np.array([0.25, 0.75])
    qn = np.array([0.65, 0.35])
    rep = solve_comb(g, LAM1, ne, qn, sweep_size=3)
    a = rep.tuned_param
    assert np.allclose(rep.final_strategy, (1 - a) * ne + a * qn, atol=1e-12)


def combine_fixture():
    b = TreeBuilder(zero_sum=True)
    root = b.decision(None, LEADER, "top", ["A", "B"])
    second = b.decision(root, LEADER, "second", ["x", "y"])
    b.terminal(second, 1.0)
    b.terminal(second, -1.0)
    b.terminal(root, 0.5)
    return b.build()


def test_convex_combine_reach_weighting_by_hand():
    g = combine_fixture()
    s1 = BehavioralStrategy(g, LEADER, np.array([0.5, 0.5, 0.2, 0.8]))
    s2 = BehavioralStrategy(g, LEADER, np.array([1.0, 0.0, 0.6, 0.4]))
    out, flagged = convex_combine_efg(s1, s2, 0.5)
    assert not flagged
    # root mixes plainly: (0.75, 0.25)
    assert np.allclose(out.table[:2], [0.75, 0.25], atol=1e-12)
    # second infoset: reaches 0.5 vs 1.0, alpha 0.5 -> weights 0.25/0.75, 0.5/0.75
    expect = (0.25 * np.array([0.2, 0.8]) + 0.5 * np.array([0.6, 0.4])) / 0.75
    assert np.allclose(out.table[2:], expect, atol=1e-12)
    # realization plans mix exactly
    from quantalgames import sequence_reaches

    w = sequence_reaches(g, LEADER, out.table)
    w1 = sequence_reaches(g, LEADER, s1.table)
    w2 = sequence_reaches(g, LEADER, s2.table)
    assert np.allclose(w, 0.5 * w1 + 0.5 * w2, atol=1e-12)


def test_convex_combine_endpoints_are_exact_copies():
    g = combine_fixture()
    s1 = BehavioralStrategy(g, LEADER, np.array([0.5, 0.5, 0.2, 0.8]))
    s2 = BehavioralStrategy(g, LEADER, np.array([1.0, 0.0, 0.6, 0.4]))
    lo, _ = convex_combine_efg(s1, s2, 0.0)
    hi, _ = convex_combine_efg(s1, s2, 1.0)
    assert np.array_equal(lo.table, s1.table)
    assert np.array_equal(hi.table, s2.table)


def test_convex_combine_flags_doubly_unreached_infosets():
    g = combine_fixture()
    s1 = BehavioralStrategy(g, LEADER, np.array([0.0, 1.0, 0.2, 0.8]))
    s2 = BehavioralStrategy(g, LEADER, np.array([0.0, 1.0, 0.6, 0.4]))
    out, flagged = convex_combine_efg(s1, s2, 0.5)
    assert len(flagged) == 1
    assert np.allclose(out.table[2:], [0.5, 0.5], atol=1e-15)


def test_average_strategies_are_valid_distributions():
    g = random_efg(3, 2, 2, seed=33)
    for rep in (solve_nash(g, 500), solve_qne(g, LAM1, 500),
                solve_rqr(g, LAM1, 200, 200, seed=1)):
        rep.output_strategy().validate()


def test_solver_reports_are_bit_deterministic():
    g = random_nfg(6, 6, seed=9)
    a = solve_qne(g, LAM1, 2000)
    b = solve_qne(g, LAM1, 2000)
    assert np.array_equal(leader_mix(a), leader_mix(b))
    assert a.epsilon_br_of_opponent == b.epsilon_br_of_opponent
