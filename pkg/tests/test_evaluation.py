import numpy as np
import pytest

from invariants import assert_trace_invariants
from oracles import deterministic_day
from wspp.builder import PhaseId, build_phase
from wspp.data import RealizedDay
from wspp.evaluation import (
    ComparisonReport, compare, evaluate_day, ex_post_evaluate, framework_a_set,
    phase_scenario_sets, realized_scenario_set, run_day_a, run_day_b, summarize,
)
from wspp.lp import solve
from wspp.market import T, CommitmentSchedule, DayPrices, RegulationPair, default_params
from wspp.scenarios import price_scenarios, regulation_scenarios
from wspp.synth import SynthConfig, synth_generate

ZERO = CommitmentSchedule(np.zeros(T), np.zeros(T), np.zeros(T), np.zeros(T))


@pytest.fixture(scope="module")
def small_data():
    return synth_generate(SynthConfig(n_days=3, history_days=40))


@pytest.fixture(scope="module")
def families(small_data):
    return (price_scenarios(small_data.price_history, 3, 0),
            regulation_scenarios(small_data.regulation_history, 2, 0))


def empty_storage():
    p = default_params()
    return p.replace(initial_energy=p.soc_min * p.ess_capacity)


def test_ex_post_null():
    day = RealizedDay(np.zeros(T), DayPrices.flat(), RegulationPair(0, 0))
    inc, trace = ex_post_evaluate(default_params(), ZERO, day)
    assert inc.total == pytest.approx(0.0, abs=1e-9)
    assert_trace_invariants(default_params(), trace)


def test_ex_post_bm_only():
    day = RealizedDay(np.full(T, 10.0), DayPrices.flat(lambda_bm_up=20.0, lambda_bm_dw=20.0), RegulationPair(0, 0))
    inc, trace = ex_post_evaluate(empty_storage(), ZERO, day)
    assert inc.total == pytest.approx(4800.0, abs=1e-6)
    assert inc.i_bm == pytest.approx(4800.0, abs=1e-6)


def test_ex_post_perfect_delivery():
    c = CommitmentSchedule(np.full(T, 10.0), np.zeros(T), np.zeros(T), np.zeros(T))
    prices = DayPrices.flat(beta_dam=50.0, lambda_bm_up=40.0, lambda_bm_dw=60.0)
    day = RealizedDay(np.full(T, 10.0), prices, RegulationPair(0.2, 0.2))
    inc, trace = ex_post_evaluate(empty_storage(), c, day)
    assert inc.i_dam == pytest.approx(12000.0, abs=1e-6)
    assert inc.i_bm == pytest.approx(0.0, abs=1e-6)
    assert np.allclose(trace.bm_deviation, 0.0, atol=1e-7)
    assert np.allclose(trace.rm_dev_up, 0.0) and np.allclose(trace.rm_dev_dw, 0.0)


def test_ex_post_requires_complete_schedule():
    day = RealizedDay(np.zeros(T), DayPrices.flat(), RegulationPair(0, 0))
    with pytest.raises(ValueError):
        ex_post_evaluate(default_params(), CommitmentSchedule(p_dam=np.zeros(T)), day)


def test_income_accounting(small_data, families):
    p = default_params()
    md = small_data.days[0]
    res = run_day_a(p, framework_a_set(md, *families), md.realized)
    c, r = res.commitments, md.realized
    fixed_revenue = float(r.prices.beta_dam @ c.p_dam + r.prices.beta_idm @ c.p_idm
                          + r.prices.gamma_rm @ c.p_rm)
    lp, _ = build_phase(PhaseId.B_PHASE4, p, realized_scenario_set(r), c)
    recourse = solve(lp).objective_value - lp.offset
    assert res.realized.total == pytest.approx(fixed_revenue + recourse, abs=1e-6)
    oracle, _, _ = deterministic_day(p, r.wind, r.prices, r.regulation, c)
    assert res.realized.total == pytest.approx(oracle, abs=1e-6)


def test_perfect_information(small_data):
    p = default_params()
    for md in small_data.days:
        scen = realized_scenario_set(md.realized)
        a = run_day_a(p, scen, md.realized)
        b = run_day_b(p, [scen] * 4, md.realized)
        assert a.expected.total == pytest.approx(a.realized.total, abs=1e-6)
        assert b.realized.total == pytest.approx(a.realized.total, abs=1e-6)
        assert len(b.durations) == 4 and all(d >= 0 for d in b.durations)
        assert len(a.durations) == 1
        rep = summarize([(a, b)])
        assert rep.mean_daily_delta == pytest.approx(0.0, abs=1e-6)


def test_phase_sets_information(small_data, families):
    md = small_data.days[0]
    sets = phase_scenario_sets(md, *families)
    n_price, n_reg = len(families[0]), len(families[1])
    assert len(sets[0]) == 3 * n_price * n_reg
    assert all(np.array_equal(s.prices.beta_dam, md.realized.prices.beta_dam) for s in sets[1])
    assert all(np.array_equal(s.prices.gamma_rm, md.realized.prices.gamma_rm) for s in sets[2])
    assert len(sets[3]) == 3 * n_reg
    assert all(s.prices == md.realized.prices for s in sets[3])
    for k, s in enumerate(sets):
        assert np.array_equal(s[0].wind, md.snapshots[k].p25)


def test_run_day_b_contract(small_data, families):
    p = default_params()
    md = small_data.days[1]
    a, b = evaluate_day(p, md, *families)
    assert a.framework == "A" and b.framework == "B" and a.day == b.day == md.day
    assert b.commitments.is_complete
    assert len(b.phase_objectives) == 4
    assert b.phase_objectives[0] >= a.phase_objectives[0] - 1e-6
    for res in (a, b):
        assert np.isfinite(res.realized.total)
        assert_trace_invariants(p, res.realized_trace, md.realized.wind)
        res.commitments.check(p)
    with pytest.raises(ValueError):
        run_day_b(p, phase_scenario_sets(md, *families)[:3], md.realized)


def test_summarize_single_day(small_data, families):
    md = small_data.days[2]
    a, b = evaluate_day(default_params(), md, *families)
    rep = summarize([(a, b)])
    assert rep.n_days == 1
    assert rep.mean_daily_delta == pytest.approx(b.realized.total - a.realized.total)
    assert rep.win_rate_b_over_a == (1.0 if b.realized.total - a.realized.total > 1e-6 else 0.0)
    assert rep.mean_relative_improvement == pytest.approx(rep.mean_daily_delta / a.realized.total)
    assert rep.mean_income_a["i_dam"] == a.realized.i_dam
    with pytest.raises(ValueError):
        summarize([])
    with pytest.raises(ValueError):
        ComparisonReport(0, 0.5, 0, 0, {}, {})
    with pytest.raises(ValueError):
        ComparisonReport(1, 1.5, 0, 0, {}, {})


def test_compare_reproducible_and_parallel_safe():
    cfg = SynthConfig(n_days=2, history_days=30)
    r1, p1 = compare(default_params(), cfg, k_prices=2, k_reg=2)
    r2, _ = compare(default_params(), cfg, k_prices=2, k_reg=2)
    r3, _ = compare(default_params(), cfg, k_prices=2, k_reg=2, workers=2)
    assert r1 == r2 == r3
    assert r1.n_days == 2 and len(p1) == 2
    with pytest.raises(ValueError):
        compare(default_params(), synth_generate(cfg), n_days=5)
