"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected in ``RESULTS`` and echoed in the pytest
terminal summary (see conftest.py), so they show up without ``-s``.
"""
import contextlib
import csv
import time

import numpy as np
import pytest

from invariants import failed_invariants
from oracles import deterministic_day, random_lp, vertex_optimum
from test_csvio import q9, quantized_dataset
from wspp import csvio
from wspp.builder import PhaseId, build_framework_a, build_phase, recourse_traces
from wspp.cli import main
from wspp.csvio import ReportRow
from wspp.evaluation import (
    ComparisonReport, framework_a_set, phase_scenario_sets, realized_scenario_set, run_day_a, run_day_b,
)
from wspp.lp import Status, check_feasible, solve
from wspp.market import T, CommitmentSchedule, DayPrices, RegulationPair, default_params
from wspp.scenarios import combine, kmeans, price_scenarios, regulation_scenarios, wind_scenarios
from wspp.synth import SynthConfig, synth_generate

RESULTS = {}
KAPPAS = (1.1, 2.0, 10.0, 1e6)


@contextlib.contextmanager
def criterion(n, title):
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        line = f"criterion {n:2d} FAIL  {title}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        RESULTS[n] = line
        print(line)
        raise
    extra = "; ".join(f"{k}={v}" for k, v in detail.items())
    line = f"criterion {n:2d} PASS  {title}" + (f" ({extra})" if extra else "")
    RESULTS[n] = line
    print(line)


@pytest.fixture(scope="module")
def single_days():
    """Twenty seeded synthetic days, each a single realized scenario."""
    return synth_generate(SynthConfig(seed=11, n_days=20, history_days=10)).days


@pytest.fixture(scope="module")
def default_data():
    return synth_generate(SynthConfig(n_days=1))


@pytest.fixture(scope="module")
def default_families(default_data):
    return (price_scenarios(default_data.price_history, 10, 0),
            regulation_scenarios(default_data.regulation_history, 3, 0))


def stressed_day():
    """Synthetic wind with prices where covering regulation through the BM is dear."""
    md = synth_generate(SynthConfig(n_days=1, history_days=5)).days[0]
    prices = [(DayPrices.flat(beta_dam=50, beta_idm=50, gamma_rm=40, beta_rm_up=5, beta_rm_dw=5,
                              lambda_bm_up=10, lambda_bm_dw=200), 1.0)]
    regs = [(RegulationPair(0.6, 0.1), 0.5), (RegulationPair(0.1, 0.6), 0.5)]
    return combine(wind_scenarios(md.snapshots[0]), prices, regs)


def test_c01_lp_oracle_suite():
    with criterion(1, "LP solver vs vertex-enumeration oracle") as info:
        rng = np.random.default_rng(20240101)
        lps = [random_lp(rng, n=int(rng.integers(1, 6)), m=int(rng.integers(0, 7))) for _ in range(120)]
        oracle = [vertex_optimum(lp) for lp in lps]
        t0 = time.perf_counter()
        sols = [solve(lp, method="simplex") for lp in lps]
        elapsed = time.perf_counter() - t0
        for lp, best, s in zip(lps, oracle, sols):
            assert lp.shape[1] <= 5 and lp.shape[0] <= 6
            if best is None:
                assert s.status is Status.INFEASIBLE
            else:
                assert s.status is Status.OPTIMAL
                assert abs(s.objective_value - best) <= 1e-6, (s.objective_value, best)
                assert check_feasible(lp, s.x).ok()
        assert elapsed < 10.0
        info.update(lps=len(lps), infeasible=sum(b is None for b in oracle), seconds=f"{elapsed:.2f}")


def test_c02_deterministic_collapse(single_days):
    with criterion(2, "single-scenario Framework A equals deterministic LP") as info:
        p = default_params()
        worst = 0.0
        for md in single_days:
            r = md.realized
            res = run_day_a(p, realized_scenario_set(r), r)
            ref, _, _ = deterministic_day(p, r.wind, r.prices, r.regulation)
            worst = max(worst, abs(res.expected.total - ref))
            assert abs(res.expected.total - ref) <= 1e-6, (md.day, res.expected.total, ref)
        info.update(days=len(single_days), max_gap=f"{worst:.1e}")


def test_c03_relaxation_inequality():
    with criterion(3, "B Phase 1 objective >= Framework A objective") as info:
        p = default_params()
        gaps = []
        for seed in range(20):
            d = synth_generate(SynthConfig(seed=seed, n_days=1, history_days=60))
            fam = (price_scenarios(d.price_history, 10, seed), regulation_scenarios(d.regulation_history, 3, seed))
            md = d.days[0]
            scen = framework_a_set(md, *fam)
            assert len(scen) == 90
            assert tuple(scen) == tuple(phase_scenario_sets(md, *fam)[0])
            a = solve(build_framework_a(p, scen)[0])
            b = solve(build_phase(PhaseId.B_PHASE1, p, scen, CommitmentSchedule())[0])
            assert a.optimal and b.optimal
            gaps.append(b.objective_value - a.objective_value)
            assert b.objective_value >= a.objective_value - 1e-6, (seed, b.objective_value, a.objective_value)
        info.update(instances=20, min_gap=f"{min(gaps):.3g}", mean_gap=f"{np.mean(gaps):.3g}")


def test_c04_perfect_information(single_days):
    with criterion(4, "perfect information: B realized equals A realized") as info:
        p = default_params()
        worst = 0.0
        for md in single_days:
            scen = realized_scenario_set(md.realized)
            a = run_day_a(p, scen, md.realized)
            b = run_day_b(p, [scen] * 4, md.realized)
            worst = max(worst, abs(a.realized.total - b.realized.total))
            assert abs(a.realized.total - b.realized.total) <= 1e-6, md.day
        info.update(days=len(single_days), max_gap=f"{worst:.1e}")


def test_c05_feasibility_invariants(single_days, default_data, default_families):
    with criterion(5, "feasibility invariants on every optimal solution") as info:
        p = default_params()
        corpus = []
        for md in single_days[:10]:
            scen = realized_scenario_set(md.realized)
            a = run_day_a(p, scen, md.realized)
            b = run_day_b(p, [scen] * 4, md.realized)
            corpus += [(p, a.realized_trace, md.realized.wind), (p, b.realized_trace, md.realized.wind)]
        md = default_data.days[0]
        full = framework_a_set(md, *default_families)
        lp, idx = build_framework_a(p, full)
        corpus += [(p, t, s.wind) for t, s in zip(recourse_traces(solve(lp), idx), full)]
        lp, idx = build_phase(PhaseId.B_PHASE1, p, full, CommitmentSchedule())
        corpus += [(p, t, s.wind) for t, s in zip(recourse_traces(solve(lp), idx), full)]
        b = run_day_b(p, phase_scenario_sets(md, *default_families), md.realized)
        corpus.append((p, b.realized_trace, md.realized.wind))
        scen = stressed_day()
        for kappa in KAPPAS:
            pk = p.replace(kappa_rm=kappa)
            lp, idx = build_framework_a(pk, scen)
            corpus += [(pk, t, s.wind) for t, s in zip(recourse_traces(solve(lp), idx), scen)]
        bad = [(i, failed_invariants(*item)) for i, item in enumerate(corpus)]
        bad = [b for b in bad if b[1]]
        assert not bad, bad[:3]
        info.update(traces=len(corpus))


def test_c06_scenario_counts(default_data, default_families):
    with criterion(6, "default pipeline gives 90 scenarios with a consistent measure") as info:
        md = default_data.days[0]
        prices, regs = default_families
        winds = wind_scenarios(md.snapshots[0])
        scen = framework_a_set(md, prices, regs)
        assert len(scen) == 90
        probs = scen.probabilities
        assert abs(probs.sum() - 1.0) <= 1e-9
        grid = probs.reshape(len(winds), len(prices), len(regs))
        for axes, fam in (((1, 2), winds), ((0, 2), prices), ((0, 1), regs)):
            marg = grid.sum(axis=axes)
            assert np.max(np.abs(marg - [w for _, w in fam])) <= 1e-9
        for s, (wi, pi, ri) in zip(scen, np.ndindex(grid.shape)):
            assert np.array_equal(s.wind, winds[wi][0]) and s.prices == prices[pi][0]
            assert s.regulation == regs[ri][0]
        info.update(scenarios=len(scen), sum_error=f"{abs(probs.sum() - 1):.1e}")


def kmeans_datasets():
    yield "two-blob", np.array([[0.0], [0.1], [-0.1], [10.0], [10.1], [9.9]]), 2
    rng = np.random.default_rng(77)
    for i in range(9):
        dim, k = int(rng.integers(1, 6)), int(rng.integers(2, 6))
        centers = rng.normal(scale=5, size=(k, dim))
        X = np.concatenate([c + rng.normal(size=(int(rng.integers(5, 40)), dim)) for c in centers])
        yield f"mixture-{i}", X, k


def test_c07_kmeans_properties():
    with criterion(7, "k-means determinism, descent, assignment, frequencies") as info:
        names = []
        for seed, (name, X, k) in enumerate(kmeans_datasets()):
            m1, m2 = kmeans(X, k, seed=seed), kmeans(X, k, seed=seed)
            assert np.array_equal(m1.centroids, m2.centroids) and np.array_equal(m1.labels, m2.labels)
            h = np.array(m1.inertia_history)
            assert len(h) >= 1 and np.all(np.diff(h) <= 1e-9 * max(1.0, h[0])), name
            d2 = ((X[:, None, :] - m1.centroids[None]) ** 2).sum(axis=2)
            assert np.all(d2[np.arange(len(X)), m1.labels] <= d2.min(axis=1) + 1e-12), name
            assert np.array_equal(m1.probabilities, np.bincount(m1.labels, minlength=k) / len(X))
            if name == "two-blob":
                assert sorted(m1.centroids[:, 0].round(12)) == [0.0, 10.0]
                assert np.allclose(m1.probabilities, 0.5)
            names.append(name)
        assert len(names) == 10
        info.update(datasets=len(names))


def test_c08_penalty_monotonicity():
    with criterion(8, "total RM deviation non-increasing in kappa") as info:
        scen = stressed_day()
        totals = []
        for kappa in KAPPAS:
            lp, idx = build_framework_a(default_params().replace(kappa_rm=kappa), scen)
            traces = recourse_traces(solve(lp), idx)
            totals.append(sum(float(t.rm_dev_up.sum() + t.rm_dev_dw.sum()) for t in traces))
        assert all(b <= a + 1e-6 for a, b in zip(totals, totals[1:])), totals
        info.update(deviation=" > ".join(f"{v:.4g}" for v in totals))


def test_c09_framework_comparison(tmp_path, capsys):
    with criterion(9, "compare --days 60 --seed 7: B mean income >= A") as info:
        t0 = time.perf_counter()
        assert main(["compare", "--days", "60", "--seed", "7", "--out", str(tmp_path)]) == 0
        elapsed = time.perf_counter() - t0
        out = capsys.readouterr().out
        assert "win rate" in out and "relative improvement" in out
        rep = csvio.read_summary(tmp_path / "summary.csv")
        with open(tmp_path / "report.csv") as fh:
            assert len([r for r in csv.reader(fh) if r and not r[0].startswith("#")]) == 1 + 120
        assert rep.n_days == 60
        assert elapsed < 15 * 60
        assert rep.mean_income_b["total"] >= rep.mean_income_a["total"]
        info.update(win_rate=f"{rep.win_rate_b_over_a:.1%}", rel_improvement=f"{rep.mean_relative_improvement:.2%}",
                    mean_delta=f"{rep.mean_daily_delta:.2f}", minutes=f"{elapsed / 60:.1f}")


def test_c10_performance(default_data, default_families):
    with criterion(10, "performance envelope") as info:
        p = default_params()
        md = default_data.days[0]
        t0 = time.perf_counter()
        a = run_day_a(p, framework_a_set(md, *default_families), md.realized)
        ta = time.perf_counter() - t0
        t0 = time.perf_counter()
        b = run_day_b(p, phase_scenario_sets(md, *default_families), md.realized)
        tb = time.perf_counter() - t0
        assert a.commitments.is_complete and b.commitments.is_complete
        assert ta < 60 and tb < 240
        info.update(framework_a_s=f"{ta:.2f}", framework_b_s=f"{tb:.2f}")


def test_c11_csv_round_trip(tmp_path):
    with criterion(11, "CSV round trips") as info:
        d = quantized_dataset()
        back = csvio.ingest(csvio.emit_dataset(d, tmp_path / "data"))
        assert np.array_equal(back.price_history, d.price_history)
        assert np.array_equal(back.regulation_history, d.regulation_history)
        assert back.days == d.days

        rng = np.random.default_rng(3)
        def prices():
            v = q9(rng.uniform(5, 90, (T, 7)))
            v[:, 5:] = np.sort(v[:, 5:], axis=1)  # BM up price never above BM down price
            return DayPrices(v)

        fam = [(prices(), 0.25), (prices(), 0.75)]
        scen = combine([(q9(rng.uniform(0, 50, T)), 0.5), (q9(rng.uniform(0, 50, T)), 0.5)], fam,
                       [(RegulationPair(0.25, 0.5), 1.0)])
        csvio.write_scenarios(tmp_path / "s.csv", scen)
        assert tuple(csvio.read_scenarios(tmp_path / "s.csv")) == tuple(scen)

        c = CommitmentSchedule(q9(rng.uniform(-10, 60, T)), q9(rng.uniform(-5, 5, T)),
                               np.full(T, 6.0), np.full(T, 4.0))
        csvio.write_commitments(tmp_path / "c.csv", c)
        assert csvio.read_commitments(tmp_path / "c.csv") == c

        rows = [ReportRow(365, "A", 1.5, -2.25, 3.0, 4.125, 10.0, 6.375, (12.5, None, None, None)),
                ReportRow(365, "B", 1.0, 2.0, 3.0, 4.0, 11.0, 10.0, (1.0, 2.0, 3.0, 4.0))]
        csvio.write_report(tmp_path / "r.csv", rows)
        assert csvio.read_report(tmp_path / "r.csv") == rows
        rep = ComparisonReport(2, 0.5, 3.625, 0.25, {"i_dam": 1.0, "total": 6.375}, {"i_dam": 2.0, "total": 10.0})
        csvio.write_summary(tmp_path / "m.csv", rep)
        assert csvio.read_summary(tmp_path / "m.csv") == rep
        info.update(schemas="prices, forecasts, actuals, regulation, scenarios, commitments, report, summary")
