import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsfuzz.kpi import (KpiWindow, Thresholds, VulnKind, classify, handover_rate, jain_index, percentile5,
                        ping_pong_ues, severity_score, window_kpis)


def window(thr=50e6, jain=0.9, ho=0.5, pp=0, index=0):
    return KpiWindow(index, np.zeros(4, int), np.ones(4), thr, jain, ho, pp)


def test_percentile5():
    x = np.arange(40, 0, -1.0)
    assert percentile5(x) == 2.0
    assert percentile5(np.full(9, 3.5)) == 3.5
    assert percentile5([7.0]) == 7.0
    assert percentile5(np.arange(1.0, 21.0)) == 1.0
    assert percentile5(np.arange(1.0, 22.0)) == 2.0
    with pytest.raises(ValueError):
        percentile5([])


@given(st.lists(st.floats(0, 1e9), min_size=1, max_size=200))
def test_percentile5_below_median(x):
    assert percentile5(x) <= np.median(x) + 1e-6


def test_jain_examples():
    assert jain_index([1, 1, 1, 1]) == 1.0
    assert jain_index([5, 0, 0, 0]) == 0.25
    assert abs(jain_index([1, 2, 3, 4]) - 100 / 120) < 1e-12
    assert jain_index([0, 0, 0]) == 1.0


@given(st.lists(st.floats(1e-3, 1e6), min_size=1, max_size=50), st.floats(1e-3, 1e3))
def test_jain_bounds_and_scale_invariance(x, c):
    j = jain_index(x)
    assert 1 / len(x) - 1e-12 <= j <= 1 + 1e-12
    assert jain_index(np.array(x) * c) == pytest.approx(j, rel=1e-9)


def test_handover_rate():
    assert handover_rate([], 40, 1.0) == 0.0
    ev = [(1.0, 0, 0, 1)] * 120
    assert handover_rate(ev, 40, 1.0) == 3.0
    assert handover_rate([(1.0, 0, 0, 1)] * 200, 40, 1.0) == 5.0
    with pytest.raises(ValueError):
        handover_rate(ev, 40, 0.0)


def test_ping_pong():
    assert ping_pong_ues([], 3.0) == 0
    assert ping_pong_ues([(5.0, 0, 0, 1), (7.0, 0, 1, 0)], 3.0) == 1
    assert ping_pong_ues([(5.0, 0, 0, 1), (9.0, 0, 1, 0)], 3.0) == 0
    # onward move, not a return
    assert ping_pong_ues([(5.0, 0, 0, 1), (6.0, 0, 1, 2)], 3.0) == 0
    # two UEs, one counted once despite repeated returns
    ev = [(1.0, 0, 0, 1), (2.0, 0, 1, 0), (3.0, 0, 0, 1), (3.0, 4, 2, 3), (4.0, 4, 3, 2)]
    assert ping_pong_ues(ev, 3.0) == 2


def test_classify_examples():
    t = Thresholds()
    recs = classify(window(thr=8e6), t)
    assert [r.kind for r in recs] == [VulnKind.QOE]
    assert classify(window(), t) == []
    recs = classify(window(ho=5.0, pp=5), t)
    assert len(recs) == 1 and recs[0].kind is VulnKind.STABILITY and recs[0].critical
    recs = classify(window(ho=5.0, pp=3), t)
    assert not recs[0].critical
    assert not classify(window(thr=1e6, pp=9), t)[0].critical


def test_classify_provenance():
    r = classify(window(thr=1e6, index=4), Thresholds(), run_id="x/y/1", scenario="s", policy="p",
                 eval_index=3, genome_hash="abc")[0]
    assert (r.run_id, r.scenario, r.policy, r.eval_index, r.genome_hash, r.window_index) == (
        "x/y/1", "s", "p", 3, "abc", 4)


def test_severity_examples():
    assert severity_score(VulnKind.QOE, 10e6, 10e6, 1) == 1
    assert severity_score(VulnKind.QOE, 5e6, 10e6, 1) == 3
    assert severity_score(VulnKind.STABILITY, 3 * 2.2, 3.0, 3) == 5
    assert severity_score(VulnKind.FAIRNESS, 0.35, 0.7, 2) == 4


kpis = st.tuples(st.floats(0, 1e8), st.floats(0, 1), st.floats(0, 20), st.integers(0, 10))


@given(kpis, st.floats(0, 1e7), st.floats(0, 0.5), st.floats(0, 10))
def test_classify_monotone(base, d_thr, d_j, d_ho):
    t = Thresholds()
    thr, j, ho, pp = base
    a = classify(window(thr, j, ho, pp), t)
    b = classify(window(max(0.0, thr - d_thr), max(0.0, j - d_j), ho + d_ho, pp), t)
    assert len(a) <= 3 and len(b) <= 3
    sev_a = {r.kind: r.severity for r in a}
    sev_b = {r.kind: r.severity for r in b}
    for kind, sev in sev_a.items():
        assert kind in sev_b and sev_b[kind] >= sev
    assert all(r.kind is VulnKind.STABILITY for r in a + b if r.critical)


def test_window_kpis_from_samples():
    samples = np.array([[10e6, 20e6, 30e6, 40e6], [10e6, 20e6, 30e6, 40e6]])
    events = np.array([[61.0, 1, 0, 2], [62.0, 1, 2, 0]])
    w = window_kpis(1, events, samples, 4, 1.0)
    assert w.per_ue_throughput.tolist() == [10e6, 20e6, 30e6, 40e6]
    assert w.thr_5pct == 10e6
    assert w.handovers_per_ue.tolist() == [0, 2, 0, 0]
    assert w.total_handovers == 2
    assert w.ho_rate == 0.5 and w.ping_pong_ues == 1
    assert w.jain == pytest.approx(jain_index([1, 2, 3, 4]))
