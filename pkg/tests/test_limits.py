import math

import pytest

from coincidence_lab.detection import DetectorPair
from coincidence_lab.jointdensity import Statistics
from coincidence_lab.limits import (
    CLOSED_FORMS,
    LimitProtocol,
    Observable,
    Probe,
    Schedule,
    SweepPoint,
    estimate_limit,
    fit_asymptotic,
    richardson,
    sweep_ratio_curve,
)
from coincidence_lab.spwf import BoxEigenstate

SCHED = Schedule(0.005, 0.5, 10)


def probe(pair, x0, s="bos", kind="statistics"):
    return Probe(pair[0], pair[1], x0, Observable(kind, s))


def test_richardson_removes_power_series():
    # f(h) = 3 + 2h - 5h^2 + h^3 is removed exactly after four samples
    hs = [0.1 * 0.5**k for k in range(6)]
    vals = [3 + 2 * h - 5 * h * h + h**3 for h in hs]
    diag = richardson(vals, 2.0)
    assert diag[3] == pytest.approx(3.0, abs=1e-13)
    assert richardson([1.5], 2.0) == [1.5]
    with pytest.raises(ValueError):
        richardson([], 2.0)


def test_schedule_and_protocol_validation(box_pair):
    assert Schedule(1.0, 0.5, 3).values == [1.0, 0.5, 0.25]
    for bad in [(0.0, 0.5, 8), (1.0, 1.0, 8), (1.0, 0.5, 1)]:
        with pytest.raises(ValueError):
            Schedule(*bad)
    with pytest.raises(ValueError):
        LimitProtocol.fixed_ratio(-1.0)
    with pytest.raises(ValueError):
        LimitProtocol("eta_first", 1.0)
    p = probe(box_pair, 0.5)
    with pytest.raises(ValueError, match="lambda/100"):
        estimate_limit(p, LimitProtocol.eta_first(), Schedule(0.5, 0.5, 10))
    with pytest.raises(ValueError, match="at least"):
        estimate_limit(p, LimitProtocol.eta_first(), Schedule(0.001, 0.5, 4))


def test_node_case_order_of_limits(box_pair):
    """Iterated limits disagree at a node: the witness of non-interchangeability."""
    expected = {("bos", "eta_first"): 1.0, ("bos", "delta_first"): 0.0,
                ("fer", "eta_first"): 1.0, ("fer", "delta_first"): 2.0}
    got = {}
    for (s, kind), target in expected.items():
        est = estimate_limit(probe(box_pair, 0.5, s), LimitProtocol(kind), SCHED)
        assert est.converged, est.message
        assert est.value == pytest.approx(target, abs=1e-3)
        got[s, kind] = est.value
    assert abs(got["bos", "eta_first"] - got["bos", "delta_first"]) > 0.5


def test_regular_case_limits_interchange(box_pair):
    for s, target in (("bos", 2.0), ("fer", 0.0)):
        values = [estimate_limit(probe(box_pair, 0.25, s), LimitProtocol(k), SCHED).value
                  for k in ("eta_first", "delta_first")]
        assert values == pytest.approx([target, target], abs=2e-3)


@pytest.mark.parametrize("a", [0.0, 0.5, 1.0, 3.0])
def test_fixed_ratio_limit_matches_closed_form(box_pair, a):
    for s, model in (("bos", "1/(1+3a^2)"), ("fer", "2-1/(1+3a^2)")):
        est = estimate_limit(probe(box_pair, 0.5, s), LimitProtocol.fixed_ratio(a), SCHED)
        assert est.converged
        assert est.value == pytest.approx(CLOSED_FORMS[model](a), abs=1e-6)


def test_boson_ratio_decreases_with_separation(box_pair):
    pts = sweep_ratio_curve(probe(box_pair, 0.5), [0, 0.25, 0.5, 1, 2, 5, 10], 1e-5)
    ratios = [p.ratio for p in pts]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_ratio_depends_only_on_a(node_pair):
    psi1, psi2, x0 = node_pair
    p = probe((psi1, psi2), x0)
    for a in (0.3, 2.0):
        vals = [p.ratio(DetectorPair.from_ratio(x0, a, d)).value for d in (1e-8, 1e-5, 1e-2, 10.0)]
        assert max(vals) - min(vals) < 1e-12


def test_event_limits_node_case(box_pair):
    est = estimate_limit(probe(box_pair, 0.5, "bos", "event"), LimitProtocol.fixed_ratio(1.0), SCHED)
    assert est.value == pytest.approx(1 / 7, abs=1e-6)
    # fermion same-window probability vanishes faster than left-right: no finite limit
    est = estimate_limit(probe(box_pair, 0.5, "fer", "event"), LimitProtocol.delta_first(), SCHED)
    assert not est.converged


def test_regular_case_sweep_approaches_constant_at_order_delta_squared(box_pair):
    devs = []
    for d in (1e-3, 5e-4, 2.5e-4):
        fit = fit_asymptotic(sweep_ratio_curve(probe(box_pair, 0.25), [0, 0.5, 1, 2], d), "2")
        devs.append(fit.max_abs_deviation)
    assert devs[0] / devs[1] == pytest.approx(4.0, rel=0.05)
    assert devs[1] / devs[2] == pytest.approx(4.0, rel=0.05)


def test_observed_order_reported(box_pair):
    est = estimate_limit(probe(box_pair, 0.25), LimitProtocol.fixed_ratio(1.0), SCHED)
    assert est.observed_order == pytest.approx(2.0, abs=0.1)
    d = est.to_dict()
    assert d["converged"] is True and len(d["sequence"]) == SCHED.count


def test_partial_sequence_when_ratio_becomes_ill_defined():
    # x0 sits just past the wall: the left window reaches into the box only while delta > 2.5e-4
    p = probe((BoxEigenstate(2), BoxEigenstate(1)), 1.0005, "dis", "event")
    est = estimate_limit(p, LimitProtocol.fixed_ratio(1.0), Schedule(0.001, 0.5, 8))
    assert not est.converged and "stopped at parameter 0.00025" in est.message
    assert [d for d, _ in est.sequence] == [0.001, 0.0005]
    p = probe((BoxEigenstate(2), BoxEigenstate(1)), 1.5)
    est = estimate_limit(p, LimitProtocol.fixed_ratio(1.0), Schedule(0.001, 0.5, 8))
    assert not est.converged and est.sequence == [] and "stopped" in est.message


def test_sweep_marks_ill_defined_points():
    p = probe((BoxEigenstate(2), BoxEigenstate(1)), 1.5)
    pts = sweep_ratio_curve(p, [0.0, 1.0], 1e-4)
    assert all(math.isnan(pt.ratio) and not pt.converged for pt in pts)
    with pytest.raises(ValueError):
        sweep_ratio_curve(p, [1.0], 0.1)
    with pytest.raises(ValueError):
        sweep_ratio_curve(p, [-1.0], 1e-4)


def test_fit_asymptotic_errors():
    table = [SweepPoint(a, 1e-6, a * 1e-6, 1 / (1 + 3 * a * a), 0.0, True) for a in (0, 1, 2)]
    with pytest.raises(ValueError, match="insufficient"):
        fit_asymptotic(table, "1/(1+3a^2)")
    with pytest.raises(ValueError, match="unknown model"):
        fit_asymptotic(table, "a^3")
    table.append(SweepPoint(3.0, 1e-6, 3e-6, 1 / 28, 0.0, True))
    fit = fit_asymptotic(table, "1/(1+3a^2)")
    assert fit.n_points == 4 and fit.max_abs_deviation < 1e-15
