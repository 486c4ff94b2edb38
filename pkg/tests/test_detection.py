import math

import numpy as np
import pytest

from coincidence_lab.detection import (
    CoincidenceEvent,
    DetectorPair,
    IllDefinedRatioError,
    coincidence_probability,
    event_ratio,
    statistics_ratio,
    window_integral,
)
from coincidence_lab.jointdensity import JointDensity, Statistics
from coincidence_lab.spwf import BoxEigenstate, LocalNode, LocalRegular, OscillatorEigenstate

DIS, BOS, FER = Statistics.DISTINGUISHABLE, Statistics.BOSON, Statistics.FERMION
LR, LL, RR, SAME = (CoincidenceEvent.LEFT_RIGHT, CoincidenceEvent.LEFT_LEFT,
                    CoincidenceEvent.RIGHT_RIGHT, CoincidenceEvent.SAME_EITHER)


def node_oracle(cd2, eta, delta):
    """Single-ordering left x right integrals for psi1 = c(x - x0), psi2 = d."""
    dis = cd2 * 4 * delta**2 * (eta**2 + delta**2 / 3)
    inter = -cd2 * 4 * delta**2 * eta**2
    return {DIS: dis, BOS: dis + inter, FER: dis - inter}


def test_geometry():
    g = DetectorPair.from_ratio(0.5, 2.0, 1e-3)
    assert g.eta == 2e-3 and g.a == 2.0
    assert (g.left.lo, g.left.hi) == pytest.approx((-3e-3, -1e-3))
    assert (g.right.lo, g.right.hi) == pytest.approx((1e-3, 3e-3))
    assert not g.overlapping and DetectorPair(0, 0.5, 1).overlapping
    for bad in [(0, 1, 0), (0, -1, 1), (math.nan, 1, 1)]:
        with pytest.raises(ValueError):
            DetectorPair(*bad)


@pytest.mark.parametrize("delta", [1e-8, 1e-6, 1e-4, 1e-2])
@pytest.mark.parametrize("a", [0.0, 0.25, 1.0, 4.0])
def test_separable_closed_forms(node_pair, delta, a):
    psi1, psi2, x0 = node_pair
    cd2 = abs(psi1.derivative) ** 2 * abs(psi2.amplitude) ** 2
    g = DetectorPair.from_ratio(x0, a, delta)
    oracle = node_oracle(cd2, g.eta, delta)
    for s in Statistics:
        got = window_integral(JointDensity(psi1, psi2, s), g, "left", "right")
        assert got.value == pytest.approx(oracle[s], rel=1e-12)
        assert coincidence_probability(JointDensity(psi1, psi2, s), g, LR).value == pytest.approx(
            2 * oracle[s], rel=1e-12
        )


def test_example_left_right_values():
    psi1, psi2, x0 = LocalNode(1.0, 0.0), LocalRegular(1.0, 0.0, 0.0), 0.0
    g = DetectorPair(x0, 0.01, 0.01)
    single = {s: window_integral(JointDensity(psi1, psi2, s), g, "left", "right").value for s in Statistics}
    assert single[DIS] == pytest.approx(4e-4 * (1e-4 + 1e-4 / 3), rel=1e-12)
    assert single[BOS] == pytest.approx(4 / 3 * 1e-8, rel=1e-12)
    assert single[BOS] / single[DIS] == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("x0", [0.3, 0.5, 0.77])
def test_exchange_consistency(box_pair, x0):
    psi1, psi2 = box_pair
    g = DetectorPair(x0, 2e-3, 1e-3)
    for s in Statistics:
        jd = JointDensity(psi1, psi2, s)
        lr = window_integral(jd, g, "left", "right").value
        rl = window_integral(jd, g, "right", "left").value
        assert lr == pytest.approx(rl, rel=1e-12)
        swapped = window_integral(JointDensity(psi2, psi1, s), g, "left", "right").value
        assert swapped == pytest.approx(lr, rel=1e-12)


@pytest.mark.parametrize("ev", list(CoincidenceEvent))
def test_sum_rule_over_windows(box_pair, ev):
    psi1, psi2 = box_pair
    g = DetectorPair(0.31, 3e-3, 1e-3)
    p = {s: coincidence_probability(JointDensity(psi1, psi2, s), g, ev).value for s in Statistics}
    assert p[BOS] + p[FER] == pytest.approx(2 * p[DIS], rel=1e-12)


def test_merged_detectors_degenerate(box_pair):
    psi1, psi2 = box_pair
    g = DetectorPair(0.4, 0.0, 1e-3)
    for s in Statistics:
        jd = JointDensity(psi1, psi2, s)
        single = window_integral(jd, g, "left", "right").value
        ll = coincidence_probability(jd, g, LL).value
        rr = coincidence_probability(jd, g, RR).value
        assert single == pytest.approx(ll, rel=1e-13)
        assert ll == pytest.approx(rr, rel=1e-13)
        # both labelings of one window pair versus the two same-window events
        lr = coincidence_probability(jd, g, LR).value
        assert lr == pytest.approx(coincidence_probability(jd, g, SAME).value, rel=1e-13)


def test_event_probabilities_nonnegative_and_fermion_overlap_small(box_pair):
    psi1, psi2 = box_pair
    g = DetectorPair(0.3, 0.0, 1e-3)
    fer = coincidence_probability(JointDensity(psi1, psi2, FER), g, LL).value
    dis = coincidence_probability(JointDensity(psi1, psi2, DIS), g, LL).value
    assert 0 <= fer < 1e-5 * dis


@pytest.mark.parametrize("delta", [1e-8, 1e-6, 1e-4, 1e-2])
@pytest.mark.parametrize("a", [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0])
def test_node_case_ratio_closed_forms(node_pair, delta, a):
    psi1, psi2, x0 = node_pair
    g = DetectorPair.from_ratio(x0, a, delta)
    dis = JointDensity(psi1, psi2, DIS)
    bos = statistics_ratio(dis.with_statistics(BOS), dis, g).value
    fer = statistics_ratio(dis.with_statistics(FER), dis, g).value
    assert bos == pytest.approx(1 / (1 + 3 * a * a), abs=1e-9)
    assert fer == pytest.approx(2 - 1 / (1 + 3 * a * a), abs=1e-9)
    assert event_ratio(dis, g).value == pytest.approx(1.0, abs=1e-9)
    assert event_ratio(dis.with_statistics(BOS), g).value == pytest.approx(1 / (1 + 6 * a * a), abs=1e-9)
    assert event_ratio(dis.with_statistics(FER), g).value == pytest.approx(1 + 6 * a * a, rel=1e-9)


@pytest.mark.parametrize("pair", [(BoxEigenstate(1), BoxEigenstate(3)), (OscillatorEigenstate(0), OscillatorEigenstate(2))])
def test_distinguishable_event_ratio_with_merged_detectors(pair):
    g = DetectorPair(0.37, 0.0, 1e-3)
    assert event_ratio(JointDensity(*pair, DIS), g).value == pytest.approx(1.0, rel=1e-12)


def test_ill_defined_ratio_outside_support(box_pair):
    psi1, psi2 = box_pair
    jd = JointDensity(psi1, psi2, DIS)
    g = DetectorPair(5.0, 2e-3, 1e-3)
    with pytest.raises(IllDefinedRatioError):
        statistics_ratio(jd.with_statistics(BOS), jd, g)
    with pytest.raises(ZeroDivisionError):
        event_ratio(jd, g)


def test_mismatched_wavefunctions_rejected(box_pair):
    psi1, psi2 = box_pair
    g = DetectorPair(0.3, 2e-3, 1e-3)
    with pytest.raises(ValueError, match="same wavefunctions"):
        statistics_ratio(JointDensity(psi1, psi2, BOS), JointDensity(psi1, BoxEigenstate(3), DIS), g)


def test_far_origin_matches_origin_for_local_models():
    c, d = 0.9 + 0.3j, -1.2 + 0.5j
    delta, a = 1e-8, 1.0
    ratios = []
    for x0 in (0.0, 1e6):
        psi1, psi2 = LocalNode(c, x0), LocalRegular(d, 0.0, x0)
        g = DetectorPair.from_ratio(x0, a, delta)
        jd = JointDensity(psi1, psi2, DIS)
        ratios.append(
            [coincidence_probability(jd.with_statistics(s), g, LR).value for s in Statistics]
        )
    assert np.allclose(ratios[0], ratios[1], rtol=1e-12, atol=0)


def test_quadrature_error_reported(box_pair):
    psi1, psi2 = box_pair
    p = coincidence_probability(JointDensity(psi1, psi2, BOS), DetectorPair(0.5, 1e-3, 1e-3), LR)
    assert p.converged
    assert 0 <= p.quadrature_error <= 1e-8 * p.value
    row = p.row()
    assert row["statistics"] == "bos" and row["event"] == "left_right"
