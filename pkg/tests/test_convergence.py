from __future__ import annotations

import numpy as np
import pytest

from bubbleglue import convergence as cv
from bubbleglue.analysis import GridSpec
from bubbleglue.bubbles import BubbleError, BubbleMap, RationalMap
from bubbleglue.fixtures import load_fixture
from bubbleglue.gluing import GluingError

SPEC = GridSpec(ds=0.05, n_theta=32)


def mark_sequence(ks, mark=1.0):
    seq, wit = [], []
    for k in ks:
        e = 2.0**-k
        seq.append(BubbleMap.build({0: None}, {}, {0: RationalMap.from_lists([[0, 1], [e, 0]])}, [(1, 0, mark)]))
        wit.append(cv.Witness({1: e}))
    return seq, wit


def test_rescaled_identity_converges_to_the_marked_bubble():
    seq, wit = mark_sequence(range(10, 14))
    cert = cv.converge_check(load_fixture("mark"), seq, wit, spec=SPEC, refine=False)
    assert cert.verdict["converges"]
    assert cert.sizes == [2.0**-k for k in range(10, 14)]
    assert all(m < 1e-12 for m in cert.mark_errors)
    assert cert.to_json()["verdict"] == cert.verdict


def test_wrong_mark_is_rejected():
    seq, wit = mark_sequence(range(10, 14), mark=3.0)
    cert = cv.converge_check(load_fixture("mark"), seq, wit, spec=SPEC, refine=False)
    assert not cert.verdict["marks_converge"]
    assert not cert.verdict["converges"]
    assert cert.verdict["sup_decreasing"]


def test_inadmissible_witness_and_mismatched_lengths():
    seq, wit = mark_sequence([2])
    with pytest.raises(GluingError, match="16"):
        cv.converge_check(load_fixture("mark"), seq, wit, spec=SPEC)
    with pytest.raises(ValueError):
        cv.converge_check(load_fixture("mark"), seq, [], spec=SPEC)


def test_sampled_map_shape_is_checked():
    bad = cv.SampledMap({0: np.zeros((3, 3, 2), dtype=complex)}, SPEC)
    with pytest.raises(BubbleError):
        cv.converge_check(load_fixture("mark"), [bad], [cv.Witness({1: 2.0**-12})], spec=SPEC)


def test_corrected_family_converges():
    sizes = [2.0**-k for k in (10, 12, 14)]
    seq, wit, states = cv.corrected_family(load_fixture("chain_n1"), sizes, spec=SPEC)
    cert = cv.converge_check(load_fixture("chain_n1"), seq, wit)
    assert cert.verdict["converges"]
    assert all(s.terminal_contraction <= 0.9 for s in states)


def test_neck_sweep_records_failures_and_continues():
    rows = cv.neck_sweep(load_fixture("chain_n1"), [0.5, 1e-3], spec=SPEC)
    assert rows[0]["error"] and not rows[1]["error"]
    assert set(rows[1]) == set(cv.SWEEP_COLUMNS)
    assert rows[1]["iterations"] > 0


def test_necks_split_evenly():
    b = load_fixture("star")
    v = cv._necks(b, 1e-4, None)
    assert sorted(v) == [1, 2] and all(z == pytest.approx(5e-5) for z in v.values())
    assert cv._necks(b, 1e-4, {1: 1j}) == {1: pytest.approx(1e-4j)}
