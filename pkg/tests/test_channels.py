import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import parallel_instance
from wtgf.channels import (
    BOB_OVER_EVE,
    EVE_OVER_BOB,
    ErasureParams,
    StateChannel,
    bec,
    bsc,
    classify,
    degradation_residual,
    embed_parallel,
    has_perfect_feedback,
    is_degraded,
    less_noisy_verdict,
    make_bsc_wiretap,
    make_erasure_wtgf,
    make_perfect_feedback,
)
from wtgf.errors import ModelError
from wtgf.probkit import Alphabet, JointPmf, Kernel


def test_bsc_wiretap_is_degraded():
    ch = make_bsc_wiretap(0.1, 0.2)
    rep = classify(ch)
    assert rep.degraded_y_to_z and not rep.degraded_z_to_y
    assert rep.less_noisy_verdicts[BOB_OVER_EVE].verdict == "yes"
    assert rep.less_noisy_verdicts[EVE_OVER_BOB].verdict == "no"
    # the witness re-evaluates to a positive concavity violation
    w = rep.less_noisy_verdicts[EVE_OVER_BOB].witness
    assert w.reevaluate(ch.marginal_kernel("Z"), ch.marginal_kernel("Y")) > 0
    np.testing.assert_allclose(ch.marginal_kernel("Z").table, bsc(0.2), atol=1e-12)


def test_degrading_map_residual():
    ok, m = is_degraded(bsc(0.1), bsc(0.25))
    assert ok and degradation_residual(bsc(0.1), bsc(0.25), m) < 1e-9
    ok, m = is_degraded(bsc(0.25), bsc(0.1))
    assert not ok and m is None


def test_bec_degraded_by_bsc_is_not():
    # BSC(0.1) is not a degraded version of BEC(0.5) and vice versa
    assert not is_degraded(bec(0.5), bsc(0.1))[0]
    assert is_degraded(bsc(0.0), bsc(0.3))[0]


def test_less_noisy_but_not_degraded():
    # BEC(e) is less noisy than BSC(p) for 2p < e <= 4p(1-p) without degrading to it
    v = less_noisy_verdict(bec(0.3), bsc(0.11), BOB_OVER_EVE, probes=512)
    assert v.verdict == "unknown"
    assert not is_degraded(bec(0.3), bsc(0.11))[0]
    # past 4p(1-p) the probe finds a violation
    v = less_noisy_verdict(bec(0.6), bsc(0.11), BOB_OVER_EVE, probes=512)
    assert v.verdict == "no" and v.witness.margin > 0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.45), st.floats(0.0, 0.45))
def test_degraded_iff_noisier(p, q):
    ok, _ = is_degraded(bsc(p), bsc(q))
    if q > p + 1e-6:
        assert ok
    if p > q + 1e-6:
        assert not ok


def test_erasure_channel_structure():
    ch = make_erasure_wtgf(ErasureParams(0.5, 0.5))
    assert ch.table.shape == (2, 3, 2, 6)
    # feedback flag equals the erasure indicator
    assert ch.table[0, 2, 0].sum() == 0 and ch.table[0, 0, 1].sum() == 0
    np.testing.assert_allclose(ch.table.sum(axis=(1, 2, 3)), 1.0)
    with pytest.raises(ValueError):
        ErasureParams(1.2, 0.5)


def test_perfect_feedback_detection():
    yz = bsc(0.1)[:, :, None] * bsc(0.2)[:, None, :]
    assert has_perfect_feedback(make_perfect_feedback(yz, (0, 1), (0, 1), (0, 1)))
    assert not has_perfect_feedback(make_bsc_wiretap(0.1, 0.2))


def test_embed_parallel_shapes_and_marginals():
    ps = parallel_instance(0.2)
    ch = embed_parallel(ps)
    assert ch.y.size == 4 and ch.z.size == 4 and ch.yhat == ps.yhats
    # Y = (Ys, Yc): the Yc part is noiseless
    t = ch.table.sum(axis=(2, 3)).reshape(2, 2, 2).sum(axis=1)
    np.testing.assert_allclose(t, np.eye(2))
    assert ps.same_side_information()
    np.testing.assert_allclose(ps.yhats_pmf(), [0.5, 0.5])


def test_structural_equality():
    a = make_erasure_wtgf(ErasureParams(0.3, 0.4))
    assert a.structurally_equal(make_erasure_wtgf(ErasureParams(0.3, 0.4)))
    assert not a.structurally_equal(make_erasure_wtgf(ErasureParams(0.3, 0.5)))


def test_state_channel_checks_alphabets():
    k = Kernel([("X", Alphabet((0, 1))), ("S", Alphabet((0, 1)))], [("Y", Alphabet((0, 1))), ("Z", Alphabet((0,)))],
               np.full((2, 2, 2, 1), 0.5))
    with pytest.raises(ModelError):
        StateChannel(k, JointPmf([("S", Alphabet((0, 1, 2)))], [0.2, 0.3, 0.5]))
