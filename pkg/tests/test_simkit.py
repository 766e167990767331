import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import perfect_feedback
from wtgf import bounds as B
from wtgf.channels import WtgfChannel, bsc
from wtgf.errors import BudgetExceeded, ModelError, SchemeInfeasible
from wtgf.simkit import (
    SchemeRates,
    build_codebook,
    code_count,
    derive_scheme_rates,
    encode_block,
    estimate_error,
    exact_leakage_tiny,
    is_typical,
    monte_carlo_leakage,
    otp_decrypt,
    otp_encrypt,
    otp_joint,
    otp_leakage,
    run_session,
    typical_mask,
)


def wiretap_aux(ch):
    return B.FactorizationKG.wiretap(ch, np.eye(ch.x.size) / ch.x.size)


def key_aux(ch):
    """U constant, X uniform, V = Yhat: keys come from the feedback."""
    ny = ch.yhat.size
    v = np.zeros((1, ch.x.size, ny, ny))
    v[0, :, np.arange(ny), np.arange(ny)] = 1.0
    return B.FactorizationKG.from_arrays(ch, [[1.0]], [[0.5, 0.5]], v, np.ones((ny, 1)))


@pytest.fixture(scope="module")
def small_code():
    ch = perfect_feedback(0.3)
    f = wiretap_aux(ch)
    rates = derive_scheme_rates(f, ch, 12, 4, r0=1 / 12, eps_prime=0.2)
    return ch, build_codebook(rates, f, 1, ch)


@pytest.fixture(scope="module")
def keyed_code():
    ch = perfect_feedback(0.3)
    f = key_aux(ch)
    rates = derive_scheme_rates(f, ch, 4, 3, r1=0.25, eps_prime=0.2)
    return ch, build_codebook(rates, f, 2, ch)


# one-time pad


@pytest.mark.parametrize("bits", [1, 2, 3, 4])
def test_otp_exact(bits):
    modulus = 2**bits
    mi, pc = otp_leakage(modulus)
    assert mi == 0.0
    assert all(p == Fraction(1, modulus) for p in pc)
    joint = otp_joint(modulus, [Fraction(k + 1, modulus * (modulus + 1) // 2) for k in range(modulus)])
    assert sum(joint.values()) == 1


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6).flatmap(lambda b: st.tuples(st.just(2**b), st.integers(0, 2**b - 1),
                                                      st.integers(0, 2**b - 1))))
def test_otp_round_trip(args):
    modulus, m, k = args
    assert otp_decrypt(otp_encrypt(m, k, modulus), k, modulus) == m


# typicality


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=5, max_size=30), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_typicality_monotone_in_delta(seq, d1, d2):
    lo, hi = sorted((d1, d2))
    pmf = np.array([0.3, 0.7])
    x = np.array(seq)
    if is_typical([x], pmf, lo):
        assert is_typical([x], pmf, hi)


def test_typicality_forbids_zero_cells():
    pmf = np.array([[0.5, 0.0], [0.0, 0.5]])
    x = np.array([0, 1, 0, 1])
    assert typical_mask([x, x], pmf, 0.01)[0]
    assert not typical_mask([x, 1 - x], pmf, 1.0)[0]


# rates and sizes


def test_code_count_snaps_integer_exponents():
    assert code_count(12, 1 / 12) == 2
    assert code_count(3, 1 / 3) == 2
    assert code_count(4, 0.0) == 1
    assert code_count(2, 0.6) == 3


def test_sizes_follow_rates(small_code):
    _, cb = small_code
    r, s = cb.rates, cb.sizes
    n = r.n
    assert s.n_l1 == code_count(n, r.s1_tilde) and s.n_l2 == code_count(n, r.s2_tilde)
    assert s.n_lp * s.n_lpp == s.n_l1 * s.n_l2
    assert s.n_s1 == s.n_l1 * s.t_per_bin and s.n_s2 == s.n_l2 * s.v_per_bin


def test_scheme_rates_reject_violations():
    base = dict(n=4, b=2, s1=1.0, s1_tilde=0.5, s2=1.0, s2_tilde=0.5, s2_bar=0.25, r0=0.0, r1=0.0, rf=0.0,
                s_tilde_prime=0.5, s_tilde_dprime=0.5)
    SchemeRates(**base)
    with pytest.raises(SchemeInfeasible, match="s1_tilde <= s1"):
        SchemeRates(**{**base, "s1_tilde": 1.5, "s_tilde_prime": 1.0, "s_tilde_dprime": 1.0})
    with pytest.raises(SchemeInfeasible, match="r1 <= s2_bar"):
        SchemeRates(**{**base, "r1": 0.5})


def test_negative_key_rate_is_infeasible():
    # Eve sees the feedback exactly, Bob only a noisy copy of X
    t = np.zeros((2, 2, 2, 2))
    for x in range(2):
        t[x, :, x, x] = bsc(0.4)[x]
    ch = WtgfChannel.from_table(t, (0, 1), (0, 1), (0, 1), (0, 1))
    with pytest.raises(SchemeInfeasible, match="I\\(V;Z\\|UT\\)"):
        derive_scheme_rates(key_aux(ch), ch, 4, 2)


# codebook


def test_codebook_deterministic_and_partitions(keyed_code):
    ch, cb = keyed_code
    again = build_codebook(cb.rates, key_aux(ch), 2, ch)
    s = cb.sizes
    assert s.n_r1 == 2
    for a, b in zip(cb.blocks, again.blocks):
        np.testing.assert_array_equal(a.u, b.u)
        np.testing.assert_array_equal(a.v, b.v)
    for blk in cb.blocks:
        assert sorted(blk.ml) == list(range(s.n_l1 * s.n_l2))
        np.testing.assert_array_equal(np.bincount(blk.mk, minlength=s.n_r1), s.k_per_key)
        np.testing.assert_array_equal(np.bincount(blk.b1, minlength=s.n_l1), s.t_per_bin)
        np.testing.assert_array_equal(np.bincount(blk.b2, minlength=s.n_l2), s.v_per_bin)
    for j in range(cb.b):
        for l1 in range(s.n_l1):
            for l2 in range(s.n_l2):
                assert cb.split(j, *cb.recombine(j, l1, l2)) == (l1, l2)


def test_codebook_budget(small_code):
    ch, cb = small_code
    with pytest.raises(BudgetExceeded):
        build_codebook(cb.rates, wiretap_aux(ch), 0, ch, budget=10)


# sessions


def test_session_chain_depends_only_on_carry(keyed_code):
    _, cb = keyed_code
    a = run_session(cb, keyed_code[0], seed=3)
    b = run_session(cb, keyed_code[0], seed=4)
    for tr in (a, b):
        for j in range(1, cb.b):
            prev, rec = tr.blocks[j - 1], tr.blocks[j]
            assert rec.key_used == prev.k_prime
            e = encode_block(cb, j, (prev.l1, prev.l2, prev.k_prime), rec.message, rec.lf)
            assert e["r"] == rec.r
    # the same carry with a different history gives the same block
    carry = (a.blocks[0].l1, a.blocks[0].l2, a.blocks[0].k_prime)
    assert encode_block(cb, 1, carry, (0, 1), 0) == encode_block(cb, 1, carry, (0, 1), 0)


def test_session_reproducible(small_code):
    ch, cb = small_code
    a = run_session(cb, ch, seed=11)
    b = run_session(cb, ch, seed=11)
    assert a.export() == b.export()
    assert a.success == b.success


def test_session_validates_messages(small_code):
    ch, cb = small_code
    with pytest.raises(ValueError):
        run_session(cb, ch, messages=[(0, 0)])
    with pytest.raises(ValueError):
        run_session(cb, ch, messages=[(5, 0)] * (cb.b - 1))


def test_error_estimate(small_code):
    ch, cb = small_code
    est = estimate_error(cb, ch, 20, seed=0)
    assert 0.0 <= est.p_error <= 0.2
    assert est.trials == 20


# leakage


def tiny_code(ch, seed=5):
    f = wiretap_aux(ch)
    rates = derive_scheme_rates(f, ch, 3, 2, r0=1 / 3, eps_prime=1.0)
    return build_codebook(rates, f, seed, ch)


def test_leakage_needs_acknowledged_deterministic_encoder():
    ch = perfect_feedback(0.1)
    with pytest.raises(ModelError):
        exact_leakage_tiny(tiny_code(ch), ch)


def test_eve_seeing_y_learns_the_message():
    ch = perfect_feedback(0.0)
    res = exact_leakage_tiny(tiny_code(ch), ch, deterministic_encoder=True)
    assert res.exact_bits == pytest.approx(res.message_entropy_bits, abs=0.05)


def test_leakage_bounded_and_mc_close():
    ch = perfect_feedback(0.1)
    cb = tiny_code(ch)
    ex = exact_leakage_tiny(cb, ch, deterministic_encoder=True)
    assert 0.0 <= ex.exact_bits <= ex.message_entropy_bits
    mc = monte_carlo_leakage(cb, ch, 3000, seed=1)
    assert abs(mc.exact_bits - ex.exact_bits) <= 4 * mc.std_error + 0.01
    with pytest.raises(BudgetExceeded):
        exact_leakage_tiny(cb, ch, deterministic_encoder=True, budget=100)
