"""Eisenstein / Weierstrass kernel tests with independently derived
reference values."""

from fractions import Fraction
from math import comb, factorial

import pytest

from voasurf.elliptic import (
    bernoulli,
    eisenstein,
    genus0_kernel,
    iota_long_division,
    weierstrass_p,
    weierstrass_p_qz,
)
from voasurf.series import MultiSeries, TruncatedSeries


def sigma_ref(k, n):
    """Divisor power sum via the complementary divisor (independent
    of the implementation's loop)."""
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d ** k
            if d != n // d:
                total += (n // d) ** k
        d += 1
    return total


class TestEisenstein:
    def test_bernoulli(self):
        assert bernoulli(2) == Fraction(1, 6)
        assert bernoulli(4) == Fraction(-1, 30)
        assert bernoulli(6) == Fraction(1, 42)
        assert bernoulli(12) == Fraction(-691, 2730)

    def test_e2_printed(self):
        e2 = eisenstein(2, 3)
        assert str(e2) == "-1/12 + 2q + 6q^2 + 8q^3"

    def test_e4_e6_leading(self):
        e4 = eisenstein(4, 2)
        assert e4.coefficient(0) == Fraction(1, 720)
        assert e4.coefficient(1) == Fraction(1, 3)
        assert e4.coefficient(2) == 3
        e6 = eisenstein(6, 2)
        assert e6.coefficient(0) == Fraction(-1, 30240)
        assert e6.coefficient(1) == Fraction(1, 60)
        assert e6.coefficient(2) == Fraction(11, 20)

    def test_orders_to_twenty(self):
        for k in (2, 4, 6):
            ek = eisenstein(k, 20)
            for n in range(1, 21):
                assert ek.coefficient(n) == \
                    Fraction(2 * sigma_ref(k - 1, n), factorial(k - 1))

    def test_odd_index_zero(self):
        assert eisenstein(3, 10).is_zero()
        assert eisenstein(7, 10).is_zero()


class TestWeierstrass:
    def test_p1_leading(self):
        p1 = weierstrass_p(1, 4, 2)
        assert p1.coefficient({"z": -1, "q": 0}) == 1
        # -E_2 at z^1, -E_4 at z^3
        assert p1.coefficient({"z": 1, "q": 0}) == Fraction(1, 12)
        assert p1.coefficient({"z": 1, "q": 1}) == -2
        assert p1.coefficient({"z": 3, "q": 0}) == Fraction(-1, 720)
        assert p1.coefficient({"z": 2, "q": 1}) == 0

    def test_p2_closed_form(self):
        # P_2 = 1/z^2 + sum_k (k-1) E_k z^(k-2)
        p2 = weierstrass_p(2, 4, 3)
        assert p2.coefficient({"z": -2, "q": 0}) == 1
        assert p2.coefficient({"z": 0, "q": 0}) == Fraction(-1, 12)
        assert p2.coefficient({"z": 0, "q": 1}) == 2
        assert p2.coefficient({"z": 2, "q": 0}) == Fraction(3, 720)

    def test_derivative_ladder(self):
        # d_z P_m = -m P_{m+1} for m <= 4
        for m in range(1, 5):
            pm = weierstrass_p(m, 6, 4)
            pm1 = weierstrass_p(m + 1, 6, 4)
            i = pm.vars.index("z")
            der = MultiSeries(pm.vars, {**pm.window,
                                        "z": (pm.window["z"][0] - 1,
                                              pm.window["z"][1] - 1)})
            for key, val in pm.c.items():
                if key[i]:
                    der.c[key[:i] + (key[i] - 1,) + key[i + 1:]] = val * key[i]
            assert der.agrees_with(-m * pm1)

    def test_qz_form_q1_slice_matches_z_form(self):
        # the q^1 coefficient is -q_z + q_z^-1 = -(e^z - e^-z)
        p1q = weierstrass_p_qz(1, (-5, 5), 3)
        slice1 = p1q.coefficient_of("q", 1).to_single()
        zed = slice1.expand_exp("z", 6)
        p1z = weierstrass_p(1, 6, 3)
        ref = p1z.coefficient_of("q", 1).to_single()
        assert zed.agrees_with(ref)

    def test_qz_form_q0_constant_offset(self):
        # at q^0 the q_z form resums to e^z/(e^z - 1), which differs
        # from the z form 1/z - sum E_k(0) z^(k-1) by exactly +1/2
        n = 8
        ez = TruncatedSeries.exponential("z", 1, n + 2)
        closed = ez * (ez - 1).tighten_lo(1).inverse()
        p1z = weierstrass_p(1, n, 1)
        zform = p1z.coefficient_of("q", 0).to_single()
        diff = closed - zform
        assert diff.c == {0: Fraction(1, 2)}
        # and the stored q^0 slice of the q_z form is the truncated
        # geometric sum -sum_{n>=1} q_z^n
        p1q = weierstrass_p_qz(1, (-4, 4), 2)
        q0 = p1q.coefficient_of("q", 0).to_single()
        assert q0.c == {k: -1 for k in range(1, 5)}

    def test_qz_form_q0_resums_for_p2(self):
        # at q^0, P_2's q_z form resums to e^z/(e^z-1)^2 with no
        # convention constant (the +1/2 lives only in P_1)
        n = 8
        ez = TruncatedSeries.exponential("z", 1, n + 4)
        closed = ez * ((ez - 1).tighten_lo(1) ** 2).inverse(hi=n)
        p2z = weierstrass_p(2, n, 1)
        zform = p2z.coefficient_of("q", 0).to_single()
        assert closed.agrees_with(zform)

    def test_qz_form_q2_slice_matches_z_form(self):
        # q^j slices with j >= 1 have finite q_z support, so they can
        # be compared through the exponential substitution exactly
        for m in (1, 2):
            pq = weierstrass_p_qz(m, (-6, 6), 3)
            sl = pq.coefficient_of("q", 2).to_single()
            zed = sl.expand_exp("z", 6)
            ref = weierstrass_p(m, 6, 3).coefficient_of("q", 2).to_single()
            assert zed.agrees_with(ref), m


class TestGenus0Kernel:
    def mode_sum(self, n, m, lo):
        entries = {}
        big_n = n
        while -big_n - 1 >= lo:
            entries[(big_n - m, -big_n - 1)] = comb(big_n, m)
            big_n += 1
        return MultiSeries(("w", "z"), {"z": (lo, -n - 1), "w": (n - m, max(n - m, big_n - m))},
                           entries)

    def test_expansion_matches_mode_sum(self):
        for n in range(0, 4):
            for m in range(0, 4):
                form = genus0_kernel(n, m, outer_lo=-9)
                ref = self.mode_sum(n, m, -9)
                assert form.expansion.agrees_with(ref), (n, m)

    def test_closed_form_cross_multiplication(self):
        # denominator * expansion == numerator, checked to total degree 8
        for n, m in [(0, 0), (1, 1), (2, 1), (3, 2), (2, 0)]:
            form = genus0_kernel(n, m, outer_lo=-10)
            prod = form.denominator * form.expansion
            assert prod.agrees_with(form.numerator), (n, m)

    def test_simple_pole(self):
        form = genus0_kernel(0, 0, outer_lo=-5)
        assert str(form.denominator) in ("z - w", "-w + z")
        # expansion of 1/(z-w): sum w^j z^(-j-1)
        for j in range(4):
            assert form.expansion.coefficient({"z": -j - 1, "w": j}) == 1

    def test_normalization_integer_coprime(self):
        form = genus0_kernel(3, 1, outer_lo=-8)
        vals = list(form.numerator.c.values()) + list(form.denominator.c.values())
        assert all(v.denominator == 1 for v in vals)

    def test_long_division_rejects_bad_leading_term(self):
        num = MultiSeries(("w", "z"), {"z": (0, None), "w": (0, None)}, {(0, 0): 1})
        den = MultiSeries(("w", "z"), {"z": (0, None), "w": (0, None)},
                          {(1, 1): 1, (2, 1): -1})
        with pytest.raises(AssertionError):
            iota_long_division(num, den, "z", -6)
