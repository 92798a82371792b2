"""Acceptance checks, one test per criterion (parametrized over q where the
criterion spans several bases). Each prints a PASS/FAIL line; the lines are
collected into the "acceptance criteria" section of the pytest summary.

Checks that cannot reach their tolerance are kept at that tolerance and
marked as strict expected failures, so they print FAIL and pytest reports
them as xfailed.
"""

import cmath
import math

import numpy as np
import pytest

from conftest import cosine_table, ctx_for, sine_table
from qfourier import fourier as F
from qfourier import quadrature as Q
from qfourier import zeros as Z
from qfourier.qcore import QContext, log_qpochhammer, q_bessel2, q_hermite
from qfourier.qtrig import (
    LatticePoint,
    basic_cos_sin,
    delta_derivative,
    difference_equation_residual,
    eval_C,
    eval_CS,
    eval_S,
)

BASES = [0.25, 0.5]


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def lp(a, base, ctx):
    return float(np.real(log_qpochhammer(a, base, math.inf, ctx)))


def square_ratio(w, ctx):
    q = ctx.q
    return math.exp(lp(-w * w, q * q, ctx) - lp(-q * w * w, q * q, ctx))


def strict_fail(reason):
    return pytest.mark.xfail(strict=True, reason=reason)


# 1 --------------------------------------------------------------------------


@pytest.mark.parametrize("q", BASES)
def test_01_orthogonality(q, acceptance):
    ctx, s = ctx_for(q), sine_table(q)
    kv = np.array([F.k_norm(s.omega(n), ctx=ctx).value for n in range(1, 7)])
    worst = 0.0
    for fam in (Q.GramFamily.COSINE, Q.GramFamily.SINE):
        g = Q.gram_matrix(fam, s, 6, ctx)
        off = np.abs(g - np.diag(np.diag(g)))
        worst = max(worst, float(np.max(off)) / float(np.max(np.abs(np.diag(g)))))
    mixed = Q.gram_matrix(Q.GramFamily.MIXED, s, 6, ctx)
    worst = max(worst, float(np.max(np.abs(mixed))) / float(np.max(kv)))
    ge = Q.gram_matrix(Q.GramFamily.EXPONENTIAL, s, 6, ctx)
    worst = max(worst, float(np.max(np.abs(ge - np.eye(ge.shape[0])))))
    assert acceptance(f"1 orthogonality q={q}", worst, 1e-8)


# 2 --------------------------------------------------------------------------


@pytest.mark.parametrize("q", BASES)
def test_02_normalization(q, acceptance):
    ctx, s = ctx_for(q), sine_table(q)
    kv = np.array([F.k_norm(s.omega(n), ctx=ctx).value for n in range(1, 7)])
    worst = 0.0
    for fam in (Q.GramFamily.COSINE, Q.GramFamily.SINE):
        g = Q.gram_matrix(fam, s, 6, ctx)
        worst = max(worst, float(np.max(np.abs(np.diag(g) / kv - 1.0))))
    assert acceptance(f"2 Gram diagonal equals k(omega_n) q={q}", worst, 1e-8)


def test_02_norm_limit(acceptance):
    ctx = ctx_for(0.5)
    val = rel(F.k_norm(sine_table(0.5).omega(10), ctx=ctx).value, F.k_limit(ctx))
    assert acceptance("2 k(omega_10) vs limit q=0.5", val, 1e-3)


# 3 --------------------------------------------------------------------------


@pytest.mark.parametrize("q", BASES)
def test_03_askey_wilson_moment(q, acceptance):
    ctx = ctx_for(q)
    worst = max(rel(Q.integrate(Q.askey_wilson_integrand(n, ctx), ctx, rtol=1e-13)[0], Q.askey_wilson_moment(n, ctx))
                for n in (0, 1, 3))
    assert acceptance(f"3 Askey-Wilson moment n=0,1,3 q={q}", worst, 1e-10)


# 4 --------------------------------------------------------------------------


def lattice_samples(ctx, count, seed=7):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        radius = ctx.q ** rng.uniform(-0.4, 0.4)
        out.append((LatticePoint(radius * cmath.exp(1j * rng.uniform(0.1, 3.0))), rng.uniform(0.1, 3.0)))
    return out


@pytest.mark.parametrize("q", BASES)
def test_04_identities(q, acceptance):
    ctx = ctx_for(q)
    prod = 0.0
    for p, w in lattice_samples(ctx, 12):
        c0, s0 = eval_CS(p, w, ctx=ctx)
        c1, s1 = eval_CS(p.shift_half(q, -1), w, ctx=ctx)
        prod = max(prod, rel(c0 * c1 + s0 * s1, square_ratio(w, ctx)))
    eta = LatticePoint.eta(q)
    squares = 0.0
    for w in (0.1, 0.4, 0.9, 1.5, 2.5, 4.0, 7.0, 12.0):
        c, s = eval_CS(eta, w, ctx=ctx)
        squares = max(squares, rel(abs(c) ** 2 + abs(s) ** 2, square_ratio(w, ctx)))
    s_tab, c_tab = sine_table(q), cosine_table(q)
    at_zeros = max(
        max(rel(eval_C(eta, s_tab.omega(n), ctx=ctx).real, Z.value_at_sine_zero(n, s_tab, ctx)),
            rel(eval_S(eta, c_tab.zeros[n - 1], ctx=ctx).real, Z.value_at_cosine_zero(n, c_tab, ctx)))
        for n in range(1, 6))
    ok = [acceptance(f"4 product identity, 12 complex lattice points q={q}", prod, 1e-10),
          acceptance(f"4 sum of squares at eta, 8 frequencies q={q}", squares, 1e-10),
          acceptance(f"4 values at zeros n<=5 q={q}", at_zeros, 1e-9)]
    assert all(ok)


# 5 --------------------------------------------------------------------------


def test_05_difference_structure(acceptance):
    worst_rel, worst_eq = 0.0, 0.0
    for q in (0.25, 0.5, 0.8):
        ctx = ctx_for(q)
        factor = 2.0 * q ** 0.25 / (1.0 - q)
        for w in (0.3, 0.8, 2.0):
            for th in (0.4, 1.0, 2.3):
                p = LatticePoint.real_point(th)
                c, s = eval_CS(p, w, ctx=ctx)
                dc = delta_derivative(lambda pt: eval_C(pt, w, ctx=ctx), p, ctx)
                ds = delta_derivative(lambda pt: eval_S(pt, w, ctx=ctx), p, ctx)
                amp = math.hypot(abs(c), abs(s)) * factor * w
                worst_rel = max(worst_rel, abs(dc + factor * w * s) / amp, abs(ds - factor * w * c) / amp)
                worst_eq = max(worst_eq, difference_equation_residual(p, w, ctx))
    ok = [acceptance("5 divided-difference relations, 27 points", worst_rel, 1e-8),
          acceptance("5 second-order equation residual, 27 points", worst_eq, 1e-8)]
    assert all(ok)


# 6 --------------------------------------------------------------------------


def offsets_nonincreasing(table, shift, start=4):
    q = table.q
    offs = [abs(table.zeros[n - 1] - q ** (shift - n)) for n in range(start, len(table) + 1)]
    # differences below the root resolution count as ties
    return all(offs[i] <= offs[i - 1] + 4e-13 * table.zeros[start + i - 1] for i in range(1, len(offs)))


@pytest.mark.parametrize("q", [0.25, 0.5, 0.8])
def test_06_zeros(q, acceptance):
    s, c = sine_table(q, 13), cosine_table(q, 13)
    inter = Z.check_interlacing(s.truncated(10), c.truncated(10))
    mono = offsets_nonincreasing(s, 0.25) and offsets_nonincreasing(c, 0.75)
    ann = Z.zero_count_annuli(s, range(6, 13))
    per_annulus = ann.ok and all(i == 2 for i in ann.increments)
    failures = (not inter.ok) + (not mono) + (not per_annulus)
    assert acceptance(f"6 interlacing, monotone offsets, one zero per annulus q={q}", failures, 0)


# 7 --------------------------------------------------------------------------


def product_forms_error(q):
    ctx = ctx_for(q)
    eta = LatticePoint.eta(q)
    s, c = sine_table(q), cosine_table(q)
    return max(max(rel(Z.product_form_S(w, s, 12, ctx), eval_S(eta, w, ctx=ctx).real),
                   rel(Z.product_form_C(w, c, 12, ctx), eval_C(eta, w, ctx=ctx).real))
               for w in (0.1, 0.3, 0.7))


def test_07_products_q025(acceptance):
    assert acceptance("7 truncated products N=12 q=0.25", product_forms_error(0.25), 1e-8)


@strict_fail("first omitted factor at omega=0.7 is 2.75e-8 at q=0.5")
def test_07_products_q05(acceptance):
    assert acceptance("7 truncated products N=12 q=0.5", product_forms_error(0.5), 1e-8)


# 8 --------------------------------------------------------------------------


def test_08_classical_limit(acceptance):
    ctx = QContext.for_q(0.9999)
    q = ctx.q
    xs = np.linspace(-1.0, 1.0, 9)
    th = np.arccos(xs)
    trig = 0.0
    for wc in (1.0, 2.0):
        c, s = basic_cos_sin(th, (1.0 - q) * wc / 2.0, ctx)
        trig = max(trig, float(np.max(np.abs(c - np.cos(wc * xs)))), float(np.max(np.abs(s - np.sin(wc * xs)))))
    inner = th[1:-1]
    wgt = float(np.max(np.abs(Q.weight(inner, ctx) - 2.0 * np.sin(inner))))
    ok = [acceptance("8 C, S vs cos, sin at q=0.9999", trig, 2e-3),
          acceptance("8 weight vs 2 sin(theta) at q=0.9999", wgt, 1e-2)]
    assert all(ok)


# 9 --------------------------------------------------------------------------


def x_coefficients(q):
    ctx = ctx_for(q)
    return F.coefficients(F.builtin_function("x", ctx), F.CoefficientForm.REAL, 12, sine_table(q), ctx)


@pytest.mark.parametrize("q", BASES)
def test_09_x_coefficients_and_parseval(q, acceptance):
    ctx = ctx_for(q)
    co = x_coefficients(q)
    closed = max(rel(co.b_n(n), F.x_expansion_coefficient(n, sine_table(q), ctx)) for n in range(1, 7))
    fx = F.builtin_function("x", ctx)
    gaps = [F.parseval_gap(fx, co, N, ctx) for N in range(1, 13)]
    bad_gaps = sum(g <= 0 for g in gaps) + sum(b >= a for a, b in zip(gaps, gaps[1:]))
    ok = [acceptance(f"9 closed-form b_n vs quadrature n<=6 q={q}", closed, 1e-8),
          acceptance(f"9 Parseval gap positive and decreasing q={q}", bad_gaps, 0)]
    assert all(ok)


def x_reconstruction(q):
    ctx = ctx_for(q)
    norm = math.sqrt(Q.weighted_integrate(lambda th: np.cos(th) ** 2, ctx)[0])
    return F.weighted_l2_error(F.builtin_function("x", ctx), x_coefficients(q), 12, ctx) / norm


def test_09_x_reconstruction_q025(acceptance):
    assert acceptance("9 weighted L2 error of x at N=12 q=0.25", x_reconstruction(0.25), 1e-3)


@strict_fail("b_n ~ q^(n/2): the N=12 tail is 1.1e-2 of |x| at q=0.5")
def test_09_x_reconstruction_q05(acceptance):
    assert acceptance("9 weighted L2 error of x at N=12 q=0.5", x_reconstruction(0.5), 1e-3)


# 10 -------------------------------------------------------------------------


def hermite_poisson_sum(theta, phi, r, ctx, terms=80):
    total, qfac = [], 1.0
    for n in range(terms):
        if n:
            qfac *= 1.0 - ctx.q ** n
        total.append(r ** n * q_hermite(n, math.cos(theta), ctx) * q_hermite(n, math.cos(phi), ctx) / qfac)
    return math.fsum(total)


def test_10_generating_functions(acceptance):
    ctx = ctx_for(0.5)
    s = sine_table(0.5)
    bil = F.bilinear_check(1.0, 1.4, 0.5, 12, s, ctx)
    r0 = F.bilinear_check(1.0, 1.4, 0.0, 12, s, ctx)
    th, r = 0.9, 0.5
    val, _ = Q.integrate(lambda p: F.abel_kernel(th, p, r, ctx) * q_hermite(2, np.cos(p), ctx), ctx, rtol=1e-13)
    ok = [acceptance("10 bilinear sum N=12 at (1.0, 1.4, 0.5)", rel(bil.lhs, bil.rhs), 1e-6),
          acceptance("10 r=0 normalization with 1/pi", rel(r0.lhs, r0.rhs), 1e-10),
          acceptance("10 Poisson kernel vs Hermite sum", rel(F.poisson_kernel(0.9, 1.3, 0.5, ctx),
                                                            hermite_poisson_sum(0.9, 1.3, 0.5, ctx)), 1e-10),
          acceptance("10 reproducing property n=2", rel(val, r ** 2 * q_hermite(2, math.cos(th), ctx)), 1e-9)]
    # the variant without 1/pi is off by a factor pi
    assert rel(r0.lhs, r0.rhs_without_pi) > 0.5
    assert all(ok)


# 11 -------------------------------------------------------------------------


@pytest.mark.parametrize("q", BASES)
def test_11_bessel_bridge(q, acceptance):
    ctx = ctx_for(q)
    eta = LatticePoint.eta(q)
    worst = 0.0
    for w in (0.3, 0.8):
        lr = lp(q, q, ctx) - lp(math.sqrt(q), q, ctx) - lp(-q * w * w, q * q, ctx)
        c, s = eval_CS(eta, w, ctx=ctx)
        for nu, direct in ((0.5, s.real), (-0.5, c.real)):
            worst = max(worst, rel(math.exp(lr) * math.sqrt(w) * q_bessel2(nu, 2.0 * w, ctx), direct))
    OS = F.OrthogonalitySum
    s_tab = sine_table(q)
    over_m = max(abs(F.qbessel_orthogonality_sum(OS.SUM_OVER_M, (1, 1), s_tab, ctx, 40).value - 1.0),
                 abs(F.qbessel_orthogonality_sum(OS.SUM_OVER_M, (1, 2), s_tab, ctx, 40).value),
                 abs(F.qbessel_orthogonality_sum(OS.SUM_OVER_M, (2, 2), s_tab, ctx, 40).value - 1.0))
    ok = [acceptance(f"11 C, S at eta as q-Bessel functions q={q}", worst, 1e-10),
          acceptance(f"11 orthogonality over m<=40 q={q}", over_m, 1e-6)]
    assert all(ok)


def sum_over_n_deficit(q):
    ctx = ctx_for(q)
    return abs(F.qbessel_orthogonality_sum(F.OrthogonalitySum.SUM_OVER_N, (1, 1), sine_table(q), ctx, 12).value - 1.0)


def test_11_sum_over_n_q025(acceptance):
    assert acceptance("11 orthogonality over |n|<=12 q=0.25", sum_over_n_deficit(0.25), 1e-4)


@strict_fail("the two omitted terms at |n|=13 total 1.17e-4 at q=0.5")
def test_11_sum_over_n_q05(acceptance):
    assert acceptance("11 orthogonality over |n|<=12 q=0.5", sum_over_n_deficit(0.5), 1e-4)


# 12 -------------------------------------------------------------------------


def fit_exponent(values, ns, q):
    return float(np.polyfit(np.asarray(ns, float), np.log(np.asarray(values)), 1)[0] / math.log(q))


@strict_fail("for even m the q^(n/2) term cancels; C_2 coefficients decay like q^(3n/2)")
@pytest.mark.parametrize("q", BASES)
def test_12_coefficient_decay(q, acceptance):
    ctx = ctx_for(q)
    lc = F.legendre_expansion(2, 12, sine_table(q), ctx)
    e = fit_exponent([abs(lc.c_n(n)) for n in range(2, 13)], range(2, 13), q)
    assert acceptance(f"12 C_2 coefficient decay exponent {e:.3f} vs 0.5, q={q}", abs(e - 0.5) / 0.5, 0.1)
