"""Named verification suites behind ``qfourier verify``.

Each suite runs a fixed set of numerical checks for one base ``q`` and
returns :class:`CheckResult` records (measured residual against tolerance).
Checks are deterministic: sample points come from a seeded generator.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import fourier as F
from . import quadrature as Q
from . import zeros as Z
from .errors import QFourierError
from .qcore import QContext, log_qpochhammer, q_bessel2, q_gamma, q_hermite
from .qtrig import (
    LatticePoint,
    TrigRepresentation,
    amplitude_A,
    amplitude_B,
    asymptotic_CS,
    basic_cos_sin,
    delta_derivative,
    difference_equation_residual,
    eval_C,
    eval_CS,
    eval_S,
)

__all__ = ["CheckResult", "SUITES", "run_suite", "format_result", "LIMIT_Q"]

# the q -> 1 checks run here when the "all" suite is requested
LIMIT_Q = 0.9999
_SEED = 20240613


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: str = ""


def format_result(r: CheckResult) -> str:
    mark = "PASS" if r.passed else "FAIL"
    line = f"{mark} {r.suite}/{r.name}: residual {r.residual:.3e} (tol {r.tolerance:.1e})"
    return f"{line} {r.detail}".rstrip()


class _Runner:
    def __init__(self, suite: str):
        self.suite = suite
        self.results: list[CheckResult] = []

    def check(self, name: str, fn: Callable[[], float | tuple], tol: float):
        """Run ``fn``; it returns a residual or ``(residual, detail)``."""
        try:
            out = fn()
        except (QFourierError, ArithmeticError, ValueError) as exc:
            self.results.append(CheckResult(self.suite, name, math.inf, tol, False,
                                            f"[{type(exc).__name__}: {exc}]"))
            return
        residual, detail = out if isinstance(out, tuple) else (out, "")
        residual = float(residual)
        ok = bool(residual <= tol) and math.isfinite(residual)
        self.results.append(CheckResult(self.suite, name, residual, tol, ok, detail))

    def flag(self, name: str, fn: Callable[[], tuple[bool, str]]):
        """Pass/fail checks without a numeric residual (reported as 0 or 1)."""
        try:
            ok, detail = fn()
        except (QFourierError, ArithmeticError, ValueError) as exc:
            ok, detail = False, f"[{type(exc).__name__}: {exc}]"
        self.results.append(CheckResult(self.suite, name, 0.0 if ok else 1.0, 0.0, ok, detail))


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _lp(a, base, ctx) -> float:
    return float(np.real(log_qpochhammer(a, base, math.inf, ctx)))


def _square_ratio(w: float, ctx: QContext) -> float:
    """``(-w^2;q^2)_inf / (-q w^2;q^2)_inf``."""
    q = ctx.q
    return math.exp(_lp(-w * w, q * q, ctx) - _lp(-q * w * w, q * q, ctx))


# ---------------------------------------------------------------------------
# suites


def suite_orthogonality(ctx: QContext) -> list[CheckResult]:
    run = _Runner("orthogonality")
    s = Z.find_sine_zeros(6, ctx)
    kv = np.array([F.k_norm(s.omega(n), ctx=ctx).value for n in range(1, 7)])
    grams = {}

    def off_diag(fam):
        def go():
            g = grams.setdefault(fam, Q.gram_matrix(fam, s, 6, ctx))
            scale = float(np.max(np.abs(np.diag(g)))) if fam is not Q.GramFamily.MIXED else float(np.max(kv))
            off = np.abs(g - np.diag(np.diag(g))) if fam is not Q.GramFamily.MIXED else np.abs(g)
            return float(np.max(off)) / scale
        return go

    for fam in (Q.GramFamily.COSINE, Q.GramFamily.SINE, Q.GramFamily.MIXED):
        run.check(f"gram-{fam.value}-off-diagonal", off_diag(fam), 1e-8)

    def diag_vs_k():
        worst = 0.0
        for fam in (Q.GramFamily.COSINE, Q.GramFamily.SINE):
            g = grams.setdefault(fam, Q.gram_matrix(fam, s, 6, ctx))
            worst = max(worst, float(np.max(np.abs(np.diag(g) / kv - 1.0))))
        return worst

    run.check("gram-diagonal-equals-k", diag_vs_k, 1e-8)

    def exp_gram(which):
        def go():
            g = grams.setdefault("exp", Q.gram_matrix(Q.GramFamily.EXPONENTIAL, s, 6, ctx))
            if which == "off":
                return float(np.max(np.abs(g - np.diag(np.diag(g)))))
            return float(np.max(np.abs(np.diag(g) - 1.0)))
        return go

    run.check("exponential-gram-off-diagonal", exp_gram("off"), 1e-8)
    run.check("exponential-gram-diagonal", exp_gram("diag"), 1e-8)

    for n in (0, 1, 3):
        run.check(f"askey-wilson-moment-n{n}",
                  lambda n=n: _rel(Q.integrate(Q.askey_wilson_integrand(n, ctx), ctx, rtol=1e-13)[0],
                                   Q.askey_wilson_moment(n, ctx)), 1e-10)
    for w in (0.0, 0.7):
        run.check(f"k-closed-vs-integral-omega{w:g}",
                  lambda w=w: _rel(F.k_norm(w, F.KMethod.CLOSED_FORM, ctx).value,
                                   F.k_norm(w, F.KMethod.INTEGRAL, ctx).value), 1e-9)
    return run.results


def _lattice_samples(ctx: QContext, count: int):
    rng = np.random.default_rng(_SEED)
    out = []
    for _ in range(count):
        theta = rng.uniform(0.1, 3.0)
        radius = ctx.q ** rng.uniform(-0.4, 0.4)
        omega = rng.uniform(0.1, 3.0)
        out.append((LatticePoint(radius * cmath.exp(1j * theta)), omega))
    return out


def suite_identities(ctx: QContext) -> list[CheckResult]:
    run = _Runner("identities")
    q = ctx.q

    def main_identity():
        worst = 0.0
        for p, w in _lattice_samples(ctx, 12):
            c0, s0 = eval_CS(p, w, ctx=ctx)
            c1, s1 = eval_CS(p.shift_half(q, -1), w, ctx=ctx)
            rhs = _square_ratio(w, ctx)
            worst = max(worst, abs(c0 * c1 + s0 * s1 - rhs) / rhs)
        return worst

    run.check("product-identity-complex-lattice", main_identity, 1e-10)

    def squares_at_eta():
        eta = LatticePoint.eta(q)
        worst = 0.0
        for w in (0.1, 0.4, 0.9, 1.5, 2.5, 4.0, 7.0, 12.0):
            c, s = eval_CS(eta, w, ctx=ctx)
            rhs = _square_ratio(w, ctx)
            worst = max(worst, abs(abs(c) ** 2 + abs(s) ** 2 - rhs) / rhs)
        return worst

    run.check("sum-of-squares-at-eta", squares_at_eta, 1e-10)

    s_tab = Z.find_sine_zeros(5, ctx)
    c_tab = Z.find_cosine_zeros(5, ctx)
    eta = LatticePoint.eta(q)
    run.check("cosine-at-sine-zeros",
              lambda: max(_rel(eval_C(eta, s_tab.omega(n), ctx=ctx).real, Z.value_at_sine_zero(n, s_tab, ctx))
                          for n in range(1, 6)), 1e-9)
    run.check("sine-at-cosine-zeros",
              lambda: max(_rel(eval_S(eta, c_tab.zeros[n - 1], ctx=ctx).real, Z.value_at_cosine_zero(n, c_tab, ctx))
                          for n in range(1, 6)), 1e-9)

    def difference_relations():
        worst = 0.0
        factor = 2.0 * q ** 0.25 / (1.0 - q)
        for w in (0.3, 0.8, 2.0):
            for th in (0.4, 1.0, 2.3):
                p = LatticePoint.real_point(th)
                c, s = eval_CS(p, w, ctx=ctx)
                dc = delta_derivative(lambda pt: eval_C(pt, w, ctx=ctx), p, ctx)
                ds = delta_derivative(lambda pt: eval_S(pt, w, ctx=ctx), p, ctx)
                amp = math.hypot(abs(c), abs(s)) * factor * w
                worst = max(worst, abs(dc + factor * w * s) / amp, abs(ds - factor * w * c) / amp)
        return worst

    run.check("divided-difference-relations", difference_relations, 1e-8)
    run.check("difference-equation-residual",
              lambda: max(difference_equation_residual(LatticePoint.real_point(th), w, ctx)
                          for w in (0.3, 0.8, 2.0) for th in (0.4, 1.0, 2.3)), 1e-8)

    def bessel_relation(which):
        def go():
            worst = 0.0
            for w in (0.3, 0.8):
                lr = _lp(q, q, ctx) - _lp(math.sqrt(q), q, ctx) - _lp(-q * w * w, q * q, ctx)
                nu = 0.5 if which == "sine" else -0.5
                pred = math.exp(lr) * math.sqrt(w) * q_bessel2(nu, 2.0 * w, ctx)
                c, s = eval_CS(eta, w, ctx=ctx)
                direct = (s if which == "sine" else c).real
                worst = max(worst, _rel(pred, direct))
            return worst
        return go

    run.check("sine-at-eta-as-bessel", bessel_relation("sine"), 1e-10)
    run.check("cosine-at-eta-as-bessel", bessel_relation("cosine"), 1e-10)
    return run.results


def suite_limits(ctx: QContext) -> list[CheckResult]:
    run = _Runner("limits")
    q = ctx.q
    xs = np.linspace(-1.0, 1.0, 9)
    th = np.arccos(xs)
    for wc in (1.0, 2.0):
        def trig(wc=wc):
            c, s = basic_cos_sin(th, (1.0 - q) * wc / 2.0, ctx)
            return max(float(np.max(np.abs(c - np.cos(wc * xs)))), float(np.max(np.abs(s - np.sin(wc * xs)))))
        run.check(f"classical-trig-frequency{wc:g}", trig, 2e-3)
    inner = th[1:-1]
    run.check("weight-tends-to-2sin",
              lambda: float(np.max(np.abs(Q.weight(inner, ctx) - 2.0 * np.sin(inner)))), 1e-2)
    run.check("q-gamma-half", lambda: abs(q_gamma(0.5, ctx) - math.sqrt(math.pi)), 1e-3)
    return run.results


def suite_asymptotics(ctx: QContext) -> list[CheckResult]:
    run = _Runner("asymptotics")
    q = ctx.q

    def leading_cosine():
        n = 12
        w = q ** (0.25 - n)
        worst = 0.0
        for th in (0.6, 1.0, 2.0):
            pred_c, pred_s = asymptotic_CS(th, n, ctx)
            c, s = basic_cos_sin(th, w, ctx)
            scale = math.hypot(c, s)
            worst = max(worst, abs(c - pred_c) / scale, abs(s - pred_s) / scale)
        return worst

    run.check("leading-oscillation-n12", leading_cosine, 0.05)

    def amplitude_vs_weight():
        worst = 0.0
        for th in (0.5, 1.2, 2.4):
            w = Q.weight(th, ctx)
            worst = max(worst, _rel(abs(amplitude_A(th, ctx)) ** -2, w), _rel(abs(amplitude_B(th, ctx)) ** -2, w))
        return worst

    run.check("amplitude-inverse-square-is-weight", amplitude_vs_weight, 1e-10)

    def amplitude_reflection():
        th = 0.8
        e2 = cmath.exp(2j * th)
        ratio = complex(np.exp(log_qpochhammer(1.0 / e2, q, math.inf, ctx) - log_qpochhammer(e2, q, math.inf, ctx)))
        return _rel(amplitude_A(th, ctx), cmath.exp(1j * th) * ratio * amplitude_B(-th, ctx))

    run.check("amplitude-reflection", amplitude_reflection, 1e-10)

    def sign_alternation():
        signs = [np.sign(Z.eval_s_scaled(q ** -n, ctx)) for n in range(8, 13)]
        ok = all(a == -b for a, b in zip(signs, signs[1:]))
        return ok, "signs " + "".join("+" if v > 0 else "-" for v in signs)

    run.flag("scaled-sine-alternates-at-test-points", sign_alternation)

    def near_zero_at_power():
        w = q ** (0.25 - 10)
        return abs(Z.eval_s_scaled(w, ctx)) / Z.scaled_envelope(w, Z.ZeroKind.SINE, ctx)

    run.check("scaled-sine-small-at-q-power-n10", near_zero_at_power, 0.05)
    s = Z.find_sine_zeros(10, ctx)
    run.check("k-at-omega10-vs-limit", lambda: _rel(F.k_norm(s.omega(10), ctx=ctx).value, F.k_limit(ctx)), 1e-3)
    return run.results


def _offsets_nonincreasing(table: Z.ZeroTable, shift: float, start: int = 4):
    q = table.q
    offs = [abs(table.zeros[n - 1] - q ** (shift - n)) for n in range(start, len(table) + 1)]
    for i in range(1, len(offs)):
        n = start + i
        # root resolution: ties below it are not a violation
        slack = 4e-13 * table.zeros[n - 1]
        if offs[i] > offs[i - 1] + slack:
            return False, f"grows at n={n}"
    return True, f"n={start}..{len(table)}"


def suite_zeros(ctx: QContext) -> list[CheckResult]:
    run = _Runner("zeros")
    q = ctx.q
    s = Z.find_sine_zeros(13, ctx)
    c = Z.find_cosine_zeros(13, ctx)

    def interlacing():
        rep = Z.check_interlacing(s.truncated(10), c.truncated(10))
        return rep.ok, rep.message

    run.flag("interlacing-10-10", interlacing)
    run.flag("sine-offsets-nonincreasing", lambda: _offsets_nonincreasing(s, 0.25))
    run.flag("cosine-offsets-nonincreasing", lambda: _offsets_nonincreasing(c, 0.75))

    def annuli():
        rep = Z.zero_count_annuli(s, range(6, 13))
        ok = rep.ok and all(i == 2 for i in rep.increments) and 0.9 <= rep.density_ratio <= 1.1
        return ok, f"increments {list(rep.increments)} ratio {rep.density_ratio:.3f}"

    run.flag("one-zero-per-annulus", annuli)
    run.check("residuals", lambda: max(max(s.residuals), max(c.residuals)), 1e-10)

    def derivative_signs():
        ok = True
        for t in (s, c):
            d = np.sign(Z.derivative_at_zeros(t, ctx))
            ok = ok and bool(np.all(d[1:] == -d[:-1]))
        return ok, "alternating" if ok else "sign repeats"

    run.flag("simple-zeros", derivative_signs)
    eta = LatticePoint.eta(q)
    for w in (0.1, 0.3, 0.7):
        run.check(f"sine-product-omega{w:g}",
                  lambda w=w: _rel(Z.product_form_S(w, s, 12, ctx), eval_S(eta, w, ctx=ctx).real), 1e-8)
        run.check(f"cosine-product-omega{w:g}",
                  lambda w=w: _rel(Z.product_form_C(w, c, 12, ctx), eval_C(eta, w, ctx=ctx).real), 1e-8)

    def cross_products():
        c40 = Z.find_cosine_zeros(40, ctx)
        s40 = Z.find_sine_zeros(40, ctx)
        worst = 0.0
        for m in (1, 2, 3):
            for w, other in ((s40.omega(m), c40), (c40.zeros[m - 1], s40)):
                prod, closed = Z.zero_product_relation(w, other, 40, ctx)
                worst = max(worst, abs(abs(prod.to_real()) / closed.to_real() - 1.0))
        return worst

    run.check("zero-product-relations", cross_products, 1e-6)
    return run.results


def _hermite_poisson_sum(theta, phi, r, ctx, terms=80):
    hs_t = [q_hermite(n, math.cos(theta), ctx) for n in range(terms)]
    hs_p = [q_hermite(n, math.cos(phi), ctx) for n in range(terms)]
    total = []
    qfac = 1.0
    for n in range(terms):
        if n:
            qfac *= 1.0 - ctx.q ** n
        total.append(r ** n * hs_t[n] * hs_p[n] / qfac)
    return math.fsum(total)


def suite_generating(ctx: QContext) -> list[CheckResult]:
    run = _Runner("generating")
    s = Z.find_sine_zeros(12, ctx)

    def bilinear():
        res = F.bilinear_check(1.0, 1.4, 0.5, 12, s, ctx)
        return _rel(res.lhs, res.rhs)

    run.check("bilinear-N12", bilinear, 1e-6)

    def normalization():
        res = F.bilinear_check(1.0, 1.4, 0.0, 12, s, ctx)
        with_pi, without = _rel(res.lhs, res.rhs), _rel(res.lhs, res.rhs_without_pi)
        return with_pi, f"[without 1/pi: {without:.3e}]"

    run.check("bilinear-r0-normalization", normalization, 1e-10)
    run.check("bilinear-phi-half-pi",
              lambda: _rel(F.bilinear_check(1.0, math.pi / 2, 0.5, 12, s, ctx).lhs,
                           F.bilinear_rhs_half(1.0, 0.5, ctx)), 1e-6)
    run.check("poisson-kernel-vs-hermite-sum",
              lambda: _rel(F.poisson_kernel(0.9, 1.3, 0.5, ctx), _hermite_poisson_sum(0.9, 1.3, 0.5, ctx)), 1e-10)

    def reproducing():
        th, r = 0.9, 0.5
        val, _ = Q.integrate(lambda p: F.abel_kernel(th, p, r, ctx) * q_hermite(2, np.cos(p), ctx), ctx, rtol=1e-13)
        return _rel(val, r ** 2 * q_hermite(2, math.cos(th), ctx))

    run.check("poisson-reproducing-n2", reproducing, 1e-9)
    one = F.builtin_function("one", ctx)
    run.check("abel-constant", lambda: max(abs(F.abel_sum(one, r, 1.0, ctx) - 1.0) for r in (0.5, 0.9, 0.99)), 1e-8)

    def abel_monotone():
        fx = F.builtin_function("x", ctx)
        errs = [abs(F.abel_sum(fx, r, 1.0, ctx) - math.cos(1.0)) for r in (0.5, 0.9, 0.99)]
        return all(b < a for a, b in zip(errs, errs[1:])), "errors " + ", ".join(f"{e:.2e}" for e in errs)

    run.flag("abel-approaches-f", abel_monotone)
    run.check("abel-modes-vs-summed-kernel",
              lambda: abs(F.abel_sum_from_modes(one, 0.8, 1.0, 12, s, ctx)
                          - F.abel_sum_mode_kernel(one, 0.8, 1.0, ctx)), 1e-4)
    return run.results


def _fit_exponent(values: Iterable[float], ns: Iterable[int], q: float) -> float:
    ns = np.asarray(list(ns), dtype=float)
    ys = np.log(np.asarray(list(values), dtype=float))
    return float(np.polyfit(ns, ys, 1)[0] / math.log(q))


def suite_legendre(ctx: QContext) -> list[CheckResult]:
    run = _Runner("legendre")
    q = ctx.q
    s = Z.find_sine_zeros(14, ctx)
    fx = F.builtin_function("x", ctx)
    cache = {}

    def x_coeffs():
        if "x" not in cache:
            cache["x"] = F.coefficients(fx, F.CoefficientForm.REAL, 12, s, ctx)
        return cache["x"]

    run.check("x-sine-coefficients-closed-form",
              lambda: max(_rel(x_coeffs().b_n(n), F.x_expansion_coefficient(n, s, ctx)) for n in range(1, 7)), 1e-8)

    def parseval():
        gaps = [F.parseval_gap(fx, x_coeffs(), N, ctx) for N in range(1, 13)]
        ok = all(g > 0 for g in gaps) and all(b < a for a, b in zip(gaps, gaps[1:]))
        return ok, f"gap(12) {gaps[-1]:.3e}"

    run.flag("x-parseval-gap-positive-decreasing", parseval)

    def reconstruction():
        norm = math.sqrt(Q.weighted_integrate(lambda th: np.cos(th) ** 2, ctx)[0])
        return F.weighted_l2_error(fx, x_coeffs(), 12, ctx) / norm

    run.check("x-reconstruction-N12", reconstruction, 1e-3)

    def legendre_closed():
        f = F.builtin_function("legendre:2", ctx)
        co = F.coefficients(f, F.CoefficientForm.COMPLEX, 3, s, ctx)
        return abs(co.c_n(3) - F.legendre_coefficient(2, 3, s, ctx))

    run.check("legendre2-closed-vs-quadrature-n3", legendre_closed, 1e-8)

    def decay():
        lc = F.legendre_expansion(2, 12, s, ctx)
        e = _fit_exponent((abs(lc.c_n(n)) for n in range(2, 13)), range(2, 13), q)
        return abs(e - 0.5) / 0.5, f"[fitted exponent {e:.4f}]"

    run.check("legendre2-decay-exponent", decay, 0.1)

    def expansion_of_E():
        from .qtrig import eval_E

        w = s.omega(1)
        return abs(F.eq_in_ultraspherical(w, 40, 0.3, ctx) - eval_E(LatticePoint.from_x(0.3), 1j * w, ctx=ctx))

    run.check("exponential-in-ultraspherical", expansion_of_E, 1e-10)
    OS = F.OrthogonalitySum
    run.check("bessel-sum-over-m-diagonal",
              lambda: abs(F.qbessel_orthogonality_sum(OS.SUM_OVER_M, (1, 1), s, ctx, 40).value - 1.0), 1e-6)
    run.check("bessel-sum-over-m-off-diagonal",
              lambda: abs(F.qbessel_orthogonality_sum(OS.SUM_OVER_M, (1, 2), s, ctx, 40).value), 1e-6)
    run.check("bessel-sum-over-n-diagonal",
              lambda: abs(F.qbessel_orthogonality_sum(OS.SUM_OVER_N, (1, 1), s, ctx, 12).value - 1.0), 1e-4)
    return run.results


SUITES = {
    "orthogonality": suite_orthogonality,
    "identities": suite_identities,
    "limits": suite_limits,
    "asymptotics": suite_asymptotics,
    "zeros": suite_zeros,
    "generating": suite_generating,
    "legendre": suite_legendre,
}


def run_suite(name: str, ctx: QContext) -> list[CheckResult]:
    """Run one suite, or every suite for ``"all"`` (limits then use ``q = LIMIT_Q``)."""
    if name == "all":
        out = []
        for key, fn in SUITES.items():
            if key == "limits":
                out.extend(fn(QContext.for_q(LIMIT_Q)))
            else:
                out.extend(fn(ctx))
        return out
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](ctx)
