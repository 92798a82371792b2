"""Basic cosine, sine and exponential functions on the q-quadratic grid.

A grid point is parametrized by ``u = e^{i theta} = q^z`` with
``x = (u + 1/u)/2``; shifting ``z`` by one half multiplies ``u`` by
``q^(1/2)``. Three equivalent series representations are available:

``SERIES_PHI21``
    2phi1 series in ``-omega^2``, convergent for ``|omega| < 1``.
``CONTINUED_PHI22``
    2phi2 form, entire in ``omega`` but subject to cancellation once
    ``|omega|`` reaches a few tens.
``HERMITE_SERIES``
    Power series in ``omega`` with continuous q-Hermite coefficients; the
    terms never cancel badly and this is the production route for large
    ``|omega|``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, QDomainError
from .qcore import (
    HyperSeriesSpec,
    QContext,
    basic_hyper,
    log_multi_qpochhammer,
    log_qpochhammer,
    qpochhammer,
    real_part_checked,
)

__all__ = [
    "LatticePoint",
    "TrigRepresentation",
    "AsymptoticForm",
    "AUTO_SERIES_RADIUS",
    "eval_CS",
    "eval_C",
    "eval_S",
    "eval_E",
    "eval_C2",
    "eval_S2",
    "eval_E2",
    "basic_cos",
    "basic_sin",
    "basic_cos_sin",
    "basic_exp",
    "hermite_generating",
    "delta_derivative",
    "difference_equation_residual",
    "amplitude_A",
    "amplitude_B",
    "asymptotic_form",
    "asymptotic_CS",
    "complete_asymptotic_CS",
]

AUTO_SERIES_RADIUS = 0.9
# AUTO refuses results whose estimated rounding error exceeds this fraction
# of the local amplitude sqrt(|C|^2 + |S|^2)
AUTO_MAX_LOSS = 1e-8
# below this estimated loss the Hermite result is kept without trying 2phi2
_AUTO_SWITCH_LOSS = 1e-12
_EPS = float(np.finfo(float).eps)


class TrigRepresentation(enum.Enum):
    SERIES_PHI21 = "series"
    CONTINUED_PHI22 = "continued"
    HERMITE_SERIES = "hermite"
    AUTO = "auto"


@dataclass(frozen=True)
class LatticePoint:
    """Point ``x = (u + 1/u)/2`` of the q-quadratic grid."""

    u: complex

    def __post_init__(self):
        u = complex(self.u)
        if u == 0:
            raise QDomainError("lattice parameter u must be nonzero")
        object.__setattr__(self, "u", u)

    @property
    def x(self) -> complex:
        return 0.5 * (self.u + 1.0 / self.u)

    @classmethod
    def real_point(cls, theta: float) -> "LatticePoint":
        return cls(cmath.exp(1j * theta))

    @classmethod
    def from_x(cls, x: float) -> "LatticePoint":
        if not -1.0 <= x <= 1.0:
            raise QDomainError(f"real grid points need -1 <= x <= 1, got {x!r}")
        return cls.real_point(math.acos(x))

    @classmethod
    def eta(cls, q: float) -> "LatticePoint":
        """The point ``u = q^(1/4)``, i.e. ``x = (q^(1/4) + q^(-1/4))/2``."""
        return cls(q ** 0.25)

    def shift_half(self, q: float, steps: int = 1) -> "LatticePoint":
        """Move ``z`` by ``steps/2`` (``u -> u q^(steps/2)``)."""
        return LatticePoint(self.u * q ** (0.5 * steps))


@dataclass(frozen=True)
class AsymptoticForm:
    """Amplitude, phase and common prefactor of a leading-order oscillation."""

    amplitude: float
    phase: float
    prefactor: float


def _u_of(p) -> np.ndarray:
    if isinstance(p, LatticePoint):
        return np.asarray(p.u, dtype=complex)
    return np.asarray(p, dtype=complex)


def _shape_out(p, value):
    if isinstance(p, LatticePoint) or np.ndim(p) == 0:
        return complex(np.asarray(value).reshape(-1)[0])
    return value


# ---------------------------------------------------------------------------
# representations; each returns (C, S, err) arrays shaped like u, where err
# bounds the rounding error of either value (eps times the summed magnitudes)


def _prefactor_ratio(omega: complex, ctx: QContext) -> complex:
    """``(-omega^2; q^2)_inf / (-q omega^2; q^2)_inf``."""
    q = ctx.q
    w2 = omega * omega
    lg = log_qpochhammer(-w2, q * q, math.inf, ctx) - log_qpochhammer(-q * w2, q * q, math.inf, ctx)
    return complex(np.exp(lg))


def _series_phi21(u: np.ndarray, omega: complex, ctx: QContext):
    if abs(omega) >= 1.0:
        raise QDomainError(f"2phi1 representation needs |omega| < 1, got |omega| = {abs(omega):g}")
    q = ctx.q
    b = q * q
    u2 = u * u
    x = 0.5 * (u + 1.0 / u)
    t = -omega * omega
    ratio = _prefactor_ratio(omega, ctx)
    c_series, c_info = basic_hyper(HyperSeriesSpec((-q * u2, -q / u2), (q,), b, t), ctx, True)
    s_series, s_info = basic_hyper(HyperSeriesSpec((-b * u2, -b / u2), (q ** 3,), b, t), ctx, True)
    s_pref = ratio * (2.0 * q ** 0.25 * omega / (1.0 - q)) * x
    C = ratio * np.asarray(c_series)
    S = s_pref * np.asarray(s_series)
    err = 4.0 * _EPS * np.maximum(abs(ratio) * np.asarray(c_info.abs_sum), np.abs(s_pref) * np.asarray(s_info.abs_sum))
    return C, S, err


def _continued_phi22(u: np.ndarray, omega: complex, ctx: QContext):
    q = ctx.q
    b = q * q
    u2 = u * u
    x = 0.5 * (u + 1.0 / u)
    w2 = omega * omega
    if w2 == 0:
        return np.ones(u.shape, dtype=complex), np.zeros(u.shape, dtype=complex), np.zeros(u.shape)
    inf = math.inf
    den_c = (q * w2 * u2, q * w2 / u2)
    den_s = (b * w2 * u2, b * w2 / u2)
    lg_common = log_qpochhammer(-q * w2, b, inf, ctx)
    lg_c = log_multi_qpochhammer(den_c, b, inf, ctx) - log_qpochhammer(q, b, inf, ctx) - lg_common
    lg_s = log_multi_qpochhammer(den_s, b, inf, ctx) - log_qpochhammer(q ** 3, b, inf, ctx) - lg_common
    c_series, c_info = basic_hyper(HyperSeriesSpec((-w2, -q * w2), den_c, b, q), ctx, True)
    s_series, s_info = basic_hyper(HyperSeriesSpec((-w2, -q * w2), den_s, b, q ** 3), ctx, True)
    c_pref = np.exp(lg_c)
    s_pref = np.exp(lg_s) * (2.0 * q ** 0.25 * omega / (1.0 - q)) * x
    err = 4.0 * _EPS * np.maximum(np.abs(c_pref) * np.asarray(c_info.abs_sum),
                                  np.abs(s_pref) * np.asarray(s_info.abs_sum))
    return c_pref * c_series, s_pref * s_series, err


def _hermite_parts(x: np.ndarray, alpha: complex, ctx: QContext, normalize: bool = True,
                   magnitudes: bool = False):
    """Even and odd parts of ``sum_n q^(n^2/4) H_n(x|q) alpha^n / (q;q)_n``.

    With ``normalize`` the sum is divided by ``(q alpha^2; q^2)_inf``, which
    gives the q-exponential itself. Every term is formed as
    ``exp(log|coefficient| + n log(alpha) - log(normalizer)) * H_n(x)`` so
    neither the coefficients nor the normalizer overflow. With
    ``magnitudes`` the elementwise sum of term magnitudes is returned too.
    """
    q = ctx.q
    x = np.asarray(x, dtype=complex)
    even = np.ones(x.shape, dtype=complex)
    odd = np.zeros(x.shape, dtype=complex)
    if alpha == 0:
        return (even, odd, np.ones(x.shape)) if magnitudes else (even, odd)
    log_norm = complex(log_qpochhammer(q * alpha * alpha, q * q, math.inf, ctx)) if normalize else 0j
    log_alpha = cmath.log(alpha)
    lnq = math.log(q)
    even = even * cmath.exp(-log_norm)
    total_mag = np.abs(even)
    h_prev = np.ones(x.shape, dtype=complex)
    h_cur = 2.0 * x
    log_qfac = 0.0  # log (q;q)_n
    peak = np.abs(even)
    quiet = 0
    # terms can only decay once q^(n/2) |alpha| (2|x| + 1) < 1
    log_growth = math.log(abs(alpha)) + math.log(2.0 * float(np.max(np.abs(x), initial=0.0)) + 1.0)
    for n in range(1, ctx.max_terms):
        log_qfac += math.log1p(-q ** n)
        coef = cmath.exp(0.25 * n * n * lnq - log_qfac + n * log_alpha - log_norm)
        term = coef * h_cur
        total_mag = total_mag + np.abs(term)
        if n % 2:
            odd = odd + term
        else:
            even = even + term
        peak = np.maximum(peak, np.abs(even) + np.abs(odd))
        if np.all(np.abs(term) <= ctx.tol * peak):
            quiet += 1
            if quiet >= 3 and 0.5 * n * lnq + log_growth < 0:
                return (even, odd, total_mag) if magnitudes else (even, odd)
        else:
            quiet = 0
        qn = q ** n
        h_prev, h_cur = h_cur, 2.0 * x * h_cur - (1.0 - qn) * h_prev
    raise ConvergenceError(f"q-Hermite series did not converge in {ctx.max_terms} terms")


def _hermite_cs(u: np.ndarray, omega: complex, ctx: QContext):
    x = 0.5 * (u + 1.0 / u)
    even, odd, mag = _hermite_parts(x, 1j * omega, ctx, magnitudes=True)
    return even, odd / 1j, 4.0 * _EPS * mag


def _resolve(rep: TrigRepresentation, omega: complex) -> TrigRepresentation:
    rep = TrigRepresentation(rep)
    if rep is TrigRepresentation.AUTO:
        if abs(omega) < AUTO_SERIES_RADIUS:
            return TrigRepresentation.SERIES_PHI21
        return TrigRepresentation.HERMITE_SERIES
    return rep


def _auto_large(u: np.ndarray, omega: complex, ctx: QContext):
    """Hermite series, with 2phi2 taken pointwise where it rounds better.

    The Hermite terms grow near ``x = +-1`` once ``q`` approaches 1, while
    the 2phi2 form degrades in the interior; neither dominates everywhere.
    """
    shape = np.shape(u)
    flat = np.asarray(u).reshape(-1)
    C, S, err = (np.array(v).reshape(-1) for v in _hermite_cs(flat, omega, ctx))
    amp = np.sqrt(np.abs(C) ** 2 + np.abs(S) ** 2)
    weak = err > _AUTO_SWITCH_LOSS * amp
    if np.any(weak):
        C2, S2, err2 = _continued_phi22(flat[weak], omega, ctx)
        better = err2 < err[weak]
        idx = np.flatnonzero(weak)[better]
        C[idx] = C2[better]
        S[idx] = S2[better]
        err[idx] = err2[better]
        amp = np.sqrt(np.abs(C) ** 2 + np.abs(S) ** 2)
    loss = err / np.maximum(amp, 1e-300)
    if np.any(loss > AUTO_MAX_LOSS):
        raise ConvergenceError(
            f"basic cosine/sine at omega={omega:.6g}, q={ctx.q:g}: both series lose "
            f"{float(np.max(loss)):.1e} of the amplitude to cancellation", last_term=float(np.max(loss)))
    return C.reshape(shape), S.reshape(shape), err.reshape(shape)


_DISPATCH = {
    TrigRepresentation.SERIES_PHI21: _series_phi21,
    TrigRepresentation.CONTINUED_PHI22: _continued_phi22,
    TrigRepresentation.HERMITE_SERIES: _hermite_cs,
}


def _evaluate(u: np.ndarray, omega: complex, rep, ctx: QContext):
    """``(C, S, err)`` for an array of ``u``; ``err`` bounds rounding in each."""
    if omega == 0:
        return np.ones(u.shape, dtype=complex), np.zeros(u.shape, dtype=complex), np.zeros(u.shape)
    rep = TrigRepresentation(rep)
    if rep is TrigRepresentation.AUTO and abs(omega) >= AUTO_SERIES_RADIUS:
        return _auto_large(u, omega, ctx)
    return _DISPATCH[_resolve(rep, omega)](u, omega, ctx)


def eval_CS(p, omega, rep=TrigRepresentation.AUTO, ctx: QContext | None = None):
    """Basic cosine and sine at a lattice point (or array of ``u`` values).

    Parameters
    ----------
    p : LatticePoint or array_like of complex ``u``
    omega : real or complex frequency
    rep : TrigRepresentation
        ``AUTO`` uses the 2phi1 series for ``|omega| < 0.9`` and otherwise
        the q-Hermite power series, switching pointwise to the 2phi2 form
        where that one cancels less.
    ctx : QContext

    Returns
    -------
    (C, S) : complex scalars, or arrays shaped like ``p``.

    Raises
    ------
    ConvergenceError
        Under ``AUTO``, if both large-``omega`` forms would lose more than
        ``AUTO_MAX_LOSS`` of the amplitude to cancellation (``q`` near 1
        with ``|omega|`` of a few units or more).
    """
    if ctx is None:
        raise QDomainError("a QContext is required")
    C, S, _ = _evaluate(_u_of(p), complex(omega), rep, ctx)
    return _shape_out(p, C), _shape_out(p, S)


def eval_C(p, omega, rep=TrigRepresentation.AUTO, ctx: QContext | None = None):
    """Basic cosine ``C(x; omega)``."""
    return eval_CS(p, omega, rep, ctx)[0]


def eval_S(p, omega, rep=TrigRepresentation.AUTO, ctx: QContext | None = None):
    """Basic sine ``S(x; omega)``."""
    return eval_CS(p, omega, rep, ctx)[1]


def eval_E(p, alpha, rep=TrigRepresentation.AUTO, ctx: QContext | None = None):
    """Basic exponential ``E(x; alpha)``.

    For imaginary ``alpha = i omega`` this is ``C + i S``; any other
    ``alpha`` is summed from the q-Hermite generating series.
    """
    if ctx is None:
        raise QDomainError("a QContext is required")
    alpha = complex(alpha)
    rep = TrigRepresentation(rep)
    if alpha.real == 0 and rep is not TrigRepresentation.HERMITE_SERIES:
        C, S = eval_CS(p, alpha.imag, rep, ctx)
        return C + 1j * S
    if alpha.real != 0 and rep not in (TrigRepresentation.AUTO, TrigRepresentation.HERMITE_SERIES):
        raise QDomainError("non-imaginary alpha is only available through the Hermite series")
    u = _u_of(p)
    even, odd = _hermite_parts(0.5 * (u + 1.0 / u), alpha, ctx)
    return _shape_out(p, even + odd)


def hermite_generating(x, alpha, ctx: QContext):
    """Entire function ``sum_n q^(n^2/4) H_n(x|q) alpha^n / (q;q)_n``.

    Equals ``(q alpha^2; q^2)_inf E(x; alpha)``.
    """
    even, odd = _hermite_parts(np.asarray(x, dtype=complex), complex(alpha), ctx, normalize=False)
    val = even + odd
    return val if np.ndim(x) else complex(val)


# ---------------------------------------------------------------------------
# real-grid conveniences (theta in, real arrays out)


def basic_cos_sin(theta, omega: float, ctx: QContext, rep=TrigRepresentation.AUTO):
    """Real ``C(cos theta; omega)`` and ``S(cos theta; omega)`` for real inputs."""
    u = np.exp(1j * np.asarray(theta, dtype=float))
    C, S, err = _evaluate(u, complex(float(omega)), rep, ctx)
    # C and S share one amplitude (C^2 + S^2 varies slowly)
    amp = np.sqrt(np.abs(C) ** 2 + np.abs(S) ** 2)
    C = real_part_checked(C, ctx.tol, "basic cosine", amp, 10.0 * err)
    S = real_part_checked(S, ctx.tol, "basic sine", amp, 10.0 * err)
    if np.ndim(theta) == 0:
        return float(C), float(S)
    return C, S


def basic_cos(theta, omega: float, ctx: QContext, rep=TrigRepresentation.AUTO):
    return basic_cos_sin(theta, omega, ctx, rep)[0]


def basic_sin(theta, omega: float, ctx: QContext, rep=TrigRepresentation.AUTO):
    return basic_cos_sin(theta, omega, ctx, rep)[1]


def basic_exp(theta, omega: float, ctx: QContext, rep=TrigRepresentation.AUTO):
    """``E(cos theta; i omega)`` for real ``theta`` and ``omega``."""
    C, S = basic_cos_sin(theta, omega, ctx, rep)
    return np.asarray(C) + 1j * np.asarray(S) if np.ndim(theta) else complex(C, S)


# ---------------------------------------------------------------------------
# two-variable functions through addition theorems


def _real_cs(x: float, omega: float, ctx: QContext):
    C, S = eval_CS(LatticePoint.from_x(x), omega, TrigRepresentation.AUTO, ctx)
    return C.real, S.real


def eval_C2(x: float, y: float, omega: float, ctx: QContext) -> float:
    """``C(x)C(y) - S(x)S(y)``."""
    cx, sx = _real_cs(x, omega, ctx)
    cy, sy = _real_cs(y, omega, ctx)
    return cx * cy - sx * sy


def eval_S2(x: float, y: float, omega: float, ctx: QContext) -> float:
    """``S(x)C(y) + C(x)S(y)``."""
    cx, sx = _real_cs(x, omega, ctx)
    cy, sy = _real_cs(y, omega, ctx)
    return sx * cy + cx * sy


def eval_E2(x: float, y: float, alpha: complex, ctx: QContext) -> complex:
    """``E(x; alpha) E(y; alpha)``."""
    return (eval_E(LatticePoint.from_x(x), alpha, TrigRepresentation.AUTO, ctx)
            * eval_E(LatticePoint.from_x(y), alpha, TrigRepresentation.AUTO, ctx))


# ---------------------------------------------------------------------------
# divided differences


def delta_derivative(f: Callable[[LatticePoint], complex], p: LatticePoint, ctx: QContext) -> complex:
    """Symmetric divided difference on the grid.

    ``[f(u q^(1/2)) - f(u q^(-1/2))] / [x(u q^(1/2)) - x(u q^(-1/2))]``.
    """
    up = p.shift_half(ctx.q, 1)
    dn = p.shift_half(ctx.q, -1)
    dx = up.x - dn.x
    if abs(dx) <= 4.0 * _EPS * max(abs(up.x), abs(dn.x)):
        raise QDomainError("shifted abscissae coincide (u^2 = 1)")
    return (complex(f(up)) - complex(f(dn))) / dx


def difference_equation_residual(p: LatticePoint, omega: float, ctx: QContext,
                                 rep=TrigRepresentation.AUTO) -> float:
    """Residual of ``D(D y) + 4 q^(1/2) omega^2/(1-q)^2 y = 0`` for ``y = C, S``.

    ``D`` is :func:`delta_derivative`; the larger of the two residuals is
    returned.
    """
    lam = 4.0 * math.sqrt(ctx.q) * omega * omega / (1.0 - ctx.q) ** 2
    worst = 0.0
    for which in (0, 1):
        def y(pt, which=which):
            return eval_CS(pt, omega, rep, ctx)[which]

        def dy(pt):
            return delta_derivative(y, pt, ctx)

        res = delta_derivative(dy, p, ctx) + lam * y(p)
        worst = max(worst, abs(res))
    return worst


# ---------------------------------------------------------------------------
# asymptotics


def amplitude_A(theta: float, ctx: QContext) -> complex:
    q = ctx.q
    e2 = cmath.exp(2j * theta)
    num = (1.0 - math.sqrt(q) * e2) * qpochhammer(q ** 1.5 / e2, q * q, math.inf, ctx) \
        * qpochhammer(q ** 2.5 * e2, q * q, math.inf, ctx)
    return num / qpochhammer(e2, q, math.inf, ctx)


def amplitude_B(theta: float, ctx: QContext) -> complex:
    q = ctx.q
    e2 = cmath.exp(2j * theta)
    num = cmath.exp(1j * theta) * qpochhammer(math.sqrt(q) / e2, q * q, math.inf, ctx) \
        * qpochhammer(q ** 1.5 * e2, q * q, math.inf, ctx)
    return num / qpochhammer(e2, q, math.inf, ctx)


def _check_interior(theta: float) -> None:
    if not 0.0 < theta < math.pi:
        raise QDomainError("asymptotic amplitudes need 0 < theta < pi")


def asymptotic_form(theta: float, ctx: QContext, which: str = "C") -> AsymptoticForm:
    """Amplitude and phase of the leading large-frequency oscillation."""
    _check_interior(theta)
    q = ctx.q
    pref = 2.0 * (qpochhammer(math.sqrt(q), q, math.inf, ctx)
                  / qpochhammer(q, q * q, math.inf, ctx) ** 2).real
    coef = amplitude_A(theta, ctx) if which == "C" else amplitude_B(theta, ctx)
    return AsymptoticForm(abs(coef), cmath.phase(coef), pref)


def asymptotic_CS(theta: float, n: int, ctx: QContext, sine_phase: str = "verified"):
    """Leading-order predictions of ``C`` and ``S`` at ``omega = q^(1/4 - n)``.

    ``C ~ P |A| cos((2 theta + pi) n - arg A)`` and
    ``S ~ -P |B| cos((2 theta + pi) n - arg B)`` with the common prefactor
    ``P = 2 (q^(1/2);q)_inf / (q;q^2)_inf^2``. ``sine_phase="shifted"``
    returns the variant ``P |B| cos((2 theta + pi)(n - 1) - arg B)`` instead,
    which direct evaluation does not support; it is kept for comparison.
    """
    fa = asymptotic_form(theta, ctx, "C")
    fb = asymptotic_form(theta, ctx, "S")
    freq = 2.0 * theta + math.pi
    c_pred = fa.prefactor * fa.amplitude * math.cos(freq * n - fa.phase)
    if sine_phase == "verified":
        s_pred = -fb.prefactor * fb.amplitude * math.cos(freq * n - fb.phase)
    elif sine_phase == "shifted":
        s_pred = fb.prefactor * fb.amplitude * math.cos(freq * (n - 1) - fb.phase)
    else:
        raise QDomainError(f"unknown sine_phase {sine_phase!r}")
    return c_pred, s_pred


def _inverse_power_sum(lead, shift_num: complex, tail: complex, q: float, terms: int, ctx) -> complex:
    """``sum_{n<terms} q^(2n) (lead;q)_(2n) / ((q^2, shift_num;q^2)_n (tail;q^2)_n)``."""
    total = 0.0
    for n in range(terms):
        total += (q ** (2 * n) * qpochhammer(lead, q, 2 * n, ctx)
                  / (qpochhammer(q * q, q * q, n, ctx) * qpochhammer(shift_num, q * q, n, ctx)
                     * qpochhammer(tail, q * q, n, ctx)))
    return total


def complete_asymptotic_CS(theta: float, omega: float, ctx: QContext, terms: int = 4,
                           sine_tail: str = "symmetric"):
    """Large-``omega`` expansions of ``C`` and ``S`` in inverse generalized powers.

    Each function is a sum of two conjugate-type series in
    ``(c omega^2 e^{+-2i theta}; q^2)_n^{-1}`` truncated after ``terms``
    terms. The sine expansion carries an overall factor ``omega``.
    ``sine_tail`` picks the base shift of the inverse powers in the second
    sine series: ``"symmetric"`` mirrors the first series (``q^2 omega^2``)
    and agrees with direct evaluation; ``"printed"`` uses ``q omega^2`` and
    leaves an imaginary residue of relative size ``~omega^-2``.
    """
    _check_interior(theta)
    if sine_tail not in ("symmetric", "printed"):
        raise QDomainError(f"unknown sine_tail {sine_tail!r}")
    q = ctx.q
    b = q * q
    w2 = omega * omega
    lg_den = log_qpochhammer(q, b, math.inf, ctx) + log_qpochhammer(-q * w2, b, math.inf, ctx)
    C = 0.0
    S = 0.0
    for sgn in (1, -1):
        e2 = cmath.exp(2j * sgn * theta)
        e4 = e2 * e2
        lg = log_qpochhammer(q * w2 * e2, b, math.inf, ctx) - log_qpochhammer(1.0 / e2, q, math.inf, ctx) - lg_den
        C += cmath.exp(lg) * _inverse_power_sum(-e2, b * e4, q * w2 * e2, q, terms, ctx)
        lg = log_qpochhammer(b * w2 * e2, b, math.inf, ctx) - log_qpochhammer(1.0 / e2, q, math.inf, ctx) - lg_den
        tail_base = b if (sgn == 1 or sine_tail == "symmetric") else q
        S += (omega * cmath.exp(1j * sgn * theta) * cmath.exp(lg) * q ** 0.25
              * _inverse_power_sum(-q * e2, b * e4, tail_base * w2 * e2, q, terms, ctx))
    return C, S
