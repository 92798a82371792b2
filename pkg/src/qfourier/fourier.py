"""q-Fourier series on the spectrum of the basic sine at ``eta``.

Coefficients, partial sums, the normalization ``k(omega)``, Parseval
bookkeeping, the Poisson and Abel kernels, the bilinear generating
function, and the bridge to continuous q-ultraspherical polynomials with
``beta = q^(1/2)`` through Jackson's q-Bessel functions.

Conventions used throughout:

* modes are ``E(x; i omega_n) = C(x; omega_n) + i S(x; omega_n)`` for
  ``n = -N..N`` with ``omega_{-n} = -omega_n`` and ``omega_0 = 0``;
* ``int |f|^2 w = sum_n |c_n|^2 2 k(omega_n)`` (single-mode calibrated);
* handles take ``theta`` and return ``f(cos theta)``.
"""

from __future__ import annotations

import csv
import enum
import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import __version__
from .errors import QDomainError, StructuralError
from .qcore import (
    HyperSeriesSpec,
    QContext,
    basic_hyper,
    log_qpochhammer,
    phi01_log_scaled,
    q_ultraspherical,
)
from .qtrig import basic_cos_sin
from .quadrature import (
    MAX_ORDER,
    _fsum,
    _segments,
    _weight_fn,
    gauss_legendre_rule,
    integrate,
    mode_order_floor,
    weighted_integrate,
)
from .zeros import ZeroKind, ZeroTable

__all__ = [
    "KMethod",
    "KNorm",
    "k_norm",
    "k_limit",
    "FunctionHandle",
    "builtin_function",
    "tabulated_function",
    "CoefficientForm",
    "FourierCoefficients",
    "coefficients",
    "synthesize",
    "partial_sum",
    "parseval_gap",
    "weighted_l2_error",
    "x_expansion_coefficient",
    "poisson_kernel",
    "abel_kernel",
    "abel_sum",
    "abel_sum_from_modes",
    "abel_sum_mode_kernel",
    "BilinearResult",
    "bilinear_check",
    "bilinear_rhs_half",
    "reduced_bessel",
    "legendre_coefficient",
    "legendre_expansion",
    "eq_in_ultraspherical",
    "OrthogonalitySum",
    "OrthogonalityResult",
    "qbessel_orthogonality_sum",
]


def _lp(a, base: float, ctx: QContext) -> float:
    """``log |(a; base)_inf|`` for real ``a``."""
    return float(np.real(log_qpochhammer(a, base, math.inf, ctx)))


# ---------------------------------------------------------------------------
# normalization k(omega)


class KMethod(enum.Enum):
    CLOSED_FORM = "closed"
    INTEGRAL = "integral"


@dataclass(frozen=True)
class KNorm:
    omega: float
    value: float
    method: KMethod


def _order_for_frequency(omega: float, q: float) -> int:
    n = math.log(max(abs(omega), 1.0)) / math.log(1.0 / q) + 1.0
    return mode_order_floor(int(math.ceil(n)))


@functools.lru_cache(maxsize=4096)
def _k_closed(omega: float, ctx: QContext) -> float:
    q = ctx.q
    w2 = omega * omega
    sq = math.sqrt(q)
    lg = (_lp(sq, q, ctx) + _lp(-sq * w2, q, ctx) - _lp(q, q, ctx) - _lp(-w2, q, ctx)
          + _lp(-w2, q * q, ctx) - _lp(-q * w2, q * q, ctx))
    series = basic_hyper(HyperSeriesSpec((sq, -w2), (-sq * w2,), q, q), ctx)
    return math.pi * math.exp(lg) * float(np.real(series))


@functools.lru_cache(maxsize=1024)
def _k_integral(omega: float, ctx: QContext) -> float:
    def integrand(theta):
        c, s = basic_cos_sin(theta, omega, ctx)
        return c * c + s * s

    val, _ = weighted_integrate(integrand, ctx, _order_for_frequency(omega, ctx.q))
    return 0.5 * val


def k_norm(omega: float, method: KMethod = KMethod.CLOSED_FORM, ctx: QContext | None = None) -> KNorm:
    """Normalization ``k(omega) = (1/2) int (C^2 + S^2) w``.

    The closed form is

    ``pi (q^(1/2), -q^(1/2) w^2; q)_inf / (q, -w^2; q)_inf
    * (-w^2; q^2)_inf / (-q w^2; q^2)_inf
    * 2phi1(q^(1/2), -w^2; -q^(1/2) w^2; q, q)``

    with the Pochhammer ratio formed in log space. ``INTEGRAL`` integrates
    the defining expression instead.
    """
    if ctx is None:
        raise QDomainError("k_norm needs a QContext")
    method = KMethod(method)
    omega = abs(float(omega))
    if method is KMethod.CLOSED_FORM:
        return KNorm(omega, _k_closed(omega, ctx), method)
    return KNorm(omega, _k_integral(omega, ctx), method)


def k_limit(ctx: QContext) -> float:
    """Large-frequency limit ``2 pi (-q;q)_inf^2 / (-q^(1/2);q)_inf^2`` of ``k(omega_n)``."""
    q = ctx.q
    return 2.0 * math.pi * math.exp(2.0 * (_lp(-q, q, ctx) - _lp(-math.sqrt(q), q, ctx)))


# ---------------------------------------------------------------------------
# function handles


@dataclass(frozen=True)
class FunctionHandle:
    """``theta -> f(cos theta)`` plus a provenance string and jump locations."""

    fn: Callable
    descriptor: str
    breakpoints: tuple = ()
    complex_valued: bool = False

    def __call__(self, theta):
        return self.fn(theta)


def _mode(kind: str, n: int, table: ZeroTable, ctx: QContext) -> FunctionHandle:
    if table is None:
        raise QDomainError(f"mode:{kind}:{n} needs a zero table")
    if kind in ("C", "S") and n < 0:
        raise QDomainError("cosine and sine modes take n >= 0")
    w = table.omega(n)
    desc = f"mode:{kind}:{n}"
    if kind == "C":
        return FunctionHandle(lambda th: basic_cos_sin(th, w, ctx)[0], desc)
    if kind == "S":
        return FunctionHandle(lambda th: basic_cos_sin(th, w, ctx)[1], desc)
    if kind == "E":
        def e(th):
            c, s = basic_cos_sin(th, w, ctx)
            return np.asarray(c) + 1j * np.asarray(s)
        return FunctionHandle(e, desc, complex_valued=True)
    raise QDomainError(f"unknown mode kind {kind!r}; use C, S or E")


def builtin_function(name: str, ctx: QContext, table: ZeroTable | None = None) -> FunctionHandle:
    """Named test functions of ``x = cos theta``.

    ``one``, ``x``, ``x2``, ``sign`` (``sign(0) = 0``), ``step`` (1 for
    ``x >= 0``), ``legendre:m`` (``C_m(x; q^(1/2)|q)``) and the single
    modes ``mode:C:n``, ``mode:S:n``, ``mode:E:n`` (these need ``table``).
    """
    half = (math.pi / 2,)
    simple = {
        "one": FunctionHandle(lambda th: np.ones_like(np.asarray(th, dtype=float)), "one"),
        "x": FunctionHandle(lambda th: np.cos(th), "x"),
        "x2": FunctionHandle(lambda th: np.cos(th) ** 2, "x2"),
        "sign": FunctionHandle(lambda th: np.sign(math.pi / 2 - np.asarray(th, dtype=float)), "sign", half),
        "step": FunctionHandle(lambda th: (np.asarray(th, dtype=float) <= math.pi / 2).astype(float), "step", half),
    }
    if name in simple:
        return simple[name]
    parts = name.split(":")
    if parts[0] == "legendre" and len(parts) == 2:
        m = int(parts[1])
        beta = math.sqrt(ctx.q)
        return FunctionHandle(lambda th: q_ultraspherical(m, np.cos(th), beta, ctx), name)
    if parts[0] == "mode" and len(parts) == 3:
        return _mode(parts[1], int(parts[2]), table, ctx)
    raise QDomainError(f"unknown builtin function {name!r}")


def tabulated_function(thetas: Sequence[float], values: Sequence[float], descriptor: str = "points") -> FunctionHandle:
    """Piecewise-linear interpolant in ``theta`` through ``(theta_i, f_i)`` pairs."""
    th = np.asarray(thetas, dtype=float)
    fv = np.asarray(values, dtype=float)
    if th.ndim != 1 or th.shape != fv.shape or th.size < 2:
        raise QDomainError("need at least two (theta, f) pairs")
    order = np.argsort(th)
    th, fv = th[order], fv[order]
    if np.any(np.diff(th) <= 0):
        raise QDomainError("theta values must be distinct")
    if th[0] > 0.0 or th[-1] < math.pi:
        raise QDomainError("tabulated points must cover [0, pi]")
    kinks = tuple(float(t) for t in th if 0.0 < t < math.pi)
    return FunctionHandle(lambda t: np.interp(t, th, fv), descriptor, kinks)


# ---------------------------------------------------------------------------
# coefficients


class CoefficientForm(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"


@dataclass(frozen=True)
class FourierCoefficients:
    """Coefficients of ``f`` on the first ``N`` sine zeros.

    ``REAL`` form: ``a = (a_0..a_N)``, ``b = (b_1..b_N)`` (``b_0`` does not
    exist since ``S(x; 0) = 0``). ``COMPLEX`` form: ``c = (c_{-N}..c_N)``.
    ``k_values`` holds ``k(omega_0)..k(omega_N)``.
    """

    form: CoefficientForm
    q: float
    N: int
    spectrum: tuple
    k_values: tuple
    spectrum_ref: str
    f_descriptor: str
    a: tuple | None = None
    b: tuple | None = None
    c: tuple | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def a_n(self, n: int) -> float:
        return self.a[n]

    def b_n(self, n: int) -> float:
        if n < 1:
            raise IndexError("b_n starts at n = 1")
        return self.b[n - 1]

    def c_n(self, n: int) -> complex:
        if self.form is CoefficientForm.COMPLEX:
            return self.c[n + self.N]
        if n == 0:
            return complex(self.a[0])
        an, bn = self.a[abs(n)], self.b[abs(n) - 1]
        return complex(an, -bn) / 2 if n > 0 else complex(an, bn) / 2

    def omega(self, n: int) -> float:
        if n == 0:
            return 0.0
        return math.copysign(self.spectrum[abs(n) - 1], n)

    def k(self, n: int) -> float:
        return self.k_values[abs(n)]

    def to_complex(self) -> "FourierCoefficients":
        if self.form is CoefficientForm.COMPLEX:
            return self
        c = tuple(self.c_n(n) for n in range(-self.N, self.N + 1))
        return FourierCoefficients(CoefficientForm.COMPLEX, self.q, self.N, self.spectrum,
                                   self.k_values, self.spectrum_ref, self.f_descriptor, c=c)

    # persistence
    def to_json(self) -> str:
        def s(v):
            return f"{float(v):.17g}"

        if self.form is CoefficientForm.REAL:
            values = {"a": [s(v) for v in self.a], "b": [s(v) for v in self.b]}
        else:
            values = {"re": [s(v.real) for v in self.c], "im": [s(v.imag) for v in self.c]}
        doc = {
            "form": self.form.value,
            "q": s(self.q),
            "N": self.N,
            "spectrum_ref": self.spectrum_ref,
            "spectrum": [s(v) for v in self.spectrum],
            "values": values,
            "k_values": [s(v) for v in self.k_values],
            "f_descriptor": self.f_descriptor,
            "version": __version__,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8", newline="\n")
        return path

    @classmethod
    def from_json(cls, text: str) -> "FourierCoefficients":
        doc = json.loads(text)
        form = CoefficientForm(doc["form"])
        vals = doc["values"]
        common = dict(form=form, q=float(doc["q"]), N=int(doc["N"]),
                      spectrum=tuple(float(v) for v in doc["spectrum"]),
                      k_values=tuple(float(v) for v in doc["k_values"]),
                      spectrum_ref=doc["spectrum_ref"], f_descriptor=doc["f_descriptor"])
        if form is CoefficientForm.REAL:
            return cls(**common, a=tuple(float(v) for v in vals["a"]),
                       b=tuple(float(v) for v in vals["b"]))
        return cls(**common, c=tuple(complex(float(r), float(i)) for r, i in zip(vals["re"], vals["im"])))

    @classmethod
    def load(cls, path) -> "FourierCoefficients":
        path = Path(path)
        if not path.exists():
            raise StructuralError(f"coefficient file {path} is missing")
        return cls.from_json(path.read_text(encoding="utf-8"))


@functools.lru_cache(maxsize=8192)
def _mode_values(omega: float, order: int, a: float, b: float, ctx: QContext):
    rule = gauss_legendre_rule(order, a, b)
    c, s = basic_cos_sin(rule.nodes, omega, ctx)
    c.setflags(write=False)
    s.setflags(write=False)
    return c, s


def _project(f: Callable, freqs: Sequence[float], ctx: QContext, order_floor: int,
             breakpoints=(), rtol: float = 1e-12):
    """``int f C(.;w) w`` and ``int f S(.;w) w`` for each frequency, refined together."""
    segments = _segments(breakpoints)
    wfn = _weight_fn(ctx)

    def build(order):
        ic = np.zeros(len(freqs), dtype=complex)
        is_ = np.zeros(len(freqs), dtype=complex)
        mag = 0.0
        for a, b in segments:
            rule = gauss_legendre_rule(order, a, b)
            fw = np.asarray(f(rule.nodes), dtype=complex) * wfn.at_nodes(rule) * rule.weights
            mag += math.fsum(np.abs(fw).tolist())
            for j, w in enumerate(freqs):
                c, s = _mode_values(float(w), order, a, b, ctx)
                ic[j] += _fsum(fw * c)
                is_[j] += _fsum(fw * s)
        return ic, is_, mag

    order = max(ctx.quad_order, order_floor)
    prev = build(order)
    while order * 2 <= MAX_ORDER:
        order *= 2
        cur = build(order)
        delta = max(np.max(np.abs(cur[0] - prev[0]), initial=0.0), np.max(np.abs(cur[1] - prev[1]), initial=0.0))
        if delta <= rtol * max(cur[2], 1e-300):
            return cur[0], cur[1]
        prev = cur
    from .errors import ConvergenceError

    raise ConvergenceError(f"coefficient integrals not settled by order {MAX_ORDER}", last_term=float(delta))


def _as_handle(f) -> FunctionHandle:
    if isinstance(f, FunctionHandle):
        return f
    return FunctionHandle(f, getattr(f, "__name__", "callable"))


def coefficients(f, form: CoefficientForm, N: int, table: ZeroTable, ctx: QContext,
                 rtol: float = 1e-12) -> FourierCoefficients:
    """q-Fourier coefficients of ``f`` on ``omega_0 = 0, omega_1..omega_N``.

    ``a_0 = int f w / (2 k(0))``, ``a_n = int f C_n w / k(omega_n)``,
    ``b_n = int f S_n w / k(omega_n)`` and
    ``c_n = int f E(.; -i omega_n) w / (2 k(omega_n))``.
    """
    form = CoefficientForm(form)
    if table.kind is not ZeroKind.SINE:
        raise QDomainError("coefficients are taken on the sine zeros")
    if N > len(table):
        raise StructuralError(f"table holds {len(table)} zeros, N={N} requested")
    if table.q != ctx.q:
        raise QDomainError(f"table q={table.q} does not match context q={ctx.q}")
    h = _as_handle(f)
    freqs = [0.0] + [table.omega(n) for n in range(1, N + 1)]
    ic, is_ = _project(h, freqs, ctx, mode_order_floor(N), h.breakpoints, rtol)
    kv = np.array([k_norm(w, ctx=ctx).value for w in freqs])
    common = dict(q=ctx.q, N=N, spectrum=tuple(freqs[1:]), k_values=tuple(kv),
                  spectrum_ref=table.digest(), f_descriptor=h.descriptor)
    if form is CoefficientForm.REAL:
        if h.complex_valued:
            raise QDomainError("the real form needs a real-valued function")
        a = [ic[0].real / (2.0 * kv[0])] + [ic[n].real / kv[n] for n in range(1, N + 1)]
        b = [is_[n].real / kv[n] for n in range(1, N + 1)]
        return FourierCoefficients(CoefficientForm.REAL, a=tuple(a), b=tuple(b), **common)
    c = []
    for n in range(-N, N + 1):
        j = abs(n)
        sgn = 1.0 if n >= 0 else -1.0
        # E(x; -i w) = C(x; w) - i S(x; w), with S odd in w
        c.append(complex((ic[j] - 1j * sgn * is_[j]) / (2.0 * kv[j])))
    return FourierCoefficients(CoefficientForm.COMPLEX, c=tuple(c), **common)


def synthesize(coeffs: FourierCoefficients, theta, N: int | None, ctx: QContext):
    """Partial sum at ``x = cos theta``; real for the real form, complex otherwise."""
    N = coeffs.N if N is None else N
    if N > coeffs.N or N < 0:
        raise QDomainError(f"N={N} outside 0..{coeffs.N}")
    th = np.asarray(theta, dtype=float)
    if coeffs.form is CoefficientForm.REAL:
        total = np.full(th.shape, coeffs.a[0], dtype=float)
        for n in range(1, N + 1):
            c, s = basic_cos_sin(th, coeffs.spectrum[n - 1], ctx)
            total = total + coeffs.a[n] * np.asarray(c) + coeffs.b[n - 1] * np.asarray(s)
        return total if th.ndim else float(total)
    total = np.full(th.shape, coeffs.c_n(0), dtype=complex)
    for n in range(1, N + 1):
        c, s = basic_cos_sin(th, coeffs.spectrum[n - 1], ctx)
        c, s = np.asarray(c), np.asarray(s)
        total = total + coeffs.c_n(n) * (c + 1j * s) + coeffs.c_n(-n) * (c - 1j * s)
    return total if th.ndim else complex(total)


def partial_sum(coeffs: FourierCoefficients, x, N: int, ctx: QContext):
    """``a_0 + sum_{n<=N} (a_n C(x;w_n) + b_n S(x;w_n))`` or ``sum_{|n|<=N} c_n E(x; i w_n)``."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1):
        raise QDomainError("x must lie in [-1, 1]")
    return synthesize(coeffs, np.arccos(xa), N, ctx)


def parseval_gap(f, coeffs: FourierCoefficients, N: int, ctx: QContext) -> float:
    """``int |f|^2 w - sum_{|n|<=N} |c_n|^2 2 k(omega_n)``; Bessel says this is >= 0."""
    h = _as_handle(f)
    if N > coeffs.N:
        raise QDomainError(f"N={N} exceeds the {coeffs.N} available coefficients")
    norm2, _ = weighted_integrate(lambda th: np.abs(np.asarray(h(th))) ** 2, ctx,
                                  mode_order_floor(coeffs.N), breakpoints=h.breakpoints)
    energy = math.fsum(abs(coeffs.c_n(n)) ** 2 * 2.0 * coeffs.k(n) for n in range(-N, N + 1))
    return norm2 - energy


def weighted_l2_error(f, coeffs: FourierCoefficients, N: int, ctx: QContext) -> float:
    """``sqrt(int |f - f_N|^2 w)`` by direct quadrature of the residual."""
    h = _as_handle(f)

    def resid(th):
        return np.abs(np.asarray(h(th)) - synthesize(coeffs, th, N, ctx)) ** 2

    # residuals at rounding level never settle in relative terms
    energy = math.fsum(abs(coeffs.c_n(n)) ** 2 * 2.0 * coeffs.k(n) for n in range(-N, N + 1))
    val, _ = weighted_integrate(resid, ctx, mode_order_floor(coeffs.N), rtol=1e-10,
                                breakpoints=h.breakpoints, atol=1e-26 * max(energy, 1e-300))
    return math.sqrt(max(val, 0.0))


def x_expansion_coefficient(n: int, table: ZeroTable, ctx: QContext) -> float:
    """Closed form of ``b_n`` for ``f(x) = x``.

    ``pi (q^(1/2);q)^2/(q;q)^2 (q^(1/4)+q^(-1/4)) (-1)^(n-1)/(k(w_n) w_n)
    sqrt((-w_n^2;q^2)_inf/(-q w_n^2;q^2)_inf)``
    """
    q = ctx.q
    w = table.omega(n)
    lg = (2.0 * (_lp(math.sqrt(q), q, ctx) - _lp(q, q, ctx))
          + 0.5 * (_lp(-w * w, q * q, ctx) - _lp(-q * w * w, q * q, ctx)))
    sign = 1.0 if n % 2 else -1.0
    return sign * math.pi * (q ** 0.25 + q ** -0.25) * math.exp(lg) / (k_norm(w, ctx=ctx).value * w)


# ---------------------------------------------------------------------------
# kernels


def _log_pair_mod(z, q: float, ctx: QContext):
    """``log |(z; q)_inf|^2`` = log of ``(z, conj z; q)_inf``."""
    return 2.0 * np.real(log_qpochhammer(z, q, math.inf, ctx))


def _poisson_log(theta, phi, r: float, ctx: QContext):
    q = ctx.q
    th = np.asarray(theta, dtype=float)
    ph = np.asarray(phi, dtype=float)
    return (_lp(r * r, q, ctx)
            - _log_pair_mod(r * np.exp(1j * (th + ph)), q, ctx)
            - _log_pair_mod(r * np.exp(1j * (th - ph)), q, ctx))


def poisson_kernel(theta, phi, r: float, ctx: QContext):
    """``(r^2;q)_inf / (r e^{i(t+p)}, r e^{i(t-p)}, r e^{i(p-t)}, r e^{-i(t+p)}; q)_inf``.

    Equals ``sum_n r^n H_n(cos t) H_n(cos p) / (q;q)_n``.
    """
    if not abs(r) < 1:
        raise QDomainError("the Poisson kernel needs |r| < 1")
    if r == 0:
        return np.ones(np.broadcast(np.asarray(theta), np.asarray(phi)).shape) if (np.ndim(theta) or np.ndim(phi)) else 1.0
    val = np.exp(_poisson_log(theta, phi, r, ctx))
    return val if (np.ndim(theta) or np.ndim(phi)) else float(val)


def abel_kernel(theta: float, phi, r: float, ctx: QContext):
    """``(1/2 pi) (q, r^2, e^{2ip}, e^{-2ip}; q)_inf`` over the four ``r``-factors."""
    if not abs(r) < 1:
        raise QDomainError("the Abel kernel needs |r| < 1")
    q = ctx.q
    ph = np.asarray(phi, dtype=float)
    lg = _lp(q, q, ctx) + _poisson_log(theta, ph, r, ctx) + _log_pair_mod(q * np.exp(2j * ph), q, ctx)
    return 4.0 * np.sin(ph) ** 2 * np.exp(lg) / (2.0 * math.pi)


def abel_sum(f, r: float, theta: float, ctx: QContext, rtol: float = 1e-11):
    """``S_r[f](cos theta) = int_0^pi abel_kernel(theta, p) f(cos p) dp``; tends to ``f`` as ``r -> 1``."""
    if not 0 < r < 1:
        raise QDomainError("Abel summation needs 0 < r < 1")
    h = _as_handle(f)
    peak = (float(theta),) if 0 < theta < math.pi else ()
    val, _ = integrate(lambda ph: abel_kernel(theta, ph, r, ctx) * np.asarray(h(ph)), ctx,
                       rtol=rtol, breakpoints=tuple(h.breakpoints) + peak)
    return val


def abel_sum_mode_kernel(f, r: float, theta: float, ctx: QContext, rtol: float = 1e-11):
    """Integral form of :func:`abel_sum_from_modes` with the bilinear kernel summed.

    ``int_0^pi f(cos p) w(p) K(theta, p) dp / (2 pi)`` with
    ``K = (q, r^2, q^(1/2) e^{+-2it}; q)_inf / (r e^{i(+-t+-p)}; q)_inf``.
    The ``theta``-dependent factor does not cancel the weight's denominator,
    so this differs from :func:`abel_sum` for ``r < 1``; both tend to ``f``
    as ``r -> 1``.
    """
    if not 0 < r < 1:
        raise QDomainError("Abel summation needs 0 < r < 1")
    h = _as_handle(f)
    q = ctx.q
    head = _bilinear_rhs_log(theta, ctx, r)

    def integrand(ph):
        ph = np.asarray(ph, dtype=float)
        lg = head - (_log_pair_mod(r * np.exp(1j * (theta + ph)), q, ctx)
                     + _log_pair_mod(r * np.exp(1j * (theta - ph)), q, ctx))
        return np.exp(lg) * np.asarray(h(ph)) / (2.0 * math.pi)

    peak = (float(theta),) if 0 < theta < math.pi else ()
    val, _ = weighted_integrate(integrand, ctx, rtol=rtol, breakpoints=tuple(h.breakpoints) + peak)
    return val


def _prefactor_log(omega: float, r: float, ctx: QContext) -> float:
    q = ctx.q
    w2 = omega * omega
    return _lp(-q * r * r * w2, q * q, ctx) - _lp(-q * w2, q * q, ctx)


def abel_sum_from_modes(f, r: float, theta: float, N: int, table: ZeroTable, ctx: QContext) -> complex:
    """``sum_{|n|<=N} c_n(r) E(cos theta; i w_n)`` with the ``r``-damped coefficients.

    ``c_n(r) = (-q r^2 w_n^2;q^2)/(-q w_n^2;q^2) / (2 k(w_n)) int f E(.; -i r w_n) w``.
    """
    if not 0 < r < 1:
        raise QDomainError("Abel summation needs 0 < r < 1")
    h = _as_handle(f)
    freqs = [0.0] + [r * table.omega(n) for n in range(1, N + 1)]
    ic, is_ = _project(h, freqs, ctx, mode_order_floor(N), h.breakpoints)
    total = 0j
    for n in range(-N, N + 1):
        j = abs(n)
        w = table.omega(j) if j else 0.0
        sgn = 1.0 if n >= 0 else -1.0
        cr = math.exp(_prefactor_log(w, r, ctx)) * (ic[j] - 1j * sgn * is_[j]) / (2.0 * k_norm(w, ctx=ctx).value)
        c, s = basic_cos_sin(theta, w, ctx)
        total += cr * complex(c, sgn * s)
    return total


class BilinearResult(NamedTuple):
    lhs: complex
    rhs: float
    rhs_without_pi: float


def _bilinear_rhs_log(theta: float, ctx: QContext, r: float) -> float:
    q = ctx.q
    return (_lp(q, q, ctx) + _lp(r * r, q, ctx)
            + float(_log_pair_mod(math.sqrt(q) * np.exp(2j * theta), q, ctx)))


def bilinear_check(theta: float, phi: float, r: float, N: int, table: ZeroTable, ctx: QContext) -> BilinearResult:
    """Both sides of the bilinear generating relation.

    ``lhs = sum_{|n|<=N} (-q r^2 w_n^2;q^2)/(-q w_n^2;q^2) / k(w_n) E(cos t; i w_n) E(cos p; -i r w_n)``

    ``rhs = (q, r^2, q^(1/2) e^{2it}, q^(1/2) e^{-2it}; q)_inf / (pi (r e^{i(t+p)}, ...; q)_inf)``.
    ``rhs_without_pi`` omits the ``1/pi``; at ``r = 0`` it is the other
    candidate normalization.
    """
    if not 0 <= r < 1:
        raise QDomainError("the bilinear relation needs 0 <= r < 1")
    if N > len(table):
        raise StructuralError(f"table holds {len(table)} zeros, N={N} requested")
    lhs = 0j
    for n in range(-N, N + 1):
        w = table.omega(n)
        pre = math.exp(_prefactor_log(w, r, ctx)) / k_norm(w, ctx=ctx).value
        ct, st = basic_cos_sin(theta, w, ctx)
        cp, sp = basic_cos_sin(phi, r * w, ctx)
        lhs += pre * complex(ct, st) * complex(cp, -sp)
    lg = _bilinear_rhs_log(theta, ctx, r)
    if r != 0:
        lg -= float(_log_pair_mod(r * np.exp(1j * (theta + phi)), ctx.q, ctx)
                    + _log_pair_mod(r * np.exp(1j * (theta - phi)), ctx.q, ctx))
    full = math.exp(lg)
    return BilinearResult(lhs, full / math.pi, full)


def bilinear_rhs_half(theta: float, r: float, ctx: QContext) -> float:
    """Right side at ``phi = pi/2``: ``(q, r^2, q^(1/2) e^{+-2it}; q)_inf / (pi (-r^2 e^{+-2it}; q^2)_inf)``."""
    q = ctx.q
    lg = _bilinear_rhs_log(theta, ctx, r) - float(_log_pair_mod(-r * r * np.exp(2j * theta), q * q, ctx))
    return math.exp(lg) / math.pi


# ---------------------------------------------------------------------------
# q-ultraspherical bridge


def reduced_bessel(nu: float, omega, ctx: QContext):
    """``w^(-nu) J^(2)_nu(2w; q)`` as ``(mantissa, log_scale)``; even and entire in ``w``."""
    q = ctx.q
    pref = _lp(q ** (nu + 1.0), q, ctx) - _lp(q, q, ctx)
    mant, scale = phi01_log_scaled(omega, nu + 1.0, ctx)
    return mant, scale + pref


def _legendre_log_parts(m: int, omega: float, ctx: QContext):
    """Sign and log-magnitude of ``w^m j_{m+1/2}(w) / (k(w) (-q w^2;q^2)_inf)``."""
    q = ctx.q
    mant, scale = reduced_bessel(m + 0.5, omega, ctx)
    mant, scale = float(mant), float(scale)
    if mant == 0.0:
        return 0.0, -math.inf
    sign = math.copysign(1.0, mant) * (math.copysign(1.0, omega) ** m if omega != 0 else 1.0)
    if omega == 0.0:
        if m > 0:
            return 0.0, -math.inf
        logpow = 0.0
    else:
        logpow = m * math.log(abs(omega))
    lg = math.log(abs(mant)) + scale + logpow - math.log(k_norm(omega, ctx=ctx).value) - _lp(-q * omega * omega, q * q, ctx)
    return sign, lg


def legendre_coefficient(m: int, n: int, table: ZeroTable, ctx: QContext) -> complex:
    """Closed-form ``c_n`` of ``C_m(x; q^(1/2)|q)`` on the mode ``E(x; i w_n)``.

    ``pi (q^(1/2);q)/(q;q) (-i)^m q^(m^2/4) w_n^(-1/2) J_{m+1/2}(2 w_n) / (k(w_n) (-q w_n^2;q^2))``
    """
    q = ctx.q
    w = table.omega(n)
    sign, lg = _legendre_log_parts(m, w, ctx)
    if sign == 0.0:
        return 0j
    lg += _lp(math.sqrt(q), q, ctx) - _lp(q, q, ctx) + 0.25 * m * m * math.log(q)
    return sign * math.pi * math.exp(lg) * (-1j) ** m


def legendre_expansion(m: int, N: int, table: ZeroTable, ctx: QContext) -> FourierCoefficients:
    """Complex-form coefficients of ``C_m(x; q^(1/2)|q)`` from the Bessel closed form."""
    if m < 0:
        raise QDomainError("polynomial degree must be nonnegative")
    if N > len(table):
        raise StructuralError(f"table holds {len(table)} zeros, N={N} requested")
    c = tuple(legendre_coefficient(m, n, table, ctx) for n in range(-N, N + 1))
    freqs = [0.0] + [table.omega(n) for n in range(1, N + 1)]
    return FourierCoefficients(CoefficientForm.COMPLEX, ctx.q, N, tuple(freqs[1:]),
                               tuple(k_norm(w, ctx=ctx).value for w in freqs),
                               table.digest(), f"legendre:{m}", c=c)


def eq_in_ultraspherical(omega: float, M: int, x, ctx: QContext):
    """Partial sum of the expansion of ``E(x; i w)`` in ``C_m(x; q^(1/2)|q)``, ``m <= M``.

    ``(q;q) w^(-1/2) / ((-q w^2;q^2)(q^(1/2);q)) sum_m i^m (1 - q^(m+1/2)) q^(m^2/4) J_{m+1/2}(2w) C_m(x)``
    """
    q = ctx.q
    beta = math.sqrt(q)
    xa = np.asarray(x, dtype=float)
    base = _lp(q, q, ctx) - _lp(-q * omega * omega, q * q, ctx) - _lp(beta, q, ctx)
    total = np.zeros(xa.shape, dtype=complex)
    for m in range(M + 1):
        mant, scale = reduced_bessel(m + 0.5, omega, ctx)
        if omega == 0.0 and m > 0:
            continue
        powlog = m * math.log(abs(omega)) if omega != 0.0 else 0.0
        sgn = math.copysign(1.0, omega) ** m if omega != 0.0 else 1.0
        mag = math.exp(base + float(scale) + powlog + 0.25 * m * m * math.log(q))
        coef = (1j ** m) * (1.0 - q ** (m + 0.5)) * sgn * float(mant) * mag
        total = total + coef * q_ultraspherical(m, xa, beta, ctx)
    return total if xa.ndim else complex(total)


class OrthogonalitySum(enum.Enum):
    SUM_OVER_M = "sum_over_m"
    SUM_OVER_N = "sum_over_n"


class OrthogonalityResult(NamedTuple):
    value: complex
    truncation_estimate: float
    terms: int


def _bessel_factor(m: int, omega: float, ctx: QContext):
    """Sign and log of ``|w|^m j_{m+1/2}(w)`` (so ``w^(-1/2) J_{m+1/2}(2w)`` up to the branch of ``w^m``)."""
    mant, scale = reduced_bessel(m + 0.5, omega, ctx)
    mant = float(mant)
    if mant == 0.0 or (omega == 0.0 and m > 0):
        return 0.0, -math.inf
    powlog = m * math.log(abs(omega)) if omega != 0.0 else 0.0
    return math.copysign(1.0, mant), float(scale) + math.log(abs(mant)) + powlog


def qbessel_orthogonality_sum(kind: OrthogonalitySum, indices: tuple, table: ZeroTable,
                              ctx: QContext, limit: int = 40) -> OrthogonalityResult:
    """Truncated orthogonality sums for Jackson q-Bessel functions on the spectrum.

    ``SUM_OVER_M`` with ``indices = (n, l)``: sum over ``m = 0..limit`` of
    ``pi (1 - q^(m+1/2)) q^(m^2/2) / (w_n k(w_n) (-q w_n^2;q^2)^2) J_{m+1/2}(2w_n) J_{m+1/2}(2w_l)``.

    ``SUM_OVER_N`` with ``indices = (m, p)``: the same summand with
    ``J_{p+1/2}(2 w_n)`` as the second factor, summed over ``|n| <= limit``.

    Both should equal the Kronecker delta of the two indices. The Bessel
    products use ``w^(-1) J_a(2w) J_b(2w) = w^(a+b-1) j_a(w) j_b(w)`` with the
    entire reduced functions, so negative ``w_n`` need no branch choice;
    for ``SUM_OVER_M`` with ``n != l`` the factor ``(w_l/w_n)^(1/2)`` is taken
    on the principal branch.
    """
    q = ctx.q
    kind = OrthogonalitySum(kind)
    terms = []
    if kind is OrthogonalitySum.SUM_OVER_M:
        n, l = indices
        wn, wl = table.omega(n), table.omega(l)
        if wn == 0.0 or wl == 0.0:
            raise QDomainError("SUM_OVER_M needs nonzero frequencies")
        base = -math.log(k_norm(wn, ctx=ctx).value) - 2.0 * _lp(-q * wn * wn, q * q, ctx)
        root = complex(wl / wn) ** 0.5
        for m in range(limit + 1):
            s1, l1 = _bessel_factor(m, wn, ctx)
            s2, l2 = _bessel_factor(m, wl, ctx)
            branch = (math.copysign(1.0, wn) ** m) * (math.copysign(1.0, wl) ** m)
            mag = math.exp(base + l1 + l2 + 0.5 * m * m * math.log(q))
            terms.append(math.pi * (1.0 - q ** (m + 0.5)) * s1 * s2 * branch * mag * root)
    else:
        m, p = indices
        for n in range(-limit, limit + 1):
            w = table.omega(n)
            s1, l1 = _bessel_factor(m, w, ctx)
            s2, l2 = _bessel_factor(p, w, ctx)
            if s1 == 0.0 or s2 == 0.0:
                terms.append(0.0)
                continue
            branch = math.copysign(1.0, w) ** (m + p) if w != 0.0 else 1.0
            lg = (l1 + l2 - math.log(k_norm(w, ctx=ctx).value) - 2.0 * _lp(-q * w * w, q * q, ctx)
                  + 0.5 * m * m * math.log(q))
            terms.append(math.pi * (1.0 - q ** (m + 0.5)) * s1 * s2 * branch * math.exp(lg))
    arr = np.asarray(terms, dtype=complex)
    value = complex(math.fsum(arr.real.tolist()), math.fsum(arr.imag.tolist()))
    if kind is OrthogonalitySum.SUM_OVER_M:
        tail = abs(arr[-1])
    else:
        tail = abs(arr[0]) + abs(arr[-1])
    return OrthogonalityResult(value, float(tail), len(terms))


def write_coefficients_csv(coeffs: FourierCoefficients, path) -> Path:
    """One row per index: ``n, omega, k, re, im`` of ``c_n``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "omega", "k", "re", "im"])
        for n in range(-coeffs.N, coeffs.N + 1):
            c = coeffs.c_n(n)
            w.writerow([n, f"{coeffs.omega(n):.17g}", f"{coeffs.k(n):.17g}", f"{c.real:.17g}", f"{c.imag:.17g}"])
    return path
