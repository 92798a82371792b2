"""Orthogonality weight, Gauss-Legendre integration on [0, pi], Gram matrices.

All integrands receive ``theta`` arrays (never ``x = cos theta``) and must
be vectorized. The weight is

    w(theta) = |(e^{2i theta}; q)_inf|^2 / |(q^{1/2} e^{2i theta}; q)_inf|^2,

which vanishes like ``4 sin^2 theta`` at both endpoints.
"""

from __future__ import annotations

import csv
import enum
import functools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, QDomainError
from .qcore import QContext, log_qpochhammer
from .qtrig import basic_cos_sin
from .zeros import ZeroKind, ZeroTable

__all__ = [
    "WeightFn",
    "weight",
    "QuadratureRule",
    "gauss_legendre_rule",
    "integrate",
    "weighted_integrate",
    "askey_wilson_moment",
    "askey_wilson_integrand",
    "inner_product",
    "GramFamily",
    "gram_matrix",
    "write_matrix_csv",
    "write_moment_csv",
    "MAX_ORDER",
]

MAX_ORDER = 1024
DEFAULT_RTOL = 1e-12


def _weight_values(theta, q: float, ctx: QContext) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    e2 = np.exp(2j * th)
    lg = (log_qpochhammer(q * e2, q, math.inf, ctx).real
          - log_qpochhammer(math.sqrt(q) * e2, q, math.inf, ctx).real)
    return 4.0 * np.sin(th) ** 2 * np.exp(2.0 * lg)


class WeightFn:
    """The orthogonality weight for a fixed ``q``, with values cached per rule."""

    def __init__(self, ctx: QContext):
        self.ctx = ctx
        self.q = ctx.q
        self._cache: dict[tuple, np.ndarray] = {}

    def __call__(self, theta):
        val = _weight_values(theta, self.q, self.ctx)
        return val if np.ndim(theta) else float(val)

    def at_nodes(self, rule: "QuadratureRule") -> np.ndarray:
        key = (rule.order, rule.a, rule.b)
        if key not in self._cache:
            self._cache[key] = _weight_values(rule.nodes, self.q, self.ctx)
        return self._cache[key]


@functools.lru_cache(maxsize=32)
def _weight_fn(ctx: QContext) -> WeightFn:
    return WeightFn(ctx)


def weight(theta, ctx: QContext):
    """Orthogonality weight ``w(theta)``; real and nonnegative on ``[0, pi]``."""
    return _weight_fn(ctx)(theta)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    a: float = 0.0
    b: float = math.pi
    converged: bool = False
    est_error: float = math.nan


@functools.lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre_rule(order: int, a: float = 0.0, b: float = math.pi) -> QuadratureRule:
    """Gauss-Legendre rule with ``order`` nodes mapped to ``[a, b]``."""
    if order < 1:
        raise QDomainError("quadrature order must be positive")
    x, w = _leggauss(int(order))
    half = 0.5 * (b - a)
    return QuadratureRule(half * x + 0.5 * (a + b), half * w, int(order), a, b)


def _fsum(values: np.ndarray) -> complex | float:
    if np.iscomplexobj(values):
        return complex(math.fsum(values.real.tolist()), math.fsum(values.imag.tolist()))
    return math.fsum(values.tolist())


def _segments(breakpoints: Sequence[float] | None):
    pts = sorted({0.0, math.pi, *[float(b) for b in (breakpoints or ()) if 0.0 < b < math.pi]})
    return list(zip(pts[:-1], pts[1:]))


def _apply(f, order: int, segments, wfn: WeightFn | None):
    total = []
    absolute = []
    for a, b in segments:
        rule = gauss_legendre_rule(order, a, b)
        vals = np.asarray(f(rule.nodes))
        if wfn is not None:
            vals = vals * wfn.at_nodes(rule)
        contrib = rule.weights * vals
        total.append(_fsum(contrib))
        absolute.append(math.fsum(np.abs(contrib).tolist()))
    return sum(total), math.fsum(absolute)


def _doubling(f, ctx: QContext, order_floor: int | None, rtol: float, breakpoints, wfn,
              atol: float = 0.0):
    order = max(int(ctx.quad_order), int(order_floor or 0), 4)
    if order > MAX_ORDER:
        raise QDomainError(f"order floor {order} exceeds the maximum order {MAX_ORDER}")
    segments = _segments(breakpoints)
    prev, _ = _apply(f, order, segments, wfn)
    delta = math.inf
    while order * 2 <= MAX_ORDER:
        order *= 2
        cur, mag = _apply(f, order, segments, wfn)
        delta = abs(cur - prev)
        if delta <= max(rtol * max(abs(cur), mag), atol) or mag == 0.0:
            return cur, delta
        prev = cur
    raise ConvergenceError(
        f"Gauss-Legendre did not converge by order {MAX_ORDER}: last change {delta:.3e}",
        last_term=delta)


def integrate(f: Callable, ctx: QContext, order_floor: int | None = None,
              rtol: float = DEFAULT_RTOL, breakpoints: Sequence[float] | None = None,
              atol: float = 0.0):
    """``int_0^pi f(theta) dtheta`` with order doubling.

    Starts at ``max(ctx.quad_order, order_floor)`` and doubles until two
    successive values differ by less than ``rtol`` times the larger of
    ``|I|`` and ``int |f|`` (or by less than ``atol``); gives up after order 1024 with a
    :class:`ConvergenceError`. ``breakpoints`` split ``[0, pi]`` for
    integrands with jumps.

    Returns ``(value, last_change)``.
    """
    return _doubling(f, ctx, order_floor, rtol, breakpoints, None, atol)


def weighted_integrate(f: Callable, ctx: QContext, order_floor: int | None = None,
                       rtol: float = DEFAULT_RTOL, breakpoints: Sequence[float] | None = None,
                       atol: float = 0.0):
    """``int_0^pi f(theta) w(theta) dtheta``, reusing cached weight values."""
    return _doubling(f, ctx, order_floor, rtol, breakpoints, _weight_fn(ctx), atol)


def askey_wilson_moment(n: int, ctx: QContext) -> float:
    """Closed form of ``int_0^pi (e^{2it}, e^{-2it}; q)_inf / (q^{n+1/2} e^{2it}, q^{n+1/2} e^{-2it}; q)_inf dt``.

    ``2 pi (q^{2n+2};q)_inf / (q, -q^{n+1/2}, q^{n+1}, -q^{n+1}, q^{n+1}, -q^{n+1}, -q^{n+3/2}; q)_inf``
    """
    if n < 0:
        raise QDomainError("moment index must be nonnegative")
    q = ctx.q
    num = log_qpochhammer(q ** (2 * n + 2), q, math.inf, ctx).real
    den = 0.0
    for a in (q, -q ** (n + 0.5), q ** (n + 1), -q ** (n + 1), q ** (n + 1), -q ** (n + 1), -q ** (n + 1.5)):
        den += log_qpochhammer(a, q, math.inf, ctx).real
    return 2.0 * math.pi * math.exp(num - den)


def askey_wilson_integrand(n: int, ctx: QContext) -> Callable:
    """The integrand whose integral :func:`askey_wilson_moment` gives in closed form."""
    if n < 0:
        raise QDomainError("moment index must be nonnegative")
    q = ctx.q
    shift = q ** (n + 0.5)

    def integrand(theta):
        th = np.asarray(theta, dtype=float)
        e2 = np.exp(2j * th)
        lg = (log_qpochhammer(q * e2, q, math.inf, ctx).real
              - log_qpochhammer(shift * e2, q, math.inf, ctx).real)
        return 4.0 * np.sin(th) ** 2 * np.exp(2.0 * lg)

    return integrand


def inner_product(f: Callable, g: Callable, ctx: QContext, order_floor: int | None = None,
                  rtol: float = DEFAULT_RTOL, breakpoints=None):
    """``int_0^pi f(theta) g(theta) w(theta) dtheta``; ``f`` and ``g`` take ``theta``.

    Returns ``(value, last_change)``; no conjugation is applied.
    """
    return weighted_integrate(lambda th: np.asarray(f(th)) * np.asarray(g(th)), ctx,
                              order_floor, rtol, breakpoints)


class GramFamily(enum.Enum):
    COSINE = "cosine"
    SINE = "sine"
    MIXED = "mixed"
    EXPONENTIAL = "exponential"


def mode_order_floor(n_max: int) -> int:
    """Quadrature order floor for integrands containing modes up to ``n_max``."""
    return max(64, 8 * int(n_max))


def gram_matrix(family: GramFamily, table: ZeroTable, N: int, ctx: QContext,
                rtol: float = 1e-13) -> np.ndarray:
    """Matrix of weighted inner products of the first ``N`` modes.

    * ``COSINE``: ``int C(.;w_m) C(.;w_n) w``, ``m, n = 1..N``
    * ``SINE``: ``int S(.;w_m) S(.;w_n) w``
    * ``MIXED``: ``int C(.;w_m) S(.;w_n) w``
    * ``EXPONENTIAL``: ``int E(.;i w_m) E(.;-i w_n) w / (2 k(w_n))`` over the
      ``2N+1`` frequencies ``w_{-N}, ..., w_0 = 0, ..., w_N``; ideally the identity.

    The whole matrix is refined by order doubling until every entry settles.
    """
    family = GramFamily(family)
    if table.kind is not ZeroKind.SINE:
        raise QDomainError("Gram matrices are built on the sine zeros")
    if N > len(table):
        raise QDomainError(f"table holds {len(table)} zeros, N={N} requested")
    if family is GramFamily.EXPONENTIAL:
        freqs = [table.omega(n) for n in range(-N, N + 1)]
    else:
        freqs = [table.omega(n) for n in range(1, N + 1)]
    wfn = _weight_fn(ctx)

    def build(order):
        rule = gauss_legendre_rule(order)
        cw = rule.weights * wfn.at_nodes(rule)
        cs = [basic_cos_sin(rule.nodes, w, ctx) for w in freqs]
        if family is GramFamily.COSINE:
            left = right = np.array([c for c, _ in cs])
        elif family is GramFamily.SINE:
            left = right = np.array([s for _, s in cs])
        elif family is GramFamily.MIXED:
            left = np.array([c for c, _ in cs])
            right = np.array([s for _, s in cs])
        else:
            left = np.array([c + 1j * s for c, s in cs])
            right = np.conj(left)
        out = np.empty((len(freqs), len(freqs)), dtype=left.dtype)
        mag = np.empty((len(freqs), len(freqs)))
        for i in range(len(freqs)):
            for j in range(len(freqs)):
                terms = cw * left[i] * right[j]
                out[i, j] = _fsum(terms)
                mag[i, j] = math.fsum(np.abs(terms).tolist())
        return out, mag

    order = max(ctx.quad_order, mode_order_floor(N))
    prev, _ = build(order)
    while True:
        if order * 2 > MAX_ORDER:
            raise ConvergenceError(f"Gram matrix not settled by order {MAX_ORDER}")
        order *= 2
        cur, mag = build(order)
        delta = float(np.max(np.abs(cur - prev)))
        if delta <= rtol * float(np.max(mag)):
            break
        prev = cur
    if family is GramFamily.EXPONENTIAL:
        from .fourier import k_norm

        kvals = np.array([k_norm(w, ctx=ctx).value for w in freqs])
        cur = cur / (2.0 * kvals)[None, :]
    return cur


def _fmt(v) -> str:
    if isinstance(v, complex) or np.iscomplexobj(v):
        v = complex(v)
        return f"{v.real:.17g}{v.imag:+.17g}j"
    return f"{float(v):.17g}"


def write_matrix_csv(matrix, path) -> Path:
    """Row-major CSV, one matrix row per line, 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(matrix):
            w.writerow([_fmt(v) for v in row])
    return path


def write_moment_csv(ns: Sequence[int], ctx: QContext, path) -> Path:
    """Table of closed-form and integrated moments for the indices ``ns``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "closed_form", "numeric", "last_change"])
        for n in ns:
            val, err = integrate(askey_wilson_integrand(n, ctx), ctx)
            w.writerow([n, _fmt(askey_wilson_moment(n, ctx)), _fmt(val), _fmt(err)])
    return path
