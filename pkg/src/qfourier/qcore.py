"""Foundational q-series arithmetic.

q-shifted factorials (plain and log-scaled), basic hypergeometric series,
the q-gamma function, continuous q-Hermite and q-ultraspherical polynomials
and the Jackson q-Bessel function of the second kind.

Every routine takes a :class:`QContext` carrying the base ``q`` and the
truncation settings; routines are pure functions of their arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceError, QDomainError

__all__ = [
    "QContext",
    "ScaledReal",
    "HyperSeriesSpec",
    "SeriesInfo",
    "log1p_complex",
    "log_qpochhammer",
    "qpochhammer",
    "qpochhammer_scaled",
    "multi_qpochhammer",
    "log_multi_qpochhammer",
    "basic_hyper",
    "q_gamma",
    "q_hermite",
    "q_hermite_table",
    "q_ultraspherical",
    "q_bessel2",
    "phi01_log_scaled",
    "real_part_checked",
]

_LN2 = math.log(2.0)
# Below this modulus the tail of log (a;b)_inf is summed as a power series.
_TAIL_RADIUS = 0.5
# Rows x factors handled per numpy chunk when forming explicit products.
_CHUNK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class QContext:
    """Numerical context: base ``q`` and truncation controls.

    Parameters
    ----------
    q : float
        Base, strictly between 0 and 1.
    tol : float
        Absolute truncation tolerance for products and series.
    max_terms : int
        Cap on explicit product factors and series terms.
    quad_order : int
        Starting Gauss-Legendre order for quadrature.

    Notes
    -----
    The defaults are adequate for ``q <= 0.99``. Closer to 1 the series in
    ``q`` converge like ``q**n`` and need on the order of ``1/(1-q)`` terms;
    :meth:`for_q` raises ``max_terms`` accordingly.
    """

    q: float
    tol: float = 1e-14
    max_terms: int = 10000
    quad_order: int = 64

    def __post_init__(self):
        q = float(self.q)
        if not (0.0 < q < 1.0):
            raise QDomainError(f"q must lie in (0, 1), got {self.q!r}")
        if not (self.tol > 0.0):
            raise QDomainError(f"tol must be positive, got {self.tol!r}")
        if int(self.max_terms) < 16:
            raise QDomainError(f"max_terms must be >= 16, got {self.max_terms!r}")
        if int(self.quad_order) < 1:
            raise QDomainError(f"quad_order must be positive, got {self.quad_order!r}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "max_terms", int(self.max_terms))
        object.__setattr__(self, "quad_order", int(self.quad_order))

    @classmethod
    def for_q(cls, q: float, **kwargs) -> "QContext":
        """Context with ``max_terms`` large enough for ``q`` close to 1."""
        if not (0.0 < q < 1.0):
            raise QDomainError(f"q must lie in (0, 1), got {q!r}")
        needed = int(math.ceil(40.0 / (1.0 - q)))
        kwargs.setdefault("max_terms", max(10000, needed))
        return cls(q, **kwargs)

    def with_q(self, q: float) -> "QContext":
        return replace(self, q=q)

    @property
    def sqrt_q(self) -> float:
        return math.sqrt(self.q)

    @property
    def q14(self) -> float:
        """``q**(1/4)``."""
        return self.q ** 0.25


# ---------------------------------------------------------------------------
# ScaledReal


@dataclass(frozen=True)
class ScaledReal:
    """Real number stored as sign, binary mantissa and unbounded exponent.

    The value is ``sign * mantissa * 2**exponent`` with ``mantissa`` in
    ``[0.5, 1)``. The exponent is a Python int, so products of q-shifted
    factorials that overflow a double stay representable. ``logmag`` is the
    natural log of the magnitude (``-inf`` for zero).
    """

    sign: int
    mantissa: float = field(default=0.0)
    exponent: int = field(default=0)

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise QDomainError(f"sign must be -1, 0 or 1, got {self.sign!r}")
        if self.sign == 0:
            object.__setattr__(self, "mantissa", 0.0)
            object.__setattr__(self, "exponent", 0)
        else:
            m, e = math.frexp(float(self.mantissa))
            if m <= 0.0 or not math.isfinite(m):
                raise QDomainError("nonzero ScaledReal needs a finite positive mantissa")
            object.__setattr__(self, "mantissa", m)
            object.__setattr__(self, "exponent", int(self.exponent) + e)

    # constructors
    @classmethod
    def zero(cls) -> "ScaledReal":
        return cls(0)

    @classmethod
    def from_real(cls, x: float) -> "ScaledReal":
        x = float(x)
        if x == 0.0:
            return cls(0)
        if not math.isfinite(x):
            raise QDomainError(f"cannot scale non-finite value {x!r}")
        m, e = math.frexp(abs(x))
        return cls(1 if x > 0 else -1, m, e)

    @classmethod
    def from_log(cls, logmag: float, sign: int = 1) -> "ScaledReal":
        """Build from a natural-log magnitude."""
        if sign == 0 or logmag == -math.inf:
            return cls(0)
        if not math.isfinite(logmag):
            raise QDomainError(f"logmag must be finite or -inf, got {logmag!r}")
        e = math.floor(logmag / _LN2)
        return cls(sign, math.exp(logmag - e * _LN2), e)

    # views
    @property
    def logmag(self) -> float:
        if self.sign == 0:
            return -math.inf
        return math.log(self.mantissa) + self.exponent * _LN2

    def to_real(self) -> float:
        """Materialize as a float; overflows to ``inf`` and underflows to 0."""
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.ldexp(self.mantissa, self.exponent)
        except OverflowError:
            return self.sign * math.inf

    __float__ = to_real

    # arithmetic
    def __mul__(self, other: "ScaledReal | float") -> "ScaledReal":
        other = _as_scaled(other)
        if self.sign == 0 or other.sign == 0:
            return ScaledReal(0)
        return ScaledReal(self.sign * other.sign, self.mantissa * other.mantissa,
                          self.exponent + other.exponent)

    __rmul__ = __mul__

    def __truediv__(self, other: "ScaledReal | float") -> "ScaledReal":
        other = _as_scaled(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero ScaledReal")
        if self.sign == 0:
            return ScaledReal(0)
        return ScaledReal(self.sign * other.sign, self.mantissa / other.mantissa,
                          self.exponent - other.exponent)

    def __rtruediv__(self, other: float) -> "ScaledReal":
        return _as_scaled(other) / self

    def __neg__(self) -> "ScaledReal":
        return ScaledReal(-self.sign, self.mantissa, self.exponent)

    def __abs__(self) -> "ScaledReal":
        return ScaledReal(abs(self.sign), self.mantissa, self.exponent)

    def sqrt(self) -> "ScaledReal":
        if self.sign < 0:
            raise QDomainError("square root of a negative ScaledReal")
        if self.sign == 0:
            return self
        m, e = self.mantissa, self.exponent
        if e % 2:
            m, e = 2.0 * m, e - 1
        return ScaledReal(1, math.sqrt(m), e // 2)


def _as_scaled(x) -> ScaledReal:
    return x if isinstance(x, ScaledReal) else ScaledReal.from_real(x)


# ---------------------------------------------------------------------------
# q-shifted factorials


def log1p_complex(z):
    """Accurate ``log(1 + z)`` for complex arrays.

    numpy's complex ``log1p`` loses relative accuracy for tiny ``|z|``.
    """
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    small = np.abs(z) < 0.5
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        near = 0.5 * np.log1p(x * (2.0 + x) + y * y) + 1j * np.arctan2(y, 1.0 + x)
        far = np.log(1.0 + z)
    return np.where(small, near, far)


def _check_base(base: float, n) -> None:
    if n == math.inf and not (0.0 < base < 1.0):
        raise QDomainError(f"infinite product needs 0 < base < 1, got base={base!r}")


def _log_factor_sum(a: np.ndarray, powers: np.ndarray):
    """Sum of log(1 - a*power) over the given powers; flags exact zeros."""
    out = np.zeros(a.shape, dtype=complex)
    zero = np.zeros(a.shape, dtype=bool)
    if powers.size == 0 or a.size == 0:
        return out, zero
    flat = a.reshape(-1)
    acc = np.zeros(flat.shape, dtype=complex)
    zacc = np.zeros(flat.shape, dtype=bool)
    step = max(1, _CHUNK_ELEMENTS // max(1, flat.size))
    for start in range(0, powers.size, step):
        w = flat[:, None] * powers[None, start:start + step]
        f = 1.0 - w
        hit = f == 0
        zacc |= hit.any(axis=1)
        terms = log1p_complex(-w)
        terms[hit] = 0.0
        acc += terms.sum(axis=1)
    return acc.reshape(a.shape), zacc.reshape(a.shape)


def _tail_terms(r: float, base: float, tol: float) -> int:
    """Terms M so that the log-series tail past M is below ``tol``."""
    if r == 0.0:
        return 0
    m = 1
    while True:
        bound = r ** (m + 1) / ((m + 1) * (1.0 - base) * (1.0 - r))
        if bound <= tol:
            return m
        m += 1


def log_qpochhammer(a, base: float, n, ctx: QContext):
    """Complex logarithm of ``(a; base)_n``, elementwise over ``a``.

    The real part is the log-magnitude (``-inf`` on exact zeros) and the
    imaginary part is the accumulated phase. For ``n = inf`` the factors are
    multiplied out explicitly until ``|a base^k| <= 1/2``; the remainder is
    summed from ``log (z;b)_inf = -sum_m z^m / (m (1 - b^m))`` with a
    geometric bound on the neglected terms below ``ctx.tol``.
    """
    _check_base(base, n)
    arr = np.asarray(a, dtype=complex)
    if n != math.inf:
        n = int(n)
        if n < 0:
            raise QDomainError(f"negative product length {n}")
        powers = base ** np.arange(n, dtype=float) if n else np.zeros(0)
        out, zero = _log_factor_sum(arr, powers)
    else:
        amax = float(np.max(np.abs(arr))) if arr.size else 0.0
        if amax == 0.0:
            return np.zeros(arr.shape, dtype=complex) if arr.ndim else complex(0.0)
        if amax > _TAIL_RADIUS:
            k_explicit = int(math.ceil(math.log(_TAIL_RADIUS / amax) / math.log(base)))
        else:
            k_explicit = 0
        if k_explicit > ctx.max_terms:
            raise ConvergenceError(
                f"infinite product needs {k_explicit} explicit factors, more than "
                f"max_terms={ctx.max_terms}; raise max_terms (see QContext.for_q)",
                last_term=amax * base ** ctx.max_terms)
        powers = base ** np.arange(k_explicit, dtype=float)
        out, zero = _log_factor_sum(arr, powers)
        z = arr * base ** k_explicit
        m = _tail_terms(float(np.max(np.abs(z))), base, ctx.tol)
        if m:
            acc = np.zeros(arr.shape, dtype=complex)
            for j in range(m, 0, -1):
                acc = acc * z + 1.0 / (j * (1.0 - base ** j))
            out = out - z * acc
    out = np.where(zero, complex(-math.inf, 0.0), out)
    return out if np.ndim(a) else complex(out)


def qpochhammer(a, base: float, n=math.inf, ctx: QContext | None = None):
    """q-shifted factorial ``(a; base)_n = prod_{k<n} (1 - a base^k)``.

    Parameters
    ----------
    a : complex or array_like
    base : float
    n : int or ``math.inf``
    ctx : QContext
        Supplies ``tol`` and ``max_terms`` for the infinite case.

    Examples
    --------
    >>> ctx = QContext(0.5)
    >>> qpochhammer(0.7, 0.5, 0, ctx)
    (1+0j)
    >>> qpochhammer(1.0, 0.5, 3, ctx)
    0j
    """
    ctx = ctx or QContext(base if 0 < base < 1 else 0.5)
    _check_base(base, n)
    if n != math.inf:
        n = int(n)
        if n < 0:
            raise QDomainError(f"negative product length {n}")
        arr = np.asarray(a, dtype=complex)
        powers = base ** np.arange(n, dtype=float)
        val = np.prod(1.0 - arr[..., None] * powers, axis=-1)
        return val if np.ndim(a) else complex(val)
    lg = log_qpochhammer(a, base, n, ctx)
    with np.errstate(over="ignore"):
        val = np.exp(lg)
    return val if np.ndim(a) else complex(val)


def qpochhammer_scaled(a: complex, base: float, n, ctx: QContext):
    """Magnitude of ``(a; base)_n`` as a :class:`ScaledReal` and its phase."""
    lg = log_qpochhammer(complex(a), base, n, ctx)
    if lg.real == -math.inf:
        return ScaledReal.zero(), 0.0
    return ScaledReal.from_log(lg.real), float(math.remainder(lg.imag, 2 * math.pi))


def log_multi_qpochhammer(as_: Sequence, base: float, n, ctx: QContext):
    """Complex log of ``(a_1, ..., a_m; base)_n``; entries may be arrays."""
    total = 0.0 + 0.0j
    for a in as_:
        total = total + log_qpochhammer(a, base, n, ctx)
    return total


def multi_qpochhammer(as_: Sequence, base: float, n=math.inf, ctx: QContext | None = None):
    """Product of q-shifted factorials over the list ``as_``."""
    result = 1.0 + 0.0j
    for a in as_:
        result = result * qpochhammer(a, base, n, ctx)
    return result


def real_part_checked(value, tol: float, what: str = "value", scale=0.0, atol=0.0):
    """Drop the imaginary part after checking it is rounding noise.

    The residue may reach ``1e3 * tol * max(|value|, scale) + atol``. Pass
    the amplitude of the underlying function as ``scale`` so values near its
    zeros are not held to a relative standard they cannot meet, and a known
    rounding bound as ``atol``.
    """
    v = np.asarray(value)
    if np.iscomplexobj(v):
        bad = np.abs(v.imag) > 1e3 * tol * np.maximum(np.abs(v), scale) + atol + 1e-300
        if np.any(bad):
            worst = float(np.max(np.abs(v.imag)))
            raise ConvergenceError(f"{what} has imaginary residue {worst:.3e}", last_term=worst)
        v = v.real
    return v if np.ndim(value) else float(v)


# ---------------------------------------------------------------------------
# basic hypergeometric series


@dataclass(frozen=True)
class HyperSeriesSpec:
    """Parameters of a basic hypergeometric series ``r phi s``.

    The n-th term is ``(a_1..a_r; b)_n / (b, c_1..c_s; b)_n``
    ``* ((-1)^n b^(n(n-1)/2))^(1+s-r) * t^n`` where ``b`` is ``base``.
    Parameters and ``argument`` may be numpy arrays; they broadcast.
    """

    numerators: tuple
    denominators: tuple
    base: float
    argument: object

    def __post_init__(self):
        object.__setattr__(self, "numerators", tuple(self.numerators))
        object.__setattr__(self, "denominators", tuple(self.denominators))


class SeriesInfo(NamedTuple):
    error_estimate: float
    terms: int
    abs_sum: object = None


def basic_hyper(spec: HyperSeriesSpec, ctx: QContext, full_output: bool = False):
    """Sum a basic hypergeometric series.

    Summation stops once three consecutive terms are below
    ``ctx.tol`` times the largest partial sum seen so far (elementwise).

    Returns
    -------
    value : complex or ndarray
    info : SeriesInfo
        Only when ``full_output`` is true. ``error_estimate`` is the sum of
        the magnitudes of the last three terms; ``abs_sum`` holds the
        elementwise sum of all term magnitudes (the cancellation scale).

    Raises
    ------
    ConvergenceError
        If ``ctx.max_terms`` terms do not meet the stopping rule.
    QDomainError
        If a denominator factor vanishes before the series terminates.
    """
    base = float(spec.base)
    if not (0.0 < base < 1.0):
        raise QDomainError(f"series base must lie in (0, 1), got {base!r}")
    nums = [np.asarray(a, dtype=complex) for a in spec.numerators]
    dens = [np.asarray(c, dtype=complex) for c in spec.denominators]
    t = np.asarray(spec.argument, dtype=complex)
    shape = np.broadcast_shapes(t.shape, *[a.shape for a in nums], *[c.shape for c in dens])
    extra = 1 + len(dens) - len(nums)

    term = np.ones(shape, dtype=complex)
    total = term.copy()
    peak = np.abs(total)
    quiet = np.zeros(shape, dtype=int)
    recent = [np.zeros(shape), np.zeros(shape), np.abs(term)]
    abs_sum = np.abs(term)
    bn = 1.0
    for n in range(ctx.max_terms):
        num = np.ones(shape, dtype=complex)
        for a in nums:
            num = num * (1.0 - a * bn)
        den = np.full(shape, 1.0 - bn * base, dtype=complex)
        for c in dens:
            den = den * (1.0 - c * bn)
        live = term != 0
        if np.any(live & (den == 0)):
            raise QDomainError("a denominator q-shifted factorial vanishes in the series")
        ratio = t * num / np.where(den == 0, 1.0, den)
        if extra:
            ratio = ratio * (-bn) ** extra
        term = term * ratio
        total = total + term
        mag = np.abs(term)
        abs_sum = abs_sum + mag
        peak = np.maximum(peak, np.abs(total))
        recent = recent[1:] + [mag]
        small = mag <= ctx.tol * peak
        quiet = np.where(small, quiet + 1, 0)
        if np.all(quiet >= 3):
            value = total if shape else complex(total)
            if full_output:
                err = float(np.max(recent[0] + recent[1] + recent[2]))
                return value, SeriesInfo(err, n + 2, abs_sum if shape else float(abs_sum))
            return value
        bn *= base
    raise ConvergenceError(
        f"basic hypergeometric series did not converge in {ctx.max_terms} terms",
        last_term=float(np.max(np.abs(term))))


# ---------------------------------------------------------------------------
# q-gamma


def q_gamma(z: float, ctx: QContext) -> float:
    """q-gamma function ``(1-q)^(1-z) (q;q)_inf / (q^z;q)_inf``.

    Evaluated in log space so that ``q`` close to 1 does not underflow.
    """
    z = float(z)
    if z <= 0 and z == math.floor(z):
        raise QDomainError(f"q-gamma has a pole at z = {z:g}")
    q = ctx.q
    lg = ((1.0 - z) * math.log1p(-q) + log_qpochhammer(q, q, math.inf, ctx)
          - log_qpochhammer(q ** z, q, math.inf, ctx))
    return math.exp(lg.real) * math.cos(lg.imag)


# ---------------------------------------------------------------------------
# orthogonal polynomials


def q_hermite_table(n_max: int, x, ctx: QContext) -> np.ndarray:
    """``H_0 .. H_{n_max}`` of the continuous q-Hermite family, stacked on axis 0.

    Uses ``H_{n+1} = 2x H_n - (1 - q^n) H_{n-1}``.
    """
    if n_max < 0:
        raise QDomainError("polynomial degree must be nonnegative")
    x = np.asarray(x)
    dtype = complex if np.iscomplexobj(x) else float
    out = np.empty((n_max + 1,) + x.shape, dtype=dtype)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 2.0 * x
    qn = ctx.q
    for n in range(1, n_max):
        out[n + 1] = 2.0 * x * out[n] - (1.0 - qn) * out[n - 1]
        qn *= ctx.q
    return out


def q_hermite(n: int, x, ctx: QContext):
    """Continuous q-Hermite polynomial ``H_n(x|q)``."""
    h = q_hermite_table(n, x, ctx)[n]
    return h if np.ndim(x) else h[()]


def q_ultraspherical(m: int, x, beta: float, ctx: QContext):
    """Continuous q-ultraspherical (Rogers) polynomial ``C_m(x; beta|q)``.

    Three-term recurrence
    ``2x(1 - beta q^m) C_m = (1 - q^(m+1)) C_(m+1) + (1 - beta^2 q^(m-1)) C_(m-1)``.
    """
    if m < 0:
        raise QDomainError("polynomial degree must be nonnegative")
    if not abs(beta) < 1:
        raise QDomainError("|beta| must be below 1")
    q = ctx.q
    x = np.asarray(x, dtype=float) if not np.iscomplexobj(x) else np.asarray(x)
    prev = np.ones_like(x)
    if m == 0:
        return prev if np.ndim(x) else prev[()]
    cur = 2.0 * x * (1.0 - beta) / (1.0 - q)
    for k in range(1, m):
        nxt = (2.0 * x * (1.0 - beta * q ** k) * cur
               - (1.0 - beta * beta * q ** (k - 1)) * prev) / (1.0 - q ** (k + 1))
        prev, cur = cur, nxt
    return cur if np.ndim(x) else cur[()]


# ---------------------------------------------------------------------------
# Jackson q-Bessel


def q_bessel2(nu: float, z, ctx: QContext):
    """Jackson q-Bessel function of the second kind ``J_nu^(2)(z; q)``.

    ``(q^(nu+1);q)_inf / (q;q)_inf * (z/2)^nu * 0phi1(-; q^(nu+1); q, -z^2 q^(nu+1)/4)``
    for ``z >= 0``. For negative ``nu`` the value at ``z = 0`` is ``inf``.
    """
    q = ctx.q
    zarr = np.asarray(z, dtype=float)
    if np.any(zarr < 0):
        raise QDomainError("q_bessel2 needs z >= 0")
    if nu < 0 and nu == math.floor(nu):
        raise QDomainError("negative integer order is not supported")
    b = q ** (nu + 1.0)
    series = basic_hyper(HyperSeriesSpec((), (b,), q, -zarr * zarr * b / 4.0), ctx)
    series = real_part_checked(series, ctx.tol, "q_bessel2 series")
    lg = log_qpochhammer(b, q, math.inf, ctx) - log_qpochhammer(q, q, math.inf, ctx)
    pref = math.exp(lg.real) * math.cos(lg.imag)
    with np.errstate(divide="ignore"):
        power = (zarr / 2.0) ** nu
    val = pref * power * series
    return val if np.ndim(z) else float(val)


def phi01_log_scaled(omega, offset: float, ctx: QContext):
    """``0phi1(-; q^offset; q, -q^offset w^2)`` for real ``w``, in scaled form.

    That is ``sum_k (-1)^k q^(k(k-1)) (q^offset w^2)^k / ((q;q)_k (q^offset;q)_k)``,
    returned as ``(mantissa, log_scale)`` with value ``mantissa * exp(log_scale)``.
    The terms are accumulated as logarithms, so arguments far beyond the
    double range of the value itself are fine. For large ``w`` the sum is
    as large as its largest term (the function is entire of order zero), so
    the alternating sum loses only a few digits near its zeros.
    """
    q = ctx.q
    lnq = math.log(q)
    w = np.abs(np.asarray(omega, dtype=float))
    with np.errstate(divide="ignore"):
        lw = offset * lnq + 2.0 * np.log(w)
    logs = [np.zeros(w.shape)]
    cur = logs[0]
    peak = cur
    quiet = 0
    for k in range(1, ctx.max_terms):
        cur = cur + 2.0 * (k - 1) * lnq + lw - math.log1p(-q ** k) - math.log1p(-q ** (offset + k - 1))
        logs.append(cur)
        peak = np.maximum(peak, cur)
        # the term ratio is below one once 2(k-1) ln q + lw < 0 everywhere
        past_peak = np.all((2.0 * k * lnq + lw < 0) | ~np.isfinite(lw))
        if past_peak and np.all(cur < peak + math.log(ctx.tol) - 2.0):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
    stack = np.array(logs)
    scale = stack.max(axis=0)
    signs = np.where(np.arange(len(logs)) % 2 == 0, 1.0, -1.0).reshape((-1,) + (1,) * w.ndim)
    with np.errstate(invalid="ignore"):
        mant = np.sum(signs * np.exp(stack - scale), axis=0)
    return mant, scale
