"""Zeros of the basic sine and cosine at the boundary point eta.

``eta = (q^(1/4) + q^(-1/4))/2``. The positive zeros ``omega_n`` of
``S(eta; .)`` form the spectrum of the q-Fourier series; the zeros
``varpi_n`` of ``C(eta; .)`` interlace with them.

Zeros are located on the scaled entire functions
``s(w) = (-q w^2; q^2)_inf S(eta; w)`` and ``c(w) = (-q w^2; q^2)_inf C(eta; w)``,
whose Taylor coefficients are explicit, so no overflowing prefactor is ever
formed. Root refinement runs on ``s`` and ``c`` divided by a smooth positive
envelope, which keeps the bracketed function of order one.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import __version__
from .errors import QDomainError, StructuralError
from .qcore import QContext, ScaledReal, log_qpochhammer, phi01_log_scaled

__all__ = [
    "ZeroKind",
    "ZeroTable",
    "Eta",
    "eta_value",
    "eval_s_scaled",
    "eval_c_scaled",
    "scaled_envelope",
    "find_sine_zeros",
    "find_cosine_zeros",
    "find_zeros",
    "check_interlacing",
    "InterlacingReport",
    "value_at_sine_zero",
    "value_at_cosine_zero",
    "product_form_S",
    "product_form_C",
    "zero_product_relation",
    "zero_count_annuli",
    "AnnulusReport",
    "derivative_at_zeros",
]

ZERO_TOL = 1e-10
_SCAN_POINTS = 4096
_SCAN_EXPONENT = 3.75
_SCAN_INDEX_LIMIT = 4
_BISECT_CAP = 200
_SECANT_CAP = 50
_BISECT_WIDTH = 1e-13
_SUBDIVISIONS = 8


class ZeroKind(enum.Enum):
    SINE = "sine"
    COSINE = "cosine"


@dataclass(frozen=True)
class Eta:
    """The boundary point ``x = (q^(1/4) + q^(-1/4))/2``."""

    value: float

    @classmethod
    def for_q(cls, q: float) -> "Eta":
        return cls(eta_value(q))


def eta_value(q: float) -> float:
    return 0.5 * (q ** 0.25 + q ** -0.25)


# ---------------------------------------------------------------------------
# scaled functions


def _offset(kind: ZeroKind) -> float:
    return 1.5 if kind is ZeroKind.SINE else 0.5


def _envelope_constant(ctx: QContext) -> float:
    q = ctx.q
    lg = log_qpochhammer(-math.sqrt(q), q, math.inf, ctx) - 2.0 * log_qpochhammer(q, q * q, math.inf, ctx)
    return math.exp(lg.real)


def scaled_envelope(omega, kind: ZeroKind, ctx: QContext, log: bool = False):
    """Smooth positive envelope of ``s`` or ``c`` on the real line.

    For the sine this is ``K |w| (-q^(3/2) w^2; q^2)_inf`` and for the cosine
    ``K (-q^(1/2) w^2; q^2)_inf`` with ``K = (-q^(1/2);q)_inf / (q;q^2)_inf^2``:
    the large-``w`` leading terms with the oscillating product
    ``(q^(3/2) w^2; q^2)_inf`` (resp. ``(q^(1/2) w^2; q^2)_inf``) replaced by
    its modulus envelope.
    """
    q = ctx.q
    w = np.asarray(omega, dtype=float)
    off = _offset(kind)
    lg = np.log(_envelope_constant(ctx)) + log_qpochhammer(-q ** off * w * w, q * q, math.inf, ctx).real
    if kind is ZeroKind.SINE:
        with np.errstate(divide="ignore"):
            lg = lg + np.log(np.abs(w))
    if log:
        return lg
    return np.exp(lg)


def _scaled_value(omega, kind: ZeroKind, ctx: QContext):
    mant, scale = phi01_log_scaled(omega, _offset(kind), ctx)
    w = np.asarray(omega, dtype=float)
    if kind is ZeroKind.SINE:
        mant = mant * w / (1.0 - math.sqrt(ctx.q))
    return mant, scale


def _normalized(omega, kind: ZeroKind, ctx: QContext):
    """``s/envelope`` (or ``c/envelope``); order one, same zeros."""
    w = np.asarray(omega, dtype=float)
    mant, scale = phi01_log_scaled(w, _offset(kind), ctx)
    env = scaled_envelope(w, kind, ctx, log=True)
    if kind is ZeroKind.SINE:
        # w / |w| with the w -> 0 limit 1 (s/w is even and nonzero at 0)
        sgn = np.where(w < 0, -1.0, 1.0)
        env = env - np.log(np.where(w == 0, 1.0, np.abs(w)))
        val = sgn * mant * np.exp(scale - env) / (1.0 - math.sqrt(ctx.q))
        return np.where(w == 0, 0.0, val)
    return mant * np.exp(scale - env)


def eval_s_scaled(omega, ctx: QContext):
    """``(-q w^2; q^2)_inf S(eta; w)`` as a float (``inf`` past the double range)."""
    mant, scale = _scaled_value(omega, ZeroKind.SINE, ctx)
    with np.errstate(over="ignore"):
        val = mant * np.exp(scale)
    return val if np.ndim(omega) else float(val)


def eval_c_scaled(omega, ctx: QContext):
    """``(-q w^2; q^2)_inf C(eta; w)`` as a float (``inf`` past the double range)."""
    mant, scale = _scaled_value(omega, ZeroKind.COSINE, ctx)
    with np.errstate(over="ignore"):
        val = mant * np.exp(scale)
    return val if np.ndim(omega) else float(val)


# ---------------------------------------------------------------------------
# zero tables


@dataclass(frozen=True)
class ZeroTable:
    """Ordered positive zeros of ``S(eta; .)`` or ``C(eta; .)``.

    ``residuals`` are ``|s(w_n)|`` (or ``|c|``) divided by
    :func:`scaled_envelope`. For sine tables the zero ``omega_0 = 0`` is
    implicit and not stored.
    """

    kind: ZeroKind
    q: float
    zeros: tuple
    residuals: tuple
    brackets: tuple
    tol_used: float = ZERO_TOL
    representation: str = "eta-taylor"
    version: str = __version__
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ZeroKind(self.kind))
        object.__setattr__(self, "zeros", tuple(float(z) for z in self.zeros))
        object.__setattr__(self, "residuals", tuple(float(r) for r in self.residuals))
        object.__setattr__(self, "brackets", tuple((float(a), float(b)) for a, b in self.brackets))
        if not (len(self.zeros) == len(self.residuals) == len(self.brackets)):
            raise StructuralError("zeros, residuals and brackets must have equal length")
        z = np.asarray(self.zeros)
        if z.size and (z[0] <= 0 or np.any(np.diff(z) <= 0)):
            raise StructuralError("zeros must be positive and strictly increasing")
        if any(r > self.tol_used for r in self.residuals):
            raise StructuralError("a zero residual exceeds the table tolerance")

    def __len__(self) -> int:
        return len(self.zeros)

    def omega(self, n: int) -> float:
        """``omega_n`` for ``n >= 1``; for sine tables also ``n = 0`` and ``-n``."""
        if n == 0 and self.kind is ZeroKind.SINE:
            return 0.0
        if n < 0 and self.kind is ZeroKind.SINE:
            return -self.omega(-n)
        if not 1 <= n <= len(self.zeros):
            raise IndexError(f"zero index {n} outside 1..{len(self.zeros)}")
        return self.zeros[n - 1]

    def truncated(self, n: int) -> "ZeroTable":
        if n > len(self):
            raise StructuralError(f"table holds {len(self)} zeros, {n} requested")
        return ZeroTable(self.kind, self.q, self.zeros[:n], self.residuals[:n],
                         self.brackets[:n], self.tol_used, self.representation, self.version)

    # serialization
    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "omega", "residual", "bracket_lo", "bracket_hi"])
        for i, (z, r, (lo, hi)) in enumerate(zip(self.zeros, self.residuals, self.brackets), 1):
            w.writerow([i, _fmt(z), _fmt(r), _fmt(lo), _fmt(hi)])
        return buf.getvalue()

    def sidecar(self) -> dict:
        return {"kind": self.kind.value, "q": _fmt(self.q), "tol": _fmt(self.tol_used),
                "representation": self.representation, "version": self.version}

    def digest(self) -> str:
        """SHA-256 over the CSV body and sidecar; used as a spectrum reference."""
        h = hashlib.sha256()
        h.update(self.csv_text().encode())
        h.update(json.dumps(self.sidecar(), sort_keys=True).encode())
        return h.hexdigest()

    def save(self, path) -> tuple[Path, Path]:
        path = Path(path)
        side = sidecar_path(path)
        path.write_text(self.csv_text(), encoding="utf-8", newline="\n")
        side.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8", newline="\n")
        return path, side

    @classmethod
    def load(cls, path) -> "ZeroTable":
        path = Path(path)
        side = sidecar_path(path)
        if not path.exists() or not side.exists():
            raise StructuralError(f"zero table {path} or its sidecar is missing")
        meta = json.loads(side.read_text(encoding="utf-8"))
        zeros, res, br = [], [], []
        with path.open(newline="") as fh:
            for row in csv.DictReader(fh):
                zeros.append(float(row["omega"]))
                res.append(float(row["residual"]))
                br.append((float(row["bracket_lo"]), float(row["bracket_hi"])))
        return cls(ZeroKind(meta["kind"]), float(meta["q"]), zeros, res, br,
                   float(meta["tol"]), meta.get("representation", "eta-taylor"),
                   meta.get("version", "unknown"))


def sidecar_path(path: Path) -> Path:
    return Path(path).with_suffix(".json")


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


# ---------------------------------------------------------------------------
# root finding


def _refine(g, lo: float, hi: float, glo: float, ghi: float) -> tuple[float, float, float]:
    """Bisection to relative width 1e-13, then a bracketed secant polish."""
    for _ in range(_BISECT_CAP):
        if hi - lo <= _BISECT_WIDTH * max(abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        gm = float(g(mid))
        if gm == 0.0:
            return mid, mid, mid
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi, ghi = mid, gm
    a, ga, b, gb = lo, glo, hi, ghi
    best = a if abs(ga) < abs(gb) else b
    for _ in range(_SECANT_CAP):
        if gb == ga:
            break
        x = b - gb * (b - a) / (gb - ga)
        if not lo <= x <= hi:
            break
        gx = float(g(x))
        a, ga, b, gb = b, gb, x, gx
        if abs(gx) <= abs(float(g(best))):
            best = x
        if gx == 0.0 or abs(b - a) <= 4 * np.finfo(float).eps * abs(b):
            break
    return best, lo, hi


def _sign_changes(g, lo: float, hi: float, pieces: int):
    xs = np.linspace(lo, hi, pieces + 1)
    gs = g(xs)
    idx = np.nonzero(np.signbit(gs[:-1]) != np.signbit(gs[1:]))[0]
    return [(xs[i], xs[i + 1], gs[i], gs[i + 1]) for i in idx]


def _chained_scan(g, start: float, stop: float, q: float, widenings: int = 8):
    """First sign change above ``start``, widening the window by ``1/q`` up to 8 times."""
    lo = start
    for _ in range(widenings + 1):
        found = _sign_changes(g, lo, stop, 16 * _SUBDIVISIONS)
        if found:
            return found[0]
        lo, stop = stop, stop / q
    return None


def find_zeros(kind: ZeroKind, n_max: int, ctx: QContext) -> ZeroTable:
    """First ``n_max`` positive zeros of ``S(eta; .)`` or ``C(eta; .)``.

    Indices below 4 are seeded from a dense scan of ``(0, q^-3.75]``; higher
    indices from the brackets ``[q^(1-n), q^-n]`` (sine) or
    ``[q^(5/4-n), q^(1/4-n)]`` (cosine), which straddle the asymptotic zero
    positions ``q^(1/4-n)`` and ``q^(3/4-n)``. A bracket without a sign change
    is split into 8 pieces and rescanned. If that still fails, or the
    bracket overlaps the previous zero (large ``q``), the search marches
    upward from the previous zero; if nothing is found a
    :class:`StructuralError` is raised.
    """
    kind = ZeroKind(kind)
    if n_max < 1:
        raise QDomainError("n_max must be at least 1")
    q = ctx.q
    if (n_max + 1) * math.log(1.0 / q) > 700.0:
        raise QDomainError(f"n_max={n_max} puts the zeros beyond the double range at q={q}")

    def g(w):
        return _normalized(w, kind, ctx)

    seeds = []
    n_scan = min(n_max, _SCAN_INDEX_LIMIT - 1)
    top = q ** -_SCAN_EXPONENT
    xs = np.linspace(0.0, top, _SCAN_POINTS + 1)[1:]
    gs = g(xs)
    flips = np.nonzero(np.signbit(gs[:-1]) != np.signbit(gs[1:]))[0]
    if len(flips) < n_scan:
        raise StructuralError(
            f"dense scan found {len(flips)} {kind.value} zeros below {top:.6g}, expected {n_scan}")
    for i in flips[:n_scan]:
        seeds.append((xs[i], xs[i + 1], gs[i], gs[i + 1]))

    shift = 0.0 if kind is ZeroKind.SINE else 0.25
    for n in range(n_scan + 1, n_max + 1):
        lo = q ** (1.0 + shift - n)
        hi = q ** (shift - n)
        prev = seeds[-1][1]
        piece = None
        gap_clear = lo >= prev and not _sign_changes(g, prev, lo, 16 * _SUBDIVISIONS)
        if gap_clear:
            found = _sign_changes(g, lo, hi, _SUBDIVISIONS)
            if len(found) == 1:
                piece = found[0]
        if piece is None:
            # the zero sits outside its asymptotic bracket (large q, small n):
            # march upward from the previous zero instead
            piece = _chained_scan(g, prev, max(hi, prev / q), q)
        if piece is None:
            raise StructuralError(
                f"no isolated sign change of the {kind.value} function in [{lo:.6g}, {hi:.6g}] (zero {n})")
        seeds.append(piece)

    zeros, residuals, brackets = [], [], []
    for lo, hi, glo, ghi in seeds:
        z, blo, bhi = _refine(lambda w: float(g(w)), float(lo), float(hi), float(glo), float(ghi))
        zeros.append(z)
        residuals.append(abs(float(g(z))))
        brackets.append((float(lo), float(hi)))
    if any(b <= a for a, b in zip(zeros, zeros[1:])):
        raise StructuralError(f"{kind.value} zeros are not strictly increasing: {zeros}")
    return ZeroTable(kind, q, zeros, residuals, brackets, ZERO_TOL)


def find_sine_zeros(n_max: int, ctx: QContext) -> ZeroTable:
    """Positive zeros ``omega_1 < omega_2 < ...`` of ``S(eta; .)``."""
    return find_zeros(ZeroKind.SINE, n_max, ctx)


def find_cosine_zeros(n_max: int, ctx: QContext) -> ZeroTable:
    """Positive zeros ``varpi_1 < varpi_2 < ...`` of ``C(eta; .)``."""
    return find_zeros(ZeroKind.COSINE, n_max, ctx)


# ---------------------------------------------------------------------------
# structural checks


class InterlacingReport(NamedTuple):
    ok: bool
    first_violation: int | None
    message: str


def check_interlacing(sine: ZeroTable, cosine: ZeroTable) -> InterlacingReport:
    """Check ``0 < varpi_1 < omega_1 < varpi_2 < omega_2 < ...``.

    ``first_violation`` is the index ``n`` of the first pair
    ``(varpi_n, omega_n)`` where the ordering breaks.
    """
    if sine.kind is not ZeroKind.SINE or cosine.kind is not ZeroKind.COSINE:
        raise QDomainError("expected a sine table and a cosine table")
    if sine.q != cosine.q:
        raise QDomainError(f"tables have different q ({sine.q} vs {cosine.q})")
    merged = []
    for n in range(max(len(sine), len(cosine))):
        if n < len(cosine):
            merged.append((n + 1, cosine.zeros[n]))
        if n < len(sine):
            merged.append((n + 1, sine.zeros[n]))
        if n >= len(cosine) or n >= len(sine):
            break
    prev = 0.0
    for idx, value in merged:
        if not value > prev:
            return InterlacingReport(False, idx, f"ordering breaks at index {idx}: {value!r} <= {prev!r}")
        prev = value
    return InterlacingReport(True, None, "interlaced")


def _ratio_sqrt(omega: float, ctx: QContext) -> ScaledReal:
    """``sqrt((-w^2; q^2)_inf / (-q w^2; q^2)_inf)`` in scaled form."""
    q = ctx.q
    w2 = omega * omega
    lg = log_qpochhammer(-w2, q * q, math.inf, ctx) - log_qpochhammer(-q * w2, q * q, math.inf, ctx)
    return ScaledReal.from_log(0.5 * lg.real)


def value_at_sine_zero(n: int, table: ZeroTable, ctx: QContext) -> float:
    """Closed form of ``C(eta; omega_n)``: ``(-1)^n sqrt(ratio)``."""
    if table.kind is not ZeroKind.SINE:
        raise QDomainError("value_at_sine_zero needs a sine table")
    w = table.omega(n)
    sign = -1 if n % 2 else 1
    return (_ratio_sqrt(w, ctx) * sign).to_real()


def value_at_cosine_zero(n: int, table: ZeroTable, ctx: QContext) -> float:
    """Closed form of ``S(eta; varpi_n)``: ``(-1)^(n-1) sqrt(ratio)``.

    The magnitude follows from ``C^2 + S^2`` at ``eta``; the sign is the one
    observed by direct evaluation (``S(eta; .)`` is positive until its first
    zero ``omega_1 > varpi_1``).
    """
    if table.kind is not ZeroKind.COSINE:
        raise QDomainError("value_at_cosine_zero needs a cosine table")
    w = table.omega(n)
    sign = 1 if n % 2 else -1
    return (_ratio_sqrt(w, ctx) * sign).to_real()


def _tail_estimate(omega: float, next_zero_sq: float, ratio: float) -> float:
    return omega * omega / next_zero_sq / (1.0 - ratio)


def product_form_S(omega: float, sine_table: ZeroTable, N: int, ctx: QContext,
                   full_output: bool = False):
    """Truncated product ``w / ((1 - q^(1/2)) (-q w^2;q^2)_inf) prod_{n<=N} (1 - w^2/omega_n^2)``.

    With ``full_output`` also returns a relative truncation estimate
    ``w^2 / omega_{N+1}^2 / (1 - q^2)`` using ``omega_{N+1} ~ q^(1/4-N-1)``.
    """
    if sine_table.kind is not ZeroKind.SINE:
        raise QDomainError("product_form_S needs a sine table")
    if N > len(sine_table):
        raise StructuralError(f"table holds {len(sine_table)} zeros, N={N} requested")
    q = ctx.q
    z = np.asarray(sine_table.zeros[:N])
    prod = float(np.prod(1.0 - omega * omega / (z * z)))
    lg = log_qpochhammer(-q * omega * omega, q * q, math.inf, ctx).real
    val = omega / (1.0 - math.sqrt(q)) * math.exp(-lg) * prod
    if full_output:
        return val, _tail_estimate(omega, q ** (0.5 - 2.0 * (N + 1)), q * q)
    return val


def product_form_C(omega: float, cosine_table: ZeroTable, N: int, ctx: QContext,
                   full_output: bool = False):
    """Truncated product ``prod_{n<=N} (1 - w^2/varpi_n^2) / (-q w^2;q^2)_inf``."""
    if cosine_table.kind is not ZeroKind.COSINE:
        raise QDomainError("product_form_C needs a cosine table")
    if N > len(cosine_table):
        raise StructuralError(f"table holds {len(cosine_table)} zeros, N={N} requested")
    q = ctx.q
    z = np.asarray(cosine_table.zeros[:N])
    prod = float(np.prod(1.0 - omega * omega / (z * z)))
    lg = log_qpochhammer(-q * omega * omega, q * q, math.inf, ctx).real
    val = math.exp(-lg) * prod
    if full_output:
        return val, _tail_estimate(omega, q ** (1.5 - 2.0 * (N + 1)), q * q)
    return val


def zero_product_relation(omega: float, other: ZeroTable, N: int, ctx: QContext):
    """Both sides of the product identity linking the two zero sets.

    Returns ``(product, closed_form)`` as :class:`ScaledReal`, where
    ``product = prod_{n<=N} (1 - w^2/z_n^2)`` runs over ``other``'s zeros and
    ``closed_form`` is its value when ``w`` is a zero of the other kind:

    * ``w = omega_m``, cosine table: ``(-1)^m sqrt((-w^2;q)_inf)``
    * ``w = varpi_m``, sine table: ``(-1)^(m-1) (1 - q^(1/2))/w sqrt((-w^2;q)_inf)``

    The sign is left positive in ``closed_form``; compare magnitudes and read
    the sign from ``product``.
    """
    if N > len(other):
        raise StructuralError(f"table holds {len(other)} zeros, N={N} requested")
    z = np.asarray(other.zeros[:N])
    prod = ScaledReal.from_real(1.0)
    for f in 1.0 - omega * omega / (z * z):
        prod = prod * float(f)
    lg = 0.5 * log_qpochhammer(-omega * omega, ctx.q, math.inf, ctx).real
    if other.kind is ZeroKind.SINE:
        lg += math.log((1.0 - math.sqrt(ctx.q)) / abs(omega))
    return prod, ScaledReal.from_log(lg)


class AnnulusReport(NamedTuple):
    radii: tuple
    counts: tuple
    increments: tuple
    density_ratio: float
    ok: bool


def zero_count_annuli(table: ZeroTable, n_range: Sequence[int], kappa: float = 1.0) -> AnnulusReport:
    """Count zeros ``+-omega_k`` of the even entire function ``(-q w^2;q^2) S(eta;w)/w``.

    ``counts[i]`` is the number of zeros inside ``|w| < kappa q^-n`` for the
    ``i``-th ``n`` of ``n_range``; increments between consecutive radii must
    stay below 4. ``density_ratio`` is ``count / (2 n)`` at the last radius.
    """
    if table.kind is not ZeroKind.SINE:
        raise QDomainError("zero_count_annuli needs a sine table")
    ns = list(n_range)
    if not ns:
        return AnnulusReport((), (), (), float("nan"), True)
    radii = tuple(kappa * table.q ** -n for n in ns)
    if not table.zeros or table.zeros[-1] < radii[-1]:
        raise StructuralError("table does not reach the outermost circle")
    z = np.asarray(table.zeros)
    counts = tuple(int(2 * np.count_nonzero(z < r)) for r in radii)
    incs = tuple(b - a for a, b in zip(counts, counts[1:]))
    ratio = counts[-1] / (2.0 * ns[-1])
    return AnnulusReport(radii, counts, incs, ratio, all(i < 4 for i in incs))


def derivative_at_zeros(table: ZeroTable, ctx: QContext) -> np.ndarray:
    """Centered differences of the scaled function at each zero.

    Step ``h = 1e-6 max(1, w)``. The positive factor relating the scaled and
    unscaled functions does not change signs, so these signs are those of
    the derivative of ``S(eta; .)`` (or ``C(eta; .)``).
    """
    kind = table.kind
    out = []
    for w in table.zeros:
        h = 1e-6 * max(1.0, w)
        gp = float(_normalized(w + h, kind, ctx))
        gm = float(_normalized(w - h, kind, ctx))
        out.append((gp - gm) / (2.0 * h))
    return np.asarray(out)
