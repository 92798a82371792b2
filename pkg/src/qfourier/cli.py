"""Command-line front end.

Usage::

    qfourier eval --q 0.5 --fn C --omega 0.4 --theta grid:0:pi:9
    qfourier zeros --q 0.5 --count 10 --kind sine --out sine.csv
    qfourier coeffs --q 0.5 --fn x --n-max 8 --out x.json
    qfourier synth --coeffs x.json --theta grid:0:pi:33
    qfourier verify --suite identities --q 0.5

Exit codes: 0 success, 1 a verification check failed, 2 invalid input,
3 convergence failure, 4 structural failure (missing cache, bad table).
Numbers are written with 17 significant digits so reruns are byte-identical.
"""

from __future__ import annotations

import configparser
import csv
import functools
import hashlib
import io
import json
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import __version__
from . import fourier as F
from . import zeros as Z
from .errors import ConvergenceError, QDomainError, QFourierError, StructuralError
from .qcore import QContext
from .qtrig import TrigRepresentation, eval_CS, eval_E
from .verify import SUITES, format_result, run_suite

__all__ = ["main", "RunConfig", "parse_grid", "cache_key", "EXIT_CODES"]

EXIT_CODES = {
    "verify_failed": 1,
    "domain": 2,
    "convergence": 3,
    "structural": 4,
}
CACHE_ENV = "QFOURIER_CACHE_DIR"


@dataclass(frozen=True)
class RunConfig:
    q: float
    tol: float
    max_terms: int | None
    quad_order: int
    cache_dir: Path
    output_format: str = "csv"

    def context(self) -> QContext:
        extra = {} if self.max_terms is None else {"max_terms": self.max_terms}
        return QContext.for_q(self.q, tol=self.tol, quad_order=self.quad_order, **extra)

    def writable_cache(self) -> Path:
        path = Path(self.cache_dir)
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise QDomainError(f"cannot create cache directory {path}: {exc}") from exc
        if not os.access(path, os.W_OK):
            raise QDomainError(f"cache directory {path} is not writable")
        return path


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(base) / "qfourier"


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


# ---------------------------------------------------------------------------
# argument parsing

_TOKEN = re.compile(
    r"(?P<sign>[+-]?)(?P<coef>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\*?(?P<pi>pi)?(?:/(?P<den>(?:\d+\.?\d*|\.\d+)))?"
)


def parse_scalar(text: str) -> float:
    """Number with an optional ``pi`` factor: ``1.5``, ``pi``, ``-pi/2``, ``2pi``, ``0.25*pi``."""
    s = text.strip().replace(" ", "").lower()
    m = _TOKEN.fullmatch(s)
    if not s or m is None or (m.group("coef") is None and m.group("pi") is None):
        raise QDomainError(f"cannot parse number {text!r}")
    value = float(m.group("coef")) if m.group("coef") is not None else 1.0
    if m.group("pi"):
        value *= math.pi
    if m.group("den") is not None:
        den = float(m.group("den"))
        if den == 0:
            raise QDomainError(f"division by zero in {text!r}")
        value /= den
    return -value if m.group("sign") == "-" else value


def parse_grid(text: str) -> np.ndarray:
    """``grid:start:end:count`` (endpoints included) or a single value."""
    if not text.startswith("grid:"):
        return np.array([parse_scalar(text)])
    parts = text.split(":")
    if len(parts) != 4:
        raise QDomainError(f"grid spec must be grid:start:end:count, got {text!r}")
    start, end = parse_scalar(parts[1]), parse_scalar(parts[2])
    try:
        count = int(parts[3])
    except ValueError as exc:
        raise QDomainError(f"grid count must be an integer, got {parts[3]!r}") from exc
    if count < 1:
        raise QDomainError("grid count must be at least 1")
    return np.linspace(start, end, count)


def read_points(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Two columns ``theta, f`` separated by commas or whitespace; ``#`` starts a comment."""
    thetas, values = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [t for t in re.split(r"[,\s]+", line) if t]
        try:
            th, fv = parse_scalar(fields[0]), float(fields[1])
        except (QDomainError, ValueError, IndexError):
            if not thetas and lineno == 1:
                continue  # header row
            raise QDomainError(f"{path}:{lineno}: expected 'theta, f'")
        thetas.append(th)
        values.append(fv)
    return np.array(thetas), np.array(values)


def read_config(path: Path) -> dict:
    """Flat ``key = value`` file; ``-`` and ``_`` in keys are interchangeable."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string("[run]\n" + Path(path).read_text(encoding="utf-8"))
    except (OSError, configparser.Error) as exc:
        raise QDomainError(f"cannot read config {path}: {exc}") from exc
    return {k.replace("-", "_"): v for k, v in parser["run"].items()}


# ---------------------------------------------------------------------------
# cache


def cache_key(q: float, tol: float, kind: str, version: str = __version__) -> str:
    payload = json.dumps([_fmt(q), _fmt(tol), kind, version])
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _cache_path(cfg: RunConfig, kind: Z.ZeroKind) -> Path:
    return Path(cfg.cache_dir) / f"{kind.value}-{cache_key(cfg.q, cfg.tol, kind.value)}.csv"


def _cached_table(cfg: RunConfig, kind: Z.ZeroKind, count: int) -> Z.ZeroTable | None:
    path = _cache_path(cfg, kind)
    if not path.exists():
        return None
    table = Z.ZeroTable.load(path)
    if len(table) < count:
        return None
    return table.truncated(count)


def zero_table(cfg: RunConfig, kind: Z.ZeroKind, count: int, auto: bool = True) -> Z.ZeroTable:
    """Zero table from the cache, built and stored on a miss when ``auto``."""
    cached = _cached_table(cfg, kind, count)
    if cached is not None:
        return cached
    if not auto:
        raise StructuralError(
            f"no cached {kind.value} table with {count} zeros for q={cfg.q:g}; run 'qfourier zeros' first")
    table = Z.find_zeros(kind, count, cfg.context())
    cfg.writable_cache()
    table.save(_cache_path(cfg, kind))
    return table


# ---------------------------------------------------------------------------
# output


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _guarded(fn):
    """Map library errors to exit codes."""
    codes = ((QDomainError, "domain"), (ConvergenceError, "convergence"), (StructuralError, "structural"))

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except QFourierError as exc:
            for cls, name in codes:
                if isinstance(exc, cls):
                    break
            else:
                name = "structural"
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CODES[name])
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CODES["domain"])

    return wrapper


def _run_options(fn):
    opts = [
        click.option("--q", "q", type=float, help="Base q in (0, 1)."),
        click.option("--tol", type=float, default=1e-14, show_default=True, help="Truncation tolerance."),
        click.option("--max-terms", type=int, default=None, help="Series/product term cap (default scales with q)."),
        click.option("--quad-order", type=int, default=64, show_default=True, help="Starting quadrature order."),
        click.option("--cache-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
                     help=f"Zero-table cache (default ${CACHE_ENV} or ~/.cache/qfourier)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _config(q, tol, max_terms, quad_order, cache_dir, output_format="csv", need_q=True) -> RunConfig:
    if q is None and need_q:
        raise QDomainError("--q is required")
    cfg = RunConfig(q=q, tol=tol, max_terms=max_terms, quad_order=quad_order,
                    cache_dir=Path(cache_dir) if cache_dir else default_cache_dir(),
                    output_format=output_format)
    if q is not None:
        cfg.context()  # validates q, tol and the term caps
    return cfg


_FORMAT = click.option("--format", "output_format", type=click.Choice(["csv", "json"]), default="csv",
                       show_default=True)


# ---------------------------------------------------------------------------
# commands


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="qfourier")
@click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="key=value file supplying defaults; explicit flags win.")
@click.pass_context
def main(ctx, config_path):
    """Basic trigonometric functions on a q-quadratic grid and their Fourier series."""
    if config_path is None:
        return
    try:
        values = read_config(config_path)
    except QDomainError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CODES["domain"])
    # keys may use the parameter name or the flag spelling (format, quad-order)
    known = {}
    for cmd in main.commands.values():
        for p in cmd.params:
            known[p.name] = p.name
            for opt in getattr(p, "opts", ()):
                known[opt.lstrip("-").replace("-", "_")] = p.name
    unknown = sorted(set(values) - set(known))
    if unknown:
        click.echo(f"error: unknown config keys: {', '.join(unknown)}", err=True)
        sys.exit(EXIT_CODES["domain"])
    defaults = {known[k]: v for k, v in values.items()}
    ctx.default_map = {name: dict(defaults) for name in main.commands}


@main.command("eval")
@_run_options
@_FORMAT
@click.option("--fn", "fn", type=click.Choice(["C", "S", "E"]), required=True)
@click.option("--omega", type=str, default=None, help="Frequency (pi token accepted).")
@click.option("--omega-classical", type=str, default=None,
              help="Classical frequency w_c; evaluates at omega = (1 - q) w_c / 2.")
@click.option("--theta", type=str, default=None, help="Angle or grid:start:end:count.")
@click.option("--x", "x", type=str, default=None, help="Point in [-1, 1] or grid:start:end:count.")
@click.option("--rep", type=click.Choice([r.value for r in TrigRepresentation]), default="auto",
              show_default=True)
@_guarded
def cmd_eval(q, tol, max_terms, quad_order, cache_dir, output_format, fn, omega, omega_classical,
             theta, x, rep):
    """Evaluate C, S or E at real grid points.

    Rows are ``theta, value, imag_residue``: the real part and the size of
    the imaginary part left by rounding. For E the columns are
    ``theta, real, imag``.
    """
    cfg = _config(q, tol, max_terms, quad_order, cache_dir, output_format)
    ctx = cfg.context()
    if (omega is None) == (omega_classical is None):
        raise QDomainError("give exactly one of --omega and --omega-classical")
    w = parse_scalar(omega) if omega is not None else (1.0 - cfg.q) * parse_scalar(omega_classical) / 2.0
    if (theta is None) == (x is None):
        raise QDomainError("give exactly one of --theta and --x")
    if x is not None:
        xs = parse_grid(x)
        if np.any(np.abs(xs) > 1.0):
            raise QDomainError("--x values must lie in [-1, 1]")
        th = np.arccos(xs)
    else:
        th = parse_grid(theta)
    u = np.exp(1j * th)
    representation = TrigRepresentation(rep)
    if fn == "E":
        vals = np.asarray(eval_E(u, 1j * w, representation, ctx))
        header = ["theta", "real", "imag"]
        rows = [[_fmt(t), _fmt(v.real), _fmt(v.imag)] for t, v in zip(th, vals)]
    else:
        C, S = eval_CS(u, w, representation, ctx)
        vals = np.asarray(C if fn == "C" else S)
        header = ["theta", "value", "imag_residue"]
        rows = [[_fmt(t), _fmt(v.real), _fmt(abs(v.imag))] for t, v in zip(th, vals)]
    if cfg.output_format == "json":
        doc = {"fn": fn, "omega": _fmt(w), "q": _fmt(cfg.q), "rep": rep,
               "rows": [dict(zip(header, r)) for r in rows], "version": __version__}
        _emit(_json_text(doc), None)
    else:
        _emit(_csv_text(header, rows), None)


@main.command("zeros")
@_run_options
@_FORMAT
@click.option("--count", type=click.IntRange(min=1), required=True)
@click.option("--kind", type=click.Choice([k.value for k in Z.ZeroKind]), required=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="CSV path; a JSON sidecar is written next to it. Prints to stdout when omitted.")
@_guarded
def cmd_zeros(q, tol, max_terms, quad_order, cache_dir, output_format, count, kind, out):
    """Locate the first COUNT positive zeros of S(eta; .) or C(eta; .)."""
    cfg = _config(q, tol, max_terms, quad_order, cache_dir, output_format)
    kind = Z.ZeroKind(kind)
    hit = _cached_table(cfg, kind, count)
    table = hit if hit is not None else zero_table(cfg, kind, count)
    click.echo(f"{'cache hit' if hit is not None else 'computed'}: {len(table)} {kind.value} zeros", err=True)
    other_kind = Z.ZeroKind.COSINE if kind is Z.ZeroKind.SINE else Z.ZeroKind.SINE
    other_path = _cache_path(cfg, other_kind)
    if other_path.exists():
        other = Z.ZeroTable.load(other_path)
        n = min(len(table), len(other))
        pair = (table, other) if kind is Z.ZeroKind.SINE else (other, table)
        report = Z.check_interlacing(pair[0].truncated(n), pair[1].truncated(n))
        if not report.ok:
            raise StructuralError(f"zeros do not interlace with the cached {other_kind.value} table: {report.message}")
        click.echo(f"interlacing with {n} cached {other_kind.value} zeros: ok", err=True)
    if out is not None:
        table.save(out)
    elif cfg.output_format == "json":
        doc = dict(table.sidecar())
        doc["zeros"] = [_fmt(z) for z in table.zeros]
        doc["residuals"] = [_fmt(r) for r in table.residuals]
        _emit(_json_text(doc), None)
    else:
        _emit(table.csv_text(), None)


@main.command("coeffs")
@_run_options
@click.option("--fn", "fn", type=str, default=None,
              help="Builtin: one, x, x2, sign, step, legendre:M, mode:C|S|E:N.")
@click.option("--points", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="File of (theta, f) pairs covering [0, pi], interpolated linearly.")
@click.option("--n-max", type=click.IntRange(min=0), required=True)
@click.option("--form", type=click.Choice([f.value for f in F.CoefficientForm]), default="real",
              show_default=True)
@click.option("--no-auto", is_flag=True, help="Fail instead of building a missing spectrum.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@_guarded
def cmd_coeffs(q, tol, max_terms, quad_order, cache_dir, fn, points, n_max, form, no_auto, out):
    """q-Fourier coefficients on the first N-MAX sine zeros, as JSON."""
    cfg = _config(q, tol, max_terms, quad_order, cache_dir)
    ctx = cfg.context()
    if (fn is None) == (points is None):
        raise QDomainError("give exactly one of --fn and --points")
    needed = n_max
    if fn is not None and fn.startswith("mode:"):
        try:
            needed = max(needed, abs(int(fn.split(":")[-1])))
        except ValueError as exc:
            raise QDomainError(f"bad mode index in {fn!r}") from exc
    table = zero_table(cfg, Z.ZeroKind.SINE, max(needed, 1), auto=not no_auto)
    if fn is not None:
        handle = F.builtin_function(fn, ctx, table)
    else:
        th, fv = read_points(points)
        handle = F.tabulated_function(th, fv, f"points:{Path(points).name}")
    coeffs = F.coefficients(handle, F.CoefficientForm(form), n_max, table.truncated(max(n_max, 1)), ctx)
    _emit(coeffs.to_json(), out)


@main.command("synth")
@_run_options
@click.option("--coeffs", "coeffs_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--theta", type=str, default="grid:0:pi:65", show_default=True)
@click.option("--n", "n_terms", type=click.IntRange(min=0), default=None, help="Truncation (default: all).")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@_guarded
def cmd_synth(q, tol, max_terms, quad_order, cache_dir, coeffs_path, theta, n_terms, out):
    """Partial sum f_N(cos theta) from a coefficient file, as CSV rows theta, value, imag_residue."""
    coeffs = F.FourierCoefficients.load(coeffs_path)
    if q is not None and _fmt(q) != _fmt(coeffs.q):
        raise QDomainError(f"--q {q} does not match the coefficient file (q={coeffs.q})")
    cfg = _config(coeffs.q, tol, max_terms, quad_order, cache_dir)
    th = parse_grid(theta)
    vals = np.asarray(F.synthesize(coeffs, th, n_terms, cfg.context()), dtype=complex)
    rows = [[_fmt(t), _fmt(v.real), _fmt(abs(v.imag))] for t, v in zip(th, vals)]
    _emit(_csv_text(["theta", "value", "imag_residue"], rows), out)


@main.command("verify")
@_run_options
@_FORMAT
@click.option("--suite", type=click.Choice(sorted(SUITES) + ["all"]), required=True)
@_guarded
def cmd_verify(q, tol, max_terms, quad_order, cache_dir, output_format, suite):
    """Run a verification suite; exit 1 if any check fails."""
    cfg = _config(q, tol, max_terms, quad_order, cache_dir, output_format)
    results = run_suite(suite, cfg.context())
    if cfg.output_format == "json":
        doc = [{"detail": r.detail, "name": r.name, "passed": r.passed, "residual": _fmt(r.residual),
                "suite": r.suite, "tolerance": _fmt(r.tolerance)} for r in results]
        _emit(_json_text(doc), None)
    else:
        for r in results:
            click.echo(format_result(r))
    failed = sum(not r.passed for r in results)
    click.echo(f"{len(results) - failed}/{len(results)} checks passed", err=True)
    if failed:
        sys.exit(EXIT_CODES["verify_failed"])


if __name__ == "__main__":  # pragma: no cover
    main()
