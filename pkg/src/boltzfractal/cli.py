"""Command-line front end: simulate, analyze, spectrum and verify."""

from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
import glob
import hashlib
import json
import logging
import math
import os
import sys
import time

import click
import numpy as np

from . import __version__, fractal, suites, wavelet
from .cross_section import CrossSection, HALF_PI, from_inverse_power
from .errors import ConfigError, DomainError, EventBufferOverflow, InputError, ParseError, StorageError
from .path_store import _atomic_write, read_path, write_csv, write_path
from .simulator import EmpiricalFile, Maxwellian, SimulationConfig, TwoPoint, run

log = logging.getLogger(__name__)

PATH_SUFFIX = ".boltzpath"
MANIFEST = "manifest.json"

CONFIG_KEYS = {
    "nu", "gamma", "s", "B", "theta_min", "n_particles", "horizon", "seed", "replicas", "n_tracked",
    "f0", "mean", "temperature", "v1", "v2", "p", "f0_path", "max_events", "speed_floor",
}


# -- configuration -----------------------------------------------------------


def _number(raw, key, kind=float):
    try:
        if kind is int:
            value = int(raw, 0)
        else:
            value = float(raw)
    except ValueError:
        raise ConfigError(f"malformed value {raw!r}", key=key) from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"non-finite value {raw!r}", key=key)
    return value


def _vector(raw, key):
    parts = raw.replace(",", " ").split()
    if len(parts) != 3:
        raise ConfigError("expected three components", key=key)
    return tuple(_number(x, key) for x in parts)


def read_config_text(text):
    """``key=value`` lines (``#`` starts a comment) into a dict of strings."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value", key=line.split()[0])
        key, value = (x.strip() for x in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key", key=key)
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key", key=key)
        raw[key] = value
    return raw


def _exponents(raw):
    if "s" in raw:
        if "gamma" in raw or "nu" in raw:
            raise ConfigError("give either s or (gamma, nu), not both", key="s")
        s = _number(raw["s"], "s")
        if not s > 3:
            raise ConfigError(f"standing assumption violated: s={s} gives gamma + nu <= 0", key="s")
        return from_inverse_power(s)
    for key in ("gamma", "nu"):
        if key not in raw:
            raise ConfigError("missing interaction exponent (give gamma and nu, or s)", key=key)
    gamma, nu = _number(raw["gamma"], "gamma"), _number(raw["nu"], "nu")
    if not gamma + nu > 0:
        raise ConfigError("standing assumption violated: gamma + nu must be > 0", key="gamma")
    if not 0 < nu < 1:
        raise ConfigError("nu must lie in (0, 1)", key="nu")
    if not -1 < gamma < 1:
        raise ConfigError("gamma must lie in (-1, 1)", key="gamma")
    return gamma, nu


def _initial_law(raw, base_dir):
    kind = raw.get("f0", "maxwellian").lower()
    if kind == "maxwellian":
        mean = _vector(raw["mean"], "mean") if "mean" in raw else (0.0, 0.0, 0.0)
        temperature = _number(raw.get("temperature", "1"), "temperature")
        return Maxwellian(mean, temperature)
    if kind == "two_point":
        for key in ("v1", "v2"):
            if key not in raw:
                raise ConfigError("two_point law needs v1 and v2", key=key)
        return TwoPoint(_vector(raw["v1"], "v1"), _vector(raw["v2"], "v2"), _number(raw.get("p", "0.5"), "p"))
    if kind == "file":
        if "f0_path" not in raw:
            raise ConfigError("file law needs f0_path", key="f0_path")
        law = EmpiricalFile(os.path.join(base_dir, raw["f0_path"]))
        law.load()
        return law
    if kind == "dirac":
        raise ConfigError("a Dirac initial law is excluded", key="f0")
    raise ConfigError(f"unknown initial law {kind!r}", key="f0")


def parse_config(text, base_dir="."):
    """Build a :class:`SimulationConfig` from ``key=value`` text."""
    raw = read_config_text(text)
    gamma, nu = _exponents(raw)
    if "seed" not in raw:
        raise ConfigError("missing seed", key="seed")
    theta_min = _number(raw.get("theta_min", repr(2.0**-12)), "theta_min")
    if not 0 < theta_min <= HALF_PI:
        raise ConfigError("theta_min must lie in (0, pi/2]", key="theta_min")
    cs = CrossSection(gamma, nu, theta_min)
    B = raw.get("B", "none")
    kwargs = dict(
        seed=_number(raw["seed"], "seed", int),
        truncation_B=None if B.lower() in ("none", "inf") else _number(B, "B"),
        initial_law=_initial_law(raw, base_dir),
    )
    for key, kind in (("n_particles", int), ("horizon", float), ("replicas", int), ("n_tracked", int),
                      ("max_events", int), ("speed_floor", float)):
        if key in raw:
            kwargs[key] = _number(raw[key], key, kind)
    return SimulationConfig(cs, **kwargs)


# -- hashing and manifests -----------------------------------------------------


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def source_hash(files):
    """Hash identifying a set of path files by name and content.

    The simulate manifest records the same value for its outputs, so every
    report can be traced back to the run that produced its inputs.
    """
    listing = sorted((os.path.basename(f), file_digest(f)) for f in files)
    return hashlib.sha256(json.dumps(listing).encode()).hexdigest()


def _write_json(path, obj):
    _atomic_write(path, [json.dumps(obj, indent=2, sort_keys=True) + "\n"])


def thread_count():
    raw = os.environ.get("THREADS")
    cpus = os.cpu_count() or 1
    if raw is None or raw.strip() == "":
        return cpus
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"THREADS must be a positive integer, got {raw!r}", key="THREADS") from None
    if n < 1:
        raise ConfigError("THREADS must be a positive integer", key="THREADS")
    return n


def _pmap(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _config_error(exc):
    key = f"{exc.key}: " if getattr(exc, "key", None) else ""
    _fail(2, f"{key}{exc}")


# -- commands --------------------------------------------------------------------


@click.group()
@click.version_option(__version__, prog_name="boltzfractal")
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Simulate Boltzmann velocity jump paths and analyze their multifractal structure."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def simulate(config_path, out_dir):
    """Run the configured replicas and write one path file per tracked particle."""
    started = datetime.now(timezone.utc)
    clock = time.perf_counter()
    with open(config_path) as fh:
        text = fh.read()
    try:
        config = parse_config(text, os.path.dirname(os.path.abspath(config_path)))
        workers = thread_count()
    except (ConfigError, DomainError, InputError) as exc:
        _config_error(exc)
    os.makedirs(out_dir, exist_ok=True)
    try:
        paths = run(config, workers=min(workers, config.replicas))
    except EventBufferOverflow as exc:
        _fail(4, str(exc))
    outputs = []
    try:
        for p in paths:
            p.meta["tool_version"] = __version__
            name = f"r{p.meta['replica_id']:04d}_p{p.meta['particle_id']:04d}{PATH_SUFFIX}"
            dest = os.path.join(out_dir, name)
            write_path(p, dest)
            outputs.append({"file": name, "sha256": file_digest(dest), "events": len(p)})
        files = [os.path.join(out_dir, o["file"]) for o in outputs]
        manifest = {
            "tool": "boltzfractal",
            "tool_version": __version__,
            "config": config.metadata() | {"max_events": config.max_events},
            "config_text_sha256": hashlib.sha256(text.encode()).hexdigest(),
            "seeds": [
                {"replica_id": r, "seed": int(config.seed), "spawn_key": [r]} for r in range(config.replicas)
            ],
            "outputs": outputs,
            "manifest_hash": source_hash(files),
            "wall_clock": {"started": started.isoformat(), "elapsed_s": time.perf_counter() - clock},
        }
        _write_json(os.path.join(out_dir, MANIFEST), manifest)
    except StorageError as exc:
        _fail(1, str(exc))
    click.echo(f"wrote {len(outputs)} path files to {out_dir} (manifest {manifest['manifest_hash'][:16]})")


def _load_inputs(pattern):
    files = sorted(f for f in glob.glob(pattern, recursive=True) if os.path.isfile(f))
    if not files:
        _fail(3, f"no path files match {pattern!r}")
    try:
        paths = [read_path(f) for f in files]
    except (ParseError, OSError) as exc:
        _fail(2, str(exc))
    nus = {float(p.meta["nu"]) for p in paths if "nu" in p.meta}
    if len(nus) > 1:
        _fail(2, f"input paths mix different nu values: {sorted(nus)}")
    return files, paths, (nus.pop() if nus else math.nan)


def _parse_floats(text, name):
    try:
        vals = [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise click.BadParameter(f"expected a list of numbers, got {text!r}", param_hint=name) from None
    if not vals:
        raise click.BadParameter("empty list", param_hint=name)
    return vals


def _parse_range(text, name):
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise click.BadParameter(f"expected LO:HI, got {text!r}", param_hint=name) from None
    if hi < lo:
        raise click.BadParameter("empty range", param_hint=name)
    return list(range(lo, hi + 1))


def _default_grid(nu, kind):
    base = 1.0 / nu if nu == nu else 2.0
    grid = 0.5 * base * np.arange(1, 9) / 4.0
    return grid + (1.0 if kind == "position" else 0.0)


def _window(paths, m_lo, m_hi):
    if m_hi is None:
        bands = [b for b in (fractal.resolved_band(p) for p in paths) if b is not None]
        m_hi = min(bands) if bands else m_lo + 1
    return m_lo, max(m_hi, m_lo + 1)


def _spectrum(paths, grid, kind, m_lo, m_hi, tolerance, queries, seed):
    est = fractal.empirical_spectrum(
        paths, grid, m_lo=m_lo, m_hi=m_hi, tolerance=tolerance, kind=kind, n_queries=queries, seed=seed
    )
    return list(est.rows())


SPECTRUM_HEADER = ["h", "d_hat", "d_theory", "n_samples"]


def _spectrum_options(fn):
    fn = click.option("--grid", default=None, help="Comma-separated h values (default: eight points up to 1/nu).")(fn)
    fn = click.option("--m-lo", default=4, show_default=True, help="Lowest jump band of the exponent window.")(fn)
    fn = click.option("--m-hi", default=None, type=int, help="Highest band (default: resolved by theta_min).")(fn)
    fn = click.option("--tolerance", default=0.05, show_default=True)(fn)
    fn = click.option("--queries", default=1 << 14, show_default=True, help="Uniform query times per path.")(fn)
    fn = click.option("--seed", default=0, show_default=True, help="Seed for query times.")(fn)
    return fn


@main.command()
@click.option("--paths", "pattern", required=True, help="Glob of path files.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@_spectrum_options
@click.option("--scaling-m", default="4:12", show_default=True, help="Band range LO:HI of the jump-scaling fit.")
@click.option("--coverage-m", default="10:14", show_default=True)
@click.option("--deltas", default="0.3,0.4,0.6,0.8,1.0", show_default=True, help="Covering exponents.")
@click.option("--classify-times", default=64, show_default=True, help="Uniform sample times per path.")
@click.option("--classify-m-lo", default=1, show_default=True)
@click.option("--margin", default=wavelet.DEFAULT_MARGIN, show_default=True)
@click.option("--ibp-pairs", default=10, show_default=True, help="Random (a, b) pairs per path.")
def analyze(pattern, out_dir, grid, m_lo, m_hi, tolerance, queries, seed, scaling_m, coverage_m, deltas,
            classify_times, classify_m_lo, margin, ibp_pairs):
    """Write spectrum, scaling, coverage, classification and IBP audit reports."""
    files, paths, nu = _load_inputs(pattern)
    try:
        workers = thread_count()
    except ConfigError as exc:
        _config_error(exc)
    h_grid = _parse_floats(grid, "--grid") if grid else _default_grid(nu, "velocity")
    scaling_ms = _parse_range(scaling_m, "--scaling-m")
    coverage_ms = _parse_range(coverage_m, "--coverage-m")
    delta_list = _parse_floats(deltas, "--deltas")
    source = source_hash(files)
    names = [os.path.basename(f) for f in files]
    os.makedirs(out_dir, exist_ok=True)
    lo, hi = _window(paths, m_lo, m_hi)

    try:
        spec_rows = _spectrum(paths, h_grid, "velocity", lo, hi, tolerance, queries, seed)
    except ValueError as exc:
        _fail(2, str(exc))
    write_csv(os.path.join(out_dir, "spectrum.csv"), SPECTRUM_HEADER, spec_rows, source)

    counts, slope, intercept = fractal.jump_scaling(paths, scaling_ms)
    fit = [2.0 ** (intercept + slope * m) if slope == slope else math.nan for m in scaling_ms]
    write_csv(
        os.path.join(out_dir, "scaling.csv"), ["m", "count", "fit", "slope"],
        [(m, float(c), f, slope) for m, c, f in zip(scaling_ms, counts, fit)], source,
    )

    cov_rows = []
    for m in coverage_ms:
        for delta in delta_list:
            frac = np.array([fractal.coverage_fraction(p, delta, m) for p in paths])
            cov_rows.append((m, delta, float(frac.mean()), float(frac.min())))
    write_csv(os.path.join(out_dir, "coverage.csv"), ["m", "delta", "fraction", "min_fraction"], cov_rows, source)

    c_lo, c_hi = _window(paths, classify_m_lo, m_hi)

    def classify_one(i):
        rng = np.random.default_rng([seed, i])
        t = np.sort(rng.uniform(0.0, paths[i].horizon, classify_times))
        return wavelet.exponent_samples(paths[i], t, c_lo, c_hi, margin=margin)

    def audit_one(i):
        rng = np.random.default_rng([seed, i, 1])
        p, rows = paths[i], []
        for _ in range(ibp_pairs):
            a = float(np.exp(rng.uniform(math.log(1e-4), 0.0))) * p.horizon
            b = float(rng.uniform(-a, p.horizon))
            lhs, rhs, gap = wavelet.ibp_check(p, a, b)
            rows.append((names[i], a, b, wavelet.DEFAULT_ORDER, float(np.linalg.norm(lhs)),
                         float(np.linalg.norm(rhs)), gap))
        return rows

    idx = list(range(len(paths)))
    samples = _pmap(classify_one, idx, workers)
    cls_rows = [
        (names[i], s.t, s.h_v, s.h_x, s.kind, int(s.inconsistent)) for i in idx for s in samples[i]
    ]
    write_csv(
        os.path.join(out_dir, "classify.csv"), ["file", "t", "h_v", "h_x", "kind", "inconsistent"], cls_rows, source
    )
    audit = [r for rows in _pmap(audit_one, idx, workers) for r in rows]
    write_csv(
        os.path.join(out_dir, "ibp_audit.csv"), ["file", "a", "b", "order", "lhs_norm", "rhs_norm", "gap"],
        audit, source,
    )

    h_x = np.array([r[3] for r in cls_rows], dtype=np.float64)
    finite = h_x[np.isfinite(h_x)]
    kinds = [r[4] for r in cls_rows]
    click.echo(f"inputs      {len(files)} path files, nu={nu:g}, source={source[:16]}")
    click.echo(f"window      bands {lo}..{hi} (spectrum), {c_lo}..{c_hi} (classification)")
    click.echo(f"jump scale  nu_hat={slope:.4f} over m={scaling_ms[0]}..{scaling_ms[-1]}")
    bound = f"{finite.max():.4f}" if finite.size else "none finite"
    click.echo(f"position    max h_x bound={bound} (1 + 1/nu = {1 + 1 / nu:.4f})")
    click.echo("spectrum    h        d_hat     d_theory  n")
    for h, d, dt, n in spec_rows:
        click.echo(f"            {h:<8.4g} {_short(d):<9} {_short(dt):<9} {n}")
    click.echo("classify    " + ", ".join(f"{k}={kinds.count(k)}" for k in
               (wavelet.CUSP, wavelet.OSCILLATING, wavelet.JUMP_TIME, wavelet.UNDETERMINED)))
    click.echo(f"ibp audit   max gap={max((r[-1] for r in audit), default=0.0):.3g}")
    click.echo(f"reports     {out_dir}")


def _short(x):
    if x == -math.inf:
        return "-inf"
    if x != x:
        return "undet."
    return f"{x:.4f}"


@main.command()
@click.option("--paths", "pattern", required=True, help="Glob of path files.")
@click.option("--kind", type=click.Choice(["velocity", "position"]), default="velocity", show_default=True)
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@_spectrum_options
def spectrum(pattern, kind, out_file, grid, m_lo, m_hi, tolerance, queries, seed):
    """Write the empirical singularity spectrum of the velocity or position paths."""
    files, paths, nu = _load_inputs(pattern)
    h_grid = _parse_floats(grid, "--grid") if grid else _default_grid(nu, kind)
    lo, hi = _window(paths, m_lo, m_hi)
    try:
        rows = _spectrum(paths, h_grid, kind, lo, hi, tolerance, queries, seed)
    except ValueError as exc:
        _fail(2, str(exc))
    directory = os.path.dirname(os.path.abspath(out_file))
    os.makedirs(directory, exist_ok=True)
    write_csv(out_file, SPECTRUM_HEADER, rows, source_hash(files))
    click.echo(f"wrote {len(rows)} spectrum rows to {out_file}")


@main.command()
@click.option("--suite", required=True, type=click.Choice(sorted(suites.SUITES)))
def verify(suite):
    """Run a property suite; exits 1 if any property fails."""
    try:
        workers = thread_count()
    except ConfigError as exc:
        _config_error(exc)
    props = suites.run_suite(suite, workers)
    for p in props:
        click.echo(p.line())
    sys.exit(0 if all(p.passed for p in props) else 1)


if __name__ == "__main__":
    main()
