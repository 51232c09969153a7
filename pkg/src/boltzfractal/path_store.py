"""Line-oriented text format for path records, plus CSV report output.

Grammar::

    #boltzpath 1
    key=value            (metadata, any number of lines)
    V0 <x> <y> <z>
    E <t> <dvx> <dvy> <dvz> <theta> <kappa>   (one per event, t increasing)

Reals are written with ``repr`` (shortest decimal that round-trips), so a
write/read cycle reproduces every value bit for bit.
"""

import csv
import io
import os
import tempfile
import warnings

import numpy as np

from .errors import ParseError, StorageError
from .paths import JumpEvent, PathRecord

FORMAT_TAG = "#boltzpath"
FORMAT_VERSION = 1

_UMASK = os.umask(0)
os.umask(_UMASK)

FLOAT_KEYS = {"gamma", "nu", "theta_min", "horizon", "speed_floor", "temperature", "p"}
INT_KEYS = {"n_particles", "seed", "replicas", "n_tracked", "replica_id", "particle_id", "max_events"}
STR_KEYS = {"f0", "mean", "v1", "v2", "f0_path", "tool_version"}


def fmt_real(x):
    return repr(float(x))


def _encode_meta(key, value):
    if not key or key.startswith("#") or "=" in key or any(c.isspace() for c in key):
        raise ValueError(f"invalid metadata key {key!r}")
    if isinstance(value, float):
        text = fmt_real(value)
    else:
        text = str(value)
    if "\n" in text:
        raise ValueError(f"metadata value for {key!r} contains a newline")
    return f"{key}={text}\n"


def _decode_meta(key, text, lineno):
    try:
        if key in FLOAT_KEYS:
            return float(text)
        if key in INT_KEYS:
            return int(text)
        if key == "B":
            return text if text == "none" else float(text)
    except ValueError:
        raise ParseError(f"malformed value for {key}: {text!r}", lineno) from None
    if key not in STR_KEYS:
        warnings.warn(f"unknown metadata key {key!r} preserved as text", stacklevel=3)
    return text


def _lines(path):
    yield f"{FORMAT_TAG} {FORMAT_VERSION}\n"
    meta = dict(path.meta)
    meta["horizon"] = path.horizon
    for key, value in meta.items():
        yield _encode_meta(key, value)
    yield "V0 " + " ".join(fmt_real(c) for c in path.v0) + "\n"
    for t, dv, th, k in zip(path.times, path.dv, path.theta, path.kappa):
        yield f"E {fmt_real(t)} {fmt_real(dv[0])} {fmt_real(dv[1])} {fmt_real(dv[2])} {fmt_real(th)} {fmt_real(k)}\n"


def _atomic_write(destination, chunks):
    destination = os.fspath(destination)
    directory = os.path.dirname(os.path.abspath(destination))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    except OSError as exc:
        raise StorageError(f"cannot create {destination}: {exc}") from exc
    try:
        os.chmod(tmp, 0o666 & ~_UMASK)
        with os.fdopen(fd, "w", newline="\n") as fh:
            for chunk in chunks:
                fh.write(chunk)
        os.replace(tmp, destination)
    except BaseException as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        if isinstance(exc, OSError):
            raise StorageError(f"writing {destination} failed: {exc}") from exc
        raise


def write_path(path, destination):
    """Write ``path`` atomically (temp file + rename) to ``destination``."""
    _atomic_write(destination, _lines(path))


def dumps_path(path):
    return "".join(_lines(path))


def iter_path(source):
    """Stream a path file.

    Returns ``(meta, v0, events)`` where ``events`` is a lazy iterator of
    :class:`JumpEvent`; only the current line is held in memory.
    """
    fh = open(source) if isinstance(source, (str, os.PathLike)) else source
    lines = _numbered(fh)
    lineno, line = next(lines, (1, None))
    if line is None:
        raise ParseError("empty file", 1)
    parts = line.split()
    if len(parts) != 2 or parts[0] != FORMAT_TAG:
        raise ParseError("missing #boltzpath header", lineno)
    if parts[1] != str(FORMAT_VERSION):
        raise ParseError(f"unsupported format version {parts[1]}", lineno)
    meta = {}
    v0 = None
    for lineno, line in lines:
        if line.startswith("V0 "):
            v0 = _floats(line, 3, lineno)
            break
        if "=" not in line:
            raise ParseError("expected key=value or V0 line", lineno)
        key, text = line.split("=", 1)
        meta[key] = _decode_meta(key, text, lineno)
    if v0 is None:
        raise ParseError("missing V0 line", lineno + 1)
    return meta, np.array(v0), _events(lines)


def _numbered(fh):
    for lineno, raw in enumerate(fh, 1):
        if not raw.endswith("\n"):
            raise ParseError("truncated final line", lineno)
        yield lineno, raw[:-1]


def _floats(line, n, lineno):
    parts = line.split()
    if len(parts) != n + 1:
        raise ParseError(f"expected {n} numbers after {parts[0] if parts else 'tag'}", lineno)
    try:
        return [float(p) for p in parts[1:]]
    except ValueError:
        raise ParseError(f"malformed number in {line!r}", lineno) from None


def _events(lines):
    last = -np.inf
    for lineno, line in lines:
        if not line.startswith("E "):
            raise ParseError("expected event line", lineno)
        t, dx, dy, dz, th, k = _floats(line, 6, lineno)
        if not t > last:
            raise ParseError("event times not strictly increasing", lineno)
        last = t
        yield JumpEvent(t, (dx, dy, dz), th, k)


def read_path(source):
    """Parse a whole path file; inverse of :func:`write_path`."""
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            return read_path(fh)
    meta, v0, events = iter_path(source)
    rows = [(e.t, *e.dv, e.theta, e.kappa) for e in events]
    arr = np.asarray(rows, dtype=np.float64).reshape(-1, 6)
    horizon = meta.get("horizon", 1.0)
    return PathRecord(v0, arr[:, 0], arr[:, 1:4], arr[:, 4], arr[:, 5], horizon, meta)


def loads_path(text):
    return read_path(io.StringIO(text))


def format_cell(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if value == -np.inf:
            return "-inf"
        if value != value:
            return "undetermined"
        return format(value, ".17g")
    if value is None:
        return "undetermined"
    return str(value)


def write_csv(destination, header, rows, source_hash=None):
    """Atomically write a CSV report with a declared header row.

    ``source_hash`` (the manifest hash of the inputs) is cited on a leading
    ``#`` comment line.
    """
    buf = io.StringIO()
    if source_hash is not None:
        buf.write(f"# source={source_hash}\n")
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    _atomic_write(destination, [buf.getvalue()])
