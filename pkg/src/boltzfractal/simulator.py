"""Event-driven N-particle approximation of the Boltzmann jump process.

A global exponential clock proposes collisions between uniformly chosen
pairs; proposals are thinned by the relative-speed factor ``|v - v*|^gamma``
and accepted pairs are updated symmetrically, so momentum and energy are
conserved exactly (as long as the speed truncation ``B`` does not bind).
The jumps of tracked particles are recorded exactly.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from . import _kernel
from .cross_section import CrossSection, DEFAULT_SPEED_FLOOR, majorant_collision_rate, speed_factor_cap, tail_mass
from .errors import ConfigError, DomainError, EventBufferOverflow, InputError
from .paths import PathRecord, position_path, reconstruct  # noqa: F401  (re-exported)

log = logging.getLogger(__name__)

BLOCK = 1 << 15


@dataclass(frozen=True)
class Maxwellian:
    mean: tuple = (0.0, 0.0, 0.0)
    temperature: float = 1.0

    def __post_init__(self):
        if not self.temperature > 0:
            raise ConfigError("maxwellian temperature must be positive", key="temperature")

    def sample(self, rng, n):
        return np.asarray(self.mean, dtype=np.float64) + math.sqrt(self.temperature) * rng.standard_normal((n, 3))


@dataclass(frozen=True)
class TwoPoint:
    v1: tuple
    v2: tuple
    p: float = 0.5

    def __post_init__(self):
        if tuple(map(float, self.v1)) == tuple(map(float, self.v2)):
            raise ConfigError("two_point law with v1 == v2 is a Dirac mass", key="f0")
        if not 0.0 < self.p < 1.0:
            raise ConfigError("two_point weight p must lie in (0, 1)", key="p")

    def sample(self, rng, n):
        pick = rng.random(n) < self.p
        return np.where(pick[:, None], np.asarray(self.v1, float), np.asarray(self.v2, float))


@dataclass(frozen=True)
class EmpiricalFile:
    """Resample i.i.d. from the rows ``vx vy vz`` of a text file."""

    path: str

    def load(self):
        rows = []
        try:
            with open(self.path) as fh:
                for lineno, line in enumerate(fh, 1):
                    line = line.split("#", 1)[0].strip()
                    if not line:
                        continue
                    parts = line.replace(",", " ").split()
                    if len(parts) != 3:
                        raise InputError(f"{self.path}:{lineno}: expected 3 columns, got {len(parts)}")
                    try:
                        rows.append([float(p) for p in parts])
                    except ValueError as exc:
                        raise InputError(f"{self.path}:{lineno}: {exc}") from None
        except OSError as exc:
            raise InputError(f"cannot read initial-law file {self.path}: {exc}") from None
        data = np.asarray(rows, dtype=np.float64).reshape(-1, 3)
        if data.shape[0] == 0:
            raise InputError(f"{self.path}: no velocity rows")
        if not np.all(np.isfinite(data)):
            raise InputError(f"{self.path}: non-finite velocity")
        if np.all(data == data[0]):
            raise ConfigError("initial-law file describes a Dirac mass", key="f0")
        return data

    def sample(self, rng, n):
        data = self.load()
        return data[rng.integers(0, data.shape[0], size=n)]


@dataclass(frozen=True)
class SimulationConfig:
    cross_section: CrossSection
    seed: int
    n_particles: int = 4096
    horizon: float = 1.0
    truncation_B: float | None = None
    replicas: int = 1
    n_tracked: int = 1
    initial_law: object = field(default_factory=Maxwellian)
    max_events: int = 10_000_000
    speed_floor: float = DEFAULT_SPEED_FLOOR

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer", key="seed")
        if self.n_particles < 2:
            raise ConfigError("need at least two particles", key="n_particles")
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive", key="horizon")
        if self.truncation_B is not None and not self.truncation_B >= 1:
            raise ConfigError("truncation B must be >= 1", key="B")
        if self.replicas < 1:
            raise ConfigError("replicas must be positive", key="replicas")
        if not 1 <= self.n_tracked <= self.n_particles:
            raise ConfigError("n_tracked must lie in [1, n_particles]", key="n_tracked")
        if not isinstance(self.initial_law, (Maxwellian, TwoPoint, EmpiricalFile)):
            raise ConfigError("unknown initial law", key="f0")

    def metadata(self):
        """Flat ``key -> value`` description (values are str/int/float)."""
        cs = self.cross_section
        meta = {
            "gamma": cs.gamma,
            "nu": cs.nu,
            "theta_min": cs.theta_min,
            "B": "none" if self.truncation_B is None else self.truncation_B,
            "n_particles": self.n_particles,
            "horizon": self.horizon,
            "seed": int(self.seed),
            "replicas": self.replicas,
            "n_tracked": self.n_tracked,
            "speed_floor": self.speed_floor,
        }
        law = self.initial_law
        if isinstance(law, Maxwellian):
            meta.update(f0="maxwellian", mean=" ".join(repr(float(c)) for c in law.mean), temperature=law.temperature)
        elif isinstance(law, TwoPoint):
            meta.update(
                f0="two_point",
                v1=" ".join(repr(float(c)) for c in law.v1),
                v2=" ".join(repr(float(c)) for c in law.v2),
                p=law.p,
            )
        else:
            meta.update(f0="file", f0_path=law.path)
        return meta


@dataclass
class ReplicaResult:
    paths: list
    v_initial: np.ndarray
    v_final: np.ndarray
    n_accepted: int
    n_floor: int
    max_speed: float

    @property
    def floor_fraction(self):
        return self.n_floor / self.n_accepted if self.n_accepted else 0.0


def replica_rng(seed, replica_id):
    """Independent PCG64 stream keyed injectively by ``(seed, replica_id)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(replica_id),))))


def sample_initial(config, rng):
    """Draw ``n_particles`` i.i.d. velocities from the configured law."""
    return np.ascontiguousarray(config.initial_law.sample(rng, config.n_particles), dtype=np.float64)


def truncate_velocity(v, B):
    """H_B(v): clamp the norm of ``v`` to ``B`` keeping its direction."""
    if not B >= 1:
        raise DomainError("truncation level B must be >= 1")
    v = np.asarray(v, dtype=np.float64)
    s = np.linalg.norm(v, axis=-1, keepdims=True)
    scale = np.where(s > B, B / np.where(s > 0, s, 1.0), 1.0)
    return v * scale


def support_probe(ensemble, a, c, w_grid):
    """Smallest empirical mass of {v : |v - w| >= a, |v| <= c} over ``w_grid``."""
    ens = np.asarray(ensemble, dtype=np.float64).reshape(-1, 3)
    if ens.shape[0] == 0:
        raise DomainError("support_probe: empty ensemble")
    w = np.asarray(w_grid, dtype=np.float64).reshape(-1, 3)
    speed_ok = np.linalg.norm(ens, axis=1) <= c
    far = np.linalg.norm(ens[None, :, :] - w[:, None, :], axis=2) >= a
    return float(np.min(np.mean(far & speed_ok[None, :], axis=1)))


def simulate_replica(config, replica_id):
    """Run one replica; returns a :class:`ReplicaResult`."""
    cs = config.cross_section
    rng = replica_rng(config.seed, replica_id)
    vel = sample_initial(config, rng)
    v_initial = vel.copy()
    n = config.n_particles
    n_tracked = config.n_tracked
    slot_of = np.full(n, -1, dtype=np.int64)
    slot_of[:n_tracked] = np.arange(n_tracked)

    B = math.inf if config.truncation_B is None else float(config.truncation_B)
    max_speed = float(np.max(np.linalg.norm(vel, axis=1)))
    dynamic_cap = cs.gamma > 0 and config.truncation_B is None
    if cs.gamma > 0 and not dynamic_cap:
        cap_factor = speed_factor_cap(cs, speed_cap=B)
    elif dynamic_cap:
        cap_factor = (2.0 * max_speed) ** cs.gamma
    else:
        cap_factor = speed_factor_cap(cs, floor=config.speed_floor)
    base_rate = 0.5 * n * 2.0 * math.pi * tail_mass(cs, cs.theta_min)

    buf_t = np.empty(2 * BLOCK)
    buf_slot = np.empty(2 * BLOCK, dtype=np.int64)
    buf_dv = np.empty((2 * BLOCK, 3))
    buf_theta = np.empty(2 * BLOCK)
    buf_kappa = np.empty(2 * BLOCK)
    chunks = []
    counts = np.zeros(n_tracked, dtype=np.int64)
    t = 0.0
    n_acc = n_floor = 0
    status = _kernel.RUNNING if base_rate > 0 else _kernel.FINISHED
    overflow = False
    while status == _kernel.RUNNING:
        u = rng.random((BLOCK, _kernel.UNIFORMS_PER_PROPOSAL))
        status, t, _, n_out, max_speed, acc, nfl = _kernel.advance(
            vel, slot_of, u, t, config.horizon, base_rate, cs.gamma, cs.nu, cs.theta_min,
            B, cap_factor, dynamic_cap, config.speed_floor, max_speed,
            buf_slot, buf_t, buf_dv, buf_theta, buf_kappa,
        )
        n_acc += acc
        n_floor += nfl
        if n_out:
            sl = buf_slot[:n_out].copy()
            chunks.append((sl, buf_t[:n_out].copy(), buf_dv[:n_out].copy(), buf_theta[:n_out].copy(), buf_kappa[:n_out].copy()))
            counts += np.bincount(sl, minlength=n_tracked)
            if counts.max() > config.max_events:
                overflow = True
                break

    paths = _assemble(config, replica_id, v_initial, chunks)
    if overflow:
        raise EventBufferOverflow(
            f"replica {replica_id}: a tracked path exceeded max_events={config.max_events}", partial=paths
        )
    if n_floor:
        log.info("replica %d: relative-speed floor bound %d of %d collisions", replica_id, n_floor, n_acc)
    return ReplicaResult(paths, v_initial, vel, n_acc, n_floor, max_speed)


def _assemble(config, replica_id, v_initial, chunks):
    base = config.metadata()
    if chunks:
        slot = np.concatenate([c[0] for c in chunks])
        cols = [np.concatenate([c[k] for c in chunks]) for k in range(1, 5)]
    else:
        slot = np.empty(0, dtype=np.int64)
        cols = [np.empty(0), np.empty((0, 3)), np.empty(0), np.empty(0)]
    paths = []
    for p in range(config.n_tracked):
        sel = slot == p
        meta = dict(base, replica_id=int(replica_id), particle_id=p)
        paths.append(
            PathRecord(v_initial[p], cols[0][sel], cols[1][sel], cols[2][sel], cols[3][sel], config.horizon, meta)
        )
    return paths


def run(config, workers=1):
    """Simulate every replica; returns ``replicas * n_tracked`` path records.

    Replicas are independent and may run on ``workers`` threads (the
    compiled loop releases the GIL); results are ordered by replica id.
    """
    ids = range(config.replicas)
    if workers > 1 and config.replicas > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: simulate_replica(config, r), ids))
    else:
        results = [simulate_replica(config, r) for r in ids]
    return [p for res in results for p in res.paths]


def collision_rate(config):
    """Per-particle proposal rate used by the simulation clock."""
    cs = config.cross_section
    if cs.gamma > 0 and config.truncation_B is None:
        return None
    return majorant_collision_rate(cs, speed_cap=config.truncation_B, floor=config.speed_floor)
