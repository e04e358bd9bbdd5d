"""Monte Carlo rejection-rate studies over the 2x2 simulation designs.

Replication ``r`` of grid point ``g`` draws from a stream keyed by
``(master_seed, stable_hash(g), r)``. Work units are independent, and
aggregation is a sum of integer counts, so a table is bit-identical for any
number of worker processes.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .design import Dataset, Effect, EffectSpec
from .distributions import LAWS, NULL_STUDY_LAWS, POWER_STUDY_LAWS, DistributionSpec, sample_errors
from .errors import ConfigError
from .parametric import ats, wts
from .permutation import PermutationPlan, csp_test, restricted_ok, usp_test, wtps

METHODS = ("WTS", "ATS", "WTPS", "CSP", "USP")
PERMUTATION_METHODS = ("WTPS", "CSP", "USP")
INCREMENTS = (0, 5, 10, 20, 25)
DELTAS = tuple(round(0.2 * k, 10) for k in range(6))
_U64 = (1 << 64) - 1

_NULL_TABLE = {
    1: ("balanced-homoscedastic", (5, 5, 5, 5), (1.0, 1.0, 1.0, 1.0)),
    2: ("differing-n", (5, 7, 10, 15), (1.0, 1.0, 1.0, 1.0)),
    3: ("differing-sd", (5, 5, 5, 5), (1.0, 1.3, 1.5, 2.0)),
    4: ("positive-pairing", (5, 7, 10, 15), (1.0, 1.3, 1.5, 2.0)),
    5: ("negative-pairing", (5, 7, 10, 15), (2.0, 1.5, 1.3, 1.0)),
}
_R = 2.0 ** 0.25
_POWER_TABLE = {
    1: ("balanced-homoscedastic", (10, 10, 10, 10), (1.0, 1.0, 1.0, 1.0)),
    2: ("differing-n", (9, 9, 15, 15), (1.0, 1.0, 1.0, 1.0)),
    3: ("differing-sd", (10, 10, 10, 10), (1.0, 1.0, _R, _R)),
    4: ("positive-pairing", (9, 9, 15, 15), (1.0, 1.0, _R, _R)),
    5: ("negative-pairing", (9, 9, 15, 15), (_R, _R, 1.0, 1.0)),
}


@dataclass(frozen=True)
class SettingSpec:
    id: int
    base_n: tuple
    base_sd: tuple
    increment: int = 0
    label: str = ""

    @property
    def n(self) -> tuple:
        return tuple(k + self.increment for k in self.base_n)

    @property
    def sd(self) -> tuple:
        return self.base_sd

    @property
    def total_n(self) -> int:
        return sum(self.n)


def build_setting(id: int, increment: int = 0) -> SettingSpec:
    """Null-study setting ``id`` with ``increment`` added to every cell size."""
    if id not in _NULL_TABLE:
        raise ConfigError(f"null-study setting must be 1..5, got {id}")
    if increment not in INCREMENTS:
        raise ConfigError(f"increment must be one of {INCREMENTS}, got {increment}")
    label, n, sd = _NULL_TABLE[id]
    return SettingSpec(id, n, sd, increment, label)


def build_power_setting(id: int) -> SettingSpec:
    if id not in _POWER_TABLE:
        raise ConfigError(f"power-study setting must be 1..5, got {id}")
    label, n, sd = _POWER_TABLE[id]
    return SettingSpec(id, n, sd, 0, label)


@dataclass(frozen=True)
class EffectPattern:
    condition: int
    delta: float

    def __post_init__(self):
        if self.condition not in (1, 2, 3):
            raise ConfigError(f"effect condition must be 1, 2 or 3, got {self.condition}")

    def effects(self):
        """(alpha, beta, interaction) parameters in cell order."""
        d = self.delta
        zero2, zero4 = (0.0, 0.0), (0.0,) * 4
        if self.condition == 1:
            return (d, -d), zero2, zero4
        if self.condition == 2:
            return zero2, (d, -d), zero4
        h = d / 2
        return (h, -h), zero2, (h, -h, -h, h)

    @property
    def cell_shifts(self) -> tuple:
        """Cell means mu_ij = alpha_i + beta_j + (alpha beta)_ij with mu = 0."""
        alpha, beta, ab = self.effects()
        return tuple(
            alpha[i] + beta[j] + ab[2 * i + j] for i in (0, 1) for j in (0, 1)
        )


def generate_dataset(setting: SettingSpec, dist: DistributionSpec,
                     pattern: EffectPattern | None, rng) -> Dataset:
    mu = pattern.cell_shifts if pattern is not None else (0.0,) * 4
    return Dataset([
        mu[k] + sample_errors(dist, k, setting.sd[k], setting.n[k], rng)
        for k in range(4)
    ])


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StudyConfig:
    study: str = "null"
    settings: tuple = (1, 2, 3, 4, 5)
    increments: tuple = INCREMENTS
    distributions: tuple | None = None
    effects: tuple = ("A", "AxB")
    methods: tuple = METHODS
    conditions: tuple = (1, 2, 3)
    deltas: tuple = DELTAS
    n_sim: int = 5000
    n_perm: int = 5000
    alpha: float = 0.05
    master_seed: int = 20130101
    workers: int = 1
    sync_weighting: str = "general"

    def __post_init__(self):
        if self.study not in ("null", "power"):
            raise ConfigError(f"study must be 'null' or 'power', got {self.study!r}")
        if self.distributions is None:
            default = NULL_STUDY_LAWS if self.study == "null" else POWER_STUDY_LAWS
            object.__setattr__(self, "distributions", default)
        for law in self.distributions:
            if law not in LAWS:
                raise ConfigError(f"unknown distribution {law!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        for e in self.effects:
            Effect.parse(e)
        if self.n_sim < 0 or self.n_perm < 1:
            raise ConfigError("n_sim must be >= 0 and n_perm >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.sync_weighting not in ("general", "strict"):
            raise ConfigError("sync_weighting must be 'general' or 'strict'")
        for s in self.settings:
            if self.study == "null":
                for inc in self.increments:
                    build_setting(s, inc)
            else:
                build_power_setting(s)
        if self.study == "power":
            for c in self.conditions:
                EffectPattern(c, 0.0)

    def grid(self) -> list:
        """Grid points (study, setting, increment, distribution, condition, delta)."""
        pts = []
        if self.study == "null":
            for s in self.settings:
                for inc in self.increments:
                    for law in self.distributions:
                        pts.append(GridPoint("null", s, inc, law, None, None))
        else:
            for s in self.settings:
                for law in self.distributions:
                    for c in self.conditions:
                        for d in self.deltas:
                            pts.append(GridPoint("power", s, 0, law, c, float(d)))
        return pts


def _split(value: str) -> list:
    return [v.strip() for v in value.split(",") if v.strip()]


_PARSERS: dict[str, Callable] = {
    "study": lambda v: v.strip(),
    "settings": lambda v: tuple(int(x) for x in _split(v)),
    "increments": lambda v: tuple(int(x) for x in _split(v)),
    "distributions": lambda v: tuple(_split(v)),
    "effects": lambda v: tuple(Effect.parse(x).value for x in _split(v)),
    "methods": lambda v: tuple(x.upper() for x in _split(v)),
    "conditions": lambda v: tuple(int(x) for x in _split(v)),
    "deltas": lambda v: tuple(float(x) for x in _split(v)),
    "n_sim": int,
    "n_perm": int,
    "alpha": float,
    "master_seed": int,
    "seed": int,
    "workers": int,
    "sync_weighting": lambda v: v.strip(),
}


def parse_config(text: str) -> StudyConfig:
    """Parse the flat ``key = value`` study format; ``#`` starts a comment."""
    values = {}
    unknown = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in _PARSERS:
            unknown.append(key)
            continue
        try:
            values["master_seed" if key == "seed" else key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(unknown))
    return StudyConfig(**values)


def load_config(path) -> StudyConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridPoint:
    study: str
    setting: int
    increment: int
    distribution: str
    condition: int | None
    delta: float | None

    def key(self) -> str:
        return f"{self.study}|{self.setting}|{self.increment}|{self.distribution}|{self.condition}|{self.delta!r}"

    def stable_hash(self) -> int:
        return int.from_bytes(hashlib.sha256(self.key().encode()).digest()[:8], "little")

    def setting_spec(self) -> SettingSpec:
        if self.study == "null":
            return build_setting(self.setting, self.increment)
        return build_power_setting(self.setting)

    def pattern(self) -> EffectPattern | None:
        return None if self.condition is None else EffectPattern(self.condition, self.delta)


def replication_seed(master_seed: int, point: GridPoint, r: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed) & _U64, spawn_key=(point.stable_hash(), r))


def _is_supported(method, n, effect, config) -> bool:
    if method in ("CSP", "USP") and config.sync_weighting == "strict":
        return restricted_ok(n, effect)
    return True


def run_replication(config: StudyConfig, point: GridPoint, r: int) -> dict:
    """Outcome per (effect, method): 'reject', 'accept', 'degenerate' or 'skip'."""
    ss = replication_seed(config.master_seed, point, r)
    rng = np.random.Generator(np.random.PCG64(ss))
    setting = point.setting_spec()
    d = generate_dataset(setting, DistributionSpec(point.distribution), point.pattern(), rng)
    seeds = ss.generate_state(len(config.effects) * len(METHODS), np.uint64)
    strict = config.sync_weighting == "strict"
    out = {}
    for ei, eff in enumerate(config.effects):
        e = EffectSpec.of(eff)
        for mi, method in enumerate(config.methods):
            if not _is_supported(method, d.n, e, config):
                out[(e.effect.value, method)] = "skip"
                continue
            seed = int(seeds[ei * len(METHODS) + METHODS.index(method)])
            if method == "WTS":
                res = wts(d, e)
            elif method == "ATS":
                res = ats(d, e)
            elif method == "WTPS":
                res = wtps(d, e, PermutationPlan("pooled", config.n_perm, seed))
            elif method == "CSP":
                res = csp_test(d, e, PermutationPlan("csp", config.n_perm, seed), strict=strict)
            else:
                res = usp_test(d, e, PermutationPlan("usp", config.n_perm, seed), strict=strict)
            if res.degenerate:
                outcome = "degenerate"
            elif method in PERMUTATION_METHODS:
                outcome = "reject" if res.p_value <= config.alpha else "accept"
            else:
                outcome = "reject" if res.p_value < config.alpha else "accept"
            out[(e.effect.value, method)] = outcome
    return out


def _run_unit(args):
    config, point, r0, r1 = args
    counts = {}
    for r in range(r0, r1):
        for key, outcome in run_replication(config, point, r).items():
            c = counts.setdefault(key, {"reject": 0, "accept": 0, "degenerate": 0, "skip": 0})
            c[outcome] += 1
    return counts


@dataclass(frozen=True)
class RejectionRow:
    study: str
    setting: int
    increment: int
    distribution: str
    effect: str
    method: str
    condition: int | None
    delta: float | None
    n_sim: int
    rejections: int | None  # None marks a skipped (unsupported) combination
    degenerate_count: int | None

    @property
    def skipped(self) -> bool:
        return self.rejections is None

    @property
    def rate(self) -> float:
        if self.skipped or self.n_sim == 0:
            return math.nan
        return self.rejections / self.n_sim


@dataclass
class RejectionTable:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def select(self, **kw) -> list:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in kw.items())]

    def get(self, **kw) -> RejectionRow:
        hits = self.select(**kw)
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {kw}")
        return hits[0]


def run_study(config: StudyConfig, workers: int | None = None,
              progress: Callable[[int, int], None] | None = None,
              unit_size: int = 250) -> RejectionTable:
    """Simulate every grid point and tabulate rejections per effect and method."""
    if config.n_sim == 0:
        return RejectionTable()
    workers = config.workers if workers is None else workers
    points = config.grid()
    units = [
        (config, p, r0, min(r0 + unit_size, config.n_sim))
        for p in points
        for r0 in range(0, config.n_sim, unit_size)
    ]
    totals: dict = {p: {} for p in points}
    done = 0

    def absorb(unit, counts):
        nonlocal done
        acc = totals[unit[1]]
        for key, c in counts.items():
            a = acc.setdefault(key, {"reject": 0, "accept": 0, "degenerate": 0, "skip": 0})
            for k, v in c.items():
                a[k] += v
        done += 1
        if progress is not None:
            progress(done, len(units))

    if workers <= 1:
        for u in units:
            absorb(u, _run_unit(u))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for u, counts in zip(units, pool.map(_run_unit, units, chunksize=1)):
                absorb(u, counts)

    table = RejectionTable()
    for p in points:
        for eff in config.effects:
            eff = Effect.parse(eff).value
            for m in config.methods:
                c = totals[p][(eff, m)]
                if c["skip"]:
                    rej, deg = None, None
                else:
                    rej, deg = c["reject"], c["degenerate"]
                table.rows.append(RejectionRow(
                    p.study, p.setting, p.increment, p.distribution, eff, m,
                    p.condition, p.delta, config.n_sim, rej, deg,
                ))
    return table

