"""Experiment configuration: an INI file with a fixed schema.

Unknown sections or keys, malformed values and missing seeds are errors that
name the offending line.  See ``docs/config.md`` for the schema.
"""
from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from bootedge.edgeworth import MAX_NU
from bootedge.smooth_model import BALANCE_LIMIT

MAX_Q = 4
KINDS = ("compare", "rates", "prop1", "diagnose", "oracle")


class ConfigError(ValueError):
    pass


def _int_list(s):
    return [int(v) for v in re.split(r"[,\s]+", s.strip()) if v]


def _float_list(s):
    return [float(v) for v in re.split(r"[,\s]+", s.strip()) if v]


def _str_list(s):
    return [v for v in re.split(r"[,\s]+", s.strip()) if v]


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _halflines(s):
    """``lo:hi:count`` (inclusive grid) or a list of thresholds."""
    s = s.strip()
    if ":" in s:
        lo, hi, count = s.split(":")
        count = int(count)
        if count < 1:
            raise ValueError("grid needs at least one point")
        if count == 1:
            return [float(lo)]
        step = (float(hi) - float(lo)) / (count - 1)
        return [float(lo) + i * step for i in range(count)]
    return _float_list(s)


def _balls(s):
    """``c1,c2,...:radius`` entries separated by ``|``."""
    out = []
    for item in s.split("|"):
        item = item.strip()
        if not item:
            continue
        center, radius = item.split(":")
        out.append((tuple(_float_list(center)), float(radius)))
    return out


SCHEMA = {
    "experiment": {"kind": str, "seed": int, "out": str},
    "population": {"name": str, "df": float, "sd": float},
    "statistic": {"name": str, "k": int, "d": int, "q": int, "nu": int},
    "sampling": {
        "n_grid": _int_list, "ratios": _float_list, "replicates": int, "bootstrap_reps": int,
        "mc_samples": int, "exact": _bool, "sample_csv": str,
    },
    "regions": {"halflines": _halflines, "balls": _balls},
    "events": {
        "events": _str_list, "C1": float, "C2": float, "C3": float, "u": float, "C": float,
        "m": int, "lambda": float, "r_exponent": str, "convention": str, "e5_samples": int,
    },
    "prop1": {"beta": float, "b": float, "b2": float},
    "acceptance": {
        "max_ratio": float, "nu_improvement": _bool, "strictly_decreasing": _str_list,
        "non_increasing": _str_list, "max_final": float, "max_final_events": _str_list, "shape": _bool,
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str | None
    seed: int
    out: str = "results"
    population: str = "exp"
    population_params: dict = field(default_factory=dict)
    statistic: str = "standardized_mean"
    k: int = 1
    d: int = 1
    q: int | None = None
    nu: int = 1
    n_grid: tuple = (25, 50, 100)
    ratios: tuple | None = None
    replicates: int = 10
    bootstrap_reps: int = 200_000
    mc_samples: int = 1_000_000
    exact: bool = False
    sample_csv: str | None = None
    halflines: tuple | None = None
    balls: tuple | None = None
    events: tuple = ("E1", "E2", "E3")
    event_params: dict = field(default_factory=dict)
    beta: float = 0.5
    b: float = 1.0
    b2: float = 10.0
    acceptance: dict = field(default_factory=dict)
    source: str = ""
    digest: str = ""

    def with_seed(self, seed: int) -> "ExperimentConfig":
        cfg = replace(self, seed=int(seed))
        return replace(cfg, digest=cfg.compute_digest())

    def canonical(self) -> str:
        """Stable text form of every setting that affects results."""
        skip = {"source", "digest", "out"}
        parts = []
        for name in sorted(self.__dataclass_fields__):
            if name not in skip:
                parts.append(f"{name}={getattr(self, name)!r}")
        return "\n".join(parts)

    def compute_digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def sizes(self, n: int):
        """Per-sample sizes at grid value ``n`` (``n_j = ratio_j * n``, rounded)."""
        ratios = self.ratios or (1.0,) * self.k
        return [max(int(round(r * n)), 2) for r in ratios]


def _line_of(text, section, key=None):
    lines = text.splitlines()
    current = None
    for i, line in enumerate(lines, start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section:
            k = re.split(r"[=:]", s, maxsplit=1)[0].strip()
            if k == key:
                return i
    return 0


def _fail(path, text, section, key, msg):
    line = _line_of(text, section, key)
    where = f"{path}:{line}" if line else str(path)
    raise ConfigError(f"{where}: {msg}")


def parse_config(text: str, path="<config>", kind: str | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, strict=True, delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            _fail(path, text, section, None, f"unknown section [{section}]")
        for key, raw in parser.items(section):
            conv = SCHEMA[section].get(key)
            if conv is None:
                _fail(path, text, section, key, f"unknown key '{key}' in [{section}]")
            try:
                values[(section, key)] = conv(raw)
            except (ValueError, TypeError) as exc:
                _fail(path, text, section, key, f"bad value for '{key}': {exc}")

    def get(section, key, default=None):
        return values.get((section, key), default)

    if ("experiment", "seed") not in values:
        line = _line_of(text, "experiment")
        where = f"{path}:{line}" if line else str(path)
        raise ConfigError(f"{where}: [experiment] seed is mandatory")

    file_kind = get("experiment", "kind")
    if file_kind is not None and file_kind not in KINDS:
        _fail(path, text, "experiment", "kind", f"kind must be one of {KINDS}")
    if kind is not None and file_kind is not None and kind != file_kind:
        _fail(path, text, "experiment", "kind", f"config is for '{file_kind}', not '{kind}'")

    pop_params = {k: get("population", k) for k in ("df", "sd") if ("population", k) in values}
    ev_keys = ("C1", "C2", "C3", "u", "C", "m", "lambda", "r_exponent", "convention", "e5_samples")
    ev = {k: get("events", k) for k in ev_keys if ("events", k) in values}
    acc = {k: v for (s, k), v in values.items() if s == "acceptance"}

    cfg = ExperimentConfig(
        kind=kind or file_kind,
        seed=get("experiment", "seed"),
        out=get("experiment", "out", "results"),
        population=get("population", "name", "exp"),
        population_params=pop_params,
        statistic=get("statistic", "name", "standardized_mean"),
        k=get("statistic", "k", 1),
        d=get("statistic", "d", 1),
        q=get("statistic", "q"),
        nu=get("statistic", "nu", 1),
        n_grid=tuple(get("sampling", "n_grid", [25, 50, 100])),
        ratios=None if get("sampling", "ratios") is None else tuple(get("sampling", "ratios")),
        replicates=get("sampling", "replicates", 10),
        bootstrap_reps=get("sampling", "bootstrap_reps", 200_000),
        mc_samples=get("sampling", "mc_samples", 1_000_000),
        exact=get("sampling", "exact", False),
        sample_csv=get("sampling", "sample_csv"),
        halflines=None if get("regions", "halflines") is None else tuple(get("regions", "halflines")),
        balls=None if get("regions", "balls") is None else tuple(get("regions", "balls")),
        events=tuple(get("events", "events", ["E1", "E2", "E3"])),
        event_params=ev,
        beta=get("prop1", "beta", 0.5),
        b=get("prop1", "b", 1.0),
        b2=get("prop1", "b2", 10.0),
        acceptance=acc,
        source=str(path),
    )
    _validate(cfg, text, path)
    return replace(cfg, digest=cfg.compute_digest())


def _validate(cfg: ExperimentConfig, text, path):
    def fail(section, key, msg):
        _fail(path, text, section, key, msg)

    if not 0 <= cfg.nu <= MAX_NU:
        fail("statistic", "nu", f"nu must lie in [0, {MAX_NU}]")
    if cfg.q is not None and not 1 <= cfg.q <= MAX_Q:
        fail("statistic", "q", f"q must lie in [1, {MAX_Q}]")
    if cfg.k < 1 or cfg.d < 1:
        fail("statistic", "k", "k and d must be positive")
    if any(n < 2 for n in cfg.n_grid):
        fail("sampling", "n_grid", "every n must be at least 2")
    if list(cfg.n_grid) != sorted(set(cfg.n_grid)):
        fail("sampling", "n_grid", "n_grid must be strictly increasing")
    if cfg.ratios is not None:
        if len(cfg.ratios) != cfg.k:
            fail("sampling", "ratios", f"need one ratio per sample (k={cfg.k})")
        if min(cfg.ratios) <= 0:
            fail("sampling", "ratios", "ratios must be positive")
    if cfg.k > 1:
        for n in cfg.n_grid:
            sizes = cfg.sizes(n)
            if max(sizes) / min(sizes) > BALANCE_LIMIT:
                fail("sampling", "ratios", f"sample sizes {sizes} violate the balance limit {BALANCE_LIMIT:g}")
    for key in ("replicates", "bootstrap_reps", "mc_samples"):
        if getattr(cfg, key) < 1:
            fail("sampling", key, f"{key} must be positive")
    if cfg.kind in ("rates", "prop1") and len(cfg.n_grid) < 3:
        fail("sampling", "n_grid", "rate experiments need at least 3 grid points")
    if cfg.exact and cfg.k != 1:
        fail("sampling", "exact", "exact mode needs a single sample")
    if cfg.exact and max(cfg.n_grid) > 8:
        fail("sampling", "exact", "exact mode needs n <= 8")
    if cfg.halflines is not None and cfg.q not in (None, 1):
        fail("regions", "halflines", "half-lines need q = 1")
    if cfg.balls is not None:
        dims = {len(c) for c, _ in cfg.balls}
        if len(dims) != 1:
            fail("regions", "balls", "all ball centers must share one dimension")
        if any(not r > 0 for _, r in cfg.balls):
            fail("regions", "balls", "ball radii must be positive")
        if cfg.q is not None and dims != {cfg.q}:
            fail("regions", "balls", f"ball centers must have q={cfg.q} coordinates")
    for key in ("strictly_decreasing", "non_increasing", "max_final_events"):
        for e in cfg.acceptance.get(key, ()):
            if e not in cfg.events:
                fail("acceptance", key, f"{e} is not among the configured events")
    if not cfg.beta > 0:
        fail("prop1", "beta", "beta must be positive")
    if not cfg.b > 0:
        fail("prop1", "b", "b must be positive")
    conv = cfg.event_params.get("convention", "keep_small")
    if conv not in ("keep_small", "keep_large"):
        fail("events", "convention", "convention must be keep_small or keep_large")
    if cfg.event_params.get("r_exponent", "e2") not in ("e2", "reduced"):
        fail("events", "r_exponent", "r_exponent must be e2 or reduced")
    bad = [e for e in cfg.events if e not in ("E1", "E2", "E3", "E4", "E5", "prop1")]
    if bad:
        fail("events", "events", f"unknown events {bad}")


def load_config(path, kind: str | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, path, kind)


def default_config(kind: str, seed: int) -> ExperimentConfig:
    """Configuration used when a subcommand runs without ``--config``."""
    cfg = ExperimentConfig(kind=kind, seed=int(seed), source="<defaults>")
    return replace(cfg, digest=cfg.compute_digest())
