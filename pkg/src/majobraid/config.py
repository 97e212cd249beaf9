"""INI-style run configuration.

Sections and keys (all optional; defaults shown)::

    [device]
    # accidental Majorana count per island (b, g, 1, 2, 3), each even
    1 = 0

    [disorder]
    # delta_<island>_<n> couples gamma_{island,n} and gamma_{island,n+1}
    delta_1_1 = 0.0
    # eps_<island><side> with side 1 or 2, e.g. eps_11, eps_b2
    eps_11 = 0.0

    [path]
    kind = circular          ; circular | square
    delta_max = 500
    delta_min = 0.05         ; default 1e-4 * delta_max
    t0 = 1
    direction = forward      ; forward | reversed
    start_corner = 2
    steps_per_leg = 2000

    [sweep]
    variable = delta         ; delta | delta_max | eps11 | detuning
    start = 0
    stop = 600
    points = 301
    scale = linear           ; linear | log
    couplings = b2, 11, 12, 21
    sector = max             ; max | +1 | -1 (pair parity)
    check_convergence = true

    [pflip]
    n_max = 4
    shots = 0                ; 0 = exact probabilities
    p_anc = 1
    parity_1 = 1             ; initial parity of each island with accidentals

    [readout]
    omega0 = 10 ... (any ReadoutParams field; bus_delta is a comma list)

Units: energies in Delta_0, times in T_0 = hbar / Delta_0, frequencies in
rad / T_0.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import COUPLINGS
from .readout import ReadoutError, ReadoutParams
from .schedule import PathSpec
from .system import ConfigError, DeviceSpec, DisorderConfig

SECTIONS = ("device", "disorder", "path", "sweep", "pflip", "readout")
SWEEP_VARIABLES = ("delta", "delta_max", "eps11", "detuning")
UNITS = "energies in Delta_0; times in T_0 = hbar/Delta_0; frequencies in rad/T_0"


@dataclass(frozen=True)
class SweepSpec:
    variable: str = "delta"
    start: float = 0.0
    stop: float = 600.0
    points: int = 301
    scale: str = "linear"
    couplings: tuple[str, ...] = ("b2", "11", "12", "21")
    sector: int | None = None
    check_convergence: bool = True

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        if self.points < 2:
            raise ConfigError("a sweep needs at least 2 points")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError("sweep range must be finite")
        if self.scale not in ("linear", "log"):
            raise ConfigError("scale must be linear or log")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ConfigError("log sweeps need positive endpoints")
        bad = [c for c in self.couplings if c not in COUPLINGS]
        if bad:
            raise ConfigError(f"unknown couplings {bad}; expected a subset of {COUPLINGS}")
        if self.sector not in (None, 1, -1):
            raise ConfigError("sector must be max, +1 or -1")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class PflipSpec:
    n_max: int = 4
    shots: int = 0
    p_anc: int = 1
    parities: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if self.n_max < 1:
            raise ConfigError("n_max must be at least 1")
        if self.shots < 0:
            raise ConfigError("shots must be nonnegative")
        if self.p_anc not in (1, -1):
            raise ConfigError("p_anc must be +1 or -1")
        if any(p not in (1, -1) for _, p in self.parities):
            raise ConfigError("island parities must be +1 or -1")


@dataclass(frozen=True)
class RunConfig:
    device: DeviceSpec = field(default_factory=DeviceSpec)
    disorder: DisorderConfig = field(default_factory=DisorderConfig)
    path: PathSpec = field(default_factory=lambda: PathSpec(start_corner=2))
    steps_per_leg: int = 2000
    sweep: SweepSpec = field(default_factory=SweepSpec)
    pflip: PflipSpec = field(default_factory=PflipSpec)
    readout: ReadoutParams = field(default_factory=ReadoutParams)
    text: str = ""

    @property
    def hash(self) -> str:
        return config_hash(self.text)

    def with_path(self, kind: str) -> "RunConfig":
        p = self.path
        path = PathSpec(kind, p.delta_max, p.delta_min, p.t0, p.direction, p.start_corner)
        return RunConfig(self.device, self.disorder, path, self.steps_per_leg, self.sweep, self.pflip, self.readout, self.text + f"\n#path={kind}")


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _float(sec, key, default):
    try:
        return sec.getfloat(key, fallback=default)
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: {exc}") from None


def _int(sec, key, default):
    try:
        return sec.getint(key, fallback=default)
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: {exc}") from None


def _parity(text: str) -> int | None:
    text = text.strip().lower()
    if text in ("max", "none", ""):
        return None
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"sector must be max, +1 or -1 (got {text!r})") from None


def parse_config(text: str) -> RunConfig:
    """Build a :class:`RunConfig` from INI text; raises ConfigError on bad input."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = set(cp.sections()) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    get = lambda name: cp[name] if cp.has_section(name) else cp[cp.default_section]  # noqa: E731

    try:
        device = DeviceSpec({k: int(v) for k, v in get("device").items()})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    delta, eps = {}, {}
    for key, val in get("disorder").items():
        parts = key.split("_")
        if not (parts[0] == "delta" and len(parts) == 3 or parts[0] == "eps" and len(parts) == 2):
            raise ConfigError(f"unknown disorder key {key!r}")
        try:
            if parts[0] == "delta":
                delta[(parts[1], int(parts[2]))] = float(val)
            else:
                eps[parts[1]] = float(val)
        except ValueError:
            raise ConfigError(f"[disorder] {key}: not a number") from None
    disorder = DisorderConfig(delta, eps)

    ps = get("path")
    try:
        dmax = _float(ps, "delta_max", 500.0)
        dmin = ps.get("delta_min")
        path = PathSpec(
            ps.get("kind", "circular"),
            dmax,
            None if dmin is None else float(dmin),
            _float(ps, "t0", 1.0),
            ps.get("direction", "forward"),
            _int(ps, "start_corner", 2),
        )
    except ValueError as exc:
        raise ConfigError(f"[path] {exc}") from None
    steps = _int(ps, "steps_per_leg", 2000)
    if steps < 2 or steps % 2:
        raise ConfigError("steps_per_leg must be an even number >= 2 (Simpson quadrature)")

    sw = get("sweep")
    couplings = tuple(c.strip() for c in sw.get("couplings", "b2, 11, 12, 21").split(",") if c.strip())
    try:
        check = sw.getboolean("check_convergence", fallback=True)
    except ValueError as exc:
        raise ConfigError(f"[sweep] {exc}") from None
    sweep = SweepSpec(
        sw.get("variable", "delta"),
        _float(sw, "start", 0.0),
        _float(sw, "stop", 600.0),
        _int(sw, "points", 301),
        sw.get("scale", "linear"),
        couplings,
        _parity(sw.get("sector", "max")),
        check,
    )

    pf = get("pflip")
    extra = set(pf) - {"n_max", "shots", "p_anc"} - {f"parity_{k}" for k in device.n_accidental}
    if extra:
        raise ConfigError(f"unknown pflip keys {sorted(extra)} (parity_<island> needs accidental modes)")
    parities = tuple(sorted((k[7:], _int(pf, k, 1)) for k in pf if k.startswith("parity_")))
    pflip = PflipSpec(_int(pf, "n_max", 4), _int(pf, "shots", 0), _int(pf, "p_anc", 1), parities)

    ro = get("readout")
    kw = {}
    for key, val in ro.items():
        if key not in ReadoutParams.__dataclass_fields__:
            raise ConfigError(f"unknown readout key {key!r}")
        try:
            if key in ("bus_delta", "bus_eps"):
                kw[key] = tuple(float(x) for x in val.split(",") if x.strip())
            elif key == "n_max":
                kw[key] = int(val)
            else:
                kw[key] = float(val)
        except ValueError:
            raise ConfigError(f"[readout] {key}: not a number") from None
    try:
        readout = ReadoutParams(**kw)
    except ReadoutError as exc:
        raise ConfigError(f"[readout] {exc}") from None

    return RunConfig(device, disorder, path, steps, sweep, pflip, readout, text)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return parse_config("")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
