"""Scenario files: TOML documents with explicit units on every physical field.

A scenario names a chain, an initial state, a frequency schedule, one or more
noise cases and the observables to record. The whole document is validated
and converted to internal units (``w_L = 1``) before any computation starts.
Output times are in units of ``1/w_L`` (microseconds for ``w_L = 1 MHz``).
"""

import csv
import io
import json
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import units
from .bell import SETTING_FIELDS, BellSettings, b3_scan, nm_conversion
from .chain import ChainConfig, bare_for_effective, build_model, equilibrium_positions
from .compiler.compile import TargetOp, compile_target
from .compiler.decompose import Phase, TwoModeRotation, primitive_matrix
from .compiler.schedule import Instruction, Schedule, parse_schedule
from .compiler.synth import FrequencyPlan
from .dynamics import Bath, evolve_schedule
from .entanglement import Bipartition, all_bipartitions, first_lobe_peak, log_negativity
from .errors import ConfigError
from .gaussian import GaussianState, ground_state, rotation, squeezer, vacuum
from .transfer import Jitter, entanglement_swap_scenario, excitation_profile

__all__ = [
    "KINDS",
    "NoiseCase",
    "ScenarioConfig",
    "TargetConfig",
    "ResultTable",
    "load_toml",
    "parse_scenario",
    "load_scenario",
    "parse_target",
    "load_target",
    "bundled_scenarios",
    "bundled_targets",
    "list_scenarios",
    "run_scenario",
    "format_csv",
    "format_json",
]

KINDS = ("entanglement", "excitation", "swap", "bell")
_LABEL = re.compile(r"^[A-Za-z0-9_.-]+$")
_MISSING = object()


def load_toml(text, source="<string>"):
    """Parse TOML, reporting syntax errors with their line and column."""
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # end-of-document errors carry the position but not in the message
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        msg = getattr(exc, "msg", str(exc))
        where = f" (line {line}, column {col})" if line is not None else ""
        raise ConfigError(f"{source}: {msg}{where}") from exc


class _Table:
    """A TOML table that records which keys were read, to reject unknown ones."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'document'}: expected a table, got {type(data).__name__}")
        self.data = data
        self.path = path
        self.used = set()

    def _key(self, key):
        return f"{self.path}.{key}" if self.path else key

    def has(self, key):
        return key in self.data

    def get(self, key, default=_MISSING):
        self.used.add(key)
        if key not in self.data:
            if default is _MISSING:
                raise ConfigError(f"missing required field {self._key(key)!r}")
            return default
        return self.data[key]

    def str(self, key, default=_MISSING, choices=None):
        v = self.get(key, default)
        if v is default and default is not _MISSING:
            return v
        if not isinstance(v, str):
            raise ConfigError(f"{self._key(key)}: expected a string, got {v!r}")
        if choices is not None and v not in choices:
            raise ConfigError(f"{self._key(key)}: {v!r} is not one of {list(choices)}")
        return v

    def int(self, key, default=_MISSING, minimum=None):
        v = self.get(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self._key(key)}: expected an integer, got {v!r}")
        if minimum is not None and v < minimum:
            raise ConfigError(f"{self._key(key)}: must be at least {minimum}, got {v}")
        return v

    def number(self, key, default=_MISSING, positive=False):
        v = self.get(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
            raise ConfigError(f"{self._key(key)}: expected a finite number, got {v!r}")
        if positive and not v > 0:
            raise ConfigError(f"{self._key(key)}: must be positive, got {v}")
        return float(v)

    def quantity(self, key, convert, default=_MISSING):
        v = self.get(key, default)
        if v is default and default is not _MISSING:
            return v
        try:
            return convert(v)
        except ConfigError as exc:
            raise ConfigError(f"{self._key(key)}: {exc}") from None

    def quantities(self, key, convert, length=None):
        v = self.get(key)
        if not isinstance(v, list):
            raise ConfigError(f"{self._key(key)}: expected a list, got {v!r}")
        if length is not None and len(v) != length:
            raise ConfigError(f"{self._key(key)}: expected {length} entries, got {len(v)}")
        out = []
        for i, item in enumerate(v):
            try:
                out.append(convert(item))
            except ConfigError as exc:
                raise ConfigError(f"{self._key(key)}[{i}]: {exc}") from None
        return out

    def table(self, key, required=False):
        if key not in self.data:
            if required:
                raise ConfigError(f"missing required table {self._key(key)!r}")
            self.used.add(key)
            return None
        return _Table(self.get(key), self._key(key))

    def tables(self, key):
        """Array of tables (possibly absent)."""
        v = self.get(key, [])
        if not isinstance(v, list):
            raise ConfigError(f"{self._key(key)}: expected an array of tables")
        return [_Table(item, f"{self._key(key)}[{i}]") for i, item in enumerate(v)]

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ConfigError(f"{self.path or 'document'}: unknown field(s) {extra}")


def _one_of(t, keys):
    present = [k for k in keys if t.has(k)]
    if len(present) > 1:
        raise ConfigError(f"{t.path}: give only one of {present}")
    return present[0] if present else None


# --- chain, state, schedule, noise -------------------------------------------------


def _parse_chain(t):
    n = t.int("ions", minimum=1)
    omega_l = t.quantity("longitudinal_frequency", _longitudinal, 1e6)
    freq = lambda s: units.frequency(s, omega_l)  # noqa: E731
    key = _one_of(t, ("bare_frequency", "bare_frequencies", "effective_frequency",
                      "effective_frequencies", "ladder_ratio"))
    if key is None:
        raise ConfigError(
            f"{t.path}: give one of bare_frequency, bare_frequencies, effective_frequency, "
            "effective_frequencies or ladder_ratio"
        )
    if key == "ladder_ratio":
        cfg = FrequencyPlan.ladder(n, t.number(key, positive=True),
                                   longitudinal_frequency_hz=omega_l).config()
    else:
        if key.endswith("frequencies"):
            values = t.quantities(key, freq, length=n)
        else:
            values = [t.quantity(key, freq)] * n
        if any(not v > 0 for v in values):
            raise ConfigError(f"{t.path}.{key}: frequencies must be positive")
        if key.startswith("effective"):
            values = bare_for_effective(np.asarray(values), equilibrium_positions(n))
        cfg = ChainConfig(n, tuple(values), omega_l)
    t.finish()
    try:
        build_model(cfg)
    except Exception as exc:
        raise ConfigError(f"{t.path}: {exc}") from None
    return cfg, omega_l


def _longitudinal(text):
    value, unit = units.parse_quantity(text, "frequency")
    if unit == "wL" or not value > 0:
        raise ConfigError(f"longitudinal frequency must be a positive physical frequency, got {text!r}")
    return value


def _parse_step(t, cfg, omega_l):
    n = cfg.n
    freq = lambda s: units.frequency(s, omega_l)  # noqa: E731
    key = _one_of(t, ("frequency", "frequencies", "effective_frequency", "effective_frequencies"))
    if key is None:
        raise ConfigError(f"{t.path}: give frequency, frequencies, effective_frequency or effective_frequencies")
    values = t.quantities(key, freq, length=n) if key.endswith("ies") else [t.quantity(key, freq)] * n
    if any(not v > 0 for v in values):
        raise ConfigError(f"{t.path}.{key}: frequencies must be positive")
    if key.startswith("effective"):
        values = bare_for_effective(np.asarray(values), equilibrium_positions(n))
    duration = t.quantity("duration", lambda s: units.time(s, omega_l))
    if not duration >= 0:
        raise ConfigError(f"{t.path}.duration: must be non-negative")
    label = t.str("label", "")
    t.finish()
    return Instruction(tuple(float(v) for v in values), duration, label)


def _parse_schedule(t, cfg, omega_l, base_dir):
    """Returns a Schedule, or a TargetOp to be compiled at run time."""
    if t is None:
        return Schedule(cfg, ())
    key = _one_of(t, ("step", "file", "target"))
    repeat = t.int("repeat", 1, minimum=0)
    if key == "file":
        path = base_dir / t.str("file")
        try:
            sched = parse_schedule(path.read_text())
        except OSError as exc:
            raise ConfigError(f"{t.path}.file: {exc}") from None
        if sched.base_config.n != cfg.n or not np.allclose(
            sched.base_config.bare_frequencies, cfg.bare_frequencies, rtol=1e-9, atol=0
        ):
            raise ConfigError(f"{t.path}.file: schedule was built for a different chain")
        t.finish()
        return Schedule(cfg, sched.instructions * repeat)
    if key == "target":
        if repeat != 1:
            raise ConfigError(f"{t.path}.repeat: not supported with a compiled target")
        target = _parse_target_op(t.table("target"), cfg.n)
        t.finish()
        return target
    steps = [_parse_step(s, cfg, omega_l) for s in t.tables("step")]
    t.finish()
    return Schedule(cfg, tuple(steps) * repeat)


@dataclass(frozen=True)
class NoiseCase:
    """One noise setting; ``bath`` is ``None`` for closed evolution."""

    label: str
    bath: Bath = None


def _parse_noise(tables, omega_l):
    if not tables:
        return (NoiseCase("noiseless"),)
    cases = []
    for t in tables:
        label = t.str("label")
        if not _LABEL.match(label):
            raise ConfigError(f"{t.path}.label: use letters, digits, '.', '_' or '-' only")
        if any(c.label == label for c in cases):
            raise ConfigError(f"{t.path}.label: duplicate label {label!r}")
        key = _one_of(t, ("loss_rate", "heating_rate"))
        bath = None
        if key is not None:
            temp = t.quantity("temperature", units.temperature)
            if key == "loss_rate":
                gamma = t.quantity("loss_rate", lambda s: units.rate(s, omega_l))
                bath = Bath(gamma, temp, omega_l)
            else:
                eps = t.quantity("heating_rate", lambda s: units.parse_quantity(s, "rate"))
                if eps[1] == "wL":
                    raise ConfigError(f"{t.path}.heating_rate: give a physical rate")
                ref = t.quantity("reference_frequency", lambda s: units.frequency(s, omega_l))
                bath = Bath.from_heating_rate(eps[0], temp, ref, omega_l)
        t.finish()
        cases.append(NoiseCase(label, bath))
    return tuple(cases)


def _parse_initial(t, cfg, base_dir):
    if t is None:
        return None
    kind = t.str("type", "ground", choices=("ground", "vacuum", "covariance"))
    if kind == "ground":
        t.finish()
        return None
    if kind == "vacuum":
        # every ion in the ground state of its own oscillator, no Coulomb correlations
        t.finish()
        return vacuum(cfg.n)
    path = base_dir / t.str("file")
    t.finish()
    try:
        cm = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{t.path}.file: {exc}") from None
    if cm.shape != (2 * cfg.n, 2 * cfg.n):
        raise ConfigError(f"{t.path}.file: expected a {2 * cfg.n}x{2 * cfg.n} covariance matrix")
    try:
        state = GaussianState(cm)
    except Exception as exc:
        raise ConfigError(f"{t.path}.file: {exc}") from None
    if not state.is_physical():
        raise ConfigError(f"{t.path}.file: covariance matrix violates the uncertainty relation")
    return state


def _parse_sampling(t, omega_l):
    if t is None:
        return {"start": 0.0, "points": 201}
    tm = lambda s: units.time(s, omega_l)  # noqa: E731
    if t.has("times"):
        times = np.array(t.quantities("times", tm), dtype=float)
        t.finish()
        if times.size == 0 or np.any(np.diff(times) < 0) or times[0] < 0:
            raise ConfigError(f"{t.path}.times: need a non-empty, non-decreasing list of times >= 0")
        return {"times": times}
    out = {"start": t.quantity("start", tm, 0.0), "points": t.int("points", 201, minimum=1)}
    if t.has("stop"):
        out["stop"] = t.quantity("stop", tm)
        if out["stop"] < out["start"]:
            raise ConfigError(f"{t.path}: stop precedes start")
    t.finish()
    return out


# --- observables ---------------------------------------------------------------------


def _parse_ions(text, n, where):
    parts = text.split(",") if "," in text else list(text)
    try:
        ions = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{where}: cannot read ion numbers in {text!r}") from None
    if any(not 1 <= i <= n for i in ions) or len(set(ions)) != len(ions):
        raise ConfigError(f"{where}: ions in {text!r} must be distinct and within 1..{n}")
    return [i - 1 for i in ions]


def _parse_entanglement(t, n):
    items = t.get("entanglement")
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{t._key('entanglement')}: expected a non-empty list")
    where = t._key("entanglement")
    out = []
    for item in items:
        if not isinstance(item, str):
            raise ConfigError(f"{where}: entries must be strings, got {item!r}")
        if item == "all":
            out.extend(("partition", p) for p in all_bipartitions(n))
        elif item == "pairs":
            out.extend(("pair", (j, k)) for j in range(n) for k in range(j + 1, n))
        elif "|" in item:
            a, b = item.split("|", 1)
            pa = _parse_ions(a, n, where)
            if b and sorted(pa + _parse_ions(b, n, where)) != list(range(n)):
                raise ConfigError(f"{where}: {item!r} is not a split of all {n} ions")
            try:
                out.append(("partition", Bipartition(frozenset(pa), n)))
            except Exception as exc:
                raise ConfigError(f"{where}: {exc}") from None
        elif "-" in item:
            a, b = item.split("-", 1)
            pair = _parse_ions(a, n, where) + _parse_ions(b, n, where)
            if len(pair) != 2 or pair[0] == pair[1]:
                raise ConfigError(f"{where}: {item!r} must name two different ions")
            out.append(("pair", tuple(sorted(pair))))
        else:
            raise ConfigError(f"{where}: unknown entry {item!r}; use 'all', 'pairs', '1|234' or '1-2'")
    if n < 2:
        raise ConfigError(f"{where}: entanglement needs at least two ions")
    seen, unique = set(), []
    for kind, obj in out:
        lab = _obs_label(kind, obj)
        if lab not in seen:
            seen.add(lab)
            unique.append((kind, obj))
    return unique


def _obs_label(kind, obj):
    if kind == "partition":
        return obj.label()
    return f"{obj[0] + 1}-{obj[1] + 1}"


def _parse_bell(t, omega_l):
    mass = t.quantity("ion_mass", units.mass)
    if not mass > 0:
        raise ConfigError(f"{t.path}.ion_mass: must be positive")
    conv = t.get("conversion_frequency", "bare")
    if conv not in ("bare", "effective"):
        conv = t.quantity("conversion_frequency", lambda s: units.frequency(s, omega_l))
        if not conv > 0:
            raise ConfigError(f"{t.path}.conversion_frequency: must be positive")
    frame = t.str("frame", "final", choices=("final", "initial"))
    settings = {k: [0.0] * 3 for k in ("x", "p", "xp", "pp")}
    st = t.table("settings")
    if st is not None:
        for k in settings:
            if st.has(k):
                settings[k] = st.quantities(k, lambda s: units.length(s) * 1e9, length=3)
        st.finish()
    scan = t.table("scan")
    axes, ties = {}, {}
    if scan is not None:
        tie_t = scan.table("ties")
        for key in list(scan.data):
            if key == "ties":
                continue
            if key not in SETTING_FIELDS:
                raise ConfigError(f"{scan.path}: unknown setting {key!r}; use one of {list(SETTING_FIELDS)}")
            ax = scan.table(key)
            lo = ax.quantity("start", units.length) * 1e9
            hi = ax.quantity("stop", units.length) * 1e9
            step = ax.quantity("step", units.length) * 1e9
            ax.finish()
            if not step > 0 or hi < lo:
                raise ConfigError(f"{ax.path}: need step > 0 and stop >= start")
            count = int(round((hi - lo) / step)) + 1
            axes[key] = lo + step * np.arange(count)
        if tie_t is not None:
            for a in list(tie_t.data):
                b = tie_t.str(a)
                if a not in SETTING_FIELDS or b not in axes:
                    raise ConfigError(f"{tie_t.path}.{a}: must tie a setting to a scanned axis")
                ties[a] = b
            tie_t.finish()
        scan.finish()
    t.finish()
    return {"mass_u": mass / units.AMU, "conversion": conv, "frame": frame,
            "settings_nm": settings, "axes_nm": axes, "ties": ties}


def _parse_swap(t, omega_l):
    out = {
        "strategy": t.str("strategy", choices=("relay", "direct")),
        "entangle_frequency": t.quantity("entangle_frequency", lambda s: units.frequency(s, omega_l)),
        "entangle_time": t.quantity("entangle_time", lambda s: units.time(s, omega_l)),
        "park": t.number("park", 2.0, positive=True),
        "samples": t.int("samples", 40, minimum=1),
        "segment_times": None,
        "jitter": None,
    }
    if t.has("segment_times"):
        out["segment_times"] = tuple(t.quantities("segment_times", lambda s: units.time(s, omega_l)))
    j = t.table("jitter")
    if j is not None:
        key = _one_of(j, ("frequency_squared", "frequency"))
        if key is None:
            raise ConfigError(f"{j.path}: give frequency_squared or frequency")
        if key == "frequency":
            width = j.quantity(key, lambda s: units.frequency(s, omega_l))
            quantity = "omega"
        else:
            width = j.quantity(key, lambda s: units.frequency_squared(s, omega_l))
            quantity = "omega2"
        dur = j.quantity("duration", lambda s: units.time(s, omega_l), 0.0)
        j.finish()
        if width < 0 or dur < 0:
            raise ConfigError(f"{j.path}: half-widths must be non-negative")
        out["jitter"] = Jitter(width, dur, quantity)
    t.finish()
    return out


# --- configs ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario in internal units.

    ``schedule`` is a :class:`Schedule`, or a :class:`TargetOp` compiled when
    the scenario runs.
    """

    name: str
    description: str
    kind: str
    chain: ChainConfig
    omega_l: float
    schedule: object
    noise: tuple
    sampling: dict
    observables: dict
    initial_state: GaussianState = None
    source: str = "<string>"
    output_format: str = "csv"


def parse_scenario(text, source="<string>", base_dir=None):
    """Validate a scenario document and convert it to internal units.

    Raises
    ------
    ConfigError
        On TOML syntax errors (with line and column) and on any schema or
        range violation (with the dotted field path).
    """
    base_dir = Path(base_dir) if base_dir is not None else Path(".")
    doc = _Table(load_toml(text, source), "")
    name = doc.str("name")
    if not _LABEL.match(name):
        raise ConfigError(f"name: use letters, digits, '.', '_' or '-' only, got {name!r}")
    description = doc.str("description")
    kind = doc.str("kind", choices=KINDS)
    cfg, omega_l = _parse_chain(doc.table("chain", required=True))
    initial = _parse_initial(doc.table("initial_state"), cfg, base_dir)
    noise = _parse_noise(doc.tables("noise"), omega_l)
    observables = {}
    if kind == "swap":
        for key in ("schedule", "initial_state", "sampling", "observables"):
            if doc.has(key):
                raise ConfigError(f"{key}: not used by swap scenarios; the protocol builds its own")
        if any(c.bath is not None for c in noise):
            raise ConfigError("noise: swap scenarios are closed; remove the bath")
        eff = build_model(cfg).effective_frequencies
        if np.ptp(eff) > 1e-9 * eff.max() or cfg.n < 3:
            raise ConfigError("chain: swap scenarios need at least 3 ions with equal effective frequencies")
        observables["swap"] = _parse_swap(doc.table("swap", required=True), omega_l)
        schedule = Schedule(cfg, ())
        sampling = {}
    else:
        schedule = _parse_schedule(doc.table("schedule"), cfg, omega_l, base_dir)
        sampling = _parse_sampling(doc.table("sampling"), omega_l)
        obs = doc.table("observables", required=kind != "bell")
        if kind == "entanglement":
            observables["entanglement"] = _parse_entanglement(obs, cfg.n)
            observables["threshold"] = obs.number("threshold", 1e-9)
        elif kind == "excitation":
            ex = obs.table("excitation", required=True)
            src = ex.int("source", 1, minimum=1)
            if src > cfg.n:
                raise ConfigError(f"{ex.path}.source: ion {src} outside a chain of {cfg.n}")
            observables["excitation"] = {
                "source": src - 1,
                "frame": ex.str("frame", "evolution", choices=("evolution", "initial")),
                "threshold": ex.number("leakage_threshold", 1e-2, positive=True),
            }
            ex.finish()
            if initial is not None:
                raise ConfigError("initial_state: excitation profiles start from one phonon at the source")
            if any(c.bath is not None for c in noise):
                raise ConfigError("noise: excitation profiles are computed for closed evolution")
        elif kind == "bell":
            if cfg.n != 3:
                raise ConfigError("chain.ions: Bell-Klyshko scenarios need exactly 3 ions")
            if obs is not None:
                raise ConfigError("observables: bell scenarios use the [bell] table")
            observables["bell"] = _parse_bell(doc.table("bell", required=True), omega_l)
        if obs is not None:
            obs.finish()
    out = doc.table("output")
    fmt = "csv"
    if out is not None:
        fmt = out.str("format", "csv", choices=("csv", "json"))
        out.finish()
    doc.finish()
    return ScenarioConfig(name, description, kind, cfg, omega_l, schedule, noise, sampling,
                          observables, initial, source, fmt)


def load_scenario(path):
    """Load a scenario from a file path or the name of a bundled scenario."""
    p = Path(path)
    if not p.exists() and not p.suffix and path in bundled_scenarios():
        return parse_scenario(bundled_scenarios()[path].read_text(), source=f"<bundled {path}>")
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    return parse_scenario(text, source=str(p), base_dir=p.parent)


def bundled_scenarios():
    """Map name -> resource of every scenario shipped with the package."""
    root = resources.files("radialmodes") / "scenarios"
    out = {}
    for item in root.iterdir():
        if item.name.endswith(".toml"):
            out[item.name[:-5]] = item
    return dict(sorted(out.items()))


def list_scenarios():
    """``(name, description)`` of each bundled scenario."""
    out = []
    for name, res in bundled_scenarios().items():
        cfg = parse_scenario(res.read_text(), source=f"<bundled {name}>")
        out.append((cfg.name, cfg.description))
    return out


# --- compile targets -----------------------------------------------------------------


@dataclass(frozen=True)
class TargetConfig:
    description: str
    chain: ChainConfig
    target: TargetOp
    tolerance: float


def _parse_target_op(t, n):
    ions = t.get("ions")
    if not isinstance(ions, list) or not ions or any(isinstance(i, bool) or not isinstance(i, int) for i in ions):
        raise ConfigError(f"{t._key('ions')}: expected a non-empty list of ion numbers")
    if any(not 1 <= i <= n for i in ions) or len(set(ions)) != len(ions):
        raise ConfigError(f"{t._key('ions')}: ions must be distinct and within 1..{n}")
    m = len(ions)
    kind = t.str("kind", choices=("matrix", "identity", "phase", "squeeze", "beam_splitter"))
    if kind == "matrix":
        raw = t.get("matrix")
        try:
            s = np.array(raw, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"{t._key('matrix')}: expected a numeric matrix") from None
        if s.shape != (2 * m, 2 * m) or not np.all(np.isfinite(s)):
            raise ConfigError(f"{t._key('matrix')}: expected a finite {2 * m}x{2 * m} matrix")
    elif kind == "identity":
        s = np.eye(2 * m)
    elif kind in ("phase", "squeeze"):
        if m != 1:
            raise ConfigError(f"{t._key('ions')}: a {kind} acts on one ion")
        if kind == "phase":
            s = rotation(t.number("phi"))
        else:
            s = squeezer(np.exp(t.number("r")))
    else:
        if m != 2:
            raise ConfigError(f"{t._key('ions')}: a beam splitter acts on two ions")
        s = primitive_matrix(TwoModeRotation(0, 1, t.number("theta"), t.number("phi", 0.0)), 2)
    t.finish()
    try:
        return TargetOp(tuple(i - 1 for i in ions), s)
    except ValueError as exc:
        raise ConfigError(f"{t.path}: {exc}") from None


def parse_target(text, source="<string>"):
    """Validate a compile-target document."""
    doc = _Table(load_toml(text, source), "")
    description = doc.str("description", "")
    cfg, _ = _parse_chain(doc.table("chain", required=True))
    target = _parse_target_op(doc.table("target", required=True), cfg.n)
    tol = doc.number("tolerance", 1e-3, positive=True)
    doc.finish()
    return TargetConfig(description, cfg, target, tol)


def bundled_targets():
    """Map name -> resource of every compile target shipped with the package."""
    root = resources.files("radialmodes") / "targets"
    return dict(sorted((i.name[:-5], i) for i in root.iterdir() if i.name.endswith(".toml")))


def load_target(path):
    """Load a compile target from a file path or the name of a bundled target."""
    p = Path(path)
    if not p.exists() and not p.suffix and path in bundled_targets():
        return parse_target(bundled_targets()[path].read_text(), source=f"<bundled {path}>")
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read target {path}: {exc}") from None
    return parse_target(text, source=str(p))


# --- running ---------------------------------------------------------------------------


@dataclass
class ResultTable:
    """Rows of one output file, plus a short summary."""

    name: str
    columns: tuple
    rows: list
    summary: dict = field(default_factory=dict)


def _resolve_schedule(cfg):
    if isinstance(cfg.schedule, TargetOp):
        return compile_target(cfg.schedule, cfg.chain)
    return cfg.schedule


def _sample_times(cfg, schedule):
    s = cfg.sampling
    if "times" in s:
        times = s["times"]
    else:
        stop = s.get("stop", schedule.total_duration)
        if s["points"] == 1 or stop == s["start"]:
            times = np.array([stop])
        else:
            times = np.linspace(s["start"], stop, s["points"])
    return np.asarray(times, dtype=float)


def _run_entanglement(cfg, schedule, times):
    model = build_model(cfg.chain)
    init = cfg.initial_state or ground_state(model)
    if times[-1] > schedule.total_duration * (1 + 1e-12) + 1e-12:
        raise ConfigError(f"sampling: last time {times[-1]:g} is beyond the schedule end "
                          f"{schedule.total_duration:g}")
    obs = cfg.observables["entanglement"]
    labels = [_obs_label(k, o) for k, o in obs]
    tables = []
    for case in cfg.noise:
        states = evolve_schedule(init, schedule, times, bath=case.bath)
        values = np.zeros((len(times), len(obs)))
        for i, st in enumerate(states):
            for j, (kind, o) in enumerate(obs):
                if kind == "partition":
                    values[i, j] = log_negativity(st, o)
                else:
                    values[i, j] = log_negativity(st.reduced(list(o)), [0])
        rows = [(t, lab, values[i, j]) for i, t in enumerate(times) for j, lab in enumerate(labels)]
        summary = {f"max E_N[{lab}]": float(values[:, j].max()) for j, lab in enumerate(labels)}
        summary.update({f"first peak time[{lab}]": first_lobe_peak(times, values[:, j])
                        for j, lab in enumerate(labels) if "-" in lab})
        parts = [j for j, (k, _) in enumerate(obs) if k == "partition"]
        if len(parts) == 2 ** (cfg.chain.n - 1) - 1:
            ok = np.all(values[:, parts] > cfg.observables["threshold"], axis=1)
            summary["completely inseparable fraction"] = float(ok.mean())
        tables.append(ResultTable(f"{cfg.name}-{case.label}", ("t", "partition", "E_N"), rows, summary))
    return tables


def _run_excitation(cfg, schedule, times):
    ex = cfg.observables["excitation"]
    frame = None if ex["frame"] == "evolution" else "initial"
    if len(schedule) == 1:
        evolution = schedule.instructions[0].frequencies
    else:
        if frame is not None:
            raise ConfigError("observables.excitation.frame: 'initial' needs a single-step schedule")
        evolution = schedule
    if len(schedule) == 0:
        evolution = cfg.chain.bare_frequencies
    prof = excitation_profile(cfg.chain, evolution, times, source=ex["source"], frame=frame,
                              threshold=ex["threshold"])
    n = cfg.chain.n
    rows = [(t, site + 1, prof.probabilities[i, site]) for i, t in enumerate(times) for site in range(n)]
    summary = {"final P[last ion]": float(prof.probabilities[-1, -1]),
               "max leakage": float(prof.leakage.max())}
    return [ResultTable(f"{cfg.name}-{cfg.noise[0].label}", ("t", "site", "P"), rows, summary)]


def _run_swap(cfg, seed):
    sw = cfg.observables["swap"]
    resonance = float(build_model(cfg.chain).effective_frequencies[0])
    rng = np.random.default_rng(seed)
    res = entanglement_swap_scenario(
        sw["strategy"], n=cfg.chain.n, resonance=resonance,
        entangle_frequency=sw["entangle_frequency"], entangle_time=sw["entangle_time"],
        park=sw["park"], segment_times=sw["segment_times"], samples=sw["samples"],
        jitter=sw["jitter"], rng=rng,
    )
    keys = sorted(res.negativity)
    rows = [(t, f"1-{k + 1}", res.negativity[k][i]) for i, t in enumerate(res.times) for k in keys]
    summary = {"segment times": list(res.segment_times), f"final E_N[1-{cfg.chain.n}]": res.final}
    return [ResultTable(f"{cfg.name}-{cfg.noise[0].label}", ("t", "partition", "E_N"), rows, summary)]


def _run_bell(cfg, schedule, times):
    b = cfg.observables["bell"]
    chain = cfg.chain
    last = schedule.instructions[-1].frequencies if len(schedule) else chain.bare_frequencies
    model0 = build_model(chain)
    final_model = build_model(chain.with_frequencies(last))
    frame = final_model.effective_frequencies if b["frame"] == "final" else model0.effective_frequencies
    if b["conversion"] == "bare":
        conv = np.asarray(last, dtype=float)
    elif b["conversion"] == "effective":
        conv = np.asarray(frame, dtype=float)
    else:
        conv = np.full(chain.n, b["conversion"])
    k = nm_conversion(1.0, b["mass_u"], conv * cfg.omega_l)
    s = b["settings_nm"]
    base = BellSettings(*(tuple(np.asarray(s[key]) * k) for key in ("x", "p", "xp", "pp")))
    # scanned fields are in nm; each belongs to one observer
    scale = {f: k[int(re.search(r"\d", f).group()) - 1] for f in SETTING_FIELDS}
    axes = {a: v * scale[a] for a, v in b["axes_nm"].items()} or {"x1": np.array([base.x[0]])}
    to_nm = np.array([1.0 / scale[f] for f in SETTING_FIELDS])
    tables = []
    for case in cfg.noise:
        if cfg.initial_state is not None:
            init = cfg.initial_state
            if b["frame"] == "final":
                raise ConfigError("bell.frame: an explicit initial state needs frame = 'initial'")
        else:
            init = ground_state(model0, frame)
        state = evolve_schedule(init, schedule, bath=case.bath, frame=frame)[-1]
        scan = b3_scan(state, base, axes, ties=b["ties"])
        rows = [tuple(row * to_nm) + (v,) for row, v in zip(scan.settings, scan.values)]
        best, vmax = scan.best
        summary = {"max B3": vmax,
                   "argmax (nm)": dict(zip(SETTING_FIELDS, (np.array(best.as_row()) * to_nm).tolist()))}
        summary.update({f"violation width[{a}] (nm)": scan.violation_width(a) * to_nm[SETTING_FIELDS.index(a)]
                        for a in scan.axes})
        tables.append(ResultTable(f"{cfg.name}-{case.label}", SETTING_FIELDS + ("B3",), rows, summary))
    return tables


def run_scenario(cfg, seed=0):
    """Run a validated scenario; returns one :class:`ResultTable` per noise case."""
    if cfg.kind == "swap":
        return _run_swap(cfg, seed)
    schedule = _resolve_schedule(cfg)
    times = _sample_times(cfg, schedule)
    if cfg.kind == "entanglement":
        return _run_entanglement(cfg, schedule, times)
    if cfg.kind == "excitation":
        return _run_excitation(cfg, schedule, times)
    return _run_bell(cfg, schedule, times)


# --- output ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.12g}"


def format_csv(table):
    """CSV text with 12 significant digits and LF line endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, str):
        return v
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(_fmt(v))


def format_json(table):
    doc = {"name": table.name, "columns": list(table.columns),
           "rows": _jsonable(table.rows), "summary": _jsonable(table.summary)}
    return json.dumps(doc, indent=1) + "\n"
