"""Frequency schedules: piecewise-constant trap settings and their exact simulation."""

from dataclasses import dataclass, field

import numpy as np

from ..chain import ChainConfig, equilibrium_positions, generator, model_from_positions
from ..errors import ConfigError
from ..gaussian import SymplecticMatrix, propagator

__all__ = [
    "Instruction",
    "Schedule",
    "simulate_schedule",
    "format_schedule",
    "parse_schedule",
]

_MAGIC = "radialmodes-schedule 1"


@dataclass(frozen=True)
class Instruction:
    """Hold the bare radial ``frequencies`` for ``duration`` (dimensionless)."""

    frequencies: tuple
    duration: float
    label: str = field(default="", compare=False)

    def __post_init__(self):
        f = tuple(float(x) for x in self.frequencies)
        if not self.duration >= 0 or not np.isfinite(self.duration):
            raise ValueError(f"duration must be finite and non-negative, got {self.duration}")
        if not all(np.isfinite(x) and x > 0 for x in f):
            raise ValueError("instruction frequencies must be finite and positive")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "duration", float(self.duration))


@dataclass(frozen=True)
class Schedule:
    """Ordered instructions applied to a chain that rests at ``base_config``.

    Quadratures are measured in units of the base effective frequencies, so the
    simulated map of a schedule is directly comparable with a target operation.
    """

    base_config: ChainConfig
    instructions: tuple = ()
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ins = tuple(self.instructions)
        for i in ins:
            if len(i.frequencies) != self.base_config.n:
                raise ValueError("instruction size differs from the chain size")
        object.__setattr__(self, "instructions", ins)

    @property
    def total_duration(self):
        return float(sum(i.duration for i in self.instructions))

    def __add__(self, other):
        if other.base_config != self.base_config:
            raise ValueError("cannot concatenate schedules for different chains")
        notes = dict(self.notes)
        for k, v in other.notes.items():
            notes.setdefault(k, v)
        return Schedule(self.base_config, self.instructions + other.instructions, notes)

    def __len__(self):
        return len(self.instructions)


def simulate_schedule(schedule, frame=None, positions=None):
    """Exact symplectic map of a schedule (no rotating-wave approximation).

    Parameters
    ----------
    frame : array_like, optional
        Reference frequencies for the quadratures; defaults to the effective
        frequencies of ``schedule.base_config``.
    positions : array_like, optional
        Ion positions; defaults to the equilibrium positions.
    """
    cfg = schedule.base_config
    u = equilibrium_positions(cfg.n) if positions is None else np.asarray(positions)
    if frame is None:
        frame = model_from_positions(cfg, u).effective_frequencies
    s = np.eye(2 * cfg.n)
    cache = {}
    for ins in schedule.instructions:
        if ins.duration == 0:
            continue
        h = cache.get(ins.frequencies)
        if h is None:
            h = generator(model_from_positions(cfg.with_frequencies(ins.frequencies), u), frame)
            cache[ins.frequencies] = h
        s = propagator(h, ins.duration).s @ s
    return SymplecticMatrix(s, tol=1e-8 * max(1.0, np.linalg.norm(s) ** 2))


def _floats(text):
    return ",".join(repr(float(x)) for x in text)


def format_schedule(schedule):
    """Line-oriented text form; :func:`parse_schedule` inverts it exactly."""
    cfg = schedule.base_config
    lines = [_MAGIC, f"base n={cfg.n} freqs={_floats(cfg.bare_frequencies)}"]
    if cfg.longitudinal_frequency_hz is not None:
        lines[-1] += f" wL={float(cfg.longitudinal_frequency_hz)!r}"
    for ins in schedule.instructions:
        lines.append(f"freqs={_floats(ins.frequencies)} dur={ins.duration!r}")
    return "\n".join(lines) + "\n"


def _parse_fields(line, lineno):
    out = {}
    for tok in line.split():
        if "=" not in tok:
            raise ConfigError(f"line {lineno}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def _parse_list(text, lineno):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad number list {text!r}") from exc


def parse_schedule(text):
    """Parse the output of :func:`format_schedule`.

    Raises
    ------
    ConfigError
        With the offending line number.
    """
    lines = [ln for ln in text.splitlines()]
    body = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip() and not ln.startswith("#")]
    if not body or body[0][1] != _MAGIC:
        raise ConfigError(f"line 1: missing header {_MAGIC!r}")
    if len(body) < 2 or not body[1][1].startswith("base "):
        raise ConfigError("line 2: missing 'base' line")
    lineno, base = body[1]
    f = _parse_fields(base[5:], lineno)
    try:
        n = int(f["n"])
        freqs = _parse_list(f["freqs"], lineno)
        wl = float(f["wL"]) if "wL" in f else None
        cfg = ChainConfig(n, freqs, wl)
    except KeyError as exc:
        raise ConfigError(f"line {lineno}: missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: {exc}") from exc
    ins = []
    for lineno, ln in body[2:]:
        f = _parse_fields(ln, lineno)
        if set(f) != {"freqs", "dur"}:
            raise ConfigError(f"line {lineno}: expected exactly 'freqs' and 'dur'")
        try:
            ins.append(Instruction(_parse_list(f["freqs"], lineno), float(f["dur"])))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    try:
        return Schedule(cfg, tuple(ins))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
