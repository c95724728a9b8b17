"""Evolution of Gaussian states along frequency schedules, with an optional thermal bath."""

from dataclasses import dataclass

import numpy as np

from .chain import equilibrium_positions, generator, model_from_positions
from .errors import StateError
from .gaussian import NoiseModel, evolve_closed, evolve_open, thermal_occupation

__all__ = ["Bath", "evolve_schedule", "steady_cm_in_frame"]


@dataclass(frozen=True)
class Bath:
    """Thermal bath at ``temperature`` (K) with loss rate ``gamma`` (units of ``w_L``).

    Occupations follow each ion's instantaneous effective frequency, so the
    heating rate of ion ``j`` is ``gamma * N_j``.
    """

    gamma: float
    temperature: float
    omega_l: float = 1e6

    def __post_init__(self):
        if not self.gamma >= 0 or not self.temperature >= 0 or not self.omega_l > 0:
            raise StateError("bath needs gamma >= 0, temperature >= 0 and omega_l > 0")

    @classmethod
    def from_loss_rate(cls, gamma_hz, temperature, omega_l=1e6):
        return cls(float(gamma_hz) / omega_l, float(temperature), omega_l)

    @classmethod
    def from_heating_rate(cls, epsilon_hz, temperature, reference_frequency, omega_l=1e6):
        """Bath whose heating rate is ``epsilon_hz`` at the dimensionless ``reference_frequency``."""
        n = thermal_occupation(reference_frequency * omega_l, temperature)
        if n == 0:
            raise StateError("a heating rate needs a non-zero temperature")
        return cls(float(epsilon_hz) / n / omega_l, float(temperature), omega_l)

    def occupations(self, effective):
        return tuple(thermal_occupation(w * self.omega_l, self.temperature) for w in effective)

    def noise(self, effective):
        return NoiseModel(self.gamma, self.occupations(effective))

    def heating_rates_hz(self, effective):
        return tuple(self.gamma * self.omega_l * n for n in self.occupations(effective))


def steady_cm_in_frame(noise, effective, frame):
    """Bath covariance matrix with each ion's quadratures rescaled from its own
    frequency to the reference ``frame``."""
    f = np.asarray(frame, dtype=float)
    w = np.asarray(effective, dtype=float)
    scale = np.concatenate([np.sqrt(f / w), np.sqrt(w / f)])
    return scale[:, None] * noise.steady_cm() * scale[None, :]


def evolve_schedule(state, schedule, times=None, bath=None, frame=None, positions=None):
    """States along ``schedule`` at the requested times.

    Parameters
    ----------
    state : GaussianState
        Initial state, quadratures in units of ``frame``.
    times : array_like, optional
        Non-decreasing sample times from the start of the schedule; defaults
        to the end of the schedule only.
    bath : Bath, optional
        Thermal bath; closed evolution if omitted.
    frame : array_like, optional
        Reference frequencies; default the base effective frequencies.

    Returns
    -------
    list of GaussianState
    """
    cfg = schedule.base_config
    u = equilibrium_positions(cfg.n) if positions is None else np.asarray(positions, dtype=float)
    if frame is None:
        frame = model_from_positions(cfg, u).effective_frequencies
    total = schedule.total_duration
    times = np.array([total] if times is None else times, dtype=float)
    if times.size and (np.any(np.diff(times) < 0) or times[0] < 0 or times[-1] > total * (1 + 1e-12) + 1e-12):
        raise StateError("sample times must be non-decreasing and within the schedule")
    out = []
    now = 0.0
    start = 0.0
    i = 0
    cache = {}
    for ins in schedule.instructions:
        end = start + ins.duration
        key = ins.frequencies
        if key not in cache:
            model = model_from_positions(cfg.with_frequencies(key), u)
            h = generator(model, frame)
            cm = None
            noise = None
            if bath is not None and bath.gamma > 0:
                noise = bath.noise(model.effective_frequencies)
                cm = steady_cm_in_frame(noise, model.effective_frequencies, frame)
            cache[key] = (h, noise, cm)
        h, noise, cm = cache[key]

        def step(st, dt):
            if dt <= 0:
                return st
            if noise is None:
                return evolve_closed(st, h, dt)
            return evolve_open(st, h, noise, dt, steady_cm=cm)

        while i < times.size and times[i] <= end:
            state = step(state, times[i] - now)
            now = times[i]
            out.append(state)
            i += 1
        state = step(state, end - now)
        now = start = end
    while i < times.size:
        out.append(state)
        i += 1
    return out

