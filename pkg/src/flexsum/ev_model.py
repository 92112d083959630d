"""EV charging parameters and deterministic scenario sampling.

An EV plugs in at period ``arrival``, must be done by ``deadline``, charges or
discharges within rate limits while plugged in, and needs to reach a final
state of charge. Those requirements translate into the power and net-energy
envelopes of a :class:`~flexsum.polytope.BatteryModel`, with power indexed by
periods 0..T-1 and net energy by period ends 1..T.

Populations are sampled with a counter-based generator keyed by
``(seed, ev_index, field, attempt)``, so each parameter draw is reproducible
independently of sampling order; draws whose energy requirement cannot be met
inside the availability window are rejected and redrawn.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .polytope import BaseSet, BatteryModel, build_base_set

# fleet parameter ranges used throughout the experiments
X_MAX_KWH = 70.0
U_MAX_KW = 10.0
U_MIN_KW = -10.0
X_INIT_KWH = 14.0
X_FIN_BASE_KWH = 40.0
X_FIN_SPREAD_KWH = 30.0
ARRIVAL_WINDOW = ("3PM", "8PM")
DEADLINE_WINDOW = ("5AM", "11AM")
DEFAULT_CLOCK_ORIGIN = "3PM"

_MAX_SAMPLING_ATTEMPTS = 1000
_FIELD_IDS = {"arrival": 0, "deadline": 1, "x_fin": 2}

_CLOCK_RE = re.compile(r"^\s*(\d{1,2})(?::(\d{2}))?\s*(AM|PM)\s*$", re.IGNORECASE)


def parse_clock(label: str) -> float:
    """Hour of day in [0, 24) from a label like ``"3PM"`` or ``"11:30AM"``."""
    match = _CLOCK_RE.match(label)
    if not match:
        raise DomainError(f"cannot parse clock label {label!r}")
    hour = int(match.group(1))
    minute = int(match.group(2) or 0)
    suffix = match.group(3).upper()
    if not (1 <= hour <= 12) or minute >= 60:
        raise DomainError(f"cannot parse clock label {label!r}")
    hour = hour % 12
    if suffix == "PM":
        hour += 12
    return hour + minute / 60.0


def _index_from_hours(elapsed: float, delta: float, rounding: str) -> int:
    if rounding not in ("up", "down"):
        raise DomainError(f"rounding must be 'up' or 'down', got {rounding!r}")
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    periods = elapsed / delta
    if rounding == "up":
        return int(math.ceil(periods - 1e-9))
    return int(math.floor(periods + 1e-9))


def clock_to_index(label: str, origin: str, delta: float, rounding: str) -> int:
    """Period index of a wall-clock label on a grid anchored at ``origin``.

    Labels earlier in the day than the origin belong to the next day (the
    horizon spans at most 24 hours). Fractional offsets round toward the
    interior of the availability window: ``"up"`` for arrivals, ``"down"``
    for deadlines.
    """
    elapsed = (parse_clock(label) - parse_clock(origin)) % 24.0
    return _index_from_hours(elapsed, delta, rounding)


@dataclass(frozen=True)
class EvParams:
    """Charging requirements of one EV on a fixed period grid."""

    arrival: int
    deadline: int
    u_min: float
    u_max: float
    x_max: float
    x_init: float
    x_fin: float
    T: int
    delta: float

    def __post_init__(self):
        if self.T < 1:
            raise DomainError(f"T must be at least 1, got {self.T}")
        if self.delta <= 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if not (0 <= self.arrival <= self.deadline <= self.T - 1):
            raise DomainError(
                f"need 0 <= arrival <= deadline <= T-1, got ({self.arrival}, {self.deadline})")
        if not self.u_min < self.u_max:
            raise DomainError(f"u_min must be below u_max, got [{self.u_min}, {self.u_max}]")
        if not (0 <= self.x_init <= self.x_max):
            raise DomainError(f"x_init must lie in [0, x_max], got {self.x_init}")
        if not (0 <= self.x_fin <= self.x_max):
            raise DomainError(f"x_fin must lie in [0, x_max], got {self.x_fin}")

    def to_dict(self) -> dict:
        return {"a": self.arrival, "d": self.deadline, "u_min": self.u_min,
                "u_max": self.u_max, "x_max": self.x_max, "x_init": self.x_init,
                "x_fin": self.x_fin}

    @classmethod
    def from_dict(cls, data: dict, T: int, delta: float) -> "EvParams":
        return cls(arrival=int(data["a"]), deadline=int(data["d"]),
                   u_min=float(data["u_min"]), u_max=float(data["u_max"]),
                   x_max=float(data["x_max"]), x_init=float(data["x_init"]),
                   x_fin=float(data["x_fin"]), T=int(T), delta=float(delta))


def limits_from_params(p: EvParams) -> BatteryModel:
    """Battery envelopes implied by one EV's charging requirements.

    Power limits apply while plugged in and force zero rate otherwise; the
    net-energy ceiling is the free battery headroom once plugged in, and the
    floor allows dipping to an empty battery until the deadline, after which
    the required final charge must be reached.
    """
    window = (p.deadline - p.arrival + 1) * p.delta
    required = p.x_fin - p.x_init
    if required > window * p.u_max + 1e-12:
        raise DomainError(
            f"infeasible energy requirement: need {required} kWh in a window "
            f"supplying at most {window * p.u_max} kWh")
    if required < window * p.u_min - 1e-12:
        raise DomainError(
            f"infeasible energy requirement: need {required} kWh but the window "
            f"discharges at least {window * p.u_min} kWh")
    t_power = np.arange(p.T)
    plugged = (t_power >= p.arrival) & (t_power <= p.deadline)
    u_hi = np.where(plugged, p.u_max, 0.0)
    u_lo = np.where(plugged, p.u_min, 0.0)
    t_energy = np.arange(1, p.T + 1)
    x_hi = np.where(t_energy >= p.arrival, p.x_max - p.x_init, 0.0)
    x_lo = (p.x_fin * (t_energy > p.deadline).astype(float)
            - p.x_init * (t_energy >= p.arrival).astype(float))
    return BatteryModel(u_lo=u_lo, u_hi=u_hi, x_lo=x_lo, x_hi=x_hi, delta=p.delta)


@dataclass(frozen=True)
class Scenario:
    """A sampled EV population with its averaged base set."""

    params: tuple
    models: tuple
    base: BaseSet
    seed: int
    sigma: float
    T: int
    delta: float
    clock_origin: str
    rejections: int = 0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "sigma": self.sigma,
            "T": self.T,
            "delta": self.delta,
            "clock_origin": self.clock_origin,
            "rejections": self.rejections,
            "params": [p.to_dict() for p in self.params],
            "models": [m.to_dict() for m in self.models],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        T = int(data["T"])
        delta = float(data["delta"])
        params = tuple(EvParams.from_dict(p, T, delta) for p in data["params"])
        models = tuple(limits_from_params(p) for p in params)
        return cls(params=params, models=models, base=build_base_set(list(models)),
                   seed=int(data["seed"]), sigma=float(data["sigma"]), T=T, delta=delta,
                   clock_origin=str(data["clock_origin"]),
                   rejections=int(data.get("rejections", 0)))


def _draw(seed: int, ev_index: int, field: str, attempt: int) -> np.random.Generator:
    key = (ev_index, _FIELD_IDS[field], attempt)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _uniform(seed: int, ev: int, field: str, attempt: int, lo: float, hi: float) -> float:
    if hi <= lo:
        return lo
    return float(_draw(seed, ev, field, attempt).uniform(lo, hi))


def sample_scenario(n: int, T: int, delta: float, sigma: float, seed: int,
                    homogenize_windows: bool = False,
                    clock_origin: str = DEFAULT_CLOCK_ORIGIN) -> Scenario:
    """Sample ``n`` EVs with heterogeneity ``sigma`` and build their base set.

    Plug-in times are drawn from 3PM-8PM (rounded up to the grid), deadlines
    from 5AM-11AM (rounded down, clamped to the horizon), and the final charge
    from ``40 +/- 30 * sigma`` kWh; rates, capacity, and initial charge are
    fixed fleet-wide. ``homogenize_windows`` pins every availability window to
    the full horizon, which makes sigma = 0 populations identical. Sampling is
    deterministic in ``seed`` and independent of iteration order.
    """
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    if not 0 <= sigma <= 1:
        raise DomainError(f"sigma must lie in [0, 1], got {sigma}")
    arrival_lo, arrival_hi = (parse_clock(lbl) for lbl in ARRIVAL_WINDOW)
    origin_hour = parse_clock(clock_origin)
    deadline_lo, deadline_hi = (parse_clock(lbl) for lbl in DEADLINE_WINDOW)
    params = []
    rejections = 0
    for ev in range(n):
        for attempt in range(_MAX_SAMPLING_ATTEMPTS):
            if homogenize_windows:
                arrival, deadline = 0, T - 1
            else:
                arrival_hour = _uniform(seed, ev, "arrival", attempt, arrival_lo, arrival_hi)
                deadline_hour = _uniform(seed, ev, "deadline", attempt, deadline_lo, deadline_hi)
                arrival = _index_from_hours((arrival_hour - origin_hour) % 24.0, delta, "up")
                deadline = _index_from_hours((deadline_hour - origin_hour) % 24.0, delta, "down")
                deadline = min(deadline, T - 1)
                arrival = min(arrival, deadline)
            x_fin = X_FIN_BASE_KWH + _uniform(
                seed, ev, "x_fin", attempt,
                -X_FIN_SPREAD_KWH * sigma, X_FIN_SPREAD_KWH * sigma)
            window = (deadline - arrival + 1) * delta
            required = x_fin - X_INIT_KWH
            if window * U_MIN_KW <= required <= window * U_MAX_KW:
                params.append(EvParams(
                    arrival=arrival, deadline=deadline, u_min=U_MIN_KW, u_max=U_MAX_KW,
                    x_max=X_MAX_KWH, x_init=X_INIT_KWH, x_fin=x_fin, T=T, delta=delta))
                break
            rejections += 1
        else:
            raise DomainError(
                f"could not sample a feasible EV {ev} in {_MAX_SAMPLING_ATTEMPTS} attempts")
    models = tuple(limits_from_params(p) for p in params)
    return Scenario(params=tuple(params), models=models, base=build_base_set(list(models)),
                    seed=seed, sigma=float(sigma), T=T, delta=float(delta),
                    clock_origin=clock_origin, rejections=rejections)
