"""Synthetic household populations with time-jittered device routines.

Each archetype is a fixed daily routine of devices. Every generated day shifts
each device's start hour by a uniform integer in ``[-jitter, +jitter]``; the
hourly load is a constant baseline plus the power of every device running in
that hour. Alongside each curve the generator records the true appliance-usage
matrix (device-hours per hour and device, baseline included as a column), so
``usage @ powers`` reproduces the curve exactly.
"""
from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .curves import HOURS, DayType, LoadCurve, validate_curve

BASELINE = "baseline"
DEFAULT_START = dt.date(2021, 6, 7)


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    power_kw: float
    start: int
    duration: int
    jitter: int = 1

    def __post_init__(self):
        if self.power_kw <= 0:
            raise ValueError(f"device {self.name!r}: power must be positive")
        if self.duration < 1 or not 0 <= self.start or self.start + self.duration > HOURS:
            raise ValueError(f"device {self.name!r}: schedule must fit inside 24 hours")
        if self.jitter not in (0, 1):
            raise ValueError(f"device {self.name!r}: jitter must be 0 or 1 hour")


@dataclass(frozen=True)
class HouseholdArchetype:
    id: str
    devices: tuple[DeviceProfile, ...]
    baseline_kw: float = 0.2
    weekend_devices: tuple[DeviceProfile, ...] | None = None
    power_spread: float = 0.0

    def __post_init__(self):
        if not self.devices:
            raise ValueError(f"archetype {self.id!r} has no devices")
        if self.baseline_kw < 0:
            raise ValueError(f"archetype {self.id!r}: baseline must be non-negative")
        if not 0 <= self.power_spread < 1:
            raise ValueError(f"archetype {self.id!r}: power_spread must lie in [0, 1)")

    def routine(self, day_type: DayType) -> tuple[DeviceProfile, ...]:
        if day_type is DayType.WEEKEND and self.weekend_devices:
            return self.weekend_devices
        return self.devices

    @property
    def device_names(self) -> list[str]:
        names = [d.name for d in self.devices]
        for d in self.weekend_devices or ():
            if d.name not in names:
                names.append(d.name)
        return names

    def powers(self) -> np.ndarray:
        table = {}
        for d in (*self.devices, *(self.weekend_devices or ())):
            if table.setdefault(d.name, d.power_kw) != d.power_kw:
                raise ValueError(f"device {d.name!r} has inconsistent power levels")
        return np.array([self.baseline_kw or 1.0] + [table[n] for n in self.device_names])


@dataclass
class HouseholdDays:
    """Curves for one household with the true usage matrix of each day."""

    household_id: str
    archetype: str
    curves: list[LoadCurve]
    usage: list[np.ndarray]
    columns: list[str]
    powers: np.ndarray
    overflow_days: list[dt.date] = field(default_factory=list)


@dataclass
class Population:
    households: list[HouseholdDays]
    archetypes: list[str]

    @property
    def curves(self) -> list[LoadCurve]:
        return [c for h in self.households for c in h.curves]

    @property
    def labels(self) -> np.ndarray:
        """Archetype index of every curve, in :attr:`curves` order."""
        index = {a: i for i, a in enumerate(self.archetypes)}
        return np.array([index[h.archetype] for h in self.households for _ in h.curves], dtype=int)


def generate_household(
    archetype: HouseholdArchetype,
    days: int,
    seed: int | np.random.SeedSequence | None,
    household_id: str | None = None,
    start_date: dt.date = DEFAULT_START,
) -> HouseholdDays:
    """Generate ``days`` consecutive days for one household.

    With a non-zero ``power_spread`` every device power of the household is
    first multiplied by a factor drawn uniformly from ``1 +/- power_spread``
    (fixed for all its days). A jittered device that would leave the 24-hour
    window is clamped back inside it and the day is listed in
    ``overflow_days``.
    """
    if days < 1:
        raise ValueError("days must be at least 1")
    rng = np.random.default_rng(seed)
    columns = [BASELINE] + archetype.device_names
    col = {name: j for j, name in enumerate(columns)}
    powers = archetype.powers()
    if archetype.power_spread:
        spread = archetype.power_spread
        powers[1:] *= rng.uniform(1 - spread, 1 + spread, size=powers.size - 1)
    hid = household_id or archetype.id
    curves, usage, overflow = [], [], []
    for offset in range(days):
        date = start_date + dt.timedelta(days=offset)
        day_type = DayType.from_date(date)
        A = np.zeros((HOURS, len(columns)))
        if archetype.baseline_kw > 0:
            A[:, 0] = archetype.baseline_kw / powers[0]
        clamped = False
        for device in archetype.routine(day_type):
            shift = int(rng.integers(-device.jitter, device.jitter + 1)) if device.jitter else 0
            start = device.start + shift
            if start < 0 or start + device.duration > HOURS:
                clamped = True
                start = min(max(start, 0), HOURS - device.duration)
            A[start:start + device.duration, col[device.name]] += 1.0
        if clamped:
            overflow.append(date)
        values = A @ powers
        curves.append(validate_curve(values, hid, date, day_type))
        usage.append(A)
    return HouseholdDays(hid, archetype.id, curves, usage, columns, powers, overflow)


def generate_population(
    archetypes: Sequence[HouseholdArchetype],
    households: int,
    days: int,
    seed: int | None = 0,
    start_date: dt.date = DEFAULT_START,
) -> Population:
    """Generate ``households`` households per archetype with independent sub-seeds."""
    if households < 0:
        raise ValueError("households must be non-negative")
    streams = np.random.SeedSequence(seed).spawn(len(archetypes) * households)
    out = []
    for a, arch in enumerate(archetypes):
        for h in range(households):
            out.append(generate_household(
                arch, days, streams[a * households + h],
                household_id=f"{arch.id}-{h:03d}", start_date=start_date,
            ))
    return Population(out, [a.id for a in archetypes])


def _device(item: dict) -> DeviceProfile:
    return DeviceProfile(
        name=item["name"],
        power_kw=float(item["power_kw"]),
        start=int(item["start"]),
        duration=int(item["duration"]),
        jitter=int(item.get("jitter", 1)),
    )


def archetypes_from_dict(doc: dict) -> list[HouseholdArchetype]:
    out = []
    for item in doc["archetypes"]:
        weekend = item.get("weekend")
        out.append(HouseholdArchetype(
            id=item["id"],
            baseline_kw=float(item.get("baseline_kw", 0.2)),
            devices=tuple(_device(d) for d in item["weekday"]),
            weekend_devices=tuple(_device(d) for d in weekend) if weekend else None,
            power_spread=float(item.get("power_spread", 0.0)),
        ))
    return out


def load_archetypes(path: str | Path | None = None) -> list[HouseholdArchetype]:
    """Read an archetype config; ``None`` loads the bundled three-archetype benchmark."""
    if path is None:
        text = resources.files("loadshape.data").joinpath("benchmark_archetypes.json").read_text()
    else:
        text = Path(path).read_text()
    return archetypes_from_dict(json.loads(text))


def benchmark_population(seed: int = 0, households: int = 20, days: int = 22) -> Population:
    """The bundled benchmark corpus: 3 archetypes x 20 households x 22 days by default."""
    return generate_population(load_archetypes(), households, days, seed)
