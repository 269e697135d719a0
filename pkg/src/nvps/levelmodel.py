"""Seven-level rate model of a negatively charged NV center.

Levels are the ground triplet (g0, g+, g-), the excited triplet (e0, e+, e-)
and one metastable singlet (s). All rates are in s^-1, frequencies in Hz.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from enum import IntEnum


class Level(IntEnum):
    G0 = 0
    GP = 1
    GM = 2
    E0 = 3
    EP = 4
    EM = 5
    S = 6


LEVEL_NAMES = ("g0", "g+", "g-", "e0", "e+", "e-", "s")
N_LEVELS = len(LEVEL_NAMES)
GROUND = (Level.G0, Level.GP, Level.GM)
EXCITED = (Level.E0, Level.EP, Level.EM)

T1_MS0 = 12.0e-9
T1_MS1 = 7.8e-9
ZERO_FIELD_SPLITTING = 2.88e9


class ModelValidationError(ValueError):
    """Raised when a LevelModel violates one of its invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{f}: {msg}" for f, msg in self.violations))


@dataclass(frozen=True)
class LevelModel:
    k_radiative: float
    k_isc0: float
    k_isc1: float
    k_singlet: float
    singlet_branching: tuple[float, float, float]
    zero_field_splitting: float = ZERO_FIELD_SPLITTING

    def __post_init__(self):
        object.__setattr__(self, "singlet_branching", tuple(float(b) for b in self.singlet_branching))

    @property
    def t1_ms0(self) -> float:
        return 1.0 / (self.k_radiative + self.k_isc0)

    @property
    def t1_ms1(self) -> float:
        return 1.0 / (self.k_radiative + self.k_isc1)

    def excited_lifetime(self, level: int) -> float:
        return self.t1_ms0 if level == Level.E0 else self.t1_ms1

    def with_overrides(self, **kw) -> "LevelModel":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["singlet_branching"] = list(self.singlet_branching)
        d["levels"] = list(LEVEL_NAMES)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "LevelModel":
        d = dict(d)
        levels = d.pop("levels", list(LEVEL_NAMES))
        if list(levels) != list(LEVEL_NAMES):
            raise ValueError(f"levels must be {list(LEVEL_NAMES)}, got {levels}")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown LevelModel keys: {sorted(unknown)}")
        missing = {f.name for f in fields(cls) if f.name != "zero_field_splitting"} - set(d)
        if missing:
            raise ValueError(f"missing LevelModel keys: {sorted(missing)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "LevelModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DerivedRates:
    t1_ms0: float
    t1_ms1: float
    delta_k_isc: float
    branching_photons_ms0: float
    branching_photons_ms1: float


def default_nv_model(
    t1_ms0: float = T1_MS0,
    t1_ms1: float = T1_MS1,
    isc0_fraction: float = 0.02,
    singlet_lifetime: float = 300e-9,
    singlet_branching=(0.8, 0.1, 0.1),
) -> LevelModel:
    """Model whose excited-state lifetimes are exactly 12.0 ns (mS=0) and 7.8 ns (mS=+-1).

    ``isc0_fraction`` is the share of the mS=0 excited-state decay that goes
    through the singlet. The singlet lifetime and branching are not measured
    quantities; they only need to make optical pumping polarize into g0.
    """
    k_total0 = 1.0 / t1_ms0
    k_isc0 = isc0_fraction * k_total0
    k_rad = k_total0 - k_isc0
    # equal lifetimes must give equal ISC rates, not a rounding-level difference
    k_isc1 = k_isc0 if t1_ms1 == t1_ms0 else 1.0 / t1_ms1 - k_rad
    return LevelModel(
        k_radiative=k_rad,
        k_isc0=k_isc0,
        k_isc1=k_isc1,
        k_singlet=1.0 / singlet_lifetime,
        singlet_branching=tuple(singlet_branching),
    )


def validate(model: LevelModel) -> list[tuple[str, str]]:
    """Return every violated invariant as ``(field, message)``; empty means valid."""
    out = []

    def finite(name, v):
        if not (isinstance(v, (int, float)) and math.isfinite(v)):
            out.append((name, f"must be a finite number, got {v!r}"))
            return False
        return True

    for name in ("k_isc0", "k_isc1", "k_singlet"):
        v = getattr(model, name)
        if finite(name, v) and v < 0:
            out.append((name, f"must be >= 0, got {v}"))
    if finite("k_radiative", model.k_radiative) and model.k_radiative <= 0:
        out.append(("k_radiative", f"must be > 0, got {model.k_radiative}"))
    if finite("zero_field_splitting", model.zero_field_splitting) and model.zero_field_splitting < 0:
        out.append(("zero_field_splitting", "must be >= 0"))

    b = model.singlet_branching
    if len(b) != 3:
        out.append(("singlet_branching", f"needs 3 components, got {len(b)}"))
    else:
        if any(not math.isfinite(x) or x < 0 or x > 1 for x in b):
            out.append(("singlet_branching", "components must lie in [0, 1]"))
        if abs(sum(b) - 1.0) > 1e-12:
            out.append(("singlet_branching", f"must sum to 1, got {sum(b)!r}"))

    if not out:
        if model.k_isc1 < model.k_isc0:
            out.append(("k_isc1", "must be >= k_isc0 (mS=0 shelving is the weaker channel)"))
        for name in ("t1_ms0", "t1_ms1"):
            t = getattr(model, name)
            if not (math.isfinite(t) and t > 0):
                out.append((name, "derived lifetime must be finite and positive"))
    return out


def check(model: LevelModel) -> LevelModel:
    violations = validate(model)
    if violations:
        raise ModelValidationError(violations)
    return model


def derived_rates(model: LevelModel) -> DerivedRates:
    check(model)
    t0, t1 = model.t1_ms0, model.t1_ms1
    return DerivedRates(
        t1_ms0=t0,
        t1_ms1=t1,
        delta_k_isc=model.k_isc1 - model.k_isc0,
        branching_photons_ms0=model.k_radiative * t0,
        branching_photons_ms1=model.k_radiative * t1,
    )
