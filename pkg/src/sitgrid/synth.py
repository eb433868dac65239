"""Seeded synthetic chair data.

Each posture is modeled as a Gaussian pressure bump over the 8x8 grid of
each mat. Subjects differ by a multiplicative weight and a small offset of
the bump centers; sensors add Gaussian noise and occasional spikes.

Every record draws from its own random stream keyed by
``(seed, participant, posture, event, timestamp)``, so the output does not
depend on generation order.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .data import (
    POSTURES,
    REALISTIC_POSTURES,
    SENSOR_COLS,
    SENSOR_ROWS,
    Dataset,
    FrameRecord,
    PressureFrame,
)
from .errors import ConfigError

GRID_CENTER = 4.5
SEAT_AMPLITUDE = 600.0
BACK_AMPLITUDE = 500.0

# Fraction of the way from still to the full posture at t01..t05.
TIMESTAMP_BLEND = (0.25, 0.8, 1.0, 0.8, 0.25)

# stream tags
_PARTICIPANT, _EVENT, _RECORD = 0, 1, 2


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    n_participants: int = 11
    postures: tuple[str, ...] = POSTURES
    snapshots_or_events: int = 30
    weight_scale_range: tuple[float, float] = (0.7, 1.3)
    noise_sd: float = 8.0
    outlier_probability: float = 0.02
    outlier_magnitude: float = 1023.0
    separation: float = 1.5
    # sd of the per-subject shift of bump centers, in grid cells
    center_jitter: float = 0.25
    # per-event spread of how far the subject actually moves (realistic only)
    intensity_range: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "postures", tuple(self.postures))
        object.__setattr__(self, "weight_scale_range", tuple(self.weight_scale_range))
        object.__setattr__(self, "intensity_range", tuple(self.intensity_range))
        self.validate()

    def validate(self):
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.n_participants < 0:
            raise ConfigError("n_participants must be >= 0")
        if self.snapshots_or_events < 0:
            raise ConfigError("snapshots_or_events must be >= 0")
        unknown = set(self.postures) - set(POSTURES)
        if unknown:
            raise ConfigError(f"unknown postures {sorted(unknown)}")
        if len(set(self.postures)) != len(self.postures):
            raise ConfigError("duplicate postures")
        low, high = self.weight_scale_range
        if not 0 < low <= high:
            raise ConfigError("weight_scale_range needs 0 < low <= high")
        low, high = self.intensity_range
        if not 0 <= low <= high:
            raise ConfigError("intensity_range needs 0 <= low <= high")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be >= 0")
        if not 0 <= self.outlier_probability <= 1:
            raise ConfigError("outlier_probability must lie in [0, 1]")
        if self.separation < 0:
            raise ConfigError("separation must be >= 0")
        if self.center_jitter < 0:
            raise ConfigError("center_jitter must be >= 0")

    @classmethod
    def controlled(cls, **overrides) -> "GeneratorConfig":
        return cls(**overrides)

    @classmethod
    def realistic(cls, **overrides) -> "GeneratorConfig":
        base = dict(
            n_participants=39,
            postures=REALISTIC_POSTURES,
            snapshots_or_events=5,
            noise_sd=60.0,
            separation=0.5,
            center_jitter=0.35,
            intensity_range=(0.2, 1.0),
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def for_variant(cls, variant: str, **overrides) -> "GeneratorConfig":
        if variant == "controlled":
            return cls.controlled(**overrides)
        if variant == "realistic":
            return cls.realistic(**overrides)
        raise ConfigError(f"unknown variant {variant!r}")

    @classmethod
    def from_dict(cls, d: dict, variant: str = "controlled") -> "GeneratorConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown generator fields {sorted(unknown)}")
        return cls.for_variant(variant, **d)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


@dataclass(frozen=True)
class PostureTemplate:
    """Bump parameters for both mats. Centers are (row, col) grid coordinates."""

    seat_center: tuple[float, float]
    seat_spread: tuple[float, float]
    amplitude: float
    back_center: tuple[float, float]
    back_spread: tuple[float, float]
    back_engagement: float

    def blend(self, other: "PostureTemplate", alpha: float) -> "PostureTemplate":
        """Interpolate from ``self`` (alpha=0) to ``other`` (alpha=1)."""

        def mix(a, b):
            if isinstance(a, tuple):
                return tuple(mix(x, y) for x, y in zip(a, b))
            return (1 - alpha) * a + alpha * b

        return PostureTemplate(
            *(mix(getattr(self, f.name), getattr(other, f.name))
              for f in dataclasses.fields(self))
        )

    def shifted(self, d_row: float, d_col: float) -> "PostureTemplate":
        return dataclasses.replace(
            self,
            seat_center=(self.seat_center[0] + d_row, self.seat_center[1] + d_col),
            # the back mat is seen mirrored: a shift to the subject's left
            # moves its pressure toward higher columns
            back_center=(self.back_center[0], self.back_center[1] - d_col),
        )


def posture_template(posture: str, separation: float) -> PostureTemplate:
    """Template for ``posture``; ``separation`` is the bump shift in cells.

    Seat rows grow toward the backrest; seat columns 1-4 sit under the
    left leg. The back mat is mirrored, so leaning left moves its mass
    toward columns 5-8.
    """
    c = GRID_CENTER
    s = separation
    base = dict(
        seat_center=(c, c),
        seat_spread=(1.8, 1.8),
        amplitude=1.0,
        back_center=(c, c),
        back_spread=(2.0, 2.0),
        back_engagement=0.5,
    )
    if posture == "still":
        pass
    elif posture == "left":
        base.update(seat_center=(c, c - s), back_center=(c, c + 0.6 * s))
    elif posture == "right":
        base.update(seat_center=(c, c + s), back_center=(c, c - 0.6 * s))
    elif posture == "front":
        base.update(seat_center=(c - s, c), back_engagement=max(0.5 - 0.3 * s, 0.05))
    elif posture == "back":
        base.update(
            seat_center=(c + 0.6 * s, c),
            back_engagement=0.5 + 0.35 * s,
            back_center=(c + 0.4 * s, c),
        )
    elif posture == "empty":
        # an unoccupied chair still reads a faint, broad floor
        base.update(amplitude=0.03, seat_spread=(4.0, 4.0), back_engagement=0.03)
    else:
        raise ConfigError(f"unknown posture {posture!r}")
    return PostureTemplate(**base)


def _bump(center, spread, amplitude):
    dr = (SENSOR_ROWS - center[0]) / spread[0]
    dc = (SENSOR_COLS - center[1]) / spread[1]
    return amplitude * np.exp(-0.5 * (dr * dr + dc * dc))


def template_values(template: PostureTemplate, with_back: bool = True):
    """Noise-free (seat, back) readings at unit weight."""
    seat = _bump(template.seat_center, template.seat_spread, SEAT_AMPLITUDE * template.amplitude)
    if not with_back:
        return seat, None
    back = _bump(
        template.back_center,
        template.back_spread,
        BACK_AMPLITUDE * template.amplitude * template.back_engagement,
    )
    return seat, back


def _perturb(values, rng, noise_sd, outlier_probability, outlier_magnitude):
    if noise_sd > 0:
        values = values + rng.normal(0.0, noise_sd, values.shape)
    values = np.maximum(values, 0.0)
    if outlier_probability > 0 and rng.random() < outlier_probability:
        values[rng.integers(values.size)] = outlier_magnitude
    return values


def sample_frame(
    template: PostureTemplate,
    weight: float,
    rng: np.random.Generator,
    noise_sd: float = 0.0,
    outlier_probability: float = 0.0,
    outlier_magnitude: float = 1023.0,
    with_back: bool = True,
):
    """Draw one (seat, back) frame pair; back is None when ``with_back`` is off.

    Values are ``weight * template + noise`` clamped at 0; with probability
    ``outlier_probability`` a single sensor per mat is overwritten by
    ``outlier_magnitude``.
    """
    if weight <= 0:
        raise ConfigError("weight must be positive")
    seat, back = template_values(template, with_back)
    seat = _perturb(weight * seat, rng, noise_sd, outlier_probability, outlier_magnitude)
    seat_frame = PressureFrame("seat", seat)
    if back is None:
        return seat_frame, None
    back = _perturb(weight * back, rng, noise_sd, outlier_probability, outlier_magnitude)
    return seat_frame, PressureFrame("back", back)


def _participant_traits(cfg: GeneratorConfig, p: int):
    rng = np.random.default_rng([cfg.seed, _PARTICIPANT, p])
    low, high = cfg.weight_scale_range
    weight = rng.uniform(low, high)
    d_row, d_col = rng.normal(0.0, cfg.center_jitter, 2) if cfg.center_jitter > 0 else (0.0, 0.0)
    return weight, float(d_row), float(d_col)


def generate_controlled(cfg: GeneratorConfig | None = None) -> Dataset:
    """Seat-only records: participants x postures x held snapshots."""
    cfg = cfg or GeneratorConfig.controlled()
    records = []
    for p in range(cfg.n_participants):
        pid = f"C{p + 1:02d}"
        weight, d_row, d_col = _participant_traits(cfg, p)
        for posture in cfg.postures:
            k = POSTURES.index(posture)
            tpl = posture_template(posture, cfg.separation).shifted(d_row, d_col)
            for snap in range(cfg.snapshots_or_events):
                rng = np.random.default_rng([cfg.seed, _RECORD, p, k, snap, 0])
                seat, _ = sample_frame(
                    tpl, weight, rng, cfg.noise_sd, cfg.outlier_probability,
                    cfg.outlier_magnitude, with_back=False,
                )
                records.append(FrameRecord(pid, "unspecified", posture, 0, snap, seat))
    return Dataset(tuple(records), "controlled", f"synthetic controlled seed={cfg.seed}")


def generate_realistic(cfg: GeneratorConfig | None = None) -> Dataset:
    """Two-mat records: participants x postures x events x timestamps t01..t05.

    Frames at t01 and t05 sit close to the subject's still posture; t02..t04
    approach the full posture.
    """
    cfg = cfg or GeneratorConfig.realistic()
    if "empty" in cfg.postures:
        raise ConfigError("the realistic variant has no 'empty' posture")
    records = []
    lo, hi = cfg.intensity_range
    for p in range(cfg.n_participants):
        pid = f"R{p + 1:02d}"
        age = "young" if p % 2 == 0 else "senior"
        weight, d_row, d_col = _participant_traits(cfg, p)
        still = posture_template("still", cfg.separation).shifted(d_row, d_col)
        for posture in cfg.postures:
            k = POSTURES.index(posture)
            target = posture_template(posture, cfg.separation).shifted(d_row, d_col)
            for event in range(cfg.snapshots_or_events):
                intensity = np.random.default_rng([cfg.seed, _EVENT, p, k, event]).uniform(lo, hi)
                for t, alpha in enumerate(TIMESTAMP_BLEND, start=1):
                    tpl = still.blend(target, alpha * intensity)
                    rng = np.random.default_rng([cfg.seed, _RECORD, p, k, event, t])
                    seat, back = sample_frame(
                        tpl, weight, rng, cfg.noise_sd, cfg.outlier_probability,
                        cfg.outlier_magnitude,
                    )
                    records.append(FrameRecord(pid, age, posture, t, event, seat, back))
    return Dataset(tuple(records), "realistic", f"synthetic realistic seed={cfg.seed}")


def generate(variant: str, cfg: GeneratorConfig | None = None) -> Dataset:
    if variant == "controlled":
        return generate_controlled(cfg)
    if variant == "realistic":
        return generate_realistic(cfg)
    raise ConfigError(f"unknown variant {variant!r}")
