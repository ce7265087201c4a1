"""Pipeline configuration: defaults, validation, JSON round-trip, hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ParameterError


@dataclass
class PipelineConfig:
    scales: tuple[float, ...] = (0.5, 1.0, 2.0)
    dncuts_d: int = 2
    dncuts_k: int = 16
    affinity_radius: int = 5
    affinity_sigma: float = 0.1
    cue_radii: tuple[int, ...] = (1, 2, 4)
    cue_weight_local: float = 0.5
    cue_weight_spectral: float = 0.5
    calibration_a: float = 1.0
    calibration_b: float = 0.0
    node_budget: int = 200
    max_tuple: int = 4
    s_samples: int = 6
    front_target_proposals: int = 100
    mmr_lambda: float = 0.1
    dedup_threshold: float = 0.95
    forest_trees: int = 50
    forest_depth: int = 12
    seed: int = 0

    def __post_init__(self):
        self.scales = tuple(float(s) for s in self.scales)
        self.cue_radii = tuple(int(r) for r in self.cue_radii)
        self.validate()

    def validate(self) -> None:
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ParameterError(f"scales must be positive, got {self.scales}")
        if list(self.scales) != sorted(self.scales):
            raise ParameterError("scales must be ascending")
        if self.dncuts_d < 0:
            raise ParameterError("dncuts_d must be >= 0")
        if self.dncuts_k < 1:
            raise ParameterError("dncuts_k must be >= 1")
        if self.affinity_radius < 1:
            raise ParameterError("affinity_radius must be >= 1")
        if self.affinity_sigma <= 0:
            raise ParameterError("affinity_sigma must be positive")
        if not self.cue_radii or any(r < 1 for r in self.cue_radii):
            raise ParameterError("cue_radii must be >= 1")
        if not (0 <= self.cue_weight_local <= 1 and 0 <= self.cue_weight_spectral <= 1):
            raise ParameterError("cue weights must be in [0, 1]")
        if abs(self.cue_weight_local + self.cue_weight_spectral - 1.0) > 1e-9:
            raise ParameterError("cue weights must sum to 1")
        if self.node_budget < 1:
            raise ParameterError("node_budget must be >= 1")
        if not 1 <= self.max_tuple <= 4:
            raise ParameterError("max_tuple must be in 1..4")
        if self.s_samples < 2:
            raise ParameterError("s_samples must be >= 2")
        if self.front_target_proposals < 1:
            raise ParameterError("front_target_proposals must be >= 1")
        if not 0 <= self.mmr_lambda <= 1:
            raise ParameterError("mmr_lambda must be in [0, 1]")
        if not 0 < self.dedup_threshold <= 1:
            raise ParameterError("dedup_threshold must be in (0, 1]")
        if self.forest_trees < 1 or self.forest_depth < 1:
            raise ParameterError("forest settings must be >= 1")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")

    @property
    def calibration(self) -> tuple[float, float] | None:
        """None when the default identity constants leave calibration off."""
        if (self.calibration_a, self.calibration_b) == (1.0, 0.0):
            return None
        return (self.calibration_a, self.calibration_b)

    def to_json(self) -> str:
        doc = asdict(self)
        doc["scales"] = list(self.scales)
        doc["cue_radii"] = list(self.cue_radii)
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"bad config JSON: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()
