"""Boundary identifiers and the editable filtering configuration.

Every tunable of the preprocessing pipelines lives here so that a single
JSON file (``--config`` on the CLI, ``LIVEWIRE_OCT_CONFIG`` as fallback)
controls how each boundary is isolated before the path search runs.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import ConfigError


class BoundaryId(enum.Enum):
    ILM = "ILM"
    RNFL_GCL = "RNFL_GCL"
    GCL_IPL = "GCL_IPL"
    IPL_INL = "IPL_INL"
    INL_OPL = "INL_OPL"
    OPL_ONL = "OPL_ONL"
    ONL_PR = "ONL_PR"
    PR_RPE = "PR_RPE"
    RPE_OUTER = "RPE_OUTER"


#: Boundaries that peripapillary mode can segment (all but GCL_IPL).
PERIPAPILLARY_BOUNDARIES = tuple(b for b in BoundaryId if b is not BoundaryId.GCL_IPL)


class Polarity(enum.Enum):
    DARK_TO_BRIGHT = "DarkToBright"
    BRIGHT_TO_DARK = "BrightToDark"


@dataclass
class BoundaryPipeline:
    """Filtering parameters for one boundary."""

    polarity: Polarity
    gaussian_sigma_px: float = 1.5
    morph_close_se: tuple[int, int] = (3, 3)
    canny_low: float = 0.1
    canny_high: float = 0.3
    search_band: tuple[int, int] | None = None

    def validate(self, name: str) -> None:
        if self.gaussian_sigma_px < 0:
            raise ConfigError(f"{name}: gaussian_sigma_px must be >= 0")
        se_w, se_h = self.morph_close_se
        if se_w < 1 or se_h < 1:
            raise ConfigError(f"{name}: morph_close_se dims must be >= 1")
        if not (0 <= self.canny_low < self.canny_high <= 1):
            raise ConfigError(f"{name}: need 0 <= canny_low < canny_high <= 1")
        if self.search_band is not None:
            lo, hi = self.search_band
            if lo > hi:
                raise ConfigError(f"{name}: search_band rows out of order")


@dataclass
class FluidConfig:
    """Parameters of the fluid edge-then-close pipeline."""

    canny_low: float = 0.1
    canny_high: float = 0.3
    morph_close_se: tuple[int, int] = (5, 5)
    min_area_px: int = 25

    def validate(self) -> None:
        if not (0 <= self.canny_low < self.canny_high <= 1):
            raise ConfigError("fluid: need 0 <= canny_low < canny_high <= 1")
        se_w, se_h = self.morph_close_se
        if se_w < 1 or se_h < 1:
            raise ConfigError("fluid: morph_close_se dims must be >= 1")
        if self.min_area_px < 0:
            raise ConfigError("fluid: min_area_px must be >= 0")


@dataclass
class PeripapillaryConfig:
    """Vessel-shadow detection knobs for circumpapillary scans."""

    shadow_k: float = 0.7
    band_half_width_px: int = 10

    def validate(self) -> None:
        if self.shadow_k <= 0:
            raise ConfigError("peripapillary: shadow_k must be > 0")
        if self.band_half_width_px < 1:
            raise ConfigError("peripapillary: band_half_width_px must be >= 1")


# Default polarity per boundary; bright retinal bands sit between the
# dark vitreous/ONL/choroid, which fixes the gradient direction of each
# interface. All of these are overridable in the config file.
_DEFAULT_POLARITY = {
    BoundaryId.ILM: Polarity.DARK_TO_BRIGHT,
    BoundaryId.RNFL_GCL: Polarity.BRIGHT_TO_DARK,
    BoundaryId.GCL_IPL: Polarity.DARK_TO_BRIGHT,
    BoundaryId.IPL_INL: Polarity.BRIGHT_TO_DARK,
    BoundaryId.INL_OPL: Polarity.DARK_TO_BRIGHT,
    BoundaryId.OPL_ONL: Polarity.BRIGHT_TO_DARK,
    BoundaryId.ONL_PR: Polarity.DARK_TO_BRIGHT,
    BoundaryId.PR_RPE: Polarity.DARK_TO_BRIGHT,
    BoundaryId.RPE_OUTER: Polarity.BRIGHT_TO_DARK,
}


@dataclass
class PipelineConfig:
    """Full editable configuration: per-boundary pipelines plus fluid,
    peripapillary, and search settings."""

    boundaries: dict[BoundaryId, BoundaryPipeline] = field(
        default_factory=lambda: {
            b: BoundaryPipeline(polarity=p) for b, p in _DEFAULT_POLARITY.items()
        }
    )
    fluid: FluidConfig = field(default_factory=FluidConfig)
    peripapillary: PeripapillaryConfig = field(default_factory=PeripapillaryConfig)
    d_max: int = 3
    band_penalty: float = 10.0

    def validate(self) -> None:
        for b in BoundaryId:
            if b not in self.boundaries:
                raise ConfigError(f"missing boundary config for {b.value}")
        for b, bp in self.boundaries.items():
            bp.validate(b.value)
        self.fluid.validate()
        self.peripapillary.validate()
        if self.d_max < 1:
            raise ConfigError("d_max must be >= 1")
        if self.band_penalty <= 0:
            raise ConfigError("band_penalty must be > 0")

    # --- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "boundaries": {
                b.value: {
                    "polarity": bp.polarity.value,
                    "gaussian_sigma_px": bp.gaussian_sigma_px,
                    "morph_close_se": list(bp.morph_close_se),
                    "canny_low": bp.canny_low,
                    "canny_high": bp.canny_high,
                    "search_band": list(bp.search_band) if bp.search_band else None,
                }
                for b, bp in self.boundaries.items()
            },
            "fluid": {
                "canny_low": self.fluid.canny_low,
                "canny_high": self.fluid.canny_high,
                "morph_close_se": list(self.fluid.morph_close_se),
                "min_area_px": self.fluid.min_area_px,
            },
            "peripapillary": asdict(self.peripapillary),
            "d_max": self.d_max,
            "band_penalty": self.band_penalty,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        _reject_unknown(data, {"boundaries", "fluid", "peripapillary", "d_max",
                               "band_penalty"}, "config")
        cfg = cls()
        for name, entry in data.get("boundaries", {}).items():
            try:
                bid = BoundaryId(name)
            except ValueError:
                raise ConfigError(f"unknown boundary {name!r}") from None
            _reject_unknown(entry, {"polarity", "gaussian_sigma_px",
                                    "morph_close_se", "canny_low", "canny_high",
                                    "search_band"}, f"boundaries.{name}")
            bp = cfg.boundaries[bid]
            if "polarity" in entry:
                try:
                    bp.polarity = Polarity(entry["polarity"])
                except ValueError:
                    raise ConfigError(
                        f"{name}: unknown polarity {entry['polarity']!r}"
                    ) from None
            if "gaussian_sigma_px" in entry:
                bp.gaussian_sigma_px = float(entry["gaussian_sigma_px"])
            if "morph_close_se" in entry:
                bp.morph_close_se = tuple(int(v) for v in entry["morph_close_se"])
            if "canny_low" in entry:
                bp.canny_low = float(entry["canny_low"])
            if "canny_high" in entry:
                bp.canny_high = float(entry["canny_high"])
            if "search_band" in entry:
                band = entry["search_band"]
                bp.search_band = None if band is None else tuple(int(v) for v in band)
        if "fluid" in data:
            entry = data["fluid"]
            _reject_unknown(entry, {"canny_low", "canny_high", "morph_close_se",
                                    "min_area_px"}, "fluid")
            if "canny_low" in entry:
                cfg.fluid.canny_low = float(entry["canny_low"])
            if "canny_high" in entry:
                cfg.fluid.canny_high = float(entry["canny_high"])
            if "morph_close_se" in entry:
                cfg.fluid.morph_close_se = tuple(int(v) for v in entry["morph_close_se"])
            if "min_area_px" in entry:
                cfg.fluid.min_area_px = int(entry["min_area_px"])
        if "peripapillary" in data:
            entry = data["peripapillary"]
            _reject_unknown(entry, {"shadow_k", "band_half_width_px"}, "peripapillary")
            if "shadow_k" in entry:
                cfg.peripapillary.shadow_k = float(entry["shadow_k"])
            if "band_half_width_px" in entry:
                cfg.peripapillary.band_half_width_px = int(entry["band_half_width_px"])
        if "d_max" in data:
            cfg.d_max = int(data["d_max"])
        if "band_penalty" in data:
            cfg.band_penalty = float(data["band_penalty"])
        cfg.validate()
        return cfg

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(data)

    def boundary_hash(self, boundary: BoundaryId) -> str:
        """Stable digest of the settings that shape one boundary's cost map."""
        bp = self.boundaries[boundary]
        payload = json.dumps(
            {
                "boundary": boundary.value,
                "polarity": bp.polarity.value,
                "sigma": bp.gaussian_sigma_px,
                "band": list(bp.search_band) if bp.search_band else None,
                "band_penalty": self.band_penalty,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def fluid_hash(self) -> str:
        payload = json.dumps(
            {
                "kind": "fluid",
                "canny_low": self.fluid.canny_low,
                "canny_high": self.fluid.canny_high,
                "se": list(self.fluid.morph_close_se),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _reject_unknown(entry: dict, allowed: set[str], where: str) -> None:
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    unknown = set(entry) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def default_config() -> PipelineConfig:
    cfg = PipelineConfig()
    cfg.validate()
    return cfg
