"""Brain-region atlases: names, MNI millimeter coordinates, categories.

Two atlases ship with the package: ``atlas18`` (11 lateralized regions plus
7 midline) and ``atlas25`` (11 bilateral pairs plus 3 midline). Coordinates
carry a provenance column; values beyond the two published pairs are
curated data, editable without touching code.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

HEMISPHERES = ("left", "right", "midline")
SYSTEMS = ("limbic", "cortical", "subcortical", "brainstem")
MNI_BOUND_MM = 100.0

BUNDLED_ATLASES = ("atlas18", "atlas25")

_CSV_HEADER = ["name", "x", "y", "z", "hemisphere", "system", "provenance"]


class AtlasError(ValueError):
    """Raised for malformed or inconsistent atlas files."""


@dataclass(frozen=True)
class BrainRegion:
    name: str
    mni: tuple[float, float, float]
    hemisphere: str
    system: str
    provenance: str = ""

    def __post_init__(self) -> None:
        if self.hemisphere not in HEMISPHERES:
            raise AtlasError(f"{self.name}: unknown hemisphere {self.hemisphere!r}")
        if self.system not in SYSTEMS:
            raise AtlasError(f"{self.name}: unknown system {self.system!r}")
        for coord in self.mni:
            if not (-MNI_BOUND_MM <= coord <= MNI_BOUND_MM):
                raise AtlasError(
                    f"{self.name}: coordinate {coord} outside +/-{MNI_BOUND_MM:g} mm"
                )


@dataclass(frozen=True)
class Atlas:
    """An ordered set of regions. Order is load order and is significant:
    greedy assignment breaks distance ties by region index."""

    name: str
    regions: tuple[BrainRegion, ...]

    def __post_init__(self) -> None:
        if not self.regions:
            raise AtlasError(f"{self.name}: atlas has no regions")
        seen: set[str] = set()
        for region in self.regions:
            if region.name in seen:
                raise AtlasError(f"{self.name}: duplicate region {region.name!r}")
            seen.add(region.name)

    def __len__(self) -> int:
        return len(self.regions)

    def names(self) -> list[str]:
        return [r.name for r in self.regions]

    def coordinates(self) -> np.ndarray:
        """Region coordinates as a (k, 3) float array in atlas order."""
        return np.array([r.mni for r in self.regions], dtype=float)

    def get(self, name: str) -> BrainRegion:
        for region in self.regions:
            if region.name == name:
                return region
        raise AtlasError(f"{self.name}: unknown region {name!r}")

    def index_of(self, name: str) -> int:
        for i, region in enumerate(self.regions):
            if region.name == name:
                return i
        raise AtlasError(f"{self.name}: unknown region {name!r}")


def normalize_region_name(name: str) -> str:
    """Table-style names to atlas names: lowercase, spaces to underscores."""
    return name.strip().lower().replace(" ", "_")


def load_atlas(path: str | Path, name: str | None = None) -> Atlas:
    """Load and validate an atlas CSV (header name,x,y,z,hemisphere,system,provenance)."""
    path = Path(path)
    regions: list[BrainRegion] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != _CSV_HEADER:
            raise AtlasError(f"{path}: expected header {','.join(_CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            region_name = (row["name"] or "").strip()
            if not region_name:
                raise AtlasError(f"{path}:{lineno}: empty region name")
            try:
                mni = (float(row["x"]), float(row["y"]), float(row["z"]))
            except (TypeError, ValueError) as exc:
                raise AtlasError(f"{path}:{lineno}: malformed coordinate: {exc}") from exc
            try:
                regions.append(
                    BrainRegion(
                        name=region_name,
                        mni=mni,
                        hemisphere=(row["hemisphere"] or "").strip(),
                        system=(row["system"] or "").strip(),
                        provenance=(row["provenance"] or "").strip(),
                    )
                )
            except AtlasError as exc:
                raise AtlasError(f"{path}:{lineno}: {exc}") from exc
    return Atlas(name=name or path.stem, regions=tuple(regions))


def save_atlas(atlas: Atlas, path: str | Path) -> None:
    """Write an atlas back out in the same CSV layout it loads from."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        for r in atlas.regions:
            writer.writerow(
                [r.name, _fmt(r.mni[0]), _fmt(r.mni[1]), _fmt(r.mni[2]),
                 r.hemisphere, r.system, r.provenance]
            )


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(value)


def load_bundled(name: str) -> Atlas:
    """Load one of the shipped atlases by name ("atlas18" or "atlas25")."""
    if name not in BUNDLED_ATLASES:
        raise AtlasError(f"unknown bundled atlas {name!r}; choose from {BUNDLED_ATLASES}")
    with resources.as_file(resources.files("emotionatlas.data") / f"{name}.csv") as p:
        return load_atlas(p, name=name)


def system_of(region_name: str, atlas: Atlas) -> str:
    """The system category (limbic/cortical/subcortical/brainstem) of a region."""
    return atlas.get(region_name).system
