"""Per-region aggregation and nonparametric group comparison.

The Mann-Whitney U test reports the first sample's U with midranks for
ties. Small samples (pooled size at most 12 and a feasible enumeration)
get an exact two-sided p-value by enumerating every assignment of pooled
values to the first group; larger samples use the normal approximation
with tie-corrected variance and a 0.5 continuity correction. Intensity
samples entering the test are per-document means, one per document per
region it touches, not per-chunk values; per-chunk samples would treat
repeated chunks from one speaker as independent evidence.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from importlib import resources
from itertools import combinations
from pathlib import Path

from .atlas import SYSTEMS, Atlas

EXACT_MAX_POOLED = 12
EXACT_MAX_ASSIGNMENTS = 10_000

VALENCES = ("positive", "negative", "ambiguous", "neutral")
UNMAPPED_VALENCE = "unmapped"


class StatsError(ValueError):
    """Raised for empty samples or misaligned inputs."""


@dataclass(frozen=True)
class RegionGroupStats:
    region: str
    group: str
    activation_count: int
    mean_intensity: float
    intensity_samples: list[float]
    sample_docs: list[str]


@dataclass(frozen=True)
class MannWhitneyResult:
    u_statistic: float
    p_value: float
    significant: bool
    method: str  # "exact" or "normal"
    n_a: int
    n_b: int


@dataclass(frozen=True)
class RegionComparison:
    region: str
    mean_a: float | None
    mean_b: float | None
    u_statistic: float | None
    p_value: float | None
    significant: bool
    method: str  # "exact", "normal", or "missing"
    n_a: int
    n_b: int
    p_bonferroni: float | None = None


@dataclass(frozen=True)
class EmotionIntensityReport:
    label: str
    mean_intensity: float
    valence: str
    count: int


def _doubled_midranks(pooled: list[float]) -> list[int]:
    # Midranks are multiples of 1/2; doubled they are exact integers.
    n = len(pooled)
    order = sorted(range(n), key=lambda i: pooled[i])
    ranks2 = [0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        doubled = (i + 1) + (j + 1)
        for t in range(i, j + 1):
            ranks2[order[t]] = doubled
        i = j + 1
    return ranks2


def _tie_counts(pooled: list[float]) -> list[int]:
    counts: list[int] = []
    for value in sorted(set(pooled)):
        counts.append(sum(1 for x in pooled if x == value))
    return counts


def mann_whitney_u(
    sample_a: list[float], sample_b: list[float], alpha: float = 0.05
) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test; reports the first sample's U."""
    n_a, n_b = len(sample_a), len(sample_b)
    if n_a == 0 or n_b == 0:
        raise StatsError("both samples must be nonempty")
    pooled = list(sample_a) + list(sample_b)
    n = n_a + n_b
    ranks2 = _doubled_midranks(pooled)

    # All quantities doubled to stay in integer arithmetic.
    u2_a = sum(ranks2[:n_a]) - n_a * (n_a + 1)
    u_a = u2_a / 2.0
    center2 = n_a * n_b  # doubled mean of U

    if n <= EXACT_MAX_POOLED and math.comb(n, n_a) <= EXACT_MAX_ASSIGNMENTS:
        dev_obs = abs(u2_a - center2)
        hits = 0
        total = 0
        offset = n_a * (n_a + 1) + center2
        for combo in combinations(range(n), n_a):
            total += 1
            if abs(sum(ranks2[i] for i in combo) - offset) >= dev_obs:
                hits += 1
        p = hits / total
        method = "exact"
    else:
        mu = n_a * n_b / 2.0
        ties = _tie_counts(pooled)
        correction = sum(t**3 - t for t in ties) / (n * (n - 1))
        var = n_a * n_b / 12.0 * ((n + 1) - correction)
        if var <= 0.0:
            p = 1.0
        else:
            dz = max(abs(u_a - mu) - 0.5, 0.0)  # continuity correction
            z = dz / math.sqrt(var)
            p = math.erfc(z / math.sqrt(2.0))
        method = "normal"

    p = min(p, 1.0)
    return MannWhitneyResult(
        u_statistic=u_a,
        p_value=p,
        significant=p < alpha,
        method=method,
        n_a=n_a,
        n_b=n_b,
    )


def aggregate_regions(
    labeled_chunks: list[tuple[tuple[str, int], str]],
    intensities: list[float],
    groups: dict[str, str],
) -> list[RegionGroupStats]:
    """Per (region, group) activation counts, chunk-mean intensity, and
    per-document intensity samples.

    The output is the full grid of regions seen anywhere crossed with
    groups seen anywhere, sorted by (region, group); a group with no
    chunks in a region gets an explicit zero-count cell.
    """
    if len(labeled_chunks) != len(intensities):
        raise StatsError(
            f"{len(labeled_chunks)} labeled chunks but {len(intensities)} intensities"
        )
    chunk_values: dict[tuple[str, str], list[float]] = {}
    doc_values: dict[tuple[str, str], dict[str, list[float]]] = {}
    for ((doc_id, _), region), intensity in zip(labeled_chunks, intensities):
        if doc_id not in groups:
            raise StatsError(f"document {doc_id!r} missing from group map")
        group = groups[doc_id]
        cell = (region, group)
        chunk_values.setdefault(cell, []).append(intensity)
        doc_values.setdefault(cell, {}).setdefault(doc_id, []).append(intensity)

    out: list[RegionGroupStats] = []
    for region in sorted({r for r, _ in chunk_values}):
        for group in sorted({g for _, g in chunk_values}):
            values = chunk_values.get((region, group))
            if values is None:
                out.append(
                    RegionGroupStats(
                        region=region,
                        group=group,
                        activation_count=0,
                        mean_intensity=0.0,
                        intensity_samples=[],
                        sample_docs=[],
                    )
                )
                continue
            per_doc = doc_values[(region, group)]
            docs = sorted(per_doc)
            out.append(
                RegionGroupStats(
                    region=region,
                    group=group,
                    activation_count=len(values),
                    mean_intensity=sum(values) / len(values),
                    intensity_samples=[sum(per_doc[d]) / len(per_doc[d]) for d in docs],
                    sample_docs=docs,
                )
            )
    return out


def system_rollup(
    stats: list[RegionGroupStats],
    atlas: Atlas,
    groups: list[str] | None = None,
) -> dict[tuple[str, str], int]:
    """Activation totals per (system, group), zero-filled for every system
    present in the atlas."""
    group_names = sorted(set(groups) if groups else {s.group for s in stats})
    atlas_systems = [s for s in SYSTEMS if any(r.system == s for r in atlas.regions)]
    totals = {(system, g): 0 for system in atlas_systems for g in group_names}
    for entry in stats:
        system = atlas.get(entry.region).system
        key = (system, entry.group)
        totals[key] = totals.get(key, 0) + entry.activation_count
    return totals


def compare_groups(
    stats: list[RegionGroupStats],
    group_a: str,
    group_b: str,
    alpha: float = 0.05,
    atlas: Atlas | None = None,
) -> list[RegionComparison]:
    """Per-region Mann-Whitney comparisons between two groups.

    With an atlas, one row per atlas region in atlas order; otherwise rows
    for regions seen in the stats, sorted by name. Regions lacking samples
    on either side are emitted with the "missing" method marker instead of
    a test. A Bonferroni-adjusted p accompanies every tested row.
    """
    by_cell = {(s.region, s.group): s for s in stats}
    if atlas is not None:
        regions = atlas.names()
    else:
        regions = sorted({s.region for s in stats})

    rows: list[RegionComparison] = []
    for region in regions:
        a = by_cell.get((region, group_a))
        b = by_cell.get((region, group_b))
        if a is None or b is None or not a.intensity_samples or not b.intensity_samples:
            rows.append(
                RegionComparison(
                    region=region,
                    mean_a=a.mean_intensity if a and a.activation_count else None,
                    mean_b=b.mean_intensity if b and b.activation_count else None,
                    u_statistic=None,
                    p_value=None,
                    significant=False,
                    method="missing",
                    n_a=len(a.intensity_samples) if a else 0,
                    n_b=len(b.intensity_samples) if b else 0,
                )
            )
            continue
        result = mann_whitney_u(a.intensity_samples, b.intensity_samples, alpha=alpha)
        rows.append(
            RegionComparison(
                region=region,
                mean_a=a.mean_intensity,
                mean_b=b.mean_intensity,
                u_statistic=result.u_statistic,
                p_value=result.p_value,
                significant=result.significant,
                method=result.method,
                n_a=result.n_a,
                n_b=result.n_b,
            )
        )

    n_tested = sum(1 for r in rows if r.p_value is not None)
    if n_tested:
        rows = [
            r if r.p_value is None
            else replace(r, p_bonferroni=min(1.0, r.p_value * n_tested))
            for r in rows
        ]
    return rows


def emotion_report(
    chunks,
    intensities: list[float],
    valence_map: dict[str, str],
) -> list[EmotionIntensityReport]:
    """Mean intensity per emotion label, sorted by descending mean then
    label. Labels absent from the valence map are kept and marked
    "unmapped"; unlabeled chunks are ignored."""
    if len(chunks) != len(intensities):
        raise StatsError(f"{len(chunks)} chunks but {len(intensities)} intensities")
    per_label: dict[str, list[float]] = {}
    for chunk, intensity in zip(chunks, intensities):
        if chunk.label is None:
            continue
        per_label.setdefault(chunk.label, []).append(intensity)

    reports = [
        EmotionIntensityReport(
            label=label,
            mean_intensity=sum(values) / len(values),
            valence=valence_map.get(label, UNMAPPED_VALENCE),
            count=len(values),
        )
        for label, values in per_label.items()
    ]
    reports.sort(key=lambda r: (-r.mean_intensity, r.label))
    return reports


def load_valence_map(path: str | Path) -> dict[str, str]:
    """Load a label,valence CSV into a dict."""
    out: dict[str, str] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["label", "valence"]:
            raise StatsError(f"{path}: expected header 'label,valence'")
        for row in reader:
            valence = (row.get("valence") or "").strip()
            if valence not in VALENCES:
                raise StatsError(f"{path}: unknown valence {valence!r} for {row.get('label')!r}")
            out[(row.get("label") or "").strip()] = valence
    return out


def default_valence_map() -> dict[str, str]:
    """The GoEmotions-style label to valence mapping shipped with the package."""
    with resources.as_file(resources.files("emotionatlas.data") / "valence_goemotions.csv") as p:
        return load_valence_map(p)
