"""End-to-end orchestration: analyze runs, group comparisons, manifests.

An analyze run writes a self-contained artifact directory. All primary
outputs are byte-deterministic for a fixed config and corpus; wall-clock
timestamps appear only in the run manifest. Every output file is schema
validated before a run is declared complete.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import httpx
import yaml

from . import __version__
from .atlas import Atlas, BrainRegion, load_atlas, load_bundled, BUNDLED_ATLASES
from .clustering import cluster
from .corpus import CorpusSchema, Document, chunk_documents, load_corpus
from .embedding import (
    ConfigError,
    EmbeddingConfig,
    RemoteConfig,
    as_matrix,
    embed_chunks,
)
from .lexicon import default_lexicon, load_lexicon, score_intensity
from .mapping import assign_regions, label_chunks
from .reduction import fit_transform
from .stats import (
    RegionGroupStats,
    aggregate_regions,
    compare_groups,
    default_valence_map,
    emotion_report,
    load_valence_map,
    system_rollup,
)


class PipelineError(RuntimeError):
    """A stage failure, carrying the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class DatasetConfig:
    path: str
    format: str = "csv"
    text_column: str = "text"
    id_column: str | None = None
    group_column: str | None = None
    label_column: str | None = None
    group: str | None = None  # static group for every document in this file

    def schema(self) -> CorpusSchema:
        return CorpusSchema(
            text=self.text_column,
            id=self.id_column,
            group=self.group_column,
            label=self.label_column,
        )


@dataclass
class PipelineConfig:
    datasets: list[DatasetConfig] = field(default_factory=list)
    provider: str = "offline"
    seed: int = 42
    chunk_limit: int = 300
    batch_size: int = 2000
    atlas: str = "atlas25"
    lexicon: str | None = None
    valence_map: str | None = None
    alpha: float = 0.05
    cache: str | None = None
    output_dir: str = "runs/analysis"
    rescale_mapping: bool = False
    per_occurrence_modifiers: bool = False
    remote: RemoteConfig = field(default_factory=RemoteConfig)

    def validate(self) -> None:
        if not self.datasets:
            raise ConfigError("config needs at least one dataset")
        for positive in ("seed", "chunk_limit", "batch_size"):
            if getattr(self, positive) < 1:
                raise ConfigError(f"{positive} must be positive")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.provider not in ("remote", "offline"):
            raise ConfigError(f"unknown provider {self.provider!r}")
        if self.atlas not in BUNDLED_ATLASES and not Path(self.atlas).exists():
            raise ConfigError(f"atlas {self.atlas!r} is neither bundled nor an existing file")

    def resolve_atlas(self) -> Atlas:
        if self.atlas in BUNDLED_ATLASES:
            return load_bundled(self.atlas)
        return load_atlas(self.atlas)


def load_config(path: str | Path) -> PipelineConfig:
    """Read a YAML config file into a PipelineConfig; unknown keys are errors."""
    with Path(path).open(encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")

    known = {f for f in PipelineConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")

    datasets = [
        DatasetConfig(**entry) if isinstance(entry, dict) else DatasetConfig(path=str(entry))
        for entry in raw.pop("datasets", [])
    ]
    remote = RemoteConfig(**raw.pop("remote", {}))
    try:
        return PipelineConfig(datasets=datasets, remote=remote, **raw)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def demo_corpus_path() -> Path:
    """Path of the bundled synthetic demo corpus."""
    with resources.as_file(resources.files("emotionatlas.data") / "demo_corpus.csv") as p:
        return p


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


# Output schemas: file name -> expected CSV header or required JSON keys.
CSV_SCHEMAS = {
    "chunks.csv": ["doc_id", "chunk_index", "group", "label", "cluster", "region", "intensity", "text"],
    "assignment.csv": ["cluster_id", "region_name", "distance"],
    "region_stats.csv": ["region", "group", "activation_count", "mean_intensity"],
    "region_samples.csv": ["region", "group", "doc_id", "sample"],
    "emotion_report.csv": ["label", "mean_intensity", "valence", "count"],
    "comparison.csv": ["region", "mean_a", "mean_b", "u_statistic", "p_value", "significant",
                       "p_bonferroni", "method", "n_a", "n_b"],
    "system_rollup.csv": ["system", "side", "group", "activation_count"],
    "activation_counts.csv": ["region", "side", "group", "activation_count"],
}
JSON_SCHEMAS = {
    "projection.json": ["means", "scales", "components", "explained_variance"],
    "cluster_model.json": ["centers", "labels", "inertia", "seed", "restarts"],
    "region_values.json": [],
    "manifest.json": ["version", "config", "inputs", "outputs", "stages"],
    "comparison.json": ["rows", "group_a", "group_b", "alpha"],
}


def validate_output_file(path: Path) -> None:
    """Check one output file against its schema; raise PipelineError if off."""
    name = path.name
    if name in CSV_SCHEMAS:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_SCHEMAS[name]:
                raise PipelineError("validate", f"{name}: header {header} != {CSV_SCHEMAS[name]}")
            for i, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise PipelineError("validate", f"{name}:{i}: {len(row)} fields, expected {len(header)}")
    elif name in JSON_SCHEMAS:
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise PipelineError("validate", f"{name}: invalid JSON: {exc}") from exc
        for key in JSON_SCHEMAS[name]:
            if key not in obj:
                raise PipelineError("validate", f"{name}: missing key {key!r}")
    else:
        raise PipelineError("validate", f"{name}: no schema registered")


def run_analyze(config: PipelineConfig, http_client: httpx.Client | None = None) -> Path:
    """Execute the five pipeline steps plus stats and write a run directory."""
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for stale in ("manifest.json", *CSV_SCHEMAS, *JSON_SCHEMAS):
        (out / stale).unlink(missing_ok=True)

    manifest: dict = {
        "version": __version__,
        "started_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": _config_dict(config),
        "inputs": {},
        "outputs": {},
        "stages": [],
        "completed": False,
    }

    stage = "setup"
    try:
        atlas = config.resolve_atlas()
        lex = load_lexicon(config.lexicon) if config.lexicon else default_lexicon()
        valences = (
            load_valence_map(config.valence_map) if config.valence_map else default_valence_map()
        )
        manifest["inputs"]["atlas"] = {"name": config.atlas, "regions": len(atlas)}
        manifest["atlas"] = _atlas_dict(atlas)
        manifest["stages"].append(stage)

        stage = "corpus"
        docs: list[Document] = []
        skipped = 0
        for ds in config.datasets:
            loaded = load_corpus(ds.path, ds.format, ds.schema())
            file_docs = loaded.documents
            if ds.group is not None:
                file_docs = [
                    Document(id=d.id, group=ds.group, label=d.label, text=d.text)
                    for d in file_docs
                ]
            docs.extend(file_docs)
            skipped += loaded.skip_count
            manifest["inputs"].setdefault("datasets", []).append(
                {"path": ds.path, "sha256": _sha256_file(Path(ds.path)),
                 "documents": len(file_docs), "skipped": loaded.skip_count}
            )
        ids = [d.id for d in docs]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})[0]
            raise PipelineError(stage, f"duplicate document id {dup!r} across datasets")
        manifest["stages"].append(stage)

        stage = "chunk"
        chunks = chunk_documents(docs, config.chunk_limit)
        if not chunks:
            raise PipelineError(stage, "corpus produced no chunks")
        manifest["counts"] = {"documents": len(docs), "skipped_rows": skipped, "chunks": len(chunks)}
        manifest["stages"].append(stage)

        stage = "intensity"
        scores = [
            score_intensity(c.text, lex, config.per_occurrence_modifiers) for c in chunks
        ]
        intensities = [s.value for s in scores]
        manifest["stages"].append(stage)

        stage = "embedding"
        emb_cfg = EmbeddingConfig(
            seed=config.seed,
            cache_path=config.cache,
            remote=RemoteConfig(
                **{**asdict(config.remote), "batch_size": config.batch_size}
            ),
        )
        vectors = embed_chunks(chunks, config.provider, emb_cfg, http_client=http_client)
        matrix = as_matrix(vectors)
        manifest["stages"].append(stage)

        stage = "reduction"
        projection = fit_transform(matrix)
        manifest["stages"].append(stage)

        stage = "clustering"
        model = cluster(projection.points, n_regions=len(atlas), seed=config.seed)
        manifest["stages"].append(stage)

        stage = "mapping"
        assignment = assign_regions(model.centers, atlas, rescale=config.rescale_mapping)
        labeled = label_chunks(model, assignment, chunks)
        manifest["stages"].append(stage)

        stage = "stats"
        groups = {d.id: d.group for d in docs}
        region_stats = aggregate_regions(labeled, intensities, groups)
        emotions = emotion_report(chunks, intensities, valences)
        manifest["stages"].append(stage)

        stage = "write"
        group_names = sorted({c.group for c in chunks})
        _write_chunk_table(out / "chunks.csv", chunks, intensities, model, labeled)
        _write_json(out / "projection.json", projection.to_dict())
        _write_json(out / "cluster_model.json", model.to_dict())
        _write_assignment(out / "assignment.csv", assignment)
        _write_region_stats(out / "region_stats.csv", region_stats, atlas, group_names)
        _write_region_samples(out / "region_samples.csv", region_stats)
        _write_json(out / "region_values.json", _region_values(region_stats, atlas, group_names))
        if emotions:
            _write_emotions(out / "emotion_report.csv", emotions)
        manifest["stages"].append(stage)

        stage = "validate"
        written = sorted(p.name for p in out.iterdir() if p.name != "manifest.json")
        for name in written:
            validate_output_file(out / name)
        manifest["outputs"] = {name: _sha256_file(out / name) for name in written}
        manifest["stages"].append(stage)
        manifest["completed"] = True
    except PipelineError:
        manifest["failed_stage"] = stage
        _finish_manifest(out, manifest)
        raise
    except Exception as exc:
        manifest["failed_stage"] = stage
        _finish_manifest(out, manifest)
        raise PipelineError(stage, str(exc)) from exc

    _finish_manifest(out, manifest)
    return out


def _finish_manifest(out: Path, manifest: dict) -> None:
    manifest["finished_at"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    _write_json(out / "manifest.json", manifest)


def _config_dict(config: PipelineConfig) -> dict:
    # Holds the API key env var NAME only; the key itself never leaves the
    # environment.
    return asdict(config)


def _atlas_dict(atlas: Atlas) -> dict:
    return {
        "name": atlas.name,
        "regions": [
            {"name": r.name, "x": r.mni[0], "y": r.mni[1], "z": r.mni[2],
             "hemisphere": r.hemisphere, "system": r.system, "provenance": r.provenance}
            for r in atlas.regions
        ],
    }


def _atlas_from_dict(d: dict) -> Atlas:
    return Atlas(
        name=d["name"],
        regions=tuple(
            BrainRegion(
                name=r["name"], mni=(r["x"], r["y"], r["z"]),
                hemisphere=r["hemisphere"], system=r["system"],
                provenance=r.get("provenance", ""),
            )
            for r in d["regions"]
        ),
    )


def _write_chunk_table(path, chunks, intensities, model, labeled) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(CSV_SCHEMAS["chunks.csv"])
        for chunk, intensity, label, (_, region) in zip(
            chunks, intensities, model.labels, labeled
        ):
            w.writerow([
                chunk.doc_id, chunk.chunk_index, chunk.group, chunk.label or "",
                int(label), region, f"{intensity:.4f}", chunk.text,
            ])


def _write_assignment(path, assignment) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(CSV_SCHEMAS["assignment.csv"])
        for cid, region, distance in assignment.to_rows():
            w.writerow([cid, region, repr(distance)])


def _write_region_stats(path, stats: list[RegionGroupStats], atlas: Atlas, groups: list[str]) -> None:
    cells = {(s.region, s.group): s for s in stats}
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(CSV_SCHEMAS["region_stats.csv"])
        for region in atlas.names():
            for group in groups:
                entry = cells.get((region, group))
                if entry is None or entry.activation_count == 0:
                    w.writerow([region, group, 0, ""])
                else:
                    w.writerow([region, group, entry.activation_count,
                                f"{entry.mean_intensity:.4f}"])


def _write_region_samples(path, stats: list[RegionGroupStats]) -> None:
    # Full float precision: these samples feed the U test on reload.
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(CSV_SCHEMAS["region_samples.csv"])
        for s in stats:
            for doc_id, sample in zip(s.sample_docs, s.intensity_samples):
                w.writerow([s.region, s.group, doc_id, repr(sample)])


def _region_values(stats: list[RegionGroupStats], atlas: Atlas, groups: list[str]) -> dict:
    cells = {(s.region, s.group): s for s in stats}
    out: dict = {}
    for region in atlas.names():
        out[region] = {}
        for group in groups:
            entry = cells.get((region, group))
            out[region][group] = {
                "activation_count": entry.activation_count if entry else 0,
                "mean_intensity": round(entry.mean_intensity, 4) if entry and entry.activation_count else None,
            }
    return out


def _write_emotions(path, emotions) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(CSV_SCHEMAS["emotion_report.csv"])
        for e in emotions:
            w.writerow([e.label, f"{e.mean_intensity:.4f}", e.valence, e.count])


# -- comparison -------------------------------------------------------------


def _load_run(run_dir: Path) -> tuple[dict, Atlas, list[RegionGroupStats]]:
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise PipelineError("compare", f"{run_dir} has no manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if not manifest.get("completed"):
        raise PipelineError("compare", f"{run_dir} is a partial run")
    atlas = _atlas_from_dict(manifest["atlas"])

    stats_rows: dict[tuple[str, str], dict] = {}
    with (run_dir / "region_stats.csv").open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            stats_rows[(row["region"], row["group"])] = {
                "count": int(row["activation_count"]),
                "mean": float(row["mean_intensity"]) if row["mean_intensity"] else 0.0,
            }
    samples: dict[tuple[str, str], list[tuple[str, float]]] = {}
    with (run_dir / "region_samples.csv").open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            samples.setdefault((row["region"], row["group"]), []).append(
                (row["doc_id"], float(row["sample"]))
            )

    stats = [
        RegionGroupStats(
            region=region,
            group=group,
            activation_count=info["count"],
            mean_intensity=info["mean"],
            intensity_samples=[v for _, v in samples.get((region, group), [])],
            sample_docs=[d for d, _ in samples.get((region, group), [])],
        )
        for (region, group), info in sorted(stats_rows.items())
    ]
    return manifest, atlas, stats


def _pick_group(stats: list[RegionGroupStats], wanted: str | None, run_dir: Path) -> str:
    present = sorted({s.group for s in stats})
    if wanted is None:
        if len(present) == 1:
            return present[0]
        raise PipelineError(
            "compare", f"{run_dir} has groups {present}; pick one explicitly"
        )
    if wanted not in present:
        raise PipelineError("compare", f"group {wanted!r} not in {run_dir} (has {present})")
    return wanted


def run_compare(
    run_a: str | Path,
    run_b: str | Path | None = None,
    group_a: str | None = None,
    group_b: str | None = None,
    alpha: float = 0.05,
    out_dir: str | Path | None = None,
) -> Path:
    """Compare two groups, from one run directory or two, and write the
    comparison tables. Both runs must have used the identical atlas."""
    run_a = Path(run_a)
    run_b = Path(run_b) if run_b is not None else run_a
    manifest_a, atlas_a, stats_a = _load_run(run_a)
    if run_b == run_a:
        manifest_b, atlas_b, stats_b = manifest_a, atlas_a, stats_a
    else:
        manifest_b, atlas_b, stats_b = _load_run(run_b)

    if _atlas_dict(atlas_a) != _atlas_dict(atlas_b):
        raise PipelineError("compare", "runs used different atlases")
    atlas = atlas_a

    group_a = _pick_group(stats_a, group_a, run_a)
    group_b = _pick_group(stats_b, group_b, run_b)

    # Side-tag the groups so identical names from two runs stay separate.
    def _tagged(stats: list[RegionGroupStats], group: str, tag: str) -> list[RegionGroupStats]:
        return [
            RegionGroupStats(
                region=s.region, group=tag, activation_count=s.activation_count,
                mean_intensity=s.mean_intensity,
                intensity_samples=s.intensity_samples, sample_docs=s.sample_docs,
            )
            for s in stats
            if s.group == group
        ]

    merged = _tagged(stats_a, group_a, "a") + _tagged(stats_b, group_b, "b")
    rows = compare_groups(merged, "a", "b", alpha=alpha, atlas=atlas)

    out = Path(out_dir) if out_dir is not None else run_a / f"compare_{group_a}_vs_{group_b}"
    out.mkdir(parents=True, exist_ok=True)

    with (out / "comparison.csv").open("w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(CSV_SCHEMAS["comparison.csv"])
        for r in rows:
            w.writerow([
                r.region,
                "" if r.mean_a is None else f"{r.mean_a:.4f}",
                "" if r.mean_b is None else f"{r.mean_b:.4f}",
                "" if r.u_statistic is None else f"{r.u_statistic:.4f}",
                "" if r.p_value is None else f"{r.p_value:.4f}",
                "Yes" if r.significant else "No",
                "" if r.p_bonferroni is None else f"{r.p_bonferroni:.4f}",
                r.method, r.n_a, r.n_b,
            ])

    _write_json(out / "comparison.json", {
        "group_a": group_a,
        "group_b": group_b,
        "alpha": alpha,
        "rows": [
            {"region": r.region, "mean_a": r.mean_a, "mean_b": r.mean_b,
             "u_statistic": r.u_statistic, "p_value": r.p_value,
             "significant": r.significant, "p_bonferroni": r.p_bonferroni,
             "method": r.method, "n_a": r.n_a, "n_b": r.n_b}
            for r in rows
        ],
    })

    sides = [("a", group_a, [s for s in merged if s.group == "a"]),
             ("b", group_b, [s for s in merged if s.group == "b"])]

    with (out / "system_rollup.csv").open("w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(CSV_SCHEMAS["system_rollup.csv"])
        for side, group, stats in sides:
            rollup = system_rollup(stats, atlas, groups=[side])
            for (system, _), count in sorted(rollup.items()):
                w.writerow([system, side, group, count])

    with (out / "activation_counts.csv").open("w", newline="", encoding="utf-8") as fh:
        w = _csv_writer(fh)
        w.writerow(CSV_SCHEMAS["activation_counts.csv"])
        for side, group, stats in sides:
            cells = {s.region: s.activation_count for s in stats}
            for region in atlas.names():
                w.writerow([region, side, group, cells.get(region, 0)])

    for name in ("comparison.csv", "comparison.json", "system_rollup.csv", "activation_counts.csv"):
        validate_output_file(out / name)
    return out
