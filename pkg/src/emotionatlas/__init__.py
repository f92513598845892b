"""emotionatlas: map emotional text content onto brain-region atlases.

Pipeline: corpus chunking -> 1536-dim embeddings -> standardized 3D PCA ->
seeded k-means -> greedy unique region assignment -> lexicon intensity
scoring -> per-region group statistics.
"""

__version__ = "0.1.0"

from .atlas import Atlas, BrainRegion, load_atlas, load_bundled, system_of
from .clustering import ClusterModel, cluster
from .corpus import (
    CorpusSchema,
    Document,
    TextChunk,
    chunk_document,
    chunk_documents,
    load_corpus,
)
from .embedding import (
    EmbeddingConfig,
    EmbeddingVector,
    RemoteConfig,
    embed_chunks,
    offline_embed,
)
from .lexicon import IntensityScore, Lexicon, default_lexicon, load_lexicon, score_intensity
from .mapping import RegionAssignment, assign_regions, label_chunks
from .pipeline import PipelineConfig, load_config, run_analyze, run_compare
from .reduction import Projection3D, fit_transform
from .stats import (
    EmotionIntensityReport,
    MannWhitneyResult,
    RegionComparison,
    RegionGroupStats,
    aggregate_regions,
    compare_groups,
    emotion_report,
    mann_whitney_u,
    system_rollup,
)

__all__ = [
    "Atlas",
    "BrainRegion",
    "ClusterModel",
    "CorpusSchema",
    "Document",
    "EmbeddingConfig",
    "EmbeddingVector",
    "EmotionIntensityReport",
    "IntensityScore",
    "Lexicon",
    "MannWhitneyResult",
    "PipelineConfig",
    "Projection3D",
    "RegionAssignment",
    "RegionComparison",
    "RegionGroupStats",
    "RemoteConfig",
    "TextChunk",
    "aggregate_regions",
    "assign_regions",
    "chunk_document",
    "chunk_documents",
    "cluster",
    "compare_groups",
    "default_lexicon",
    "embed_chunks",
    "emotion_report",
    "fit_transform",
    "label_chunks",
    "load_atlas",
    "load_bundled",
    "load_config",
    "load_corpus",
    "load_lexicon",
    "mann_whitney_u",
    "offline_embed",
    "run_analyze",
    "run_compare",
    "score_intensity",
    "system_of",
    "system_rollup",
]
