"""Persisted model bundles: a directory of inspectable JSON artifacts.

A bundle ties together the vocabulary, the top-k neighbor model, the
optional PCA embedding, and a manifest carrying the schema version, the
build configuration, and a content hash of the corpus the model was
built from.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .corpus import Corpus, SchemaError, Vocabulary, build_matrix
from .embedding import IngredientEmbedding
from .jsonio import dump_json, load_json
from .similarity import (
    Measure,
    NeighborModel,
    SourceRef,
    build_source,
    similarity_matrix,
    top_k_neighbors,
)

SCHEMA_VERSION = 1


@dataclass
class ModelBundle:
    vocabulary: Vocabulary
    model: NeighborModel
    embedding: IngredientEmbedding | None
    manifest: dict
    pipeline: dict | None = None

    @property
    def n(self) -> int:
        return len(self.vocabulary)

    def manifest_summary(self) -> dict:
        return {
            "schema_version": self.manifest.get("schema_version"),
            "created_at": self.manifest.get("created_at"),
            "corpus_sha256": self.manifest.get("corpus_sha256"),
            "config": self.manifest.get("config"),
            "ingredients": self.n,
        }


def build_model(corpus: Corpus, measure: Measure, k: int,
                source: SourceRef) -> tuple[NeighborModel, IngredientEmbedding | None]:
    """Build the neighbor model (and the embedding, for pca sources)."""
    matrix = build_matrix(corpus)
    data = build_source(matrix, source)
    sim = similarity_matrix(data, measure)
    model = top_k_neighbors(sim, k, corpus.vocabulary.names)
    embedding = data if isinstance(data, IngredientEmbedding) else None
    return model, embedding


def save_bundle(out_dir: str | Path, vocabulary: Vocabulary, model: NeighborModel,
                embedding: IngredientEmbedding | None,
                corpus_sha256: str | None = None,
                pipeline: dict | None = None,
                created_at: str | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "created_at": created_at
        or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "corpus_sha256": corpus_sha256,
        "config": {
            "measure": model.measure.to_json_dict(),
            "k": model.k,
            "source": model.source.to_json_dict(),
        },
    }
    dump_json(manifest, out / "manifest.json")
    vocab = [{"id": i, "name": name, "count": count}
             for i, (name, count) in enumerate(zip(vocabulary.names,
                                                   vocabulary.counts))]
    dump_json({"ingredients": vocab}, out / "vocabulary.json")
    dump_json(model.to_json_dict(), out / "neighbors.json")
    if embedding is not None:
        dump_json(embedding.to_json_dict(), out / "embedding.json")
    if pipeline is not None:
        dump_json(pipeline, out / "pipeline.json")


def load_bundle(path: str | Path) -> ModelBundle:
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise FileNotFoundError(f"not a model bundle (no manifest.json): {root}")
    manifest = load_json(manifest_path)
    version = manifest.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported bundle schema version {version!r} (expected {SCHEMA_VERSION})")
    vocab_doc = load_json(root / "vocabulary.json")
    entries = sorted(vocab_doc["ingredients"], key=lambda e: e["id"])
    vocabulary = Vocabulary([e["name"] for e in entries],
                            [e["count"] for e in entries])
    model = NeighborModel.from_json_dict(load_json(root / "neighbors.json"))
    if model.n != len(vocabulary):
        raise SchemaError("neighbors.json does not match vocabulary size")
    embedding = None
    if (root / "embedding.json").is_file():
        embedding = IngredientEmbedding.from_json_dict(load_json(root / "embedding.json"))
    pipeline = None
    if (root / "pipeline.json").is_file():
        pipeline = load_json(root / "pipeline.json")
    return ModelBundle(vocabulary=vocabulary, model=model, embedding=embedding,
                       manifest=manifest, pipeline=pipeline)
