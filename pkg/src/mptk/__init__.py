"""mptk: author, encode, compose, render, and evaluate point-track motion prompts."""

from mptk.tracks import (
    ConditioningVolume,
    EmbeddingTable,
    TrackSet,
    assign_embeddings,
    concat_tracks,
    encode_conditioning,
    subsample_tracks,
    to_displacements,
)

__version__ = "0.1.0"

__all__ = [
    "ConditioningVolume",
    "EmbeddingTable",
    "TrackSet",
    "assign_embeddings",
    "concat_tracks",
    "encode_conditioning",
    "subsample_tracks",
    "to_displacements",
]
