"""Semi-supervised relation extraction over multiple reference graphs."""

from ._core import (
    CheckpointData,
    CorpusSplit,
    Encoder,
    EncoderConfig,
    EntitySignature,
    GeneratedCorpus,
    GraphConfig,
    GraphKind,
    GraphSet,
    IoError,
    IterationRecord,
    Lemmatizer,
    Metrics,
    MgatConfig,
    ParseError,
    PredictionPair,
    ReferenceGraph,
    RelationVocab,
    RunResult,
    Sample,
    SemiSupervisedRunner,
    Span,
    SynthSpec,
    TrainConfig,
    ValidationError,
    VerbSignature,
    build_entity_graph,
    build_relation_vocab,
    build_semantic_graph,
    build_verb_graph,
    config_entries,
    cosine_similarity,
    emit_curves,
    entity_signature,
    generate,
    load_checkpoint,
    load_corpus,
    read_run_log,
    restore_encoder,
    restore_relations,
    save_checkpoint,
    save_corpus,
    score,
    select_augmentation,
    snapshot,
    split_corpus,
    train_config_from_entries,
    validate_sample,
    validate_train_config,
    verb_signature,
    write_generated,
    write_run_log,
    write_split_manifest,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
