"""Joint intent classification and slot filling on a Transformer encoder.

Thin wrapper over the compiled core::

    import jointnlu
    result = jointnlu.train({"data_dir": "data/snips", "out_dir": "run"})
    model = jointnlu.Model.load(result["checkpoint"])
    model.predict("play some jazz on spotify")
"""

from ._core import (
    ConfigError,
    DataError,
    Error,
    FormatError,
    Model,
    NumericError,
    ShapeError,
    Vocabulary,
    build_vocab,
    crf_log_partition,
    crf_viterbi,
    dataset_stats,
    extract_chunks,
    frame_accuracy,
    intent_accuracy,
    slot_f1,
    split_words,
    train,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "FormatError",
    "Model",
    "NumericError",
    "ShapeError",
    "Vocabulary",
    "build_vocab",
    "crf_log_partition",
    "crf_viterbi",
    "dataset_stats",
    "extract_chunks",
    "frame_accuracy",
    "intent_accuracy",
    "slot_f1",
    "split_words",
    "train",
]
