"""Long-term citation count forecasting from early citation history."""

from .corpus import (
    CitationSeries,
    Corpus,
    FeatureSequence,
    build_series,
    examples_from_series,
    filter_eligible,
    ingest_edge_list,
    load_series_jsonl,
    make_examples,
    save_series_jsonl,
    split_train_test,
    synth_corpus,
)
from .errors import DataError, NumericError
from .metrics import EvalReport, acc, citation_histogram, distribution_report, mape
from .model_io import load_model, save_model
from .network import (
    ModelConfig,
    ModelParams,
    Prediction,
    Variant,
    forward,
    init_params,
)
from .numkit import Rng
from .training import (
    TrainConfig,
    TrainTrace,
    backward,
    evaluate_split,
    finite_diff_grad,
    mape_loss,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "CitationSeries",
    "Corpus",
    "DataError",
    "EvalReport",
    "FeatureSequence",
    "ModelConfig",
    "ModelParams",
    "NumericError",
    "Prediction",
    "Rng",
    "TrainConfig",
    "TrainTrace",
    "Variant",
    "acc",
    "backward",
    "build_series",
    "citation_histogram",
    "distribution_report",
    "evaluate_split",
    "examples_from_series",
    "filter_eligible",
    "finite_diff_grad",
    "forward",
    "ingest_edge_list",
    "init_params",
    "load_model",
    "load_series_jsonl",
    "make_examples",
    "mape",
    "mape_loss",
    "save_model",
    "save_series_jsonl",
    "split_train_test",
    "synth_corpus",
    "train",
]
