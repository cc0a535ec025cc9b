"""Dynamic-feature forecasting: spatial smoothing, ESPRIT, sequential VMD and LSTMs."""
from .embedding import (
    EmbeddingParams,
    TimeSeries,
    build_snapshots,
    build_trajectory_matrix,
    diagonal_average,
)
from .lstm import Hyperparams, LstmModel, Normalizer, TrainingWindowSet, predict_one_step, train
from .metrics import mae, mape, r2, rmse
from .pipeline import PipelineConfig, repeat_experiment, run_lstm_baseline, run_ss_lstm
from .sgvmd import SgvmdConfig, classify_series, decompose
from .subspace import ExtractionConfig, ModelOrder, extract_feature_series, spatial_smooth

__version__ = "0.1.0"
