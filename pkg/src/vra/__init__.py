"""Visual realism assessment of face-swap videos from precomputed frame features.

Pipeline: feature store -> random frame window -> mean/std pooling ->
fully connected MOS head (trained with AdamW) -> repeated prediction and
averaging -> weighted two-model ensemble -> PLCC/SRCC/RMSE scoring.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DataError,
    DegenerateInput,
    NumericError,
    TooFewFrames,
    UndefinedStd,
    VRAError,
)
from .featurestore import (  # noqa: E402
    FeatureStore,
    FrameFeatureMatrix,
    SplitAssignment,
    VideoManifestEntry,
    build_store,
    ingest_features,
    load_video_features,
    split_dataset,
)
from .sampler import RngStream, SequenceSample, make_rng, sample_sequence  # noqa: E402
from .pooling import PooledFeature, pool_concat, pool_mean, pool_std  # noqa: E402
from .regressor import RegressorParams, backward, forward, init_params, loss_rmse  # noqa: E402
from .trainer import (  # noqa: E402
    OptimizerState,
    PlateauScheduler,
    TrainConfig,
    TrainedModel,
    TrainHistory,
    accumulate_gradients,
    adamw_step,
    early_stop_check,
    scheduler_update,
    train,
)
from .checkpoint import load_checkpoint, save_checkpoint  # noqa: E402
from .inference import (  # noqa: E402
    EnsembleConfig,
    PredictionSet,
    average_predictions,
    ensemble_weighted,
    pairwise_consistency_rmse,
    predict_repeated,
    predict_video,
)
from .metrics import MetricsReport, SetMetrics, final_score, plcc, rmse_metric, srcc  # noqa: E402
from .geometry import BBox, scale_bbox  # noqa: E402
