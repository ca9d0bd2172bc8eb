from .training_service import (
    LOSS_COLUMNS, TrainConfig, TrainResult, TrainingService, checkpoint_metadata,
    extract_training_windows, jme_loss, load_model, train, training_service,
)
from .evaluation_service import (
    CountingModel, EvalConfig, EvaluationService, Forecaster, GroundTruthForecaster, ModelForecaster,
    as_forecaster, evaluate, evaluation_service, rollout,
)
from .triangulation_service import (
    OBSERVATION_COLUMNS, POINT_COLUMNS, TriangulationService, triangulation_service,
)
