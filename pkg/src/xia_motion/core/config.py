from typing import List
from pydantic_settings import BaseSettings
from pathlib import Path

PROJECT_ROOT = Path(__file__).parent.parent.parent.parent
ENV_FILE_PATH = PROJECT_ROOT / ".env"

class Settings(BaseSettings):
    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Frame rates: recordings are captured at SOURCE_FPS and evaluated at TARGET_FPS
    SOURCE_FPS: int = 50
    TARGET_FPS: int = 25

    # Evaluation protocol
    TEST_SUBSEQUENCES: int = 64
    HORIZONS_MS: List[int] = [80, 400, 720, 1000]
    EVAL_WORKERS: int = 4

    # Artifact names inside an experiment output directory
    CHECKPOINT_NAME: str = "model.ckpt"
    LOSS_CURVE_NAME: str = "loss_curve.csv"
    METRICS_NAME: str = "metrics.csv"
    JOINT_METRICS_NAME: str = "metrics_per_joint.csv"
    TABLE_NAME: str = "metrics_table.txt"

    class Config:
        env_file = str(ENV_FILE_PATH)
        env_prefix = "XIA_"
        case_sensitive = True
        extra = "ignore"


settings = Settings()
