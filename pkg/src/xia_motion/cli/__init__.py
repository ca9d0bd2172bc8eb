from .app import app
from .experiment import ExperimentConfig, load_experiment
