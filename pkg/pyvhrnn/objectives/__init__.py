# pylint: disable=missing-module-docstring
from pyvhrnn.objectives.bounds import (
    compute_bound,
    elbo,
    fivo,
    iwae,
    log_weight,
    particle_pass,
)
from pyvhrnn.objectives.evaluate import EvalResult, evaluate, ratio_stderr
from pyvhrnn.objectives.objective_config import (
    Bounds,
    ObjectiveConfig,
    OptimConfig,
    ResamplePolicies,
)
from pyvhrnn.objectives.optim import OptimState, adam_update, clip_by_global_norm, global_norm
from pyvhrnn.objectives.smc import (
    ParticleEnsemble,
    WeightUnderflowError,
    ess,
    resample_multinomial,
)
from pyvhrnn.objectives.train import (
    MetricRow,
    RunLogRow,
    TrainingDivergedError,
    TrainingState,
    TrainResult,
    epoch_rng,
    load_metrics,
    save_metrics,
    save_run_log,
    train,
    train_epoch,
)
