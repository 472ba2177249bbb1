# pylint: disable=missing-module-docstring
from pyvhrnn.cli.checkpoint import (
    Checkpoint,
    CheckpointError,
    RecordTags,
    checkpoint_load,
    checkpoint_save,
    load_params,
    restore_model,
)
from pyvhrnn.cli.run_config import (
    DataConfig,
    RunConfig,
    RunFields,
    apply_overrides,
    dump_run_config,
    load_run_config,
)
