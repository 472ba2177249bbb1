# pylint: disable=missing-module-docstring
from pyvhrnn.models.model import (
    build_model,
    generate,
    hyperlstm_step,
    param_count,
    vhrnn_step,
    vrnn_step,
)
from pyvhrnn.models.model_base import (
    ModelState,
    ParameterStore,
    Params,
    SequenceModel,
    StepOutput,
)
from pyvhrnn.models.model_config import (
    DecoderHeads,
    HyperInputs,
    ModelConfig,
    ModelKinds,
    Recipes,
)
from pyvhrnn.models.model_hyperlstm import HyperLstm
from pyvhrnn.models.model_lgssm import LinearGaussianModel, kalman_log_likelihood
from pyvhrnn.models.model_vhrnn import Vhrnn
from pyvhrnn.models.model_vrnn import Vrnn
from pyvhrnn.models.report import (
    REFERENCE_COUNTS,
    LayerCount,
    ReconcileStatuses,
    Reconciliation,
    param_report,
    reconcile_reference_counts,
)
from pyvhrnn.models.symbols import SYMBOLS, Symbol, SymbolHomes
