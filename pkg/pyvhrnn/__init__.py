# pylint: disable=missing-module-docstring
from pyvhrnn.dataio.dataset import SequenceDataset
from pyvhrnn.models.model import build_model
from pyvhrnn.models.model_config import ModelConfig
from pyvhrnn.objectives.evaluate import evaluate
from pyvhrnn.objectives.objective_config import ObjectiveConfig, OptimConfig
from pyvhrnn.objectives.train import train
from pyvhrnn.synthdata.generator import SynthConfig, gen_dataset
