# pylint: disable=missing-module-docstring
from pyvhrnn.cells.cell_base import CellState, Gates, GateScales, GruWeights, LstmWeights
from pyvhrnn.cells.gru import gru_step, hyper_gru_step
from pyvhrnn.cells.hyper_linear import hyper_linear, linear
from pyvhrnn.cells.lstm import hyper_lstm_step, lstm_step
