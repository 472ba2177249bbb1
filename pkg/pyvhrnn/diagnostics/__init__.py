# pylint: disable=missing-module-docstring
from pyvhrnn.diagnostics.emit import csv_columns, emit_csv, emit_svg
from pyvhrnn.diagnostics.trace import MIN_TREND_LENGTH, TraceBundle, kl_trend_stat, trace
