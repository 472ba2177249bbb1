# pylint: disable=missing-module-docstring
from pyvhrnn.dataio.dataset import (
    DatasetFields,
    NormStats,
    SequenceDataset,
    SequenceRecord,
    Splits,
)
from pyvhrnn.dataio.jsonl import load_jsonl, save_jsonl
from pyvhrnn.dataio.preprocess import (
    Transforms,
    export_csv,
    fit_stats,
    iterate_batches,
    parse_mode,
    preprocess,
    preprocess_chain,
    split,
)
