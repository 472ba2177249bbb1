# pylint: disable=missing-module-docstring
from pyvhrnn.synthdata.bank import (
    ENTRY_BOUND,
    MatrixBank,
    bank_id,
    make_matrix_bank,
    spectral_radius,
)
from pyvhrnn.synthdata.generator import (
    SynthConfig,
    SynthFields,
    SynthSegment,
    SynthSequence,
    SynthSettings,
    gen_dataset,
    gen_sequence,
    resimulate,
)
from pyvhrnn.synthdata.schedule import (
    MIN_SEGMENT,
    SIGMA_LEVELS,
    SigmaSchedule,
    gen_sigma_schedule,
)
