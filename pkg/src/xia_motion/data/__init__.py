from .sequences import (
    COMMON_AERIALS, COUPLE_AERIALS, PERSONS, CoupleSequence, EvalWindow, SplitKind, SplitSpec,
    aerial_label, downsample, make_split, sample_test_subsequences, subsequence_starts,
)
from .io import (
    INDEX_NAME, SEQUENCE_COLUMNS, load_dataset, load_sequences, save_dataset, save_sequences,
    sequences_frame,
)
from .synthetic import (
    Choreography, Performer, Scenario, catalogue_labels, parse_scenario, synthesize_couple,
    synthesize_dataset,
)
