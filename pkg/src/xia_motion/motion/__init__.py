from .dct import (
    dct, idct, dct_matrix, DctCoeffs, pad_last_window, pad_and_encode_value, features_to_window,
)
from .windows import MotionSequence, SubSequenceBank, extract_windows, window_count
