"""Homomorphic SVD compression for XPCS two-time correlation analysis.

Frames are row-normalized and projected onto an encoding matrix ``V_K``.
The two-time correlation of the compressed rows ``Y`` is ``Y Y^T``: exact
for a full-rank offline encoder, a rank-K approximation otherwise.
"""

from .analysis import (
    KwwFit,
    SpectrumReport,
    VisibilityReport,
    detectability,
    fit_kww,
    peak_visibility,
    spectrum_report,
    ttc_background,
    visibility_report,
)
from .compress import append, compress_frame, compress_series, decompress, empty_store
from .correlate import StreamingTTC, g2_from_ttc, ttc_compressed, ttc_extend, ttc_raw, ttc_rel_error
from .encoder import build_offline, build_online, build_online_from_frames, suggest_k, truncate
from .errors import (
    BindingError,
    ContractError,
    DataError,
    FitConvergenceError,
    FitDegenerateError,
    FormatError,
    IntegrityError,
    LengthError,
    MaskError,
    NormalizationError,
    NumericalError,
    RankError,
    ShapeError,
    XpcsError,
)
from .linalg import SvdResult, gram, gram_svd, matmul, row_normalize, set_threads, sym_eig
from .model import (
    CompressedSeries,
    EncoderMode,
    EncodingMatrix,
    FrameSeries,
    G2Curve,
    PixelMask,
    TTCMatrix,
    apply_mask,
    content_hash,
)

__version__ = "0.1.0"
