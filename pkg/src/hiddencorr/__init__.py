"""Hidden correlation matrices from covariance tensors.

Order-3 tensor algebra, PARAFAC / Tucker / slice-diagonal (SDT) models fitted
by alternating least squares, rank selection, the link-matrix to correlation
pipeline, a simulation study generator and spectrum similarity tests.
Modes and indices in the public API are 1-based.
"""

__version__ = "0.1.0"

from .tensor_core import (
    as_tensor3, slice_, fiber, unfold_general, fold_general, unfold_n, fold_n,
    nmode_product, outer3, frob_norm,
)
from .linalg import sym_eig, svd, pinv, lstsq, khatri_rao
from .complexity import count_free_params
from .decompositions import (
    ParafacModel, TuckerModel, SdtModel, AlsConfig, FitReport,
    fit, fit_parafac, fit_tucker, fit_sdt, reconstruct, embed_parafac_as_sdt,
    tucker_core_from_factors,
)
from .model_selection import bic, aic, aicc, concordia, diffit, scan_ranks, RankScanResult
from .hcm import (
    link_matrix, normalize_to_correlation, nearest_correlation, remove_market_mode,
    build_hcm, hcm_from_scan, HcmResult, is_correlation_matrix,
)
from .simulation import SimConfig, simulate, vine_beta_corr, split_tensor
from .spectrum import kruskal_wallis, ks_two_sample, compare_spectra, block_contrast
from .ingestion import ReturnsPanel, WindowSpec, log_returns, window_cov, build_cov_tensor
