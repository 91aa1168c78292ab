"""Non-Gaussianity bounded uncertainty relation for single-mode states."""

from .exceptions import (CutoffTooSmallError, DegenerateParametersError, GridUnderresolvedError,
                         InconsistencyError, InfeasibleRegionError, InvalidInputError, InvalidStateError,
                         NGBoundError, UnsupportedRangeError)
from .fock import (FockDensityMatrix, covariance, from_diagonal, from_matrix, from_pure, load_state, moments,
                   phase_average, purity, state_from_json, state_to_json, thermal_state, validate)
from .metrics import (StateSummary, gaussian_overlap_numeric, non_gaussianity, reference_purity, summarize,
                      thermal_overlap)
from .region1 import (BoundPoint, purity_bound_approx, purity_bound_curve, rank2_boundary, region1_approx,
                      region1_exact, region1_state, region1_sweep)
from .region2 import (BoundSurface, ExtremalStateDescriptor, assy_family, beta_family, bound_overlap,
                      mixed_family_i, pure_min_overlap, quartic_root, total_bound)
from .wigner import CartesianGrid, PolarGrid, WignerGrid, min_wigner, wigner_eval, wigner_on_grid

__version__ = "0.1.0"
