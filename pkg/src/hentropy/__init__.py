"""Certified lower bounds for the topological entropy of Henon maps.

Pipeline: cover the plane with a grid of boxes, enclose the map rigorously on
each box, trim to the recurrent part, build a combinatorial index pair,
compute the induced map on relative homology, extract a verified subshift,
and bound its entropy by a certified spectral-radius inequality.  Transition
matrices can further be reduced by strong shift equivalence with
machine-checkable certificates.
"""

from .boxmap import BoxMap, build_boxmap, invariant_part, scc_partition, spatial_components
from .cubical import CubicalSet
from .errors import (BudgetExceeded, ChainSolveFailure, ConditionNotSatisfied,
                     EmptyCover, EmptyInvariantSet, EnclosureOverflow,
                     HentropyError, IsolationFailure, MatrixParseError,
                     NonAcyclicCarrier, SearchBudgetExceeded, Unverifiable)
from .grid import BoxId, GridSpec, parse_resolution, resolution_schedule
from .homology import HomologyData, relative_homology, smith_normal_form
from .index_map import IndexMapData, induced_index_map
from .index_pair import IndexPair, build_index_pair, interior_components
from .interval import Interval, Rect2, henon_enclosure, henon_point
from .pipeline import (RunRecord, RunStore, bundled_plateaus, bundled_tdms,
                       dms_verify, run_bound, run_plateaus, run_sweep)
from .sse import (SSECertificate, amalgamate, backward_condition,
                  canonical_form, conjugate_up_to_permutation,
                  forward_condition, reduce_matrix)
from .subshift import (EntropyBound, TransitionMatrix, VerifiedSubshift,
                       entropy_estimate, entropy_lower_bound, extract_subshift,
                       load_matrix, save_matrix, verify_entropy_witness)

__version__ = "0.1.0"
