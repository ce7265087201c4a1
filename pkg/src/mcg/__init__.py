"""Multiscale combinatorial grouping: hierarchical segmentation and
object-proposal generation with downsampled normalized cuts."""

from .affinity import build_affinity, local_contour_cue
from .align import align_ucm, multiscale_combine, project, rescale_segmentation
from .config import PipelineConfig
from .dncuts import EigenBasis, dncuts, ncuts, pixel_decimate, spectral_gradients, whiten
from .errors import FormatError, IoError, McgError, ParameterError, SolverError
from .evaluation import (best_overlap_per_instance, instance_level_jaccard, jaccard,
                         quality_vs_count_curve, recall_at)
from .grouping import Proposal, RankedList, dedup, enumerate_tuples, proposal_mask
from .hierarchy import (Merge, Ucm, build_ucm, extract_boundary, finest_partition,
                        sample_hierarchy, ucm_from_strength_grid, ucm_strength_grid)
from .pareto import (FrontParams, ParetoPoint, combine_at, greedy_front_combine,
                     pareto_filter, select_working_point)
from .ranking import (ForestConfig, OverlapRegressor, compute_features,
                      score_and_rank, train_regressor)
from .regiontree import (RegionTree, compute_areas, compute_bboxes,
                         compute_neighbors, compute_perimeters)

__version__ = "0.1.0"
