"""Statistics on covariance matrices: distances, means, geodesics, tangent PCA,
anisotropy indices and a Monte Carlo harness for comparing mean estimators."""

from .anisotropy import AnisotropyKind, anisotropy_map
from .errors import *  # noqa: F401,F403
from .geodesics import Geodesic, TensorField, field_interpolate, geodesic_point
from .means import MeanConfig, MeanResult, frechet_mean, gpa, mean, riemannian_mean, weighted_frechet
from .metrics import Metric, ProcrustesFit, distance, procrustes_rotation
from .simulation import ErrorModel, StudyConfig, gen_sample, run_study, stein_loss
from .tangent_pca import PcaModel, fit_pca, horizontal_residual, pc_path, tangent_coords

dist = distance

__version__ = "0.1.0"
