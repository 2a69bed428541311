"""Numerical toolkit for theta functions, level-one loop-group characters, holonomy
supertraces on the circle and the torus, and Witten-genus series."""

__version__ = "0.1.0"

from .errors import (AlgebraMismatch, DefectiveMonodromy, DimMismatch, EllholError, InvalidRank,
                     NonConvergent, NotInWeylGroup, NotSpecialOrthogonal, TruncationTooSmall,
                     ValidationError, ZeroMode)
from .qseries import QPoint, QSeries, qs_add, qs_eval, qs_mul
from .special import (SpinStructure, ThetaChar, eisenstein, eisenstein_G, eta, g2_hat, theta, theta_char,
                      theta_product, theta_sum)
from .affine import DRootData, char_level_one, char_qexpansion, fock_character, modular_anomaly, weyl_check
from .grassmann import ExtAlgebra, GrassMat, g_exp, g_mul, g_str
from .transport import LoopConnection, Monodromy, aw_check, floquet_reduce, parallel_transport
from .elliptic import (TorusField, elliptic_aw_check, elliptic_holonomy_const, elliptic_holonomy_field,
                       epstein_zeta_det, zeta_det_torus)
from .chern import (BChInput, FormalRing, bismut_chern, localization_identity_check, q_graded_chern,
                    witten_series)

__all__ = [
    "__version__",
    "AlgebraMismatch",
    "DefectiveMonodromy",
    "DimMismatch",
    "EllholError",
    "InvalidRank",
    "NonConvergent",
    "NotInWeylGroup",
    "NotSpecialOrthogonal",
    "TruncationTooSmall",
    "ValidationError",
    "ZeroMode",
    "QPoint",
    "QSeries",
    "qs_add",
    "qs_eval",
    "qs_mul",
    "SpinStructure",
    "ThetaChar",
    "eisenstein",
    "eisenstein_G",
    "eta",
    "g2_hat",
    "theta",
    "theta_char",
    "theta_product",
    "theta_sum",
    "DRootData",
    "char_level_one",
    "char_qexpansion",
    "fock_character",
    "modular_anomaly",
    "weyl_check",
    "ExtAlgebra",
    "GrassMat",
    "g_exp",
    "g_mul",
    "g_str",
    "LoopConnection",
    "Monodromy",
    "aw_check",
    "floquet_reduce",
    "parallel_transport",
    "TorusField",
    "elliptic_aw_check",
    "elliptic_holonomy_const",
    "elliptic_holonomy_field",
    "epstein_zeta_det",
    "zeta_det_torus",
    "BChInput",
    "FormalRing",
    "bismut_chern",
    "localization_identity_check",
    "q_graded_chern",
    "witten_series",
]
