"""Numerical laboratory for quasi-Einstein structures on surfaces."""

import os as _os

# QESURF_THREADS caps the BLAS/OpenMP pools; it must be set before numpy loads.
if _os.environ.get("QESURF_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["QESURF_THREADS"])

from .errors import *  # noqa: E402,F401,F403
from .chart import (ChartGrid, Metric2D, OneForm, ScalarField, diff, hodge_star,  # noqa: E402
                    line_integrate, scalar_curvature, wirtinger)
from .report import ResidualReport  # noqa: E402
from .qee import (GEHEParams, QEParams, QEStructure, gauduchon_constant,  # noqa: E402
                  gehe_residual, holomorphy_test, identity_residual, killing_ansatz, prolong,
                  prolongation_residuals, qee_residual, zero_index)
from .ew import (MobiusMap, WarpedProductSpec, WeylFrame, constcurv_residual,  # noqa: E402
                 frame_change, kw_residual, mobius_u, s2xs1_structure, warped_residual)
from .hitchin import (HitchinPair, ThetaField, curvature_certificate, curvature_of,  # noqa: E402
                      flat_connection, gauge_transform, hitchin_pair, hitchin_residual,
                      imQ_residual, lax_commutator, reconstruct_H, theta_residual, theta_solve)
from .hyp import (HypParams, SeriesSpec, alpha1_solution, basis, constraint,  # noqa: E402
                  dalpha_residual, eval_3f2, explicit_family, homothety_integrate,
                  lalpha_residual)

__version__ = "0.1.0"
