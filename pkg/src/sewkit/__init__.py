"""sewkit: a numerical laboratory for the stochastic sewing lemma.

Controls and control-adapted dyadic partitions, a generic sewing engine
with rate diagnostics, fractional Brownian motion with exact conditional
structure, periodic Besov/Littlewood-Paley analysis, additive functionals
of fBm paths, martingale-type checks on coin trees, and the continuity
modulus statistic.  `sewkit --help` lists the experiment runner.
"""

from .controls import (
    BesovDataControl,
    Control,
    DyadicTree,
    LinearControl,
    PowerControl,
    TabulatedControl,
    build_dyadic_tree,
    check_superadditive,
    control_from_dict,
    dyadic_points,
    mesh,
    validate_partition,
    w_midpoint,
)
from .fbm import FbmEnsemble, FbmModel, FbmParams, FbmPath, conditional_mean, model_for, rho, simulate
from .functionals import (
    ExponentBudget,
    TimeProfile,
    besov_random_profile,
    constant_profile,
    dirac_profile,
    functional_fine,
    functional_reference,
    functional_riemann,
    gaussian_bump_profile,
    germ_value,
    make_functional_germ,
    occupation_check,
    plane_wave_profile,
    regularity_budget,
    regularity_probe,
)
from .kolmogorov import ModulusReport, modulus_statistic, tail_study
from .mtype import (
    TreeMartingale,
    cond_expectation,
    doob_ineq_ratio,
    doob_min_constant,
    doob_split,
    sign_martingale,
    type_ratio,
    type_study,
)
from .sewing import (
    Germ,
    GermBounds,
    allocate,
    convergence_study,
    delta,
    doob_meyer_sums,
    rate_bound,
    riemann_sum,
    sew,
    uniqueness_probe,
)
from .spectral import (
    BesovIndices,
    GridFunction,
    GridSpec,
    besov_norm,
    bernstein_check,
    block_symbol,
    dirac,
    gaussian_bump,
    heat_convolve,
    heat_decay_check,
    lp_block,
    lp_norm,
    pag_check,
    plane_wave,
    point_eval,
    random_besov,
    shift,
)

__version__ = "0.1.0"
