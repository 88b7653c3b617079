"""Holomorphic Fourier analysis on tori, SL(2, C) and their products."""

__version__ = "0.1.0"

from .errors import (HoloFourierError, InputError, NumericError, ExprError, HolomorphyError,
                     NonFiniteError, NonConvergentError, ExponentialOverflowError)
from .groups import (FactorKind, GroupSpec, GroupElement, LieAlgElement, cartan, radial,
                     multiply, inverse, polar_split, sample_element, lie_basis, exp_lie)
from .irreps import (IrrepLabel, InvariantOperator, enumerate_irreps, rep_matrix, character,
                     rep_lie, rep_operator)
from .integrate import GridConfig, QuadratureGrid, k_grid, kk_grid, radial_grid, g_grid, integrate
from .measures import (GaussianRadial, ShellStep, KAveraged, RadialDensity, PointDensity,
                       NormalizationTable, gaussian_radial, k_average, build_tame_measure,
                       normalization, verify_admissible, lemma_check)
from .transform import (FourierData, fourier, invert, plancherel_eval, translate, apply_operator,
                        gram_matrix, orthogonality_report)
from .spectral import (ClassExpansion, EvolutionState, is_class_function, class_expand, evolve,
                       evolve_check)
from .expr import HoloFn, parse, to_source, evaluate
from .estimators import HolomorphicFourier, CharacterExpansion, SpectralEvolution, TameMeasure
