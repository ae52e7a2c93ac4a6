"""Finite approximation of center-valued L2 invariants.

Group ring matrices over groups such as Z^r, U x Z^r and finite groups are
approximated by finite matrices (quotients, direct limits, Folner
compressions, sofic graphs).  The package computes spectral densities,
kernel Fourier coefficients, Fuglede-Kadison determinants and their
delocalized variants, and compares them with exact and Fourier-symbol
reference values.
"""

from .approximation import (DirectLimit, DirectLimitStage, FiniteRealization, FolnerCompression, FolnerSet,
                            InverseLimit, build_direct_limit_stage, build_folner_compression,
                            build_inverse_limit_stage, build_stages, neighborhood, trace_convergence_check)
from .cyclotomic import Cyclotomic
from .groups import (GroupDescriptor, GroupElement, QuotientMap, apply_quotient, conjugacy_class, cyclic,
                     direct_product, finite_table, free_abelian, free_group, mul, reduction_map, symmetric3,
                     word_distance)
from .oracle import oracle_density, oracle_kernel_coefficient, oracle_lndet, symbol
from .ring import (RingElement, RingMatrix, convolve, determinant_lower_bound_rhs, galois_conjugate, kappa,
                   matrix_add, matrix_adjoint, matrix_mul, positive_from_witness, trace_delocalized,
                   trace_deviated, trace_standard)
from .sandwich import sandwich_diagnostic
from .sofic import LabeledGraph, SoficKernel, build_sofic_stage, det_star, sofic_kernel, sofic_lndet_limit
from .spectral import (density, eigh, fuglede_kadison, kernel_dim_exact, kernel_fourier_coefficient,
                       kernel_fourier_coefficient_exact, partial_integration_check, spectral_data)

__version__ = "0.1.0"
