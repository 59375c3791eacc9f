"""Random-matrix analytics for spatio-temporal measurement streams.

Modules: ensembles (matrix sampling and standardization), laws (asymptotic
spectral laws and ESDs), transforms (Stieltjes/Cauchy calculus and the R/S
transforms), freeprob (linearization pencils and operator subordination),
covtest (U-statistic covariance-change tests), pipeline (moving-window
ring-law/LES situation awareness), gridsim (synthetic grid streams),
streamio and cli (formats and command line).
"""
from .covtest import (TestReport, UStatConfig, WindowedStream,
                      cross_trace_estimator, detection_rate_estimate,
                      localize_sensitive_sensors, pairwise_distance,
                      pooled_statistic, trace_sq_estimator)
from .ensembles import (EnsembleSpec, haar_unitary, sample,
                        singular_value_equivalent, standardize)
from .freeprob import (LinearPencil, MonteCarloSpectrum, OperatorCauchyState,
                       PolynomialSpectrum, free_add_cauchy, ks_distance,
                       monte_carlo_spectrum, operator_cauchy_law,
                       operator_cauchy_semicircle, pencil_anticommutator,
                       pencil_anticommutator_plus_square, polynomial_spectrum,
                       subordination_solve)
from .gridsim import (CollapseSpec, EventScript, ResponseModel, Stage,
                      ieee118_default_script, ieee118_fusion_script,
                      noisy_loads, random_response_matrix, simulate_voltage)
from .laws import (DensityBoundReport, Esd, LawSpec, averaged_esd,
                   convergence_gap, density_bound_check, esd_from_spectrum,
                   law_cdf, law_density, mp_atom, mp_cdf, mp_density,
                   semicircle_density, single_ring_radii)
from .linalg import (DataMatrix, QuadratureError, SpectrumSample,
                     eig_general, eig_hermitian, quad_integrate, quad_matrix,
                     svd_values)
from .pipeline import (AnalysisWindow, CalibrationBand, FactorScore,
                       LesIndicator, MpCheck, RingCheck, Segment,
                       calibrate_indicator, concat_sensitivity, les,
                       mp_bound_check, msr, msr_from_ring, msr_theoretical,
                       ring_law_check, stage_segmentation, window_stream)
from .streamio import (StreamData, read_stream, write_curves,
                       write_indicator_series, write_report_json,
                       write_stages_json, write_stream)
from .transforms import (AdditivityReport, CauchyEvaluator, cauchy_from_law,
                         cauchy_from_spectrum, cauchy_inverse,
                         density_from_stieltjes, r_transform_numeric,
                         s_transform_numeric, stieltjes_from_spectrum,
                         stieltjes_mp, stieltjes_semicircle,
                         verify_r_additivity)

__version__ = "0.1.0"
