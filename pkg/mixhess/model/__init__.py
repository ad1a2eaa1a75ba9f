from .symmetric import EigenvalueVector, sigma, sigma_restricted, sigma_gradient, in_cone, newton_maclaurin_gap
from .spectral import SymTensor, SpectralDecomposition, eigen, eigen_wrt_metric
from .operator import OperatorParams, OperatorEval, eval_G, trace_lower_bound, concavity_gap, degeneracy_probe
from .chi import ChiSpec, ChiSamplePlan, validate_chi, make_chi
