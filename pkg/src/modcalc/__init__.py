"""Desk-scale time-frequency numerics.

Short-time Fourier transforms on uniform lattices, weighted mixed-norm
modulation spaces, Gevrey-type weights and symbols, pseudo-differential
operators under arbitrary quantizations, and an empirical harness for
operator-continuity checks.
"""

from .errors import ConfigurationError, ModcalcError, NumericError
from .fieldio import read_field, write_field
from .lattice import OrderedBasis, QuantizationSpec, SampledField, UniformGrid, fourier_transform, inverse_fourier
from .norms import MixedNormSpec, ModSpaceSpec, mixed_norm, modulation_norm
from .pdo import ClosedFormSymbol, SampledSymbol, adjoint_symbol, apply_op, change_quantization, gamma_membership
from .stft import Window, istft, stft, stft_decay_fit
from .weights import ExpPower, Polynomial, TensorSplit, classify_PEs, one

__version__ = "0.1.0"

__all__ = [
    "ModcalcError",
    "ConfigurationError",
    "NumericError",
    "OrderedBasis",
    "UniformGrid",
    "SampledField",
    "QuantizationSpec",
    "fourier_transform",
    "inverse_fourier",
    "read_field",
    "write_field",
    "Window",
    "stft",
    "istft",
    "stft_decay_fit",
    "MixedNormSpec",
    "ModSpaceSpec",
    "mixed_norm",
    "modulation_norm",
    "ClosedFormSymbol",
    "SampledSymbol",
    "apply_op",
    "change_quantization",
    "adjoint_symbol",
    "gamma_membership",
    "Polynomial",
    "ExpPower",
    "TensorSplit",
    "one",
    "classify_PEs",
]
