"""Noise propagation through networks of noisy analog neurons.

Monte-Carlo estimation (``simulate``) and layer-by-layer analytic prediction
(``analytic``, ``density``) of neuron output variance and SNR.
"""
from .activations import Cubic, Identity, LinearSlope, ShiftedSigmoid, StandardSigmoid, activation_from_dict
from .analytic import (LayerIntegrals, LayerNoiseBudget, first_order_F, neuron_output_moments,
                       propagate_symmetric, propagate_trained, sn_sequence, taylor_F)
from .kernels import BACKEND
from .network import LayerSpec, Network, NoiseConfig, make_symmetric, weight_stats
from .simulate import MonteCarloEstimate, NumericalError, estimate, forward_noisy

__version__ = "0.1.0"
