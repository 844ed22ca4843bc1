from .Reference import ReferenceTrajectory, RecordingReference, make_reference, constant_reference
from .Parametrization import (a0_bar, a0_integral, sigma_quadrature, slow_channel_integrals, state_from_flat, input_from_flat,
                              parametrize_state, parametrize_input, reference_state, feedforward_physical)
from .exceptions import *
