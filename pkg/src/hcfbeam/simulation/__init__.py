from .InitialConditions import initial_condition, initial_conditions, registered_initial_conditions
from .Inputs import InputSource, ZeroInput, FeedforwardInput, ClosedLoopInput, input_source, make_input
from .Schemes import Scheme, UpwindScheme, DelayLineScheme, Sample, scheme, delay_line_step
from .Simulator import (SimConfig, Trajectory, simulate, error_signals, settle_time, tracking_tolerance,
                        stationary_profile, stationary_flat_output)
from .exceptions import *
