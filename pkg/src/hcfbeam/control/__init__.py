from .Tracking import (ControllerConfig, tracking_v, resolve_prediction, future_v1, predicted_inputs,
                       decoupling_feedback, hcf_law, control_law)
from .exceptions import *
