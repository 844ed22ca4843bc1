from .HcfState import HcfState, InputHistory, Profile
from .Transform import xbar_to_hcf, hcf_to_xbar, eta1_profile, flat_lookups, y1_lookup
from .Boundary import hcf_boundary, a0_tilde, heaviside, eta_integral, prediction_integral
from .exceptions import *
