from .Coefficient import Coefficient
from .BeamModel import BeamParameters, BeamModel, TransportData, build_model, transport_times, with_coupling
from .Riemann import PhysicalField, RiemannField, to_riemann, from_riemann, reconstruct_displacement, strain_velocity
from .exceptions import *
