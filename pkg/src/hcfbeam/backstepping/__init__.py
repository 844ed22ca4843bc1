from .Kernel import TriangularKernel, solve_kernel, invert_kernel, kernel_residuals, entry_kind
from .Volterra import apply_volterra, backstepping_input, target_input, flat_output, trapezoid_weights
from .KernelCache import write_kernel, read_kernel, cached_kernel
from .exceptions import *
