from .Config import ScenarioConfig, load_config, parse_config, build_beam, build_reference, build_sim
from .Export import fmt, write_rows, write_flat_output, write_beam_w, write_inputs, write_plan
from .Verify import CaseResult, VerifyContext, run_suite, case_names, thread_count
from .Runner import main
from .exceptions import *
