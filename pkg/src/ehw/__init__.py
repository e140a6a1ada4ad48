"""Learning extended finite state machines from a black box that cannot be reset."""
from .abstraction import Alphabet, Trace, abstract, rho
from .backbone import InferenceFailed, Learner, LearnResult, ehw_main
from .config import LearnerConfig, load_config, parse_config
from .control import SampledFsm, WInconsistency
from .dsl import ParseError, load_efsm, parse_efsm, serialize_efsm
from .efsm import ConcreteInput, ConcreteOutput, Efsm, Interpreter, sul_step, validate_efsm
from .generalise import generalise
from .oracle import efsm_counterexample, nfsm_counterexample, process_counterexample
from .reduce import reduce_fsm

__all__ = [
    "Alphabet", "Trace", "abstract", "rho", "InferenceFailed", "Learner", "LearnResult",
    "ehw_main", "LearnerConfig", "load_config", "parse_config", "SampledFsm", "WInconsistency",
    "ParseError", "load_efsm", "parse_efsm", "serialize_efsm", "ConcreteInput", "ConcreteOutput",
    "Efsm", "Interpreter", "sul_step", "validate_efsm", "generalise", "efsm_counterexample",
    "nfsm_counterexample", "process_counterexample", "reduce_fsm",
]
