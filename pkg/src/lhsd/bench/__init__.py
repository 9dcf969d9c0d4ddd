from .functions import FLOOD_NAMES, FloodInputs, SingularInputError, flood_model, flood_overflow, h_logistic, h_mvn
from .runner import ExperimentConfig, SchemeResult, StudyAborted, StudyReport, run_study, theoretical_variances, write_outputs
from .studies import MVN_PARAM_SEED, STUDIES, OracleResult, Study, build_study, mvn_parameters, tau_oracle

__all__ = [
    "FLOOD_NAMES",
    "FloodInputs",
    "SingularInputError",
    "flood_model",
    "flood_overflow",
    "h_logistic",
    "h_mvn",
    "ExperimentConfig",
    "SchemeResult",
    "StudyAborted",
    "StudyReport",
    "run_study",
    "theoretical_variances",
    "write_outputs",
    "MVN_PARAM_SEED",
    "STUDIES",
    "OracleResult",
    "Study",
    "build_study",
    "mvn_parameters",
    "tau_oracle",
]
