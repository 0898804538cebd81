"""HMM state-sequence entropy via forward-backward over the entropy semiring."""

from .entropy import (EntropyResult, SubseqResult, esrfb_entropy, esrfb_subseq_entropy,
                      esrfb_subseq_enumerate, hernando_entropy, mann_mccallum_subseq,
                      mm_entropy)
from .forward_backward import (ScaledFbResult, forward_backward, log_likelihood,
                               pairwise_marginal, range_marginal, state_marginal)
from .model import (HmmModel, SubseqConstraint, load_model, load_obs, oracle_entropy,
                    oracle_subseq_entropy, random_model, save_model, validate)
from .semiring import ENTROPY, REAL, EsrValue, Semiring

__all__ = [
    "ENTROPY", "REAL", "EntropyResult", "EsrValue", "HmmModel", "ScaledFbResult",
    "Semiring", "SubseqConstraint", "SubseqResult", "esrfb_entropy", "esrfb_subseq_entropy",
    "esrfb_subseq_enumerate", "forward_backward", "hernando_entropy", "load_model",
    "load_obs", "log_likelihood", "mann_mccallum_subseq", "mm_entropy", "oracle_entropy",
    "oracle_subseq_entropy", "pairwise_marginal", "random_model", "range_marginal",
    "save_model", "state_marginal", "validate",
]
