"""Multi-channel parallel HMM toolkit for continuous sign-sequence recognition.

Per-channel phoneme models are trained independently; signs and
utterances are composed by left-to-right concatenation; decoding
maximizes the sum of per-channel log probabilities.
"""

__version__ = "0.1.0"

from .emissions import DiscreteEmission, GaussianEmission  # noqa: F401
from .hmm import Hmm, Topology, backward, forward, sample, validate, viterbi  # noqa: F401
from .lexicon import (  # noqa: F401
    Lexicon,
    MultiObservation,
    PhonemeInventory,
    Sign,
    validate_lexicon,
)
from .parallel import (  # noqa: F401
    Hypothesis,
    compose_utterance_model,
    decode_exhaustive,
    decode_synced,
    model_count,
    score_hypothesis,
)
from .training import (  # noqa: F401
    TrainConfig,
    TrainReport,
    baum_welch,
    train_embedded,
    train_segmented,
)
