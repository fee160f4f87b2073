"""HTTP inference bridge for masked and causal language model scoring."""

from .app import create_app
from .scoring import BridgeError, CausalScorer, MaskedWordScorer

__version__ = "0.1.0"
