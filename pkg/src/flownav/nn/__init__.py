from .adam import Adam, adam_update
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gaussian import clip_action, gaussian_entropy, gaussian_logprob, sample_action
from .layers import DenseLayer, LstmCell, NumericError, lstm_backward, lstm_forward
from .mlp import Mlp
from .policy import FfPolicyNet, PolicyNet, policy_forward, split_heads

__all__ = [
    "Adam", "adam_update", "CheckpointError", "load_checkpoint", "save_checkpoint",
    "clip_action", "gaussian_entropy", "gaussian_logprob", "sample_action",
    "DenseLayer", "LstmCell", "NumericError", "lstm_backward", "lstm_forward",
    "Mlp", "FfPolicyNet", "PolicyNet", "policy_forward", "split_heads",
]
