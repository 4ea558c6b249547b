"""Two-system N-best rescoring and log-linear combination for ASR."""

__version__ = "0.1.0"
