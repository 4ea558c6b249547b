import numpy as np

from nbf.hypcore import PosteriorGram, PriorTable


def pg0(probs, utt="u"):
    """Order-0 posteriorgram from a (T, V+1) probability table."""
    return PosteriorGram(utt, np.log(np.asarray(probs, dtype=float)), 0)


def prior0(probs):
    return PriorTable(np.log(np.asarray(probs, dtype=float)), 0)
