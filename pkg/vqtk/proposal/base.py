from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np

from vqtk.errors import CodeOutOfRange, NotStochastic, ZeroProbability

BOS = -1  # begin-of-sequence marker; never a vocabulary entry
STOCHASTIC_ATOL = 1e-9


def check_codes(sequence: Sequence[int], vocab_size: int) -> np.ndarray:
    codes = np.asarray(sequence, dtype=np.int64).reshape(-1)
    if codes.size and (codes.min() < 0 or codes.max() >= vocab_size):
        bad = int(np.flatnonzero((codes < 0) | (codes >= vocab_size))[0])
        raise CodeOutOfRange(f"code {int(codes[bad])} at position {bad} is outside [0, {vocab_size})")
    return codes


class ProposalModel(ABC):
    """p(z_i | z_1..z_{i-1}) over a vocabulary of ``vocab_size`` codes."""

    def __init__(self, vocab_size: int):
        self.vocab_size = int(vocab_size)

    @abstractmethod
    def next_token_distribution(self, context: Sequence[int]) -> np.ndarray:
        pass

    def token_log_prob(self, context: Sequence[int], code: int) -> float:
        p = float(self.next_token_distribution(context)[code])
        if p <= 0.0:
            raise ZeroProbability(f"code {code} has probability 0 after context of length {len(context)}")
        return float(np.log(p))

    def sequence_log_prob(self, sequence: Sequence[int], context: Sequence[int] = ()) -> float:
        """Natural-log chain-rule sum; ``context`` is a scored-before prefix."""
        codes = check_codes(sequence, self.vocab_size)
        history = [int(c) for c in check_codes(context, self.vocab_size)]
        total = 0.0
        for code in codes:
            total += self.token_log_prob(history, int(code))
            history.append(int(code))
        return total

    def closed_form_perplexity(self) -> Optional[float]:
        """Perplexity that holds for every corpus, when the model has one."""
        return None

    def check_distribution(self, dist: np.ndarray) -> np.ndarray:
        if dist.shape != (self.vocab_size,) or np.any(dist < 0) or abs(dist.sum() - 1.0) > STOCHASTIC_ATOL:
            raise NotStochastic("next-token distribution is not a probability vector")
        return dist


class UniformModel(ProposalModel):
    def next_token_distribution(self, context: Sequence[int]) -> np.ndarray:
        return np.full(self.vocab_size, 1.0 / self.vocab_size)

    def token_log_prob(self, context: Sequence[int], code: int) -> float:
        return -float(np.log(self.vocab_size))

    def closed_form_perplexity(self) -> Optional[float]:
        return float(self.vocab_size)


class DeterministicModel(ProposalModel):
    """All probability mass on a single code."""

    def __init__(self, vocab_size: int, code: int):
        super().__init__(vocab_size)
        self.code = int(check_codes([code], vocab_size)[0])

    def next_token_distribution(self, context: Sequence[int]) -> np.ndarray:
        dist = np.zeros(self.vocab_size)
        dist[self.code] = 1.0
        return dist

    def token_log_prob(self, context: Sequence[int], code: int) -> float:
        if code != self.code:
            raise ZeroProbability(f"code {code} has probability 0 under a model fixed on {self.code}")
        return 0.0
