"""Fork-resolving policies.

Four rules are implemented:

* longest chain with first-seen tie handling,
* longest chain with uniform (random) tie handling,
* SDTLA selection: length wins only when the two longest chains differ by
  more than the live safe parameter K, otherwise timestamp weight decides,
* WVBM selection: the strictly longest chain wins only when its validating
  weight passes a quarter-length threshold, otherwise weight decides.

The weight of a chain is accumulated over its first ten heights: at every
height the chain holding the newest block receives that height's
coefficient (older blocks at a shared height are the signature of a
withholding attacker).  Chains longer than ten blocks receive 0.5 per extra
block.  The validating weight is the same per-height race counted as +1
with no overflow term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .chain import ChainScores, ForkSet, chain_lengths

# Height coefficients for the first ten blocks, oldest height first, and the
# per-block coefficient applied beyond height ten.
WEIGHTS_PER_HEIGHT = (1.0, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.65, 0.6, 0.55)
OVERFLOW_COEFFICIENT = 0.5


class Criterion(Enum):
    LENGTH = "length"
    WEIGHT = "weight"


class TieRule(Enum):
    FIRST_SEEN = "first_seen"
    UNIFORM = "uniform"


@dataclass
class Decision:
    winner_index: int
    criterion: Criterion
    scores: ChainScores


def _winner_at_height(fork: ForkSet, height_index: int) -> int:
    """Index of the chain whose block at this height has the newest timestamp.

    Chains shorter than the height are skipped; equal stamps (never produced
    by the mining engine) deterministically favour the lowest chain index.
    """
    best = -1
    best_ts = -math.inf
    for j, chain in enumerate(fork.chains):
        if height_index < len(chain) and chain[height_index].timestamp > best_ts:
            best = j
            best_ts = chain[height_index].timestamp
    return best


def chains_weight(fork: ForkSet) -> list[float]:
    """Timestamp weight of every chain (one award per evaluated height)."""
    lengths = chain_lengths(fork)
    max_len = max(lengths)
    weights = [0.0] * len(fork.chains)
    for i in range(min(max_len, 10)):
        winner = _winner_at_height(fork, i)
        if winner >= 0:
            weights[winner] += WEIGHTS_PER_HEIGHT[i]
    for j, length in enumerate(lengths):
        if length > 10:
            weights[j] += (length - 10) * OVERFLOW_COEFFICIENT
    return weights


def validating_weight(fork: ForkSet) -> list[int]:
    """Per-height timestamp-race wins over the first ten heights."""
    max_len = max(chain_lengths(fork))
    counts = [0] * len(fork.chains)
    for i in range(min(max_len, 10)):
        winner = _winner_at_height(fork, i)
        if winner >= 0:
            counts[winner] += 1
    return counts


def wvbm_threshold(length: int) -> int:
    """Minimum validating weight for a chain of the given length.

    A quarter of the evaluated length, rounded up; the evaluation window is
    capped at ten heights so the threshold stays attainable for long chains.
    """
    return math.ceil(min(length, 10) / 4)


def _scores(fork: ForkSet) -> ChainScores:
    return ChainScores(
        lengths=chain_lengths(fork),
        weights=chains_weight(fork),
        validating_weights=validating_weight(fork),
    )


def _heaviest(lengths: list[int], weights: list[float]) -> int:
    """Heaviest chain; ties broken by greater length, then lowest index."""
    best = 0
    for j in range(1, len(weights)):
        if weights[j] > weights[best] or (
            weights[j] == weights[best] and lengths[j] > lengths[best]
        ):
            best = j
    return best


def _two_longest(lengths: list[int]) -> tuple[int, int]:
    """Indices of the longest and second-longest chains (stable order)."""
    order = sorted(range(len(lengths)), key=lambda j: -lengths[j])
    return order[0], order[1] if len(order) > 1 else order[0]


def select_chain_sdtla(fork: ForkSet, k: int, inclusive: bool = False) -> Decision:
    """SDTLA chain selection: length beyond K decides, else weight.

    ``inclusive`` switches the length test from ``> K`` (as the pseudocode
    reads) to ``>= K`` (as the prose reads).
    """
    if not fork.chains:
        raise ValueError("empty fork")
    scores = _scores(fork)
    if len(fork.chains) == 1:
        return Decision(0, Criterion.LENGTH, scores)
    first, second = _two_longest(scores.lengths)
    gap = scores.lengths[first] - scores.lengths[second]
    if gap >= k if inclusive else gap > k:
        return Decision(first, Criterion.LENGTH, scores)
    return Decision(_heaviest(scores.lengths, scores.weights), Criterion.WEIGHT, scores)


def select_chain_wvbm(fork: ForkSet, threshold=wvbm_threshold) -> Decision:
    """WVBM chain selection: validated strict-longest decides, else weight."""
    if not fork.chains:
        raise ValueError("empty fork")
    scores = _scores(fork)
    if len(fork.chains) == 1:
        return Decision(0, Criterion.LENGTH, scores)
    first, second = _two_longest(scores.lengths)
    strictly_longest = scores.lengths[first] > scores.lengths[second]
    if strictly_longest and scores.validating_weights[first] >= threshold(scores.lengths[first]):
        return Decision(first, Criterion.LENGTH, scores)
    return Decision(_heaviest(scores.lengths, scores.weights), Criterion.WEIGHT, scores)


def select_chain_longest(fork: ForkSet, tie_rule: TieRule, rng=None) -> Decision:
    """Longest-chain selection with first-seen or uniform tie handling."""
    if not fork.chains:
        raise ValueError("empty fork")
    scores = _scores(fork)
    best_len = max(scores.lengths)
    tied = [j for j, ln in enumerate(scores.lengths) if ln == best_len]
    if len(tied) == 1 or tie_rule is TieRule.FIRST_SEEN:
        winner = tied[0]
    else:
        if rng is None:
            raise ValueError("uniform tie-breaking needs an rng")
        winner = tied[int(rng.integers(len(tied)))]
    return Decision(winner, Criterion.LENGTH, scores)
