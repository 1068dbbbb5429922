"""Selfish-pool strategy state machines.

Two strategies share one state machine:

* the combined attack: classic SM1 withholding whose successful overtakes
  double as double-spending opportunities once the public branch reached the
  merchant confirmation count, and
* its K-aware variant that releases the whole private branch as soon as the
  lead exceeds the defense's published K, forcing a length-decided fork.

The state tracks branch lengths relative to the fork base (the last block
the attacker shares with the public chain).  The driver applies the returned
publication actions to the network and rebases this state when a race ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Strategy(Enum):
    COMBINED_SM1 = "combined"
    MODIFIED_SM1 = "modified"


class Action(Enum):
    HOLD = "hold"
    ADOPT = "adopt"              # abandon the private branch, mine on the public tip
    PUBLISH_ALL = "publish_all"  # broadcast the private branch through its tip
    PUBLISH_ONE = "publish_one"  # broadcast the first unpublished block


@dataclass
class AttackerState:
    strategy: Strategy
    known_k: int | None = None
    modified_inclusive: bool = False
    private_length: int = 0   # private branch blocks above the fork base
    public_length: int = 0    # public branch blocks above the fork base
    published: int = 0        # prefix of the private branch already broadcast
    pbl: int = 0
    ds_count: int = 0

    @property
    def lead(self) -> int:
        return self.private_length - self.public_length

    @property
    def hidden(self) -> int:
        return self.private_length - self.published

    def _release_all(self) -> Action:
        self.published = self.private_length
        self.pbl = 0
        return Action.PUBLISH_ALL

    def modified_release_due(self) -> bool:
        """K-aware release test: private lead strictly above the known K."""
        if self.strategy is not Strategy.MODIFIED_SM1 or self.known_k is None:
            return False
        if self.modified_inclusive:
            return self.lead >= self.known_k
        return self.lead > self.known_k

    def on_selfish_block(self, release_hint: bool = False) -> Action:
        """React to a block mined by the pool (appended to the private branch).

        ``release_hint`` lets the driver signal that an immediate release
        would win the fork under the live policy; it stands in for the K
        test when no K is published (the WVBM case).
        """
        lead_before = self.lead
        self.private_length += 1
        self.pbl += 1
        if lead_before == 0 and self.pbl == 2:
            # Was tie with branch of 1: slam the full branch to win the race.
            return self._release_all()
        if self.modified_release_due():
            return self._release_all()
        if self.strategy is Strategy.MODIFIED_SM1 and self.known_k is None and release_hint:
            return self._release_all()
        return Action.HOLD

    def on_honest_block(self, nrc: int) -> Action:
        """React to an honest block (appended to the public branch).

        The branch taken depends on the private lead before the block
        landed.  The double-spend counter increments only on the lead-2
        collapse, when the overtaken public branch already carried at least
        ``nrc`` confirmations.
        """
        lead_before = self.lead
        self.public_length += 1
        if self.private_length == 0:
            return Action.HOLD
        if lead_before == 0:
            return Action.ADOPT
        if lead_before == 1:
            # Publish through the last private block, creating a tie.
            self.published = self.private_length
            return Action.PUBLISH_ALL
        if lead_before == 2:
            action = self._release_all()
            if self.public_length >= nrc:
                self.ds_count += 1
            return action
        self.published += 1
        return Action.PUBLISH_ONE

    def rebase_after_win(self) -> None:
        """Published prefix became the main chain; keep mining the hidden tail."""
        hidden = self.hidden
        self.private_length = hidden
        self.public_length = 0
        self.published = 0
        self.pbl = hidden

    def rebase_after_adopt(self) -> None:
        """Private branch abandoned; mining continues on the public tip."""
        self.private_length = 0
        self.public_length = 0
        self.published = 0
        self.pbl = 0
