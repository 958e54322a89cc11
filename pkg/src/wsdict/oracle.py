"""Reference model: a sorted list plus a move-to-front access list.

Shares no code with the dictionary so that lockstep comparison is meaningful.
"""

import bisect
from collections.abc import Iterable
from typing import Optional, Union

from wsdict.constants import DUPLICATE_TEXT
from wsdict.errors import UsageError
from wsdict.models import Key, TraceOp

Answer = Union[bool, Optional[Key], str]


class OracleModel:
    """Ground truth for answers and working-set numbers.

    ws(e) is the 0-based rank of e in the access list, i.e. the number of
    distinct keys inserted or searched since e was last inserted or searched.
    age(e) counts the same keys but keeps deleted ones, whose last access
    stamps stay behind as tombstones.
    """

    def __init__(self, keys: Iterable[Key] = ()) -> None:
        self.members: list[Key] = []
        self.access_order: list[Key] = []
        self.stamps: dict[Key, int] = {}
        self.clock = 0
        for key in keys:
            self.insert(key)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, e: Key) -> bool:
        index = bisect.bisect_left(self.members, e)
        return index < len(self.members) and self.members[index] == e

    def keys(self) -> list[Key]:
        return list(self.members)

    def insert(self, e: Key) -> bool:
        """Insert e at the front of the access list; False on a duplicate."""
        if e in self:
            return False
        bisect.insort(self.members, e)
        self.access_order.insert(0, e)
        self._stamp(e)
        return True

    def delete(self, e: Key) -> bool:
        if e not in self:
            return False
        self.members.pop(bisect.bisect_left(self.members, e))
        self.access_order.remove(e)
        return True

    def search(self, e: Key) -> bool:
        if e not in self:
            return False
        self.access_order.remove(e)
        self.access_order.insert(0, e)
        self._stamp(e)
        return True

    def _stamp(self, e: Key) -> None:
        self.clock += 1
        self.stamps[e] = self.clock

    def predecessor(self, e: Key) -> Optional[Key]:
        index = bisect.bisect_left(self.members, e)
        return self.members[index - 1] if index > 0 else None

    def successor(self, e: Key) -> Optional[Key]:
        index = bisect.bisect_right(self.members, e)
        return self.members[index] if index < len(self.members) else None

    def ws(self, e: Key) -> int:
        """Return the working-set number of e.

        Raises:
            UsageError: If e is absent
        """
        try:
            return self.access_order.index(e)
        except ValueError as err:
            raise UsageError(f"{e!r} has no working-set number: not present") from err

    def ages(self) -> dict[Key, int]:
        """Return age(e) for every present key.

        age(e) is the number of distinct keys, present or deleted, accessed
        since e was last inserted or searched. Unlike ws it never drops on a
        delete.
        """
        newest_first = sorted(self.stamps, key=self.stamps.__getitem__, reverse=True)
        ranks = {key: rank for rank, key in enumerate(newest_first)}
        return {key: ranks[key] for key in self.members}

    def age(self, e: Key) -> int:
        """Return age(e).

        Raises:
            UsageError: If e is absent
        """
        if e not in self:
            raise UsageError(f"{e!r} has no age: not present")
        stamp = self.stamps[e]
        return sum(1 for other in self.stamps.values() if other > stamp)

    def apply(self, op: TraceOp) -> Answer:
        """Apply one trace operation and return the expected answer.

        Insert answers True, or DUPLICATE_TEXT for a key already present;
        delete and search answer presence; pred/succ answer a key or None.
        """
        if op.verb == "insert":
            return True if self.insert(op.key) else DUPLICATE_TEXT
        if op.verb == "delete":
            return self.delete(op.key)
        if op.verb == "search":
            return self.search(op.key)
        if op.verb == "pred":
            return self.predecessor(op.key)
        return self.successor(op.key)
