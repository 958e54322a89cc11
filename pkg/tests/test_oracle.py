"""Tests for the reference oracle."""

import pytest

from wsdict.constants import DUPLICATE_TEXT
from wsdict.errors import UsageError
from wsdict.models import TraceOp
from wsdict.oracle import OracleModel


class TestAnswers:
    """Tests for oracle answers."""

    def test_insert_and_duplicate(self) -> None:
        """Test a second insert of a key answers the duplicate marker."""
        oracle = OracleModel()
        assert oracle.apply(TraceOp("insert", 4)) is True
        assert oracle.apply(TraceOp("insert", 4)) == DUPLICATE_TEXT
        assert len(oracle) == 1

    def test_strict_neighbours(self) -> None:
        """Test pred and succ are strict and None past the ends."""
        oracle = OracleModel([10, 20, 30])
        assert oracle.predecessor(20) == 10
        assert oracle.successor(20) == 30
        assert oracle.predecessor(25) == 20
        assert oracle.successor(25) == 30
        assert oracle.predecessor(10) is None
        assert oracle.successor(30) is None

    def test_delete_and_search_absent(self) -> None:
        """Test operations on absent keys answer False."""
        oracle = OracleModel([1])
        assert oracle.apply(TraceOp("delete", 2)) is False
        assert oracle.apply(TraceOp("search", 2)) is False
        assert oracle.apply(TraceOp("delete", 1)) is True
        assert oracle.keys() == []


class TestWorkingSetNumbers:
    """Tests for ws(e)."""

    def test_latest_access_has_zero(self) -> None:
        """Test the last inserted or searched key has ws 0."""
        oracle = OracleModel([1, 2, 3])
        assert [oracle.ws(key) for key in (1, 2, 3)] == [2, 1, 0]
        oracle.search(1)
        assert [oracle.ws(key) for key in (1, 2, 3)] == [0, 2, 1]

    def test_queries_do_not_count_as_accesses(self) -> None:
        """Test pred/succ and failed searches leave ws unchanged."""
        oracle = OracleModel([1, 2])
        oracle.predecessor(2)
        oracle.search(7)
        assert oracle.ws(1) == 1

    def test_delete_removes_from_access_list(self) -> None:
        """Test deleting a key shortens the access list."""
        oracle = OracleModel([1, 2, 3])
        oracle.delete(2)
        assert oracle.ws(1) == 1

    def test_absent_key_has_no_number(self) -> None:
        """Test ws of an absent key is a usage error."""
        with pytest.raises(UsageError):
            OracleModel().ws(1)


class TestAges:
    """Tests for age(e), which keeps deleted keys as tombstones."""

    def test_age_matches_ws_without_deletes(self) -> None:
        """Test age and ws agree while nothing has been deleted."""
        oracle = OracleModel([4, 1, 3, 2])
        oracle.search(1)
        assert oracle.ages() == {key: oracle.ws(key) for key in oracle.keys()}

    def test_delete_does_not_lower_ages(self) -> None:
        """Test a deleted key still counts toward the age of older keys."""
        oracle = OracleModel([1, 2, 3])
        oracle.delete(2)
        assert oracle.ws(1) == 1
        assert oracle.age(1) == 2
        assert oracle.ages() == {1: 2, 3: 0}

    def test_reinsert_refreshes_the_tombstone(self) -> None:
        """Test re-inserting a deleted key makes it the newest again."""
        oracle = OracleModel([1, 2])
        oracle.delete(1)
        oracle.insert(1)
        assert oracle.ages() == {1: 0, 2: 1}

    def test_absent_key_has_no_age(self) -> None:
        """Test age of an absent key is a usage error."""
        oracle = OracleModel([1])
        oracle.delete(1)
        with pytest.raises(UsageError):
            oracle.age(1)
