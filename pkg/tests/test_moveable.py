"""Tests for the sorted-range moveable dictionary."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wsdict.errors import UsageError
from wsdict.meters import CostMeters
from wsdict.moveable import SortedRangeDictionary
from wsdict.store import ElementStore


def scratch_view(lo: int = 50, size: int = 100) -> SortedRangeDictionary:
    """Return an empty view at lo inside an array of holes."""
    store = ElementStore()
    store.extend(size)
    return SortedRangeDictionary(store, lo, 0)


class TestUpdates:
    """Tests for the four end-anchored updates."""

    def test_insert_grows_at_the_named_end(self) -> None:
        """Test insert_left moves lo and insert_right moves hi."""
        view = scratch_view(lo=10)
        view.insert_right(5)
        view.insert_left(3)
        view.insert_left(7)
        view.insert_right(1)
        assert (view.lo, view.hi) == (8, 11)
        assert view.members() == [1, 3, 5, 7]

    def test_delete_shrinks_at_the_named_end(self) -> None:
        """Test delete_left frees lo and delete_right frees hi."""
        view = scratch_view(lo=10)
        for key in (4, 2, 8, 6):
            view.insert_right(key)
        view.delete_left(6)
        view.delete_right(2)
        assert (view.lo, view.hi) == (11, 12)
        assert view.members() == [4, 8]
        assert view.store.slots[10] is None
        assert view.store.slots[13] is None

    def test_duplicate_insert_rejected(self) -> None:
        """Test inserting a present key is a usage error."""
        view = scratch_view()
        view.insert_right(1)
        with pytest.raises(UsageError):
            view.insert_left(1)

    def test_missing_delete_rejected(self) -> None:
        """Test deleting an absent key is a usage error."""
        view = scratch_view()
        view.insert_right(1)
        with pytest.raises(UsageError):
            view.delete_right(2)

    def test_negative_size_rejected(self) -> None:
        """Test a view cannot have negative size."""
        with pytest.raises(UsageError):
            SortedRangeDictionary(ElementStore(), 0, -1)


class TestQueries:
    """Tests for search, predecessor and successor addresses."""

    def test_queries_return_addresses(self) -> None:
        """Test query results are slot addresses."""
        view = scratch_view(lo=20)
        for key in (10, 20, 30):
            view.insert_right(key)
        assert view.search(20) == 21
        assert view.search(25) is None
        assert view.predecessor(20) == 20
        assert view.predecessor(10) is None
        assert view.successor(20) == 22
        assert view.successor(30) is None
        assert (view.first(), view.last()) == (20, 22)

    def test_empty_view(self) -> None:
        """Test queries on an empty view."""
        view = scratch_view()
        assert view.first() is None
        assert view.last() is None
        assert view.predecessor(5) is None

    def test_queries_are_charged(self) -> None:
        """Test each operation charges log2(size + 1)."""
        meters = CostMeters()
        view = scratch_view()
        view.store.meters = meters
        for key in (1, 2, 3):
            view.insert_right(key)
        before = meters.charged_cost
        view.search(2)
        assert meters.charged_cost - before == pytest.approx(2.0)


class TestSlide:
    """Tests for moving a whole region."""

    @pytest.mark.parametrize("offset", [3, -3, 1, -1, 7])
    def test_slide_keeps_members(self, offset: int) -> None:
        """Test a slide relocates the region and leaves holes behind."""
        view = scratch_view(lo=20)
        for key in (1, 2, 3, 4):
            view.insert_right(key)
        view.slide(offset)
        assert view.lo == 20 + offset
        assert view.members() == [1, 2, 3, 4]
        occupied = [address for address, key in enumerate(view.store.slots) if key is not None]
        assert occupied == list(range(20 + offset, 24 + offset))


operations = st.lists(
    st.tuples(st.sampled_from(["il", "ir", "dl", "dr"]), st.integers(min_value=0, max_value=30)),
    max_size=60,
)


@given(operations)
def test_matches_sorted_list(ops: list[tuple[str, int]]) -> None:
    """Property: any update sequence keeps the region sorted and contiguous."""
    view = scratch_view(lo=100, size=200)
    model: set[int] = set()
    for action, key in ops:
        if action.startswith("i") and key not in model:
            (view.insert_left if action == "il" else view.insert_right)(key)
            model.add(key)
        elif action.startswith("d") and key in model:
            (view.delete_left if action == "dl" else view.delete_right)(key)
            model.discard(key)
    assert view.members() == sorted(model)
    assert view.size == len(model)
    for probe in (0, 15, 31):
        below = [key for key in model if key < probe]
        address = view.predecessor(probe)
        assert (address is None) == (not below)
        if below:
            assert view.store.read(address) == max(below)


def query_bound(size: int) -> float:
    return 2 * math.log2(size + 1) + 4


class TestComparisonCounts:
    """Tests for the comparisons one query spends."""

    @pytest.mark.parametrize("size", [0, 1, 2, 7, 100, 1000, 4097])
    def test_queries_stay_logarithmic(self, size: int) -> None:
        """Test search, pred and succ use at most 2*log2(n'+1)+4 comparisons."""
        meters = CostMeters()
        store = ElementStore(range(0, 2 * size, 2), meters)
        view = SortedRangeDictionary(store, 0, size)
        for key in range(-1, 2 * size + 1, max(1, size // 16)):
            for query in (view.search, view.predecessor, view.successor):
                before = meters.comparisons
                query(key)
                assert meters.comparisons - before <= query_bound(size)

    @given(st.lists(st.integers(-10_000, 10_000), unique=True, max_size=300), st.integers(-10_001, 10_001))
    def test_random_contents_match_sorted_set(self, keys: list[int], e: int) -> None:
        """Test answers against a sorted list and the comparison bound on any contents."""
        ordered = sorted(keys)
        meters = CostMeters()
        view = SortedRangeDictionary(ElementStore(ordered, meters), 0, len(ordered))
        before = meters.comparisons
        index = view.predecessor(e)
        assert meters.comparisons - before <= query_bound(len(ordered))
        smaller = [key for key in ordered if key < e]
        assert (None if index is None else ordered[index]) == (smaller[-1] if smaller else None)
        before = meters.comparisons
        index = view.successor(e)
        assert meters.comparisons - before <= query_bound(len(ordered))
        larger = [key for key in ordered if key > e]
        assert (None if index is None else ordered[index]) == (larger[0] if larger else None)
