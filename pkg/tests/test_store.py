"""Tests for the element store and the pair-bit codec."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wsdict.errors import CorruptionError, UsageError
from wsdict.meters import CostMeters
from wsdict.store import ElementStore, PairBitCodec


class TestElementStore:
    """Tests for slot access and metering."""

    def test_compare_counts(self, meters: CostMeters) -> None:
        """Test comparisons go through the meters."""
        store = ElementStore([3, 1], meters)
        assert store.compare(1, 3) == -1
        assert store.compare(3, 3) == 0
        assert store.less(3, 1) is False
        assert meters.comparisons == 3

    def test_write_and_swap_count_moves(self, meters: CostMeters) -> None:
        """Test writes count one move and swaps two."""
        store = ElementStore([1, 2, 3], meters)
        store.write(0, 9)
        store.swap(1, 2)
        assert store.slots == [9, 3, 2]
        assert meters.element_moves == 3

    def test_copy_range_overlapping(self) -> None:
        """Test an overlapping copy keeps element order."""
        store = ElementStore([1, 2, 3, 4, 5])
        store.copy_range(0, 1, 4)
        assert store.slots == [1, 1, 2, 3, 4]

    def test_holes_block_snapshot_and_reads(self) -> None:
        """Test vacated slots cannot be read or snapshotted."""
        store = ElementStore([1, 2, 3])
        store.vacate(1, 2)
        with pytest.raises(CorruptionError):
            store.read(1)
        with pytest.raises(CorruptionError):
            store.snapshot()
        with pytest.raises(CorruptionError):
            store.check_no_holes()

    def test_extend_and_truncate(self) -> None:
        """Test the array grows by holes and only holes may be truncated."""
        store = ElementStore([1])
        store.extend(2)
        assert len(store) == 3
        store.truncate(2)
        assert store.snapshot() == [1]
        with pytest.raises(CorruptionError):
            store.truncate(1)

    def test_cache_lines_are_distinct_per_operation(self) -> None:
        """Test cache touches count distinct lines of b_sim slots."""
        meters = CostMeters(b_sim=4)
        store = ElementStore(range(16), meters)
        meters.begin_op()
        for address in (0, 1, 3, 4, 15):
            store.read(address)
        assert meters.end_op()["cache_lines"] == 3


class TestPairBitCodec:
    """Tests for encoding integers in pair order."""

    def test_sorted_region_reads_zero(self) -> None:
        """Test ascending pairs encode bit 0."""
        store = ElementStore(range(20))
        assert PairBitCodec(store, 0, 10).read_bits(0, 10) == 0

    def test_descending_pair_reads_one(self) -> None:
        """Test a descending pair encodes bit 1, pair 0 least significant."""
        store = ElementStore([2, 1, 3, 4, 6, 5])
        assert PairBitCodec(store, 0, 3).read_bits(0, 3) == 0b101

    @given(st.integers(min_value=0, max_value=(1 << 12) - 1))
    def test_write_then_read(self, value: int) -> None:
        """Test written values read back and the region keeps its elements."""
        store = ElementStore(range(100, 130))
        codec = PairBitCodec(store, 2, 12)
        codec.write_bits(0, 12, value)
        assert codec.read_bits(0, 12) == value
        assert sorted(store.snapshot()) == list(range(100, 130))
        assert store.slots[:2] == [100, 101]
        assert store.slots[26:] == [126, 127, 128, 129]

    def test_fields_are_independent(self) -> None:
        """Test writing one field leaves its neighbour intact."""
        store = ElementStore(range(40))
        codec = PairBitCodec(store, 0, 20)
        codec.write_bits(0, 10, 314)
        codec.write_bits(10, 10, 7)
        assert codec.read_bits(0, 10) == 314
        assert codec.read_bits(10, 10) == 7

    def test_value_too_wide(self) -> None:
        """Test a value that does not fit its width is rejected."""
        codec = PairBitCodec(ElementStore(range(8)), 0, 4)
        with pytest.raises(UsageError):
            codec.write_bits(0, 3, 8)
        with pytest.raises(UsageError):
            codec.read_bits(2, 3)

    def test_region_outside_array(self) -> None:
        """Test a codec region past the end of the array is rejected."""
        with pytest.raises(UsageError):
            PairBitCodec(ElementStore(range(8)), 2, 4)
