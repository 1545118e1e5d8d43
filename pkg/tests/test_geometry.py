import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from astra.geometry import (
    BadBlock,
    NormalizedBlock,
    denormalize,
    iou,
    normalize_rect,
    pixel_iou,
)


class TestNormalizedBlock:
    def test_valid(self):
        block = NormalizedBlock(0.1, 0.2, 0.3, 0.4)
        assert block.center == (pytest.approx(0.2), pytest.approx(0.3))

    @pytest.mark.parametrize("values", [
        (0.5, 0.2, 0.5, 0.4),   # x1 == x2
        (0.6, 0.2, 0.5, 0.4),   # x1 > x2
        (0.1, 0.4, 0.5, 0.4),   # y1 == y2
        (-0.1, 0.2, 0.5, 0.4),  # negative
        (0.1, 0.2, 1.5, 0.4),   # > 1
    ])
    def test_degenerate_rejected(self, values):
        with pytest.raises(BadBlock):
            NormalizedBlock(*values)

    def test_from_list_rejects_garbage(self):
        with pytest.raises(BadBlock):
            NormalizedBlock.from_list([0.1, 0.2, 0.3])
        with pytest.raises(BadBlock):
            NormalizedBlock.from_list("nope")
        with pytest.raises(BadBlock):
            NormalizedBlock.from_list([0.1, "x", 0.3, 0.4])


class TestDenormalize:
    def test_paper_example_block(self):
        # round(0.4273*1920)=820, round(0.0985*1080)=106,
        # round(0.6030*1920)=1158, round(0.2125*1080)=230 (229.5 rounds up)
        block = NormalizedBlock(0.4273, 0.0985, 0.6030, 0.2125)
        assert denormalize(block, 1920, 1080) == (820, 106, 1158, 230)

    def test_full_frame(self):
        assert denormalize(NormalizedBlock(0, 0, 1, 1), 640, 480) == (0, 0, 640, 480)

    def test_minimum_one_pixel_after_clamp(self):
        block = NormalizedBlock(0.5, 0.5, 0.5004, 0.5004)
        assert denormalize(block, 100, 100) == (50, 50, 51, 51)

    def test_rejects_empty_frame(self):
        with pytest.raises(ValueError):
            denormalize(NormalizedBlock(0, 0, 1, 1), 0, 100)

    @given(
        width=st.integers(100, 4096),
        height=st.integers(100, 4096),
        data=st.data(),
    )
    @settings(max_examples=200, deadline=None)
    def test_normalize_round_trip_within_half_pixel(self, width, height, data):
        left = data.draw(st.integers(0, width - 2))
        right = data.draw(st.integers(left + 1, width))
        top = data.draw(st.integers(0, height - 2))
        bottom = data.draw(st.integers(top + 1, height))
        block = normalize_rect(left, top, right, bottom, width, height)
        out = denormalize(block, width, height)
        for got, want in zip(out, (left, top, right, bottom)):
            assert abs(got - want) <= 0.5

    def test_normalize_rejects_degenerate(self):
        with pytest.raises(BadBlock):
            normalize_rect(10, 10, 10, 20, 100, 100)


class TestIou:
    def test_identical(self):
        a = NormalizedBlock(0.1, 0.1, 0.5, 0.5)
        assert iou(a, a) == pytest.approx(1.0)

    def test_disjoint(self):
        a = NormalizedBlock(0.1, 0.1, 0.2, 0.2)
        b = NormalizedBlock(0.5, 0.5, 0.6, 0.6)
        assert iou(a, b) == 0.0

    def test_half_overlap(self):
        a = NormalizedBlock(0.0, 0.0, 0.2, 0.2)
        b = NormalizedBlock(0.1, 0.0, 0.3, 0.2)
        assert iou(a, b) == pytest.approx(1.0 / 3.0)

    def test_pixel_iou_matches(self):
        assert pixel_iou((0, 0, 20, 20), (10, 0, 30, 20)) == pytest.approx(1.0 / 3.0)
