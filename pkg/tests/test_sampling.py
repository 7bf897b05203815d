import pytest
from hypothesis import given
from hypothesis import strategies as st

from highlight_forge.errors import ParseError
from highlight_forge.sampling import (
    FrameRef,
    frame_filename,
    parse_frame_filename,
    plan_samples,
    sort_frames,
)

stems = st.text(
    alphabet="abcdefghijklmnopqrstuvwxyzABC0123456789_.-", min_size=0, max_size=12
)


class TestPlanSamples:
    def test_even_duration(self):
        plan = plan_samples("m", 10, 2)
        assert plan.timestamps == (0, 2, 4, 6, 8, 10)

    def test_zero_duration(self):
        assert plan_samples("m", 0, 2).timestamps == (0,)

    def test_odd_duration(self):
        assert plan_samples("m", 5, 2).timestamps == (0, 2, 4)

    def test_zero_interval_rejected(self):
        with pytest.raises(ValueError, match="invalid interval"):
            plan_samples("m", 10, 0)

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError):
            plan_samples("m", -1, 2)

    @given(duration=st.integers(0, 5000), interval=st.integers(1, 60))
    def test_spacing_and_bounds(self, duration, interval):
        plan = plan_samples("m", duration, interval)
        stamps = plan.timestamps
        assert stamps[0] == 0
        assert all(b - a == interval for a, b in zip(stamps, stamps[1:]))
        assert stamps[-1] <= duration < stamps[-1] + interval


class TestFilenameCodec:
    def test_format(self):
        assert frame_filename("match1", 86) == "match1_86.jpg"

    def test_stem_with_underscore(self):
        assert frame_filename("a_b", 0) == "a_b_0.jpg"

    def test_rejects_path_separators(self):
        with pytest.raises(ValueError):
            frame_filename("a/b", 1)

    def test_rejects_negative_timestamp(self):
        with pytest.raises(ValueError):
            frame_filename("m", -1)

    def test_parse(self):
        assert parse_frame_filename("match1_86.jpg") == ("match1", 86)

    def test_parse_uses_last_underscore(self):
        assert parse_frame_filename("a_b_0.jpg") == ("a_b", 0)

    def test_parse_takes_basename(self):
        assert parse_frame_filename("/tmp/frames/match1_86.jpg") == ("match1", 86)

    def test_wrong_extension(self):
        with pytest.raises(ParseError):
            parse_frame_filename("match1_86.png")

    def test_missing_underscore(self):
        with pytest.raises(ParseError):
            parse_frame_filename("match1.jpg")

    def test_non_integer_suffix(self):
        with pytest.raises(ParseError):
            parse_frame_filename("match1_abc.jpg")
        with pytest.raises(ParseError):
            parse_frame_filename("match1_-5.jpg")

    @given(stem=stems, t=st.integers(0, 10**9))
    def test_round_trip(self, stem, t):
        assert parse_frame_filename(frame_filename(stem, t)) == (stem, t)


class TestSortFrames:
    def test_numeric_not_lexicographic(self):
        refs = sort_frames(["m_10.jpg", "m_2.jpg", "m_100.jpg"])
        assert [r.timestamp_s for r in refs] == [2, 10, 100]

    def test_sorted_input_unchanged(self):
        names = ["m_0.jpg", "m_2.jpg", "m_4.jpg"]
        assert [r.path for r in sort_frames(names)] == names

    def test_empty(self):
        assert sort_frames([]) == []

    def test_stable_for_equal_timestamps(self):
        refs = sort_frames(["b_5.jpg", "a_5.jpg"])
        assert [r.path for r in refs] == ["b_5.jpg", "a_5.jpg"]

    def test_aggregate_error_lists_all_offenders(self):
        with pytest.raises(ParseError) as err:
            sort_frames(["m_1.jpg", "nope.jpg", "m_x.jpg"])
        assert "nope.jpg" in str(err.value)
        assert "m_x.jpg" in str(err.value)

    @given(st.lists(st.tuples(stems, st.integers(0, 10**6)), max_size=20))
    def test_permutation_with_nondecreasing_timestamps(self, pairs):
        names = [frame_filename(stem, t) for stem, t in pairs]
        refs = sort_frames(names)
        assert sorted(r.path for r in refs) == sorted(names)
        stamps = [r.timestamp_s for r in refs]
        assert stamps == sorted(stamps)

    def test_frame_ref_fields(self):
        ref = sort_frames(["x_7.jpg"])[0]
        assert ref == FrameRef(path="x_7.jpg", timestamp_s=7)
