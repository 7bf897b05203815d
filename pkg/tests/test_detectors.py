import json
import random
import socket
import threading

import pytest

from highlight_forge.detectors import (
    BackendProfile,
    FixtureBackend,
    FrameDetections,
    SidecarBackend,
    builtin_profiles,
    detect_frame,
    detect_frames,
    filter_confident,
    parse_fixture_table,
    profile_by_name,
)
from highlight_forge.errors import (
    ConfigError,
    ParseError,
    TransportError,
    UnknownLabelError,
    WireProtocolError,
)
from highlight_forge.geometry import BoundingBox, Detection, ImageDims
from highlight_forge.sampling import FrameRef


def det(x1, y1, x2, y2, label="goal", confidence=0.9):
    return Detection(BoundingBox(x1, y1, x2, y2), label, confidence)


def frame(name, ts):
    return FrameRef(path=name, timestamp_s=ts)


class TestProfiles:
    def test_builtin_thresholds(self):
        vgg = profile_by_name("frcnn-vgg16")
        assert vgg.box_confidence_threshold == 0.9
        assert vgg.overlap_threshold == 0.7
        assert vgg.input_min_dim == 300
        assert vgg.fixed_input is None

        resnet = profile_by_name("frcnn-resnet50")
        assert resnet.box_confidence_threshold == 0.6
        assert resnet.overlap_threshold == 0.7
        assert resnet.fixed_input == ImageDims(320, 320)

        strict = profile_by_name("frcnn-resnet50-strict")
        assert strict.box_confidence_threshold == 0.8
        assert strict.fixed_input == ImageDims(320, 320)

        fixture = profile_by_name("fixture")
        assert fixture.box_confidence_threshold == 0.9

    def test_every_profile_has_exactly_one_sizing(self):
        for profile in builtin_profiles():
            assert (profile.input_min_dim is None) != (profile.fixed_input is None)

    def test_unknown_profile(self):
        with pytest.raises(ConfigError):
            profile_by_name("yolo")

    def test_profile_rejects_double_sizing(self):
        with pytest.raises(ValueError):
            BackendProfile("x", 0.5, 0.5, input_min_dim=300, fixed_input=ImageDims(2, 2))
        with pytest.raises(ValueError):
            BackendProfile("x", 0.5, 0.5)

    def test_profile_rejects_bad_threshold(self):
        with pytest.raises(ValueError):
            BackendProfile("x", 1.5, 0.5, input_min_dim=300)


class TestFixtureTable:
    def test_parse_accumulates_per_frame(self):
        text = (
            "# comment\n"
            "m_86.jpg\tfoul\t0.9254742860794067\t10\t20\t110\t220\n"
            "\n"
            "m_86.jpg\tgoal\t0.5\t300\t20\t400\t220\n"
            "m_90.jpg\tCorner kick\t0.95\t10\t20\t110\t220\n"
        )
        table = parse_fixture_table(text)
        assert len(table["m_86.jpg"]) == 2
        assert table["m_86.jpg"][0].confidence == 0.9254742860794067
        assert table["m_90.jpg"][0].label == "Corner kick"

    def test_bad_field_count(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_fixture_table("m_86.jpg\tfoul\t0.9\n")

    def test_bad_label(self):
        with pytest.raises(UnknownLabelError, match="line 1"):
            parse_fixture_table("m_86.jpg\tdive\t0.9\t1\t2\t3\t4\n")

    def test_bad_number(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_fixture_table("m_86.jpg\tfoul\thigh\t1\t2\t3\t4\n")

    def test_bad_geometry(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_fixture_table("m_86.jpg\tfoul\t0.9\t5\t2\t3\t4\n")


class TestDetectFrame:
    def test_scripted_detection_comes_back(self):
        backend = FixtureBackend(
            {"m_86.jpg": [det(10, 20, 110, 220, "foul", 0.9254742860794067)]}
        )
        out = detect_frame(backend, frame("m_86.jpg", 86))
        assert len(out.detections) == 1
        assert out.detections[0].label == "foul"
        assert out.detections[0].confidence == 0.9254742860794067

    def test_absent_frame_is_empty(self):
        backend = FixtureBackend({})
        assert detect_frame(backend, frame("m_0.jpg", 0)).detections == ()

    def test_nms_applied_at_profile_overlap(self):
        near_duplicates = [
            det(0, 0, 10, 10, "goal", 0.95),
            det(0, 0, 10, 9, "goal", 0.90),  # IoU 0.9 with the first
        ]
        backend = FixtureBackend({"m_0.jpg": near_duplicates})
        out = detect_frame(backend, frame("m_0.jpg", 0))
        assert [d.confidence for d in out.detections] == [0.95]

    def test_deterministic(self):
        backend = FixtureBackend({"m_0.jpg": [det(0, 0, 10, 10), det(20, 20, 30, 30, "foul", 0.7)]})
        a = detect_frame(backend, frame("m_0.jpg", 0))
        b = detect_frame(backend, frame("m_0.jpg", 0))
        assert a == b


class TestFilterConfident:
    def make(self, *confidences):
        dets = tuple(
            det(10 * i, 0, 10 * i + 5, 5, "goal", c) for i, c in enumerate(confidences)
        )
        dets = tuple(sorted(dets, key=lambda d: -d.confidence))
        return FrameDetections(frame("m_0.jpg", 0), dets)

    def test_above_threshold_kept(self):
        out = filter_confident(self.make(0.9254), 0.9)
        assert [d.confidence for d in out.detections] == [0.9254]

    def test_below_threshold_dropped(self):
        assert filter_confident(self.make(0.8999), 0.9).detections == ()

    def test_boundary_is_strict(self):
        assert filter_confident(self.make(0.9), 0.9).detections == ()

    def test_idempotent_and_monotone(self):
        rng = random.Random(9)
        for _ in range(200):
            fd = self.make(*sorted((rng.random() for _ in range(6)), reverse=True))
            lo = filter_confident(fd, 0.3)
            hi = filter_confident(fd, 0.8)
            assert filter_confident(lo, 0.3) == lo
            assert set(hi.detections) <= set(lo.detections)

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            filter_confident(self.make(0.5), 1.2)

    def test_sort_invariant_enforced(self):
        unsorted = (det(0, 0, 5, 5, "goal", 0.5), det(10, 0, 15, 5, "goal", 0.9))
        with pytest.raises(ValueError):
            FrameDetections(frame("m_0.jpg", 0), unsorted)


class TestSidecarClient:
    def test_detections_round_trip(self, fake_sidecar_cmd):
        backend = SidecarBackend(fake_sidecar_cmd("ok"), profile_by_name("frcnn-vgg16"))
        try:
            out = backend.raw_detections(frame("m_2.jpg", 2))
        finally:
            backend.close()
        assert out == [det(10.0, 20.0, 110.0, 220.0, "goal", 0.95)]

    def test_empty_detections(self, fake_sidecar_cmd):
        backend = SidecarBackend(fake_sidecar_cmd("ok"), profile_by_name("frcnn-vgg16"))
        try:
            assert backend.raw_detections(frame("empty_2.jpg", 2)) == []
        finally:
            backend.close()

    def test_wrong_id_is_protocol_error(self, fake_sidecar_cmd):
        backend = SidecarBackend(fake_sidecar_cmd("wrong-id"), profile_by_name("fixture"))
        try:
            with pytest.raises(WireProtocolError, match="id"):
                backend.raw_detections(frame("m_2.jpg", 2))
        finally:
            backend.close()

    def test_bad_json_is_protocol_error(self, fake_sidecar_cmd):
        backend = SidecarBackend(fake_sidecar_cmd("bad-json"), profile_by_name("fixture"))
        try:
            with pytest.raises(WireProtocolError, match="JSON"):
                backend.raw_detections(frame("m_2.jpg", 2))
        finally:
            backend.close()

    def test_error_field_is_protocol_error(self, fake_sidecar_cmd):
        backend = SidecarBackend(fake_sidecar_cmd("error-field"), profile_by_name("fixture"))
        try:
            with pytest.raises(WireProtocolError, match="decode"):
                backend.raw_detections(frame("m_2.jpg", 2))
        finally:
            backend.close()

    def test_missing_command_is_transport_error(self):
        backend = SidecarBackend("cmd:definitely-not-a-real-binary", profile_by_name("fixture"))
        with pytest.raises(TransportError):
            backend.raw_detections(frame("m_2.jpg", 2))

    def test_connection_refused_is_transport_error(self):
        backend = SidecarBackend("127.0.0.1:1", profile_by_name("fixture"))
        with pytest.raises(TransportError):
            backend.raw_detections(frame("m_2.jpg", 2))

    def test_bad_address_is_config_error(self):
        backend = SidecarBackend("nonsense", profile_by_name("fixture"))
        with pytest.raises(ConfigError):
            backend.raw_detections(frame("m_2.jpg", 2))


class TestDetectFrames:
    def test_transport_retry_reconnects(self, fake_sidecar_cmd):
        backend = SidecarBackend(fake_sidecar_cmd("die-after-1"), profile_by_name("frcnn-vgg16"))
        frames = [frame("m_0.jpg", 0), frame("m_2.jpg", 2)]
        try:
            results, skipped = detect_frames(backend, frames)
        finally:
            backend.close()
        assert skipped == []
        assert [fd.frame.timestamp_s for fd in results] == [0, 2]

    def test_protocol_errors_skip_and_record(self, fake_sidecar_cmd):
        backend = SidecarBackend(fake_sidecar_cmd("error-field"), profile_by_name("fixture"))
        frames = [frame("m_0.jpg", 0)]
        try:
            results, skipped = detect_frames(backend, frames)
        finally:
            backend.close()
        assert results == []
        assert len(skipped) == 1
        assert skipped[0][0].path == "m_0.jpg"
        assert "decode" in skipped[0][1]

    def test_parallel_results_ordered_by_timestamp(self):
        table = {f"m_{t}.jpg": [det(0, 0, 5, 5)] for t in range(0, 16, 2)}
        backend = FixtureBackend(table)
        frames = [frame(f"m_{t}.jpg", t) for t in range(0, 16, 2)]
        results, skipped = detect_frames(backend, list(reversed(frames)), workers=4)
        assert skipped == []
        assert [fd.frame.timestamp_s for fd in results] == list(range(0, 16, 2))

    def test_workers_must_be_positive(self):
        with pytest.raises(ValueError):
            detect_frames(FixtureBackend({}), [], workers=0)


class TestTcpTransport:
    @pytest.fixture
    def tcp_sidecar(self):
        server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        server.bind(("127.0.0.1", 0))
        server.listen(5)

        def handle(conn):
            with conn, conn.makefile("rw", encoding="utf-8", newline="\n") as fh:
                for line in fh:
                    request = json.loads(line)
                    reply = {
                        "id": request["id"],
                        "detections": [
                            {"label": "foul", "confidence": 0.91, "box": [1.0, 2.0, 3.0, 4.0]}
                        ],
                    }
                    fh.write(json.dumps(reply) + "\n")
                    fh.flush()

        def loop():
            while True:
                try:
                    conn, _ = server.accept()
                except OSError:
                    return
                threading.Thread(target=handle, args=(conn,), daemon=True).start()

        threading.Thread(target=loop, daemon=True).start()
        yield f"127.0.0.1:{server.getsockname()[1]}"
        server.close()

    def test_requests_over_tcp(self, tcp_sidecar):
        backend = SidecarBackend(tcp_sidecar, profile_by_name("frcnn-vgg16"))
        try:
            first = backend.raw_detections(frame("m_0.jpg", 0))
            second = backend.raw_detections(frame("m_2.jpg", 2))
        finally:
            backend.close()
        assert first == second == [det(1.0, 2.0, 3.0, 4.0, "foul", 0.91)]

    def test_spawned_workers_share_server(self, tcp_sidecar):
        backend = SidecarBackend(tcp_sidecar, profile_by_name("frcnn-vgg16"))
        frames = [frame(f"m_{t}.jpg", t) for t in range(0, 12, 2)]
        try:
            results, skipped = detect_frames(backend, frames, workers=3)
        finally:
            backend.close()
        assert skipped == []
        assert len(results) == 6
