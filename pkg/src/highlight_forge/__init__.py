"""highlight_forge: turn a full soccer match video into a highlights cut.

The pipeline makes three passes: sample frames from the video, detect
events per frame behind a pluggable backend and persist the event timeline,
then plan and render padded, merged clips with overlay captions.
"""
from .annotations import (
    AnnotatedImage,
    AnnotationRecord,
    DatasetSplit,
    augment_flip,
    parse_annotation_lines,
    parse_voc_xml,
    split_dataset,
    write_annotation_lines,
    write_dataset_csv,
)
from .detectors import (
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
from .errors import (
    CommandFailedError,
    ConfigError,
    GeometryError,
    HighlightForgeError,
    ParseError,
    ToolNotFoundError,
    TransportError,
    UnknownLabelError,
    WireProtocolError,
)
from .evaluation import (
    EvalReport,
    GroundTruthEvent,
    events_from_cutlist,
    events_from_timeline,
    match_events,
    parse_ground_truth,
    report_table,
)
from .geometry import (
    BoundingBox,
    Detection,
    ImageDims,
    ScalePlan,
    horizontal_flip,
    iou,
    nms,
    resize_min_dim,
    scale_box,
)
from .labels import CORNER_KICK, EVENT_CLASSES, FOUL, GOAL, PENALTY_KICK, canonical_label
from .planning import (
    ClipEvent,
    ClipWindow,
    CutList,
    PlannerConfig,
    merge_windows,
    pad_event,
    read_cutlist,
    total_highlight_duration,
    write_cutlist,
)
from .rendering import (
    CommandSpec,
    OverlayDirective,
    RunReport,
    execute_plan,
    overlay_text,
    plan_frame_extraction,
    plan_render,
)
from .sampling import (
    FrameRef,
    SamplePlan,
    frame_filename,
    parse_frame_filename,
    plan_samples,
    sort_frames,
)
from .timeline import (
    EventRecord,
    EventTimeline,
    build_timeline,
    format_record,
    parse_line,
    read_metadata,
    write_metadata,
)

__version__ = "0.1.0"
