import os
import sys

import pytest

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

# A scriptable stand-in for the detector sidecar. Modes:
#   ok           one canned goal detection per request ([] for "empty" frames)
#   die-after-1  serve one request then exit (exercises reconnect/retry)
#   bad-json     reply with a non-JSON line
#   wrong-id     reply with a mismatched id
#   error-field  reply with an in-protocol error field
FAKE_SIDECAR_SOURCE = """\
import json
import sys

mode = sys.argv[1] if len(sys.argv) > 1 else "ok"
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    req = json.loads(line)
    if mode == "bad-json":
        reply = "this is not json"
    elif mode == "wrong-id":
        reply = json.dumps({"id": -99, "detections": []})
    elif mode == "error-field":
        reply = json.dumps({"id": req["id"], "detections": [], "error": "decode"})
    else:
        dets = [{"label": "goal", "confidence": 0.95, "box": [10.0, 20.0, 110.0, 220.0]}]
        if "empty" in req["frame"]:
            dets = []
        reply = json.dumps({"id": req["id"], "detections": dets})
    sys.stdout.write(reply + "\\n")
    sys.stdout.flush()
    if mode == "die-after-1":
        sys.exit(0)
"""

# Minimal media-tool stand-in for executor tests: writes its stdin (or "ok")
# to the output file given as the last argument; fails if the output name
# contains FAIL.
STUB_TOOL_SOURCE = """\
import os
import sys

out = sys.argv[-1]
if "FAIL" in os.path.basename(out):
    sys.exit(3)
data = sys.stdin.read()
with open(out, "w") as fh:
    fh.write(data or "ok")
"""


@pytest.fixture
def data_dir() -> str:
    return DATA_DIR


@pytest.fixture
def fake_sidecar_cmd(tmp_path):
    """Return a factory building `cmd:` sidecar specs for a given mode."""

    script = tmp_path / "fake_sidecar.py"
    script.write_text(FAKE_SIDECAR_SOURCE)

    def make(mode: str = "ok") -> str:
        return f"cmd:{sys.executable} {script} {mode}"

    return make


@pytest.fixture
def stub_tool(tmp_path):
    script = tmp_path / "stub_tool.py"
    script.write_text(STUB_TOOL_SOURCE)
    return (sys.executable, str(script))
