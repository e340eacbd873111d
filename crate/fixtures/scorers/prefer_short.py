"""Line-protocol scorer used by the tests: favours the end marker and
NEWLINE so programs stay short, and reports a weight for `simple_stmt`."""
import json
import sys

for line in sys.stdin:
    req = json.loads(line)
    weights = [4.0 if c[0] in ("ENDMARKER", "NEWLINE") else 1.0 for c in req["candidates"]]
    print(json.dumps({"weights": weights, "state_weights": {"simple_stmt": 1.0}}), flush=True)
