"""Drive the HTTP service end to end from Python.

Boots the app in-process (no socket needed), creates a session, steps
it with the optimal plan, tails the event stream, and exports the
point cloud. The same protocol is served over a real socket by
`worldkit serve` and scripted by `worldkit run` / `replay` / `export`.
"""

import json

from fastapi.testclient import TestClient

from worldkit.kernel import DEMO_MAP_TEXT
from worldkit.service import create_app

client = TestClient(create_app())

created = client.post("/sessions", json={
    "task": "navigate", "map": DEMO_MAP_TEXT, "seed": 1,
    "kernel": {"p_slip": 0.0},
})
session = created.json()["session_id"]
print("created", session)

for token in ("move_forward", "move_forward", "move_right", "move_right"):
    wire = client.post(f"/sessions/{session}/step", json={"actions": [token]}).json()
    print(f"turn {wire['turn']}: terminal={wire['terminal']} "
          f"cumulative={wire['metadata']['cumulative_reward']}")

with client.stream("GET", f"/sessions/{session}/events", params={"limit": 4}) as stream:
    events = [json.loads(line[len("data: "):])
              for line in stream.iter_lines() if line.startswith("data: ")]
print(f"event stream replayed {len(events)} envelopes; "
      f"last terminal={events[-1]['terminal']}")

cloud = client.get(f"/sessions/{session}/export", params={"format": "pointcloud"})
print("pointcloud header:", cloud.text.split(chr(10))[0])

depth = client.get(f"/sessions/{session}/export",
                   params={"format": "depth", "yaw": 0, "rays": 3, "fov": 90}).json()
print("depth from the goal cell looking north:", depth["depths"])

print("deleted:", client.delete(f"/sessions/{session}").status_code == 204)
