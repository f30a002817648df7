"""Memory lifecycle: record, select, compress, manage, replay.

A small session fills past capacity so eviction kicks in, then the
event log rebuilds the store byte-exactly.
"""

import numpy as np

from worldkit import MemoryConfig, MemoryStore, Modality
from worldkit.core import ObservationFrame, encode_frame

config = MemoryConfig(capacity=6, merge_threshold=0.98)
store = MemoryStore(config)
store.create_session("demo")

# A repeated frame (merges later) plus distinct text notes.
frame = encode_frame(ObservationFrame(5, 5, bytes(range(25))))
for turn in range(3):
    store.record("demo", Modality.VIDEO_FRAMES, frame, {"turn": str(turn)})
for note in ("took the east corridor", "wall ahead, strafing", "goal sighted ahead"):
    store.record("demo", Modality.TEXT, note.encode())

query = store.get("demo", "demo:00000005").feature  # "goal sighted ahead"
top = store.select("demo", query, now_step=store.step_counter("demo"), k=3)
print("top-3 for the last note's feature:")
for record in top:
    print(f"  {record.id} step={record.step} modality={record.modality.value} "
          f"score={store.score(record, query, store.step_counter('demo')):.3f}")

survivors = store.compress("demo")
weights = {r.id: r.weight for r in store.records("demo")}
print(f"\nafter compress: {len(survivors)} records, weights {weights}")

for i in range(6):
    store.record("demo", Modality.TEXT, f"filler entry number {i}".encode())
evicted = store.manage("demo")
print(f"manage evicted {evicted}; size now {len(store.records('demo'))} "
      f"(capacity {config.capacity})")

log = store.export_log("demo")
rebuilt = MemoryStore.replay_log(log, config)
print("log replay reconstructs byte-exactly:",
      rebuilt.serialize_session("demo") == store.serialize_session("demo"))
