"""Grounded reasoning plus explicit representation on the same session.

Fuses observations into an occupancy grid, exports a point cloud and a
depth fan, and answers spatial/audio template queries against them.
"""

from worldkit import (
    DEMO_MAP_TEXT,
    GridMap,
    Heading,
    KernelConfig,
    OccupancyGrid,
    Pose,
    WorldState,
    export_points,
    infer_audio,
    infer_spatial,
    observe,
    render_depth,
    to_wkpc,
)
from worldkit.synthesis import (
    Conditioning,
    SynthesisControls,
    SynthesisRequest,
    ToneAudioBackend,
)

grid_map = GridMap.from_text(DEMO_MAP_TEXT)
cfg = KernelConfig()

# Fuse two overlapping windows; together they cover the whole demo map.
occupancy = OccupancyGrid(grid_map.width, grid_map.height)
for pose in (Pose(3, 2, Heading.N), Pose(1, 2, Heading.N)):
    frame = observe(WorldState(pose), cfg, grid_map)
    occupancy.fuse_observation(frame, pose)
print(f"known cells: {occupancy.known_count()} / {grid_map.width * grid_map.height}")

output = export_points(occupancy)
print(f"point cloud ({len(output.points)} wall cubes):")
print(to_wkpc(output.points[:3]) + "...")

depth = render_depth(occupancy, camera=(1.5, 1.5), yaw=90.0, rays=5, fov=90.0)
print("depth fan looking east:", [round(d, 3) for d in depth.depths])

# Spatial templates answer against the true map.
state = WorldState(Pose(1, 3, Heading.E))
for template in ("goal_direction", "wall_count(1)", "distance_to_goal"):
    answer = infer_spatial(template, state, grid_map)
    print(f"{template}: {answer.text}   {answer.structured}")

# Audio loop: synthesize a step tone, classify it back.
tone = ToneAudioBackend().predict(SynthesisRequest(
    Conditioning(event="step"), SynthesisControls(duration_s=0.1)))
print("classify(synthesize(step)):", infer_audio("classify", tone.payloads[0][1]).structured)
