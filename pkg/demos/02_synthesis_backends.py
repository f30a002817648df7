"""The three reference synthesis backends side by side.

Visual prediction rolls the kernel and upscales frames; audio renders
event tones; the action backend plans a shortest route to the goal.
"""

import numpy as np

from worldkit import (
    DEMO_MAP_TEXT,
    BackendDescriptor,
    Conditioning,
    GridMap,
    KernelConfig,
    SynthesisControls,
    SynthesisRequest,
    decode_frame,
    initial_state,
    load_backend,
)
from worldkit.synthesis import decode_waveform

grid = GridMap.from_text(DEMO_MAP_TEXT)
cfg = KernelConfig(p_slip=0.0)
state = initial_state(grid)

# Visual: two forward moves, a frame budget of four (static tail), 2x upscale.
visual = load_backend(BackendDescriptor("visual"))
artifact = visual.predict(SynthesisRequest(
    Conditioning(state=state, grid=grid, kernel=cfg, action_ids=(0, 0)),
    SynthesisControls(frame_budget=4, resolution_scale=2, seed=11),
))
frames = [decode_frame(p) for _, p in artifact.payloads]
print(f"visual: {len(frames)} frames of {frames[0].width}x{frames[0].height}, "
      f"rewards={artifact.metadata['rewards']}")

# Audio: the goal chime is an 880 Hz tone at 16 kHz.
audio = load_backend(BackendDescriptor("audio"))
artifact = audio.predict(SynthesisRequest(
    Conditioning(event="goal"), SynthesisControls(duration_s=0.25)))
rate, samples = decode_waveform(artifact.payloads[0][1])
spectrum = np.abs(np.fft.rfft(samples))
peak_hz = np.argmax(spectrum[1:]) + 1
print(f"audio: {samples.size} samples at {rate} Hz, "
      f"peak near {peak_hz * rate / samples.size:.0f} Hz")

# Action: shortest plan from the start under slip-free dynamics.
planner = load_backend(BackendDescriptor("action"))
artifact = planner.predict(SynthesisRequest(
    Conditioning(state=state, grid=grid, goal="reach_goal"), SynthesisControls()))
print(f"action: plan {artifact.payloads[0][1].decode()} "
      f"(length {artifact.metadata['plan_length']}, "
      f"ends at ({artifact.metadata['expected_x']},{artifact.metadata['expected_y']}))")

# Hosted descriptors bind to the stub transport and fail loudly.
hosted = load_backend(BackendDescriptor(
    "visual", source="hosted", api_key="demo-key", endpoint="https://example.invalid"))
try:
    hosted.predict(SynthesisRequest(Conditioning(state=state, grid=grid, kernel=cfg,
                                                 action_ids=(0,)), SynthesisControls()))
except Exception as exc:
    print("hosted:", exc)
