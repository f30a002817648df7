from collections import deque

import numpy as np
import pytest

from worldkit.core import Heading, Modality, Pose, decode_frame
from worldkit.kernel import (
    DEMO_MAP_TEXT,
    GridMap,
    KernelConfig,
    WorldState,
    initial_state,
    observe,
    sample_transition,
)
from worldkit.synthesis import (
    AUDIO_SAMPLE_RATE,
    BackendDescriptor,
    Conditioning,
    GridworldVisualBackend,
    HostedServiceError,
    PlannerActionBackend,
    PlanningError,
    SynthesisControls,
    SynthesisError,
    SynthesisRequest,
    ToneAudioBackend,
    decode_waveform,
    load_backend,
)

DEMO = GridMap.from_text(DEMO_MAP_TEXT)
DET = KernelConfig(p_slip=0.0)


def bfs_position_oracle(map_text: str, start: tuple[int, int]) -> int | None:
    """Independent optimal-length reference: BFS over positions only.

    With strafes in the template, every unit move in any of the four
    directions costs one action regardless of heading, so the optimal
    action count equals the 4-neighbor shortest path length.
    """
    rows = map_text.strip("\n").split("\n")
    if rows[start[1]][start[0]] == "G":
        return 0
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        (x, y), dist = queue.popleft()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if not (0 <= ny < len(rows) and 0 <= nx < len(rows[0])):
                continue
            ch = rows[ny][nx]
            if ch == "#" or (nx, ny) in seen:
                continue
            if ch == "G":
                return dist + 1
            seen.add((nx, ny))
            queue.append(((nx, ny), dist + 1))
    return None


def spectral_peak_oracle(samples: np.ndarray, rate: int, n_fft: int = 4096) -> float:
    """Dominant frequency via a fixed 4096-point transform."""
    padded = np.zeros(n_fft)
    padded[: min(samples.size, n_fft)] = samples[:n_fft]
    spectrum = np.abs(np.fft.rfft(padded))
    peak = 1 + int(np.argmax(spectrum[1:]))
    return peak * rate / n_fft


def visual_request(state, action_ids, **controls):
    return SynthesisRequest(
        Conditioning(state=state, grid=DEMO, kernel=DET, action_ids=tuple(action_ids)),
        SynthesisControls.from_dict(controls),
    )


# -- controls / descriptors ----------------------------------------------------


def test_unknown_controls_rejected():
    with pytest.raises(SynthesisError):
        SynthesisControls.from_dict({"turbo": 1})


def test_control_bounds():
    with pytest.raises(SynthesisError):
        SynthesisControls(frame_budget=0)
    with pytest.raises(SynthesisError):
        SynthesisControls(resolution_scale=0)


def test_registry_resolves_local_kinds():
    assert isinstance(load_backend(BackendDescriptor("visual")), GridworldVisualBackend)
    assert isinstance(load_backend(BackendDescriptor("audio")), ToneAudioBackend)
    assert isinstance(load_backend(BackendDescriptor("action")), PlannerActionBackend)


def test_local_backend_ignores_weights_path():
    backend = load_backend(BackendDescriptor("visual", weights_path="/nonexistent.ckpt"))
    assert isinstance(backend, GridworldVisualBackend)


def test_unknown_kind_rejected():
    with pytest.raises(SynthesisError):
        BackendDescriptor("smell")


def test_hosted_requires_credentials():
    with pytest.raises(SynthesisError):
        BackendDescriptor("audio", source="hosted")
    ok = BackendDescriptor("audio", source="hosted", api_key="k", endpoint="https://x")
    assert ok.endpoint == "https://x"


def test_hosted_stub_records_and_fails():
    backend = load_backend(
        BackendDescriptor("visual", source="hosted", api_key="k", endpoint="https://x")
    )
    request = visual_request(initial_state(DEMO), [0])
    with pytest.raises(HostedServiceError):
        backend.predict(request)
    assert backend.transport.requests == [request]


# -- visual ----------------------------------------------------------------------


def test_single_action_single_frame_is_kernel_observation():
    backend = GridworldVisualBackend()
    artifact = backend.predict(visual_request(initial_state(DEMO), [0], frame_budget=1))
    assert len(artifact.payloads) == 1
    successor = WorldState(Pose(2, 1, Heading.E), 1)
    assert decode_frame(artifact.payloads[0][1]) == observe(successor, DET, DEMO)


def test_static_tail_pads_to_budget():
    backend = GridworldVisualBackend()
    artifact = backend.predict(visual_request(initial_state(DEMO), [0], frame_budget=3))
    frames = [p for _, p in artifact.payloads]
    assert len(frames) == 3
    assert frames[1] == frames[0] and frames[2] == frames[0]
    assert artifact.metadata["steps_executed"] == "1"


def test_early_terminal_truncates_frames():
    backend = GridworldVisualBackend()
    artifact = backend.predict(
        visual_request(initial_state(DEMO), [0, 0, 3, 3, 0, 0], frame_budget=6)
    )
    assert len(artifact.payloads) == 4
    assert artifact.metadata["terminal"] == "true"


def test_upscale_replicates_pixels():
    backend = GridworldVisualBackend()
    base = backend.predict(visual_request(initial_state(DEMO), [0]))
    scaled = backend.predict(visual_request(initial_state(DEMO), [0], resolution_scale=3))
    small = decode_frame(base.payloads[0][1])
    big = decode_frame(scaled.payloads[0][1])
    assert (big.width, big.height) == (small.width * 3, small.height * 3)
    for j in range(big.height):
        for i in range(big.width):
            assert big.pixel(i, j) == small.pixel(i // 3, j // 3)


def test_visual_roll_reproducible_through_kernel():
    # Re-rolling the kernel with the artifact's seed reproduces every frame.
    slippy = KernelConfig(p_slip=0.3)
    actions = [0, 0, 5, 0, 1, 2]
    request = SynthesisRequest(
        Conditioning(state=initial_state(DEMO), grid=DEMO, kernel=slippy,
                     action_ids=tuple(actions)),
        SynthesisControls(seed=99, frame_budget=len(actions)),
    )
    artifact = GridworldVisualBackend().predict(request)
    rng = np.random.default_rng(99)
    state = initial_state(DEMO)
    for (modality, payload), action in zip(artifact.payloads, actions):
        assert modality == Modality.VIDEO_FRAMES
        state = sample_transition(state, action, slippy, DEMO, rng)
        assert decode_frame(payload) == observe(state, slippy, DEMO)
        if state.terminal:
            break


def test_visual_rejects_terminal_start_and_requires_state():
    backend = GridworldVisualBackend()
    terminal = WorldState(Pose(3, 3, Heading.S), 4, terminal=True)
    with pytest.raises(SynthesisError):
        backend.predict(visual_request(terminal, [0]))
    with pytest.raises(SynthesisError):
        backend.predict(SynthesisRequest(Conditioning(), SynthesisControls()))


def test_artifact_metadata_has_backend_and_seed():
    artifact = GridworldVisualBackend().predict(visual_request(initial_state(DEMO), [0]))
    assert artifact.metadata["backend"] == "visual-gridworld"
    assert "seed" in artifact.metadata


# -- audio -------------------------------------------------------------------------


def audio_request(event, duration_s, **controls):
    return SynthesisRequest(
        Conditioning(event=event),
        SynthesisControls.from_dict({"duration_s": duration_s, **controls}),
    )


def test_goal_tone_length():
    artifact = ToneAudioBackend().predict(audio_request("goal", 0.25))
    rate, samples = decode_waveform(artifact.payloads[0][1])
    assert rate == AUDIO_SAMPLE_RATE
    assert samples.size == 4000


def test_sample_zero_is_zero():
    for event in ("step", "goal"):
        _, samples = decode_waveform(
            ToneAudioBackend().predict(audio_request(event, 0.1)).payloads[0][1]
        )
        assert samples[0] == 0.0


def test_amplitude_bounded():
    _, samples = decode_waveform(
        ToneAudioBackend().predict(audio_request("step", 0.5)).payloads[0][1]
    )
    assert np.max(np.abs(samples)) <= 0.5


def test_waveform_matches_formula():
    _, samples = decode_waveform(
        ToneAudioBackend().predict(audio_request("step", 0.03)).payloads[0][1]
    )
    n = np.arange(samples.size)
    expected = 0.5 * np.sin(2 * np.pi * 440.0 * n / 16_000)
    assert np.allclose(samples, expected, atol=1e-6)


def test_goal_tone_spectral_peak_within_one_bin():
    artifact = ToneAudioBackend().predict(audio_request("goal", 0.5))
    rate, samples = decode_waveform(artifact.payloads[0][1])
    peak = spectral_peak_oracle(samples, rate)
    bin_width = rate / 4096
    assert abs(peak - 880.0) <= bin_width


@pytest.mark.parametrize("duration", [0.05, 0.121, 0.25, 0.5, 1.0])
def test_length_formula_exact(duration):
    artifact = ToneAudioBackend().predict(audio_request("step", duration))
    assert int(artifact.metadata["sample_count"]) == round(duration * 16_000)


def test_audio_rejects_unknown_event_and_bad_duration():
    with pytest.raises(SynthesisError):
        ToneAudioBackend().predict(audio_request("chime", 0.1))
    with pytest.raises(SynthesisError):
        ToneAudioBackend().predict(audio_request("goal", 0.0))


# -- action -------------------------------------------------------------------------


def action_request(state, grid, goal="reach_goal"):
    return SynthesisRequest(
        Conditioning(state=state, grid=grid, goal=goal), SynthesisControls()
    )


def test_agent_on_goal_plans_empty_sequence():
    on_goal = WorldState(Pose(3, 3, Heading.S), 7, terminal=True)
    artifact = PlannerActionBackend().predict(action_request(on_goal, DEMO))
    assert artifact.payloads[0] == (Modality.ACTION, b"")
    assert artifact.metadata["plan_length"] == "0"


def test_demo_plan_matches_position_bfs_oracle():
    oracle_length = bfs_position_oracle(DEMO_MAP_TEXT, (1, 1))
    assert oracle_length == 4
    artifact = PlannerActionBackend().predict(action_request(initial_state(DEMO), DEMO))
    tokens = artifact.payloads[0][1].decode().split(",")
    assert len(tokens) == oracle_length
    assert (artifact.metadata["expected_x"], artifact.metadata["expected_y"]) == ("3", "3")


def test_unreachable_goal_from_sealed_pocket():
    # The map is valid (goal reachable from start) but the queried state
    # sits in a sealed pocket.
    text = "#######\n#S..#.#\n#...###\n#..G..#\n#######"
    grid = GridMap.from_text(text)
    pocket = WorldState(Pose(5, 1, Heading.N))
    with pytest.raises(PlanningError):
        PlannerActionBackend().predict(action_request(pocket, grid))


def test_unknown_goal_text_rejected():
    with pytest.raises(SynthesisError):
        PlannerActionBackend().predict(action_request(initial_state(DEMO), DEMO, goal="fly"))


def test_plans_execute_to_terminal_and_are_optimal_on_random_maps():
    from worldkit.kernel import random_grid_map, shortest_action_plan

    rng = np.random.default_rng(31)
    backend = PlannerActionBackend()
    for _ in range(10):
        grid = random_grid_map(rng, max_width=7, max_height=7)
        state = initial_state(grid)
        artifact = backend.predict(action_request(state, grid))
        plan = shortest_action_plan(state, grid)
        assert int(artifact.metadata["plan_length"]) == len(plan)
        assert len(plan) == bfs_position_oracle(grid.to_text(), grid.start)
        exec_rng = np.random.default_rng(0)
        for action in plan:
            state = sample_transition(state, action, DET, grid, exec_rng)
        assert state.terminal
