import { describe, expect, it } from "vitest";

import {
  applyEnvelope,
  applyError,
  displayReward,
  initialViewState,
  normalizeCamera,
  rewardsConsistent,
} from "../src/state.js";
import type { WireEnvelope } from "../src/wire.js";

function envelope(partial: Partial<WireEnvelope>): WireEnvelope {
  return {
    session_id: "s-1",
    turn: 0,
    task: "navigate",
    artifacts: [],
    metadata: {},
    memory_refs: [],
    terminal: false,
    ...partial,
  };
}

const frameArtifact = {
  modality: "VideoFrames",
  frame: {
    width: 1,
    height: 1,
    pixels: Buffer.from(new Uint8Array([85])).toString("base64"),
  },
};

describe("applyEnvelope", () => {
  it("mirrors turn, terminal, and server cumulative from the envelope", () => {
    const state = applyEnvelope(
      initialViewState(),
      envelope({
        turn: 3,
        terminal: true,
        artifacts: [frameArtifact],
        metadata: { rewards: "1.0", cumulative_reward: "0.97" },
      }),
    );
    expect(state.turn).toBe(3);
    expect(state.terminal).toBe(true);
    expect(state.banner).toBe("episode complete");
    expect(displayReward(state)).toBe("0.97");
    expect(state.frame?.pixels[0]).toBe(85);
  });

  it("sums per-step rewards and agrees with the server", () => {
    let state = initialViewState();
    for (const [rewards, cumulative] of [
      ["-0.01", "-0.01"],
      ["-0.01,-0.01", "-0.03"],
      ["1.0", "0.97"],
    ] as const) {
      state = applyEnvelope(
        state,
        envelope({ metadata: { rewards, cumulative_reward: cumulative } }),
      );
      expect(rewardsConsistent(state)).toBe(true);
    }
    expect(state.summedReward).toBeCloseTo(0.97, 9);
  });

  it("flags drift between summation and server metadata", () => {
    const state = applyEnvelope(
      initialViewState(),
      envelope({ metadata: { rewards: "-0.01", cumulative_reward: "0.5" } }),
    );
    expect(rewardsConsistent(state)).toBe(false);
  });

  it("keeps the last frame when a frameless envelope arrives", () => {
    let state = applyEnvelope(initialViewState(), envelope({ artifacts: [frameArtifact] }));
    state = applyEnvelope(
      state,
      envelope({ task: "reason", artifacts: [{ modality: "Text", text: "pose (1,1) heading E" }] }),
    );
    expect(state.frame).not.toBeNull();
    expect(state.answerText).toBe("pose (1,1) heading E");
  });

  it("routes error envelopes to the toast without counting rewards", () => {
    const state = applyEnvelope(
      initialViewState(),
      envelope({ metadata: { error: "session terminal" }, terminal: true }),
    );
    expect(state.toast).toBe("session terminal");
    expect(state.summedReward).toBe(0);
    expect(state.banner).toBe("episode complete");
  });

  it("applyError only touches the toast", () => {
    const state = applyError(initialViewState(), "409: turn already in flight");
    expect(state.toast).toContain("409");
    expect(state.turn).toBeNull();
  });
});

describe("normalizeCamera", () => {
  it("clamps polar and wraps azimuth/yaw into the canonical ranges", () => {
    const camera = normalizeCamera({ polar: 200, azimuth: 180, yaw: -90 });
    expect(camera).toEqual({ polar: 180, azimuth: -180, yaw: 270 });
  });

  it("is idempotent", () => {
    const once = normalizeCamera({ polar: -5, azimuth: 540, yaw: 720.5 });
    expect(normalizeCamera(once)).toEqual(once);
  });
});
