// Pure view state. The reducer applies envelopes exactly as the server
// reports them; the only client-side arithmetic is summing per-step
// rewards, which must agree with the server's cumulative metadata.

import { DecodedFrame, WireEnvelope, latestFrame, firstText, turnRewards } from "./wire.js";

export interface OrbitCamera {
  polar: number; // degrees [0, 180]
  azimuth: number; // degrees [-180, 180)
  yaw: number; // degrees [0, 360)
}

export interface ViewState {
  sessionId: string | null;
  turn: number | null;
  terminal: boolean;
  summedReward: number;
  serverCumulative: number | null;
  inFlight: boolean;
  banner: string | null;
  toast: string | null;
  frame: DecodedFrame | null;
  answerText: string | null;
  camera: OrbitCamera;
}

export function initialViewState(): ViewState {
  return {
    sessionId: null,
    turn: null,
    terminal: false,
    summedReward: 0,
    serverCumulative: null,
    inFlight: false,
    banner: null,
    toast: null,
    frame: null,
    answerText: null,
    camera: { polar: 0, azimuth: 0, yaw: 0 },
  };
}

function wrapHalfOpen(value: number, lo: number, hi: number): number {
  const span = hi - lo;
  const result = lo + (((value - lo) % span) + span) % span;
  return result >= hi ? lo : result;
}

/** Keep viewer camera angles inside the canonical ranges. */
export function normalizeCamera(camera: OrbitCamera): OrbitCamera {
  return {
    polar: Math.min(Math.max(camera.polar, 0), 180),
    azimuth: wrapHalfOpen(camera.azimuth, -180, 180),
    yaw: wrapHalfOpen(camera.yaw, 0, 360),
  };
}

export function applyEnvelope(state: ViewState, envelope: WireEnvelope): ViewState {
  const error = envelope.metadata["error"];
  if (error !== undefined) {
    return {
      ...state,
      terminal: envelope.terminal,
      banner: envelope.terminal ? "episode complete" : state.banner,
      toast: error,
    };
  }
  const summedReward = turnRewards(envelope).reduce((a, r) => a + r, state.summedReward);
  const cumulative = envelope.metadata["cumulative_reward"];
  const frame = latestFrame(envelope);
  return {
    ...state,
    sessionId: envelope.session_id,
    turn: envelope.turn,
    terminal: envelope.terminal,
    summedReward,
    serverCumulative: cumulative !== undefined ? Number(cumulative) : state.serverCumulative,
    banner: envelope.terminal ? "episode complete" : null,
    toast: null,
    frame: frame ?? state.frame,
    answerText: frame ? null : firstText(envelope),
  };
}

export function applyError(state: ViewState, message: string): ViewState {
  return { ...state, toast: message };
}

/** The reward figure shown in the header, straight from the server. */
export function displayReward(state: ViewState): string {
  const value = state.serverCumulative ?? state.summedReward;
  return value.toFixed(2);
}

/** Client summation must track the server's cumulative exactly. */
export function rewardsConsistent(state: ViewState, tolerance = 1e-9): boolean {
  if (state.serverCumulative === null) return true;
  return Math.abs(state.serverCumulative - state.summedReward) <= tolerance;
}
