// Keyboard-to-turn controller. Serializes requests: at most one turn in
// flight, nothing sent after the episode completes; server rejections
// surface as toasts and re-enable the pad.

import { HttpError, SessionClient } from "./client.js";
import { ViewState, applyEnvelope, applyError, initialViewState } from "./state.js";
import type { WireEnvelope } from "./wire.js";

export const KEY_TOKEN_MAP: Record<string, string> = {
  ArrowUp: "move_forward",
  ArrowDown: "move_backward",
  ArrowLeft: "turn_left",
  ArrowRight: "turn_right",
  w: "move_forward",
  s: "move_backward",
  a: "move_left",
  d: "move_right",
  q: "turn_left",
  e: "turn_right",
};

export function tokenForKey(key: string): string | null {
  return KEY_TOKEN_MAP[key] ?? KEY_TOKEN_MAP[key.toLowerCase()] ?? null;
}

export class SessionController {
  state: ViewState = initialViewState();
  /** True while an event-stream subscription is rendering envelopes;
   * step responses are then only awaited, not applied, so nothing is
   * counted twice. */
  eventDriven = false;

  constructor(
    private readonly client: SessionClient,
    private readonly render: (state: ViewState) => void = () => {},
  ) {}

  private update(state: ViewState): void {
    this.state = state;
    this.render(state);
  }

  get padEnabled(): boolean {
    return this.state.sessionId !== null && !this.state.inFlight && !this.state.terminal;
  }

  async start(config: Parameters<SessionClient["createSession"]>[0]): Promise<string> {
    const sessionId = await this.client.createSession(config);
    this.update({ ...initialViewState(), sessionId });
    return sessionId;
  }

  /** Feed an envelope from the event stream (or a step response). */
  ingest(envelope: WireEnvelope): void {
    this.update(applyEnvelope(this.state, envelope));
  }

  /**
   * Handle one keypress. Returns true when a request was sent; gated
   * keypresses (no session, turn in flight, episode complete) are no-ops.
   */
  async handleKey(key: string): Promise<boolean> {
    const token = tokenForKey(key);
    if (token === null || !this.padEnabled) return false;
    const sessionId = this.state.sessionId!;
    this.update({ ...this.state, inFlight: true });
    try {
      const envelope = await this.client.step(sessionId, { actions: [token] });
      if (this.eventDriven) {
        this.update({ ...this.state, inFlight: false });
      } else {
        this.update(applyEnvelope({ ...this.state, inFlight: false }, envelope));
      }
      return true;
    } catch (error) {
      const message = error instanceof HttpError ? error.message : String(error);
      this.update(applyError({ ...this.state, inFlight: false }, message));
      return true;
    }
  }
}
