// Wire protocol types and decoding helpers. The envelope schema mirrors
// the server exactly; frames travel as {width, height, pixels: base64}.

export interface FrameData {
  width: number;
  height: number;
  pixels: string; // base64 row-major uint8
}

export interface WireArtifact {
  modality: string;
  frame?: FrameData;
  text?: string;
  data_b64?: string;
}

export interface WireEnvelope {
  session_id: string;
  turn: number;
  task: string;
  artifacts: WireArtifact[];
  metadata: Record<string, string>;
  memory_refs: string[];
  terminal: boolean;
}

export interface MemoryRecordSummary {
  id: string;
  step: number;
  modality: string;
  weight: number;
  pinned: boolean;
  payload_digest: string;
  metadata: Record<string, string>;
}

export interface DecodedFrame {
  width: number;
  height: number;
  pixels: Uint8Array;
}

export function decodeBase64(data: string): Uint8Array {
  if (typeof atob === "function") {
    const binary = atob(data);
    const bytes = new Uint8Array(binary.length);
    for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
    return bytes;
  }
  // node path (tests); typed loosely so the browser build needs no node types
  const nodeBuffer = (globalThis as { Buffer?: { from(d: string, e: string): Uint8Array } }).Buffer;
  if (nodeBuffer) return new Uint8Array(nodeBuffer.from(data, "base64"));
  throw new Error("no base64 decoder available");
}

export function decodeFrame(frame: FrameData): DecodedFrame {
  const pixels = decodeBase64(frame.pixels);
  if (pixels.length !== frame.width * frame.height) {
    throw new Error(
      `frame declares ${frame.width}x${frame.height} but carries ${pixels.length} pixels`,
    );
  }
  return { width: frame.width, height: frame.height, pixels };
}

/** The newest view in the envelope: its last frame artifact, if any. */
export function latestFrame(envelope: WireEnvelope): DecodedFrame | null {
  for (let i = envelope.artifacts.length - 1; i >= 0; i--) {
    const artifact = envelope.artifacts[i];
    if (artifact.frame) return decodeFrame(artifact.frame);
  }
  return null;
}

export function firstText(envelope: WireEnvelope): string | null {
  for (const artifact of envelope.artifacts) {
    if (artifact.text !== undefined) return artifact.text;
  }
  return null;
}

/** Per-step rewards carried in envelope metadata (comma separated). */
export function turnRewards(envelope: WireEnvelope): number[] {
  const raw = envelope.metadata["rewards"];
  if (!raw) return [];
  return raw.split(",").filter((s) => s.length > 0).map(Number);
}
