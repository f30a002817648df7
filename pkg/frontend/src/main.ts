// DOM wiring: a pure view over the session API. All world behavior
// comes from the server; this file only routes inputs and paints state.

import { SessionClient } from "./client.js";
import { KEY_TOKEN_MAP, SessionController } from "./controller.js";
import { drawFrame, drawPointCloud, parseWkpc, Point3 } from "./render.js";
import { displayReward, normalizeCamera, rewardsConsistent, ViewState } from "./state.js";

const DEMO_MAP = "#####\n#S..#\n#.#.#\n#..G#\n#####";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const apiInput = el<HTMLInputElement>("api-url");
const mapInput = el<HTMLTextAreaElement>("map-text");
const seedInput = el<HTMLInputElement>("seed");
const slipInput = el<HTMLInputElement>("p-slip");
const startButton = el<HTMLButtonElement>("start");
const statusLine = el<HTMLElement>("status");
const banner = el<HTMLElement>("banner");
const toast = el<HTMLElement>("toast");
const frameCanvas = el<HTMLCanvasElement>("frame");
const answerPanel = el<HTMLElement>("answer");
const orbitCanvas = el<HTMLCanvasElement>("orbit");
const polarSlider = el<HTMLInputElement>("polar");
const azimuthSlider = el<HTMLInputElement>("azimuth");
const memoryList = el<HTMLElement>("memory");
const pad = el<HTMLElement>("pad");

let client = new SessionClient(apiInput.value);
let controller = new SessionController(client, paint);
let unsubscribe: (() => void) | null = null;
let agentMarker: Point3 | null = null;
let cloud: Point3[] = [];

function paint(state: ViewState): void {
  statusLine.textContent = state.sessionId
    ? `session ${state.sessionId} · turn ${state.turn ?? "—"} · reward ${displayReward(state)}`
    : "no session";
  if (!rewardsConsistent(state)) {
    statusLine.textContent += " · reward drift!";
  }
  banner.textContent = state.banner ?? "";
  banner.style.display = state.banner ? "block" : "none";
  toast.textContent = state.toast ?? "";
  toast.style.display = state.toast ? "block" : "none";
  const padDisabled = !controller.padEnabled;
  pad.querySelectorAll("button").forEach((b) => (b.disabled = padDisabled));
  if (state.frame) {
    frameCanvas.style.display = "block";
    answerPanel.style.display = "none";
    drawFrame(frameCanvas, state.frame);
  } else if (state.answerText) {
    frameCanvas.style.display = "none";
    answerPanel.style.display = "block";
    answerPanel.textContent = state.answerText;
  }
}

async function refreshSidePanels(): Promise<void> {
  const sessionId = controller.state.sessionId;
  if (!sessionId) return;
  try {
    const [wkpc, records] = await Promise.all([
      client.exportDocument(sessionId, "pointcloud"),
      client.memory(sessionId),
    ]);
    cloud = parseWkpc(wkpc);
    drawOrbit();
    memoryList.innerHTML = "";
    for (const record of records.slice(-12).reverse()) {
      const item = document.createElement("li");
      item.textContent =
        `#${record.step} ${record.modality} w=${record.weight}` +
        (record.pinned ? " pinned" : "") +
        ` (${record.metadata["task"] ?? ""})`;
      memoryList.appendChild(item);
    }
  } catch {
    // side panels are best-effort; the main loop keeps running
  }
}

function drawOrbit(): void {
  const camera = normalizeCamera({
    polar: Number(polarSlider.value),
    azimuth: Number(azimuthSlider.value),
    yaw: 0,
  });
  drawPointCloud(orbitCanvas, cloud, camera, agentMarker);
}

startButton.addEventListener("click", async () => {
  unsubscribe?.();
  client = new SessionClient(apiInput.value.replace(/\/$/, ""));
  controller = new SessionController(client, paint);
  try {
    const sessionId = await controller.start({
      task: "navigate",
      map: mapInput.value,
      seed: Number(seedInput.value),
      kernel: { p_slip: Number(slipInput.value) },
    });
    const stop = client.events(sessionId, (envelope) => {
      controller.ingest(envelope);
      void refreshSidePanels();
    });
    controller.eventDriven = stop !== null;
    unsubscribe = stop;
    agentMarker = null;
    cloud = [];
    drawOrbit();
    paint(controller.state);
  } catch (error) {
    toast.textContent = String(error);
    toast.style.display = "block";
  }
});

document.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLInputElement || event.target instanceof HTMLTextAreaElement) {
    return;
  }
  if (KEY_TOKEN_MAP[event.key] || KEY_TOKEN_MAP[event.key.toLowerCase()]) {
    event.preventDefault();
    void controller.handleKey(event.key).then((sent) => {
      if (sent && !controller.eventDriven) void refreshSidePanels();
    });
  }
});

pad.querySelectorAll("button").forEach((button) => {
  button.addEventListener("click", () => {
    const key = button.dataset.key;
    if (key) {
      void controller.handleKey(key).then((sent) => {
        if (sent && !controller.eventDriven) void refreshSidePanels();
      });
    }
  });
});

polarSlider.addEventListener("input", drawOrbit);
azimuthSlider.addEventListener("input", drawOrbit);

mapInput.value = DEMO_MAP;
paint(controller.state);
