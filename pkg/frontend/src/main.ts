/** Cockpit entry point: connect to a bridge, render the scene, bind keys.
 *
 * Usage: serve this directory, run `glidesim serve <config>` locally, and
 * open index.html. Drop an .ndjson log onto the page for offline replay.
 */

import { SessionClient } from "./client.js";
import { renderIndicator } from "./haptics.js";
import { InputBinding } from "./input.js";
import { LogParseError, parseLog, Playback } from "./replay.js";
import { recordToDrawable, Scene, tickToDrawable } from "./scene.js";

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const hapticHost = document.getElementById("haptics") as HTMLElement;
const statusEl = document.getElementById("status") as HTMLElement;
const bannerEl = document.getElementById("banner") as HTMLElement;

const scene = new Scene(canvas.getContext("2d")!, {
  pixelsPerMeter: 40,
  worldHeight: canvas.height / 40,
});

const binding = new InputBinding();
const client = new SessionClient(
  `ws://${location.hostname}:8765/session`,
  binding,
);

client.onChange = (state) => {
  statusEl.textContent = state.status + (state.endReason ? `: ${state.endReason}` : "");
  bannerEl.textContent = state.errorMessage ?? state.announcement ?? "";
  renderIndicator(hapticHost, state.haptic);
  if (state.tick) scene.render(tickToDrawable(state.tick), state);
};

window.addEventListener("keydown", (e) => {
  binding.keyDown(e.key, performance.now() / 1000);
});
window.addEventListener("keyup", (e) => binding.keyUp(e.key));

document.getElementById("connect")?.addEventListener("click", () => {
  client.connect();
  client.control({ type: "control", action: "start" });
});

// --- offline replay: drop a log file anywhere on the page

window.addEventListener("dragover", (e) => e.preventDefault());
window.addEventListener("drop", async (e) => {
  e.preventDefault();
  const file = e.dataTransfer?.files[0];
  if (!file) return;
  client.close();
  try {
    const playback = new Playback(parseLog(await file.text()));
    playback.play();
    statusEl.textContent = `replay: ${file.name}`;
    let last = performance.now();
    const step = () => {
      const now = performance.now();
      const passed = playback.advance((now - last) / 1000, 0.02);
      last = now;
      const rec = passed.length ? passed[passed.length - 1] : playback.current();
      scene.render(recordToDrawable(rec), client.state);
      if (!playback.paused) requestAnimationFrame(step);
    };
    requestAnimationFrame(step);
  } catch (err) {
    if (err instanceof LogParseError) {
      bannerEl.textContent = `corrupt log (last valid tick: ${err.lastValidTick ?? "none"})`;
    } else {
      throw err;
    }
  }
});
