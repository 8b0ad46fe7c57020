/** Canvas renderer for live ticks and replay records.
 *
 * World coordinates are meters with y up; the canvas is scaled so the
 * whole course fits. Everything drawn comes from received frames or log
 * records — there is no simulation here.
 */

import type { TickFrame } from "./protocol.js";
import type { LogRecord } from "./replay.js";
import type { ViewState } from "./state.js";

export interface SceneConfig {
  pixelsPerMeter: number;
  worldHeight: number; // m, used to flip the y axis
}

export interface Drawable {
  truth: [number, number, number];
  est: [number, number, number];
  brake: boolean;
  costmap?: [number, number][];
  announcement?: string | null;
}

export function tickToDrawable(tick: TickFrame): Drawable {
  return {
    truth: tick.truth,
    est: tick.est,
    brake: tick.brake,
    costmap: tick.costmap,
    announcement: tick.announcement,
  };
}

export function recordToDrawable(rec: LogRecord): Drawable {
  return {
    truth: rec.truth,
    est: rec.est,
    brake: rec.brake,
    announcement: rec.announcement,
  };
}

export class Scene {
  constructor(
    private readonly ctx: CanvasRenderingContext2D,
    private readonly cfg: SceneConfig,
  ) {}

  private toPx(x: number, y: number): [number, number] {
    return [
      x * this.cfg.pixelsPerMeter,
      (this.cfg.worldHeight - y) * this.cfg.pixelsPerMeter,
    ];
  }

  render(d: Drawable, view: ViewState): void {
    const ctx = this.ctx;
    ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);

    if (view.layers.costmap && d.costmap) {
      ctx.fillStyle = "rgba(220, 80, 30, 0.6)";
      for (const [mx, my] of d.costmap) {
        const [px, py] = this.toPx(mx, my);
        ctx.fillRect(px - 2, py - 2, 4, 4);
      }
    }
    if (view.layers.estimate) {
      this.drawPose(d.est, "#4aa3ff");
    }
    if (view.layers.truth) {
      this.drawPose(d.truth, d.brake ? "#e03030" : "#30c060");
    }
    if (d.announcement) {
      ctx.fillStyle = "#ffffff";
      ctx.font = "16px sans-serif";
      ctx.fillText(d.announcement, 12, 24);
    }
    if (d.brake) {
      ctx.fillStyle = "#e03030";
      ctx.font = "bold 18px sans-serif";
      ctx.fillText("BRAKE", 12, 48);
    }
  }

  private drawPose(pose: [number, number, number], color: string): void {
    const [x, y, h] = pose;
    const [px, py] = this.toPx(x, y);
    const r = 0.115 * this.cfg.pixelsPerMeter * 2;
    const ctx = this.ctx;
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(px, py, r, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(px + r * 1.6 * Math.cos(h), py - r * 1.6 * Math.sin(h));
    ctx.stroke();
  }
}
