import { describe, expect, it } from "vitest";

import {
  InputBinding,
  PULSE_DURATION,
  PULSE_TORQUE,
  T_HOLD,
  TAU_ON,
  WALK_SPEED,
} from "../src/input.js";

const FRAME = 1 / 30;

function sampleSeries(binding: InputBinding, t0: number, seconds: number) {
  const out: { t: number; push: number; torque: number }[] = [];
  for (let t = t0; t < t0 + seconds; t += FRAME) {
    const s = binding.sample(t, FRAME);
    out.push({ t, push: s.push_speed, torque: s.torque });
  }
  return out;
}

describe("push key", () => {
  it("ramps to walk speed while held", () => {
    const b = new InputBinding();
    b.keyDown("w", 0);
    const series = sampleSeries(b, 0, 1.0);
    expect(series[0].push).toBeGreaterThan(0);
    expect(series[series.length - 1].push).toBeCloseTo(WALK_SPEED);
    for (let i = 1; i < series.length; i++) {
      expect(series[i].push).toBeGreaterThanOrEqual(series[i - 1].push);
    }
  });

  it("decays to zero within one input frame of release", () => {
    const b = new InputBinding();
    b.keyDown("ArrowUp", 0);
    sampleSeries(b, 0, 1.0);
    b.keyUp("ArrowUp");
    expect(b.sample(1.0 + FRAME, FRAME).push_speed).toBe(0);
  });
});

describe("twist pulse", () => {
  it("shapes a tap into a pulse that passes the torque debounce", () => {
    // The debouncer fires when |torque| > TAU_ON continuously for T_HOLD.
    const b = new InputBinding();
    b.keyDown("a", 5.0);
    const series = sampleSeries(b, 5.0, PULSE_DURATION + 0.2);
    const above = series.filter((s) => Math.abs(s.torque) > TAU_ON);
    expect(above.length).toBeGreaterThan(0);
    const span = above[above.length - 1].t - above[0].t;
    expect(span).toBeGreaterThan(T_HOLD); // sustained long enough
    expect(above.every((s) => s.torque === -PULSE_TORQUE)).toBe(true); // left
    expect(series[series.length - 1].torque).toBe(0); // clean re-arm
  });

  it("right key pulses positive", () => {
    const b = new InputBinding();
    b.keyDown("ArrowRight", 0);
    expect(b.sample(0.01, FRAME).torque).toBe(PULSE_TORQUE);
  });
});
