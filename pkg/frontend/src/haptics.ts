/** Six-segment haptic bar: a pure view of HapticPattern events.
 *
 * The handle carries six vibrotactile actuators; the cockpit mirrors them
 * as six visual segments. Which segments light is decided solely by the
 * pattern's actuator list — left trio for a left ack, right trio for a
 * right ack, all six for slow-down.
 */

import type { HapticPattern } from "./protocol.js";

export const SEGMENT_COUNT = 6;

export interface HapticIndicator {
  /** lit[i] is true while actuator i is buzzing */
  lit: boolean[];
  meaning: string | null;
  /** wall-clock time (seconds) at which the indicator goes dark */
  until: number;
}

export function darkIndicator(): HapticIndicator {
  return { lit: new Array(SEGMENT_COUNT).fill(false), meaning: null, until: 0 };
}

/** Segment states for a single pattern: exactly its actuator set. */
export function segmentsFor(pattern: HapticPattern): boolean[] {
  const lit = new Array(SEGMENT_COUNT).fill(false);
  for (const a of pattern.actuators) {
    if (a >= 0 && a < SEGMENT_COUNT) lit[a] = true;
  }
  return lit;
}

/** Fold a tick's patterns into the indicator, holding each for its duration. */
export function applyPatterns(
  prev: HapticIndicator,
  patterns: HapticPattern[],
  now: number,
): HapticIndicator {
  let ind = now >= prev.until ? darkIndicator() : { ...prev, lit: [...prev.lit] };
  for (const p of patterns) {
    const lit = segmentsFor(p);
    // overlapping patterns light the union of their actuator sets
    ind = {
      lit: ind.lit.map((on, i) => on || lit[i]),
      meaning: p.meaning,
      until: Math.max(ind.until, now + p.duration),
    };
  }
  return ind;
}

/** Render the indicator into a host element: one child per segment. */
export function renderIndicator(host: HTMLElement, ind: HapticIndicator): void {
  while (host.childElementCount < SEGMENT_COUNT) {
    const seg = host.ownerDocument.createElement("div");
    seg.className = "haptic-segment";
    seg.dataset.index = String(host.childElementCount);
    host.appendChild(seg);
  }
  for (let i = 0; i < SEGMENT_COUNT; i++) {
    const seg = host.children[i] as HTMLElement;
    seg.dataset.lit = ind.lit[i] ? "true" : "false";
    seg.classList.toggle("lit", ind.lit[i]);
  }
  host.dataset.meaning = ind.meaning ?? "";
}
