/** Keyboard bindings: push-to-walk plus tap-to-twist pulses.
 *
 * The bridge's torque debouncer engages at tau_on = 0.3 N*m sustained for
 * t_hold = 0.2 s and re-arms below tau_off = 0.1 N*m, so a key tap is
 * shaped into a pulse guaranteed to pass: full amplitude well above the
 * threshold, held comfortably longer than the hold time, then a clean
 * drop to zero.
 */

export const TAU_ON = 0.3;
export const T_HOLD = 0.2;
export const PULSE_TORQUE = 0.8;
export const PULSE_DURATION = 0.35; // s, > T_HOLD with margin
export const WALK_SPEED = 1.0; // m/s while the push key is held
export const PUSH_RAMP = 2.0; // m/s^2 toward the walk speed

export interface InputSample {
  push_speed: number;
  torque: number;
}

export class InputBinding {
  private pushHeld = false;
  private push = 0;
  private pulseSign = 0;
  private pulseEnds = 0;

  keyDown(key: string, now: number): void {
    switch (key) {
      case "ArrowUp":
      case "w":
        this.pushHeld = true;
        break;
      case "ArrowLeft":
      case "a":
        this.startPulse(-1, now);
        break;
      case "ArrowRight":
      case "d":
        this.startPulse(1, now);
        break;
    }
  }

  keyUp(key: string): void {
    if (key === "ArrowUp" || key === "w") this.pushHeld = false;
  }

  private startPulse(sign: number, now: number): void {
    this.pulseSign = sign;
    this.pulseEnds = now + PULSE_DURATION;
  }

  /** Sample the controls; called once per input frame (>= 30 Hz). */
  sample(now: number, framePeriod: number): InputSample {
    if (this.pushHeld) {
      this.push = Math.min(WALK_SPEED, this.push + PUSH_RAMP * framePeriod);
    } else {
      this.push = 0; // released controls decay within one input frame
    }
    const torque =
      now < this.pulseEnds ? this.pulseSign * PULSE_TORQUE : 0;
    return { push_speed: this.push, torque };
  }
}
