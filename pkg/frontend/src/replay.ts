/** Offline playback of recorded event logs (NDJSON).
 *
 * A log is a header line, one record per tick, and an end line. Parsing
 * validates the same invariants the engine does — contiguous tick
 * numbers, a terminal end record — and reports the last valid tick when
 * a file is truncated or corrupt.
 */

export interface LogHeader {
  type: "header";
  format: string;
  config_hash: string;
  config: Record<string, unknown>;
  [key: string]: unknown;
}

export interface LogRecord {
  type: "tick";
  k: number;
  t: number;
  truth: [number, number, number];
  est: [number, number, number];
  steer: number;
  brake: boolean;
  haptics: { meaning: string; actuators: number[]; duration: number }[];
  announcement: string | null;
  events: string[];
  [key: string]: unknown;
}

export interface ParsedLog {
  header: LogHeader;
  records: LogRecord[];
  end: Record<string, unknown>;
}

export class LogParseError extends Error {
  constructor(
    message: string,
    public readonly lastValidTick: number | null,
  ) {
    super(message);
  }
}

export function parseLog(text: string): ParsedLog {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0) throw new LogParseError("empty log", null);

  let header: LogHeader;
  try {
    header = JSON.parse(lines[0]);
  } catch {
    throw new LogParseError("header is not valid JSON", null);
  }
  if (header.type !== "header" || typeof header.format !== "string") {
    throw new LogParseError("first line is not a log header", null);
  }

  const records: LogRecord[] = [];
  let end: Record<string, unknown> | null = null;
  let lastValid: number | null = null;
  for (const line of lines.slice(1)) {
    let obj: Record<string, unknown>;
    try {
      obj = JSON.parse(line);
    } catch {
      throw new LogParseError("corrupt record line", lastValid);
    }
    if (obj.type === "end") {
      end = obj;
      break;
    }
    if (obj.type !== "tick" || typeof obj.k !== "number") {
      throw new LogParseError("unexpected record type", lastValid);
    }
    const expected = records.length === 0 ? obj.k : records[records.length - 1].k + 1;
    if (obj.k !== expected) {
      throw new LogParseError(`tick gap at k=${obj.k}`, lastValid);
    }
    records.push(obj as unknown as LogRecord);
    lastValid = obj.k;
  }
  if (end === null) {
    throw new LogParseError("log has no end record", lastValid);
  }
  return { header, records, end };
}

/** Scrub-bar playback over a parsed log; input controls stay disabled. */
export class Playback {
  private index = 0;
  private _rate = 1;
  private _paused = true;

  constructor(public readonly log: ParsedLog) {}

  get paused(): boolean {
    return this._paused;
  }

  get rate(): number {
    return this._rate;
  }

  set rate(r: number) {
    if (r <= 0 || !Number.isFinite(r)) throw new RangeError("rate must be > 0");
    this._rate = r;
  }

  get length(): number {
    return this.log.records.length;
  }

  get position(): number {
    return this.index;
  }

  current(): LogRecord {
    return this.log.records[this.index];
  }

  play(): void {
    this._paused = false;
  }

  pause(): void {
    this._paused = true;
  }

  /** Jump straight to record k's scene. */
  seek(k: number): LogRecord {
    if (k < 0 || k >= this.length) throw new RangeError(`seek out of range: ${k}`);
    this.index = k;
    return this.current();
  }

  /**
   * Advance by elapsed wall-clock seconds at the current rate; returns the
   * records passed over (each becomes a rendered scene in order).
   */
  advance(wallSeconds: number, dt: number): LogRecord[] {
    if (this._paused) return [];
    const steps = Math.floor((wallSeconds * this._rate) / dt);
    const out: LogRecord[] = [];
    for (let i = 0; i < steps && this.index < this.length - 1; i++) {
      this.index += 1;
      out.push(this.current());
    }
    if (this.index >= this.length - 1) this._paused = true;
    return out;
  }
}
