/**
 * Shared test doubles: a virtual clock, in-memory carriers, and a
 * scripted "user" that performs touches and injects sensor readings.
 */
import { Hand, Hello } from "../src/protocol.js";
import { Clock, Performer, SessionHandle } from "../src/runner.js";
import { ActionTask, mulberry32 } from "../src/script.js";
import { CollectorSession } from "../src/session.js";
import { Link, LinkFactory, LinkHandlers, LineTransport } from "../src/transport.js";

/** Clock whose wait() advances time instantly; everything stays ordered. */
export class VirtualClock implements Clock {
  private t = 0;

  now(): number {
    return this.t;
  }

  async wait(ms: number): Promise<void> {
    this.t += ms;
  }
}

/** Carrier that opens at once and appends every line to an array. */
export function captureLink(lines: string[]): LinkFactory {
  return (handlers) => {
    handlers.onOpen();
    return {
      send: (line: string) => {
        lines.push(line);
      },
      close: () => handlers.onClose(),
    };
  };
}

/** Hand-cranked carrier: the test decides when it opens, fails, or drops. */
export class FakeLink implements Link {
  sent: string[] = [];
  down = false;
  closed = false;

  constructor(readonly handlers: LinkHandlers) {}

  send(line: string): void {
    if (this.down) {
      throw new Error("link down");
    }
    this.sent.push(line);
  }

  close(): void {
    this.closed = true;
    this.handlers.onClose();
  }

  open(): void {
    this.handlers.onOpen();
  }

  /** Subsequent sends throw, but the carrier has not noticed the loss yet. */
  fail(): void {
    this.down = true;
  }

  /** Carrier loss the transport hears about. */
  drop(): void {
    this.down = true;
    this.handlers.onClose();
  }
}

export function fakeLinkFactory(links: FakeLink[]): LinkFactory {
  return (handlers) => {
    const link = new FakeLink(handlers);
    links.push(link);
    return link;
  };
}

export interface CapturedSession {
  hand: Hand;
  lines: string[];
}

/**
 * Session opener for headless runs: each round gets a fresh transport
 * over a capture link, and the SimulatedUser is pointed at the new
 * session so its readings land there.
 */
export function captureOpener(
  captured: CapturedSession[],
  user: SimulatedUser,
): (hand: Hand) => Promise<SessionHandle> {
  let n = 0;
  return async (hand) => {
    const lines: string[] = [];
    captured.push({ hand, lines });
    const transport = new LineTransport(captureLink(lines));
    transport.connect();
    n += 1;
    const meta: Hello = {
      session: `sim-${n}`,
      device: "sim-device",
      browser: "sim-browser",
      hand,
    };
    const session = new CollectorSession(transport, meta);
    user.attach(session);
    return { session, transport, close: () => transport.close() };
  };
}

export interface SimulatedUserOpts {
  pressMs: number;
  burstsPerPress: number;
  seed: number;
}

/**
 * Performer that acts like an obedient participant: presses what it is
 * told, and while touching it streams plausible motion/orientation
 * readings into the active session (all 13 channels per burst).
 */
export class SimulatedUser implements Performer {
  private session: CollectorSession | null = null;
  private rand: () => number;
  private readonly opts: SimulatedUserOpts;

  constructor(
    private readonly clock: VirtualClock,
    opts: Partial<SimulatedUserOpts> = {},
  ) {
    this.opts = { pressMs: 200, burstsPerPress: 8, seed: 7, ...opts };
    this.rand = mulberry32(this.opts.seed);
  }

  attach(session: CollectorSession): void {
    this.session = session;
  }

  async action(_task: ActionTask, down: () => void, up: () => void): Promise<void> {
    await this.press(down, up);
  }

  async digit(
    expected: number,
    down: (digit: number) => void,
    up: (digit: number) => void,
  ): Promise<void> {
    await this.press(
      () => down(expected),
      () => up(expected),
    );
  }

  async next(): Promise<void> {
    await this.clock.wait(50);
  }

  private async press(down: () => void, up: () => void): Promise<void> {
    this.burst();
    await this.clock.wait(30);
    down();
    const gap = this.opts.pressMs / this.opts.burstsPerPress;
    for (let i = 0; i < this.opts.burstsPerPress; i++) {
      this.burst();
      await this.clock.wait(gap);
    }
    up();
    await this.clock.wait(20);
    this.burst();
  }

  /** One motion event plus one orientation event, covering all channels. */
  private burst(): void {
    const s = this.session;
    if (s === null || !s.started) {
      return;
    }
    const t = this.clock.now();
    const v = () => (this.rand() - 0.5) * 4;
    s.handleMotion({
      t,
      acceleration: { x: v(), y: v(), z: v() },
      accelerationIncludingGravity: { x: v(), y: v(), z: v() + 9.8 },
      rotationRate: { alpha: v() * 20, beta: v() * 20, gamma: v() * 20 },
      interval: 16.6,
    });
    s.handleOrientation({ t, alpha: 180 + v(), beta: v(), gamma: v() });
  }
}

/** Minimal RunnerUi that records every call for later assertions. */
export class RecordingUi {
  instructions: string[] = [];
  countdowns: number[] = [];
  progressCalls: Array<[number, number]> = [];
  statuses: string[] = [];

  instruction(text: string): void {
    this.instructions.push(text);
  }

  countdown(secondsLeft: number): void {
    this.countdowns.push(secondsLeft);
  }

  progress(done: number, total: number): void {
    this.progressCalls.push([done, total]);
  }

  status(text: string): void {
    this.statuses.push(text);
  }
}

export interface ParsedWire {
  hello: { session: string; device: string; browser: string; hand: string } | null;
  data: Array<{ t: number; ch: string; v: number }>;
  markers: Array<{ t: number; marker: string; label: string }>;
  extraHellos: number;
}

/** Classify every captured line; the hello must be the very first. */
export function parseWire(lines: string[]): ParsedWire {
  const out: ParsedWire = { hello: null, data: [], markers: [], extraHellos: 0 };
  lines.forEach((line, index) => {
    const record = JSON.parse(line);
    if ("session" in record) {
      if (index === 0) {
        out.hello = record;
      } else {
        out.extraHellos += 1;
      }
    } else if ("marker" in record) {
      out.markers.push(record);
    } else {
      out.data.push(record);
    }
  });
  return out;
}

export interface Segment {
  label: string;
  start: number;
  end: number;
  samples: Array<{ t: number; ch: string; v: number }>;
}

/**
 * Walk a captured session in order and group samples into marker-bracketed
 * segments. Throws on any protocol breach: data before hello, unbalanced
 * or mislabeled markers.
 */
export function segmentsOf(lines: string[]): Segment[] {
  if (lines.length === 0) {
    throw new Error("empty session");
  }
  const first = JSON.parse(lines[0]!);
  if (!("session" in first)) {
    throw new Error("first line is not a hello");
  }
  const segments: Segment[] = [];
  let open: Segment | null = null;
  for (const line of lines.slice(1)) {
    const record = JSON.parse(line);
    if ("session" in record) {
      throw new Error("second hello in one session");
    }
    if ("marker" in record) {
      if (record.marker === "start") {
        if (open !== null) {
          throw new Error("nested start marker");
        }
        open = { label: record.label, start: record.t, end: NaN, samples: [] };
      } else {
        if (open === null) {
          throw new Error("end marker without start");
        }
        if (record.label !== open.label) {
          throw new Error(`marker label mismatch: ${open.label} vs ${record.label}`);
        }
        open.end = record.t;
        segments.push(open);
        open = null;
      }
    } else if (open !== null) {
      open.samples.push(record);
    }
  }
  if (open !== null) {
    throw new Error("unclosed segment");
  }
  return segments;
}
