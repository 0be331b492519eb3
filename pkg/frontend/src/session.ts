/**
 * One collection session: hello handshake, sensor fan-out, and segment
 * markers over a LineTransport.
 *
 * A session maps browser sensor events onto wire channels:
 *   devicemotion acceleration        -> MX MY MZ
 *   devicemotion incl. gravity       -> MGX MGY MGZ
 *   devicemotion rotationRate        -> rAlpha rBeta rGama
 *   devicemotion interval            -> interval
 *   deviceorientation beta/gamma/alpha -> OX OY OZ (rotation about x/y/z)
 *
 * Null or non-finite readings are counted and dropped, never sent.
 */
import {
  CHANNEL_SET,
  Channel,
  Hello,
  dataLine,
  helloLine,
  markerLine,
} from "./protocol.js";
import { LineTransport } from "./transport.js";

export class ProtocolViolation extends Error {}

interface Triple {
  x: number | null;
  y: number | null;
  z: number | null;
}

interface Rotation {
  alpha: number | null;
  beta: number | null;
  gamma: number | null;
}

/** Subset of a devicemotion event the session consumes. */
export interface MotionReading {
  t: number;
  acceleration?: Triple | null;
  accelerationIncludingGravity?: Triple | null;
  rotationRate?: Rotation | null;
  interval?: number | null;
}

/** Subset of a deviceorientation event the session consumes. */
export interface OrientationReading {
  t: number;
  alpha: number | null;
  beta: number | null;
  gamma: number | null;
}

export class CollectorSession {
  private helloSent = false;
  private openLabel: string | null = null;
  private skippedCount = 0;

  constructor(readonly transport: LineTransport, readonly meta: Hello) {}

  /** Readings dropped for being null or non-finite. */
  get skipped(): number {
    return this.skippedCount;
  }

  get started(): boolean {
    return this.helloSent;
  }

  get segmentOpen(): boolean {
    return this.openLabel !== null;
  }

  /** Send the hello record. Must happen exactly once, before anything else. */
  start(): void {
    if (this.helloSent) {
      throw new ProtocolViolation("session already started");
    }
    this.transport.send(helloLine(this.meta));
    this.helloSent = true;
  }

  /** Send one sample. Bad values are dropped and counted, bad channels throw. */
  emit(t: number, ch: Channel, v: number): void {
    if (!this.helloSent) {
      throw new ProtocolViolation("sample before hello");
    }
    if (!CHANNEL_SET.has(ch)) {
      throw new ProtocolViolation(`unknown channel: ${ch}`);
    }
    if (!Number.isFinite(t) || t < 0 || !Number.isFinite(v)) {
      this.skippedCount += 1;
      return;
    }
    this.transport.send(dataLine(t, ch, v));
  }

  handleMotion(reading: MotionReading): void {
    const t = reading.t;
    const a = reading.acceleration;
    const g = reading.accelerationIncludingGravity;
    const r = reading.rotationRate;
    this.maybe(t, "MX", a?.x);
    this.maybe(t, "MY", a?.y);
    this.maybe(t, "MZ", a?.z);
    this.maybe(t, "MGX", g?.x);
    this.maybe(t, "MGY", g?.y);
    this.maybe(t, "MGZ", g?.z);
    this.maybe(t, "rAlpha", r?.alpha);
    this.maybe(t, "rBeta", r?.beta);
    this.maybe(t, "rGama", r?.gamma);
    this.maybe(t, "interval", reading.interval);
  }

  handleOrientation(reading: OrientationReading): void {
    // beta tilts about the x axis, gamma about y, alpha spins about z
    this.maybe(reading.t, "OX", reading.beta);
    this.maybe(reading.t, "OY", reading.gamma);
    this.maybe(reading.t, "OZ", reading.alpha);
  }

  /** Open a labeled segment. Segments never nest. */
  beginSegment(t: number, label: string): void {
    if (!this.helloSent) {
      throw new ProtocolViolation("marker before hello");
    }
    if (this.openLabel !== null) {
      throw new ProtocolViolation(`segment already open: ${this.openLabel}`);
    }
    this.transport.send(markerLine(t, "start", label));
    this.openLabel = label;
  }

  /** Close the open segment with a matching end marker. */
  endSegment(t: number): void {
    if (this.openLabel === null) {
      throw new ProtocolViolation("no open segment");
    }
    this.transport.send(markerLine(t, "end", this.openLabel));
    this.openLabel = null;
  }

  private maybe(t: number, ch: Channel, v: number | null | undefined): void {
    if (v === null || v === undefined) {
      this.skippedCount += 1;
      return;
    }
    this.emit(t, ch, v);
  }
}
