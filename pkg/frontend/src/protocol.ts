/**
 * Wire protocol for the collector: newline-delimited JSON records.
 *
 * Every connection starts with a hello record naming the session, then
 * carries any mix of sensor data records and segment markers. The server
 * groups the samples between a start/end marker pair into one labeled
 * trace, so the encoders here must stay in lockstep with what the ingest
 * side accepts.
 */

/** Channel names the ingest side recognizes, case sensitive. */
export const CHANNELS = [
  "OX",
  "OY",
  "OZ",
  "MX",
  "MY",
  "MZ",
  "MGX",
  "MGY",
  "MGZ",
  "rAlpha",
  "rBeta",
  "rGama",
  "interval",
] as const;

export type Channel = (typeof CHANNELS)[number];

export const CHANNEL_SET: ReadonlySet<string> = new Set(CHANNELS);

/** How the participant holds the phone while collecting. */
export type Hand = "one" | "two" | "unknown";

/** Touch actions in their canonical order. */
export const ACTIONS = [
  "click",
  "hold",
  "scroll_up",
  "scroll_down",
  "scroll_right",
  "scroll_left",
  "zoom_in",
  "zoom_out",
] as const;

export type ActionName = (typeof ACTIONS)[number];

export interface Hello {
  session: string;
  device: string;
  browser: string;
  hand: Hand;
}

export interface DataRecord {
  t: number;
  ch: Channel;
  v: number;
}

export interface MarkerRecord {
  t: number;
  marker: "start" | "end";
  label: string;
}

export class EncodeError extends Error {}

/** Label token for a touch action segment. */
export function actionLabel(action: ActionName): string {
  return `action:${action}`;
}

/** Label token for a single PIN digit segment. */
export function digitLabel(digit: number): string {
  if (!Number.isInteger(digit) || digit < 0 || digit > 9) {
    throw new EncodeError(`digit out of range: ${digit}`);
  }
  return `digit:${digit}`;
}

function checkTimestamp(t: number): void {
  // server rejects non-finite or negative timestamps outright
  if (!Number.isFinite(t) || t < 0) {
    throw new EncodeError(`bad timestamp: ${t}`);
  }
}

export function helloLine(hello: Hello): string {
  const { session, device, browser, hand } = hello;
  for (const [name, value] of Object.entries({ session, device, browser })) {
    if (typeof value !== "string" || value.length === 0) {
      throw new EncodeError(`hello field ${name} must be a non-empty string`);
    }
  }
  if (hand !== "one" && hand !== "two" && hand !== "unknown") {
    throw new EncodeError(`bad hand mode: ${hand}`);
  }
  return JSON.stringify({ session, device, browser, hand });
}

export function dataLine(t: number, ch: Channel, v: number): string {
  checkTimestamp(t);
  if (!CHANNEL_SET.has(ch)) {
    throw new EncodeError(`unknown channel: ${ch}`);
  }
  if (!Number.isFinite(v)) {
    throw new EncodeError(`bad sample value: ${v}`);
  }
  return JSON.stringify({ t, ch, v });
}

export function markerLine(t: number, kind: "start" | "end", label: string): string {
  checkTimestamp(t);
  if (kind !== "start" && kind !== "end") {
    throw new EncodeError(`bad marker kind: ${kind}`);
  }
  const [scope, value] = splitLabel(label);
  if (scope === "action") {
    if (!(ACTIONS as readonly string[]).includes(value)) {
      throw new EncodeError(`unknown action label: ${label}`);
    }
  } else if (scope === "digit") {
    if (!/^[0-9]$/.test(value)) {
      throw new EncodeError(`bad digit label: ${label}`);
    }
  } else {
    throw new EncodeError(`bad label scope: ${label}`);
  }
  return JSON.stringify({ t, marker: kind, label });
}

function splitLabel(label: string): [string, string] {
  const i = label.indexOf(":");
  if (i < 0) {
    throw new EncodeError(`label missing scope: ${label}`);
  }
  return [label.slice(0, i), label.slice(i + 1)];
}
