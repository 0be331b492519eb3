import { describe, expect, it } from "vitest";
import {
  ACTIONS,
  CHANNELS,
  EncodeError,
  actionLabel,
  dataLine,
  digitLabel,
  helloLine,
  markerLine,
} from "../src/protocol.js";

describe("channel names", () => {
  it("match the ingest side exactly, case and all", () => {
    expect([...CHANNELS]).toEqual([
      "OX", "OY", "OZ",
      "MX", "MY", "MZ",
      "MGX", "MGY", "MGZ",
      "rAlpha", "rBeta", "rGama",
      "interval",
    ]);
  });

  it("has no duplicates", () => {
    expect(new Set(CHANNELS).size).toBe(13);
  });
});

describe("helloLine", () => {
  it("carries exactly the four hello fields", () => {
    const line = helloLine({
      session: "s1",
      device: "nexus5",
      browser: "chrome",
      hand: "two",
    });
    const record = JSON.parse(line);
    expect(Object.keys(record).sort()).toEqual(["browser", "device", "hand", "session"]);
    expect(record.hand).toBe("two");
  });

  it("rejects empty fields and bad hand modes", () => {
    const good = { session: "s", device: "d", browser: "b", hand: "one" as const };
    expect(() => helloLine({ ...good, session: "" })).toThrow(EncodeError);
    expect(() => helloLine({ ...good, hand: "left" as never })).toThrow(EncodeError);
  });

  it("stays on one line even with awkward metadata", () => {
    const line = helloLine({
      session: "s\n1",
      device: 'd"quote',
      browser: "b",
      hand: "unknown",
    });
    expect(line).not.toContain("\n");
    expect(JSON.parse(line).session).toBe("s\n1");
  });
});

describe("dataLine", () => {
  it("round-trips through JSON with the exact key set", () => {
    const record = JSON.parse(dataLine(12.5, "MX", -0.25));
    expect(record).toEqual({ t: 12.5, ch: "MX", v: -0.25 });
  });

  it("rejects what the server would reject", () => {
    expect(() => dataLine(-1, "MX", 0)).toThrow(EncodeError);
    expect(() => dataLine(NaN, "MX", 0)).toThrow(EncodeError);
    expect(() => dataLine(Infinity, "MX", 0)).toThrow(EncodeError);
    expect(() => dataLine(0, "mx" as never, 0)).toThrow(EncodeError);
    expect(() => dataLine(0, "gyro" as never, 0)).toThrow(EncodeError);
    expect(() => dataLine(0, "MX", NaN)).toThrow(EncodeError);
    expect(() => dataLine(0, "MX", -Infinity)).toThrow(EncodeError);
  });

  it("accepts t = 0 and negative values", () => {
    expect(JSON.parse(dataLine(0, "rGama", -9.81)).v).toBe(-9.81);
  });
});

describe("markerLine", () => {
  it("emits start and end records with the label verbatim", () => {
    expect(JSON.parse(markerLine(5, "start", "action:click"))).toEqual({
      t: 5,
      marker: "start",
      label: "action:click",
    });
    expect(JSON.parse(markerLine(9, "end", "digit:7"))).toEqual({
      t: 9,
      marker: "end",
      label: "digit:7",
    });
  });

  it("accepts every action label", () => {
    for (const action of ACTIONS) {
      expect(() => markerLine(1, "start", actionLabel(action))).not.toThrow();
    }
  });

  it("rejects malformed labels", () => {
    expect(() => markerLine(1, "start", "click")).toThrow(EncodeError);
    expect(() => markerLine(1, "start", "action:swipe")).toThrow(EncodeError);
    expect(() => markerLine(1, "start", "digit:12")).toThrow(EncodeError);
    expect(() => markerLine(1, "start", "digit:x")).toThrow(EncodeError);
    expect(() => markerLine(1, "start", "pin:7")).toThrow(EncodeError);
    expect(() => markerLine(-1, "start", "digit:7")).toThrow(EncodeError);
  });
});

describe("labels", () => {
  it("digitLabel covers 0..9 and nothing else", () => {
    for (let d = 0; d <= 9; d++) {
      expect(digitLabel(d)).toBe(`digit:${d}`);
    }
    expect(() => digitLabel(10)).toThrow(EncodeError);
    expect(() => digitLabel(-1)).toThrow(EncodeError);
    expect(() => digitLabel(2.5)).toThrow(EncodeError);
  });

  it("actionLabel uses the wire action names", () => {
    expect(actionLabel("scroll_up")).toBe("action:scroll_up");
    expect(actionLabel("zoom_out")).toBe("action:zoom_out");
  });
});
