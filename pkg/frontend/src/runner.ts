/**
 * Drives a collection script: opens one session per round, shows each
 * instruction, enforces the settling pause between steps, and brackets
 * every touch with start/end markers timed by the actual press.
 *
 * When the transport drops mid-script the runner pauses, keeps queued
 * data intact, and retries the connection before moving on.
 */
import { Hand, digitLabel } from "./protocol.js";
import { ActionTask, CollectionScript, countSegments } from "./script.js";
import { CollectorSession } from "./session.js";
import { LineTransport } from "./transport.js";

/** Time source and sleeper, injectable so tests can run on a virtual clock. */
export interface Clock {
  now(): number;
  wait(ms: number): Promise<void>;
}

export interface RunnerUi {
  instruction(text: string): void;
  countdown(secondsLeft: number): void;
  progress(done: number, total: number): void;
  status(text: string): void;
}

/**
 * Performs the touches. Implementations call down() the moment a touch
 * starts and up() the moment it ends; the runner turns those into
 * segment markers. digit() reports which key was actually pressed.
 */
export interface Performer {
  action(task: ActionTask, down: () => void, up: () => void): Promise<void>;
  digit(
    expected: number,
    down: (digit: number) => void,
    up: (digit: number) => void,
  ): Promise<void>;
  /** Confirmation between PIN entries (the Next button). */
  next(): Promise<void>;
}

export interface SessionHandle {
  session: CollectorSession;
  transport: LineTransport;
  close(): void;
}

export type OpenSession = (hand: Hand) => Promise<SessionHandle>;

export interface RunSummary {
  segments: number;
  perLabel: Map<string, number>;
  skipped: number;
  dropped: number;
}

export class SessionLost extends Error {}

export const STEP_PAUSE_S = 3;
const RETRY_WAIT_MS = 500;
const MAX_RETRIES = 20;

export class ScriptRunner {
  constructor(
    private readonly openSession: OpenSession,
    private readonly performer: Performer,
    private readonly ui: RunnerUi,
    private readonly clock: Clock,
  ) {}

  async run(script: CollectionScript): Promise<RunSummary> {
    const summary: RunSummary = {
      segments: 0,
      perLabel: new Map(),
      skipped: 0,
      dropped: 0,
    };
    const total = countSegments(script);
    for (const round of script.rounds) {
      const handle = await this.openSession(round.hand);
      try {
        if (!handle.session.started) {
          handle.session.start();
        }
        for (const [index, task] of round.tasks.entries()) {
          if (index > 0) {
            await this.pause();
          }
          await this.ensureConnected(handle.transport);
          this.ui.instruction(task.instruction);
          if (task.kind === "action") {
            await this.performer.action(
              task,
              () => handle.session.beginSegment(this.clock.now(), task.label),
              () => handle.session.endSegment(this.clock.now()),
            );
            this.record(summary, task.label, total);
          } else {
            for (const char of task.pin) {
              const expected = Number(char);
              let label = "";
              await this.performer.digit(
                expected,
                (digit) => {
                  // label what was pressed, not what was asked for
                  label = digitLabel(digit);
                  handle.session.beginSegment(this.clock.now(), label);
                },
                () => handle.session.endSegment(this.clock.now()),
              );
              this.record(summary, label, total);
            }
            await this.performer.next();
          }
        }
        summary.skipped += handle.session.skipped;
        summary.dropped += handle.transport.dropped;
      } finally {
        handle.close();
      }
    }
    return summary;
  }

  private record(summary: RunSummary, label: string, total: number): void {
    summary.segments += 1;
    summary.perLabel.set(label, (summary.perLabel.get(label) ?? 0) + 1);
    this.ui.progress(summary.segments, total);
  }

  private async pause(): Promise<void> {
    for (let s = STEP_PAUSE_S; s > 0; s--) {
      this.ui.countdown(s);
      await this.clock.wait(1000);
    }
    this.ui.countdown(0);
  }

  private async ensureConnected(transport: LineTransport): Promise<void> {
    if (isOpen(transport)) {
      return;
    }
    this.ui.status("connection lost, buffering locally and reconnecting");
    for (let attempt = 0; attempt < MAX_RETRIES; attempt++) {
      transport.retry();
      if (isOpen(transport)) {
        this.ui.status("reconnected");
        return;
      }
      await this.clock.wait(RETRY_WAIT_MS);
      if (isOpen(transport)) {
        this.ui.status("reconnected");
        return;
      }
    }
    throw new SessionLost("could not reconnect to the collection server");
  }
}

// retry() and the carrier callbacks move the state behind the compiler's
// back, so the check lives in a function it will not narrow across
function isOpen(transport: LineTransport): boolean {
  return transport.state === "open";
}
