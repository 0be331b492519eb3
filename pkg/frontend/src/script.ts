/**
 * Collection scripts: the ordered list of tasks a participant works
 * through, split into rounds that each run over their own session.
 *
 * The action script repeats every touch action a fixed number of times,
 * once per hand mode. The PIN script deals a seeded shuffle of a balanced
 * digit pool into fixed-length PINs, so every digit is typed equally
 * often no matter the seed.
 */
import { ACTIONS, ActionName, Hand, actionLabel } from "./protocol.js";

export const REPS_PER_ACTION = 5;
export const ACTION_HANDS: readonly Hand[] = ["one", "two"];
export const PIN_COUNT = 25;
export const PIN_LENGTH = 4;

export const INSTRUCTIONS: Record<ActionName, string> = {
  click: "Tap the highlighted area once.",
  hold: "Press the highlighted area and hold for about two seconds.",
  scroll_up: "Swipe upward across the highlighted area.",
  scroll_down: "Swipe downward across the highlighted area.",
  scroll_right: "Swipe to the right across the highlighted area.",
  scroll_left: "Swipe to the left across the highlighted area.",
  zoom_in: "Spread two fingers apart on the highlighted area.",
  zoom_out: "Pinch two fingers together on the highlighted area.",
};

export interface ActionTask {
  kind: "action";
  action: ActionName;
  label: string;
  instruction: string;
}

export interface PinTask {
  kind: "pin";
  pin: string;
  instruction: string;
}

export type Task = ActionTask | PinTask;

export interface Round {
  hand: Hand;
  tasks: Task[];
}

export interface CollectionScript {
  kind: "actions" | "pins";
  rounds: Round[];
}

/** Labeled segments the script will produce (a PIN task yields one per digit). */
export function countSegments(script: CollectionScript): number {
  let total = 0;
  for (const round of script.rounds) {
    for (const task of round.tasks) {
      total += task.kind === "pin" ? task.pin.length : 1;
    }
  }
  return total;
}

export function actionScript(reps = REPS_PER_ACTION): CollectionScript {
  if (!Number.isInteger(reps) || reps < 1) {
    throw new RangeError(`reps must be a positive integer, got ${reps}`);
  }
  const rounds = ACTION_HANDS.map((hand) => ({
    hand,
    tasks: ACTIONS.flatMap((action) =>
      Array.from({ length: reps }, (): ActionTask => ({
        kind: "action",
        action,
        label: actionLabel(action),
        instruction: INSTRUCTIONS[action],
      })),
    ),
  }));
  return { kind: "actions", rounds };
}

/** Small deterministic PRNG; good enough for shuffling a digit pool. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let z = state;
    z = Math.imul(z ^ (z >>> 15), z | 1);
    z ^= z + Math.imul(z ^ (z >>> 7), z | 61);
    return ((z ^ (z >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Deal PIN_COUNT PINs of PIN_LENGTH digits from a pool holding every
 * digit exactly PIN_COUNT * PIN_LENGTH / 10 times, shuffled by seed.
 */
export function generatePinList(seed: number): string[] {
  const pool: number[] = [];
  for (let i = 0; i < PIN_COUNT * PIN_LENGTH; i++) {
    pool.push(i % 10);
  }
  const rand = mulberry32(seed);
  for (let i = pool.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    const a = pool[i]!;
    pool[i] = pool[j]!;
    pool[j] = a;
  }
  const pins: string[] = [];
  for (let i = 0; i < PIN_COUNT; i++) {
    pins.push(pool.slice(i * PIN_LENGTH, (i + 1) * PIN_LENGTH).join(""));
  }
  return pins;
}

export function pinScript(seed: number): CollectionScript {
  const tasks = generatePinList(seed).map(
    (pin): PinTask => ({
      kind: "pin",
      pin,
      instruction: `Type ${pin} on the keypad, then press Next.`,
    }),
  );
  return { kind: "pins", rounds: [{ hand: "two", tasks }] };
}
