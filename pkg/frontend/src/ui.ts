/**
 * DOM glue: builds the collection page widgets and adapts pointer events
 * on them into the Performer interface the runner drives.
 */
import { Performer } from "./runner.js";
import { ActionTask } from "./script.js";

export interface PageElements {
  instruction: HTMLElement;
  countdown: HTMLElement;
  progress: HTMLElement;
  status: HTMLElement;
  touchArea: HTMLElement;
  keypad: HTMLElement;
  keys: Map<number, HTMLButtonElement>;
  nextButton: HTMLButtonElement;
  startButton: HTMLButtonElement;
}

const PAGE_STYLE = `
  .ti-wrap { font-family: sans-serif; max-width: 28rem; margin: 0 auto; padding: 1rem; }
  .ti-instruction { font-size: 1.2rem; min-height: 3rem; }
  .ti-countdown { font-size: 2rem; text-align: center; min-height: 2.5rem; }
  .ti-touch { height: 16rem; border: 2px dashed #888; border-radius: 8px;
              display: flex; align-items: center; justify-content: center;
              touch-action: none; user-select: none; }
  .ti-touch.ti-active { border-color: #2a7; background: #eefbf3; }
  .ti-keypad { display: grid; grid-template-columns: repeat(3, 1fr); gap: 0.5rem; }
  .ti-keypad button { font-size: 1.5rem; padding: 1rem; }
  .ti-status { color: #a33; min-height: 1.5rem; }
`;

export function buildPage(root: HTMLElement): PageElements {
  const style = document.createElement("style");
  style.textContent = PAGE_STYLE;
  document.head.appendChild(style);

  const wrap = el("div", "ti-wrap");
  const instruction = el("div", "ti-instruction");
  const countdown = el("div", "ti-countdown");
  const progress = el("div", "ti-progress");
  const status = el("div", "ti-status");
  const touchArea = el("div", "ti-touch");
  touchArea.textContent = "touch here";

  const keypad = el("div", "ti-keypad");
  const keys = new Map<number, HTMLButtonElement>();
  // phone keypad order: 1..9 then 0
  for (const digit of [1, 2, 3, 4, 5, 6, 7, 8, 9, 0]) {
    const key = document.createElement("button");
    key.textContent = String(digit);
    keypad.appendChild(key);
    keys.set(digit, key);
  }
  const nextButton = document.createElement("button");
  nextButton.textContent = "Next";
  keypad.appendChild(nextButton);

  const startButton = document.createElement("button");
  startButton.textContent = "Start";

  for (const child of [instruction, countdown, progress, status, startButton, touchArea, keypad]) {
    wrap.appendChild(child);
  }
  root.appendChild(wrap);
  return {
    instruction,
    countdown,
    progress,
    status,
    touchArea,
    keypad,
    keys,
    nextButton,
    startButton,
  };
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

export class DomUi {
  constructor(private readonly page: PageElements) {}

  instruction(text: string): void {
    this.page.instruction.textContent = text;
  }

  countdown(secondsLeft: number): void {
    this.page.countdown.textContent = secondsLeft > 0 ? String(secondsLeft) : "";
  }

  progress(done: number, total: number): void {
    this.page.progress.textContent = `${done} / ${total}`;
  }

  status(text: string): void {
    this.page.status.textContent = text;
  }
}

/** Pointer-event adapter: first pointer down/up on the widgets drives the markers. */
export class DomPerformer implements Performer {
  constructor(private readonly page: PageElements) {}

  action(task: ActionTask, down: () => void, up: () => void): Promise<void> {
    const area = this.page.touchArea;
    return new Promise((resolve) => {
      const onDown = (event: PointerEvent) => {
        if (!event.isPrimary) {
          return;
        }
        area.classList.add("ti-active");
        down();
      };
      const onUp = (event: PointerEvent) => {
        if (!event.isPrimary) {
          return;
        }
        area.classList.remove("ti-active");
        area.removeEventListener("pointerdown", onDown);
        area.removeEventListener("pointerup", onUp);
        area.removeEventListener("pointercancel", onUp);
        up();
        resolve();
      };
      area.addEventListener("pointerdown", onDown);
      area.addEventListener("pointerup", onUp);
      area.addEventListener("pointercancel", onUp);
    });
  }

  digit(
    _expected: number,
    down: (digit: number) => void,
    up: (digit: number) => void,
  ): Promise<void> {
    return new Promise((resolve) => {
      const cleanups: Array<() => void> = [];
      const cleanup = () => cleanups.forEach((fn) => fn());
      for (const [digit, key] of this.page.keys) {
        const onDown = () => down(digit);
        const onUp = () => {
          cleanup();
          up(digit);
          resolve();
        };
        key.addEventListener("pointerdown", onDown);
        key.addEventListener("pointerup", onUp);
        cleanups.push(() => {
          key.removeEventListener("pointerdown", onDown);
          key.removeEventListener("pointerup", onUp);
        });
      }
    });
  }

  next(): Promise<void> {
    return new Promise((resolve) => {
      const button = this.page.nextButton;
      const onClick = () => {
        button.removeEventListener("click", onClick);
        resolve();
      };
      button.addEventListener("click", onClick);
    });
  }
}
