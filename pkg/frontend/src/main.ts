/**
 * Page bootstrap. Query parameters:
 *   ?server=ws://host:port  collection server websocket (default ws://<host>:9321)
 *   ?script=actions|pins    which script to run (default actions)
 *   ?seed=N                 PIN shuffle seed (default 0)
 */
import { Hand, Hello } from "./protocol.js";
import { Clock, ScriptRunner, SessionHandle, SessionLost } from "./runner.js";
import { actionScript, pinScript } from "./script.js";
import { CollectorSession } from "./session.js";
import { LineTransport, webSocketLink } from "./transport.js";
import { DomPerformer, DomUi, buildPage } from "./ui.js";

const wallClock: Clock = {
  now: () => performance.now(),
  wait: (ms) => new Promise((resolve) => setTimeout(resolve, ms)),
};

function describeDevice(): string {
  const ua = navigator.userAgent;
  const m = ua.match(/\(([^)]*)\)/);
  return (m?.[1] ?? "unknown-device").slice(0, 64);
}

function describeBrowser(): string {
  const ua = navigator.userAgent;
  for (const name of ["Firefox", "EdgA", "SamsungBrowser", "Chrome", "Safari"]) {
    const m = ua.match(new RegExp(`${name}/([\\d.]+)`));
    if (m) {
      return `${name} ${m[1]}`;
    }
  }
  return "unknown-browser";
}

function sessionId(): string {
  return `web-${Date.now().toString(36)}-${Math.floor(Math.random() * 1e6).toString(36)}`;
}

async function requestMotionPermission(): Promise<boolean> {
  // iOS 13+ gates motion events behind an explicit permission prompt
  const anyMotion = DeviceMotionEvent as unknown as {
    requestPermission?: () => Promise<string>;
  };
  if (typeof anyMotion.requestPermission === "function") {
    try {
      return (await anyMotion.requestPermission()) === "granted";
    } catch {
      return false;
    }
  }
  return true;
}

function openSessionFactory(server: string): (hand: Hand) => Promise<SessionHandle> {
  return async (hand) => {
    const meta: Hello = {
      session: sessionId(),
      device: describeDevice(),
      browser: describeBrowser(),
      hand,
    };
    const transport = new LineTransport(webSocketLink(server));
    const opened = new Promise<void>((resolve, reject) => {
      transport.onState((state) => {
        if (state === "open") {
          resolve();
        } else if (state === "lost") {
          reject(new SessionLost(`cannot reach ${server}`));
        }
      });
    });
    transport.connect();
    await opened;
    const session = new CollectorSession(transport, meta);
    session.start();
    const epoch = performance.now();
    const onMotion = (event: DeviceMotionEvent) => {
      session.handleMotion({
        t: performance.now() - epoch,
        acceleration: event.acceleration,
        accelerationIncludingGravity: event.accelerationIncludingGravity,
        rotationRate: event.rotationRate,
        interval: event.interval,
      });
    };
    const onOrientation = (event: DeviceOrientationEvent) => {
      session.handleOrientation({
        t: performance.now() - epoch,
        alpha: event.alpha,
        beta: event.beta,
        gamma: event.gamma,
      });
    };
    window.addEventListener("devicemotion", onMotion);
    window.addEventListener("deviceorientation", onOrientation);
    // markers must share the samples' clock
    const sessionClock: Clock = {
      now: () => performance.now() - epoch,
      wait: wallClock.wait,
    };
    return {
      session,
      transport,
      clock: sessionClock,
      close: () => {
        window.removeEventListener("devicemotion", onMotion);
        window.removeEventListener("deviceorientation", onOrientation);
        transport.close();
      },
    } as SessionHandle & { clock: Clock };
  };
}

async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? `ws://${window.location.hostname || "127.0.0.1"}:9321`;
  const kind = params.get("script") === "pins" ? "pins" : "actions";
  const seed = Number(params.get("seed") ?? "0") || 0;

  const page = buildPage(document.body);
  const ui = new DomUi(page);

  if (!("DeviceMotionEvent" in window)) {
    ui.status("this browser exposes no motion sensors; nothing to collect");
    return;
  }

  page.startButton.addEventListener("click", async () => {
    page.startButton.disabled = true;
    if (!(await requestMotionPermission())) {
      ui.status("motion permission denied");
      page.startButton.disabled = false;
      return;
    }
    const script = kind === "pins" ? pinScript(seed) : actionScript();
    const openSession = openSessionFactory(server);
    // segment timestamps must come from the per-session epoch, so the
    // runner swaps clocks whenever a round opens a new session
    let active: Clock = wallClock;
    const clock: Clock = {
      now: () => active.now(),
      wait: (ms) => active.wait(ms),
    };
    const runner = new ScriptRunner(
      async (hand) => {
        const handle = (await openSession(hand)) as SessionHandle & { clock: Clock };
        active = handle.clock;
        return handle;
      },
      new DomPerformer(page),
      ui,
      clock,
    );
    try {
      const summary = await runner.run(script);
      ui.instruction("Done, thank you!");
      ui.status(
        `collected ${summary.segments} segments` +
          (summary.dropped > 0 ? `, lost ${summary.dropped} buffered lines` : ""),
      );
    } catch (err) {
      if (err instanceof SessionLost) {
        ui.status(`${err.message}; reload to continue`);
      } else {
        throw err;
      }
    } finally {
      page.startButton.disabled = false;
    }
  });
}

start();
