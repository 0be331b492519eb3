/**
 * Line-oriented transport over a pluggable byte-stream carrier.
 *
 * Sending is fire and forget: while the carrier is down, lines are held
 * in a bounded queue and resent in order once a carrier is open again.
 * Reconnecting is deliberate (retry()), never automatic, so the page can
 * pause collection and tell the user instead of racing a dead network.
 */
import { BoundedQueue } from "./queue.js";

/** One live carrier. send() delivers a single record line (no newline). */
export interface Link {
  send(line: string): void;
  close(): void;
}

export interface LinkHandlers {
  onOpen(): void;
  onClose(): void;
}

/** Opens a fresh carrier and reports readiness through the handlers. */
export type LinkFactory = (handlers: LinkHandlers) => Link;

export type TransportState = "idle" | "connecting" | "open" | "lost" | "closed";

export class LineTransport {
  private queue: BoundedQueue<string>;
  private link: Link | null = null;
  private current: TransportState = "idle";
  private listeners: Array<(state: TransportState) => void> = [];
  private sentCount = 0;

  constructor(private readonly factory: LinkFactory, queueLimit = 10_000) {
    this.queue = new BoundedQueue(queueLimit);
  }

  get state(): TransportState {
    return this.current;
  }

  /** Lines waiting for the carrier to come back. */
  get pending(): number {
    return this.queue.length;
  }

  /** Lines lost to the queue cap while disconnected. */
  get dropped(): number {
    return this.queue.dropped;
  }

  get sent(): number {
    return this.sentCount;
  }

  onState(listener: (state: TransportState) => void): void {
    this.listeners.push(listener);
  }

  connect(): void {
    if (this.current === "open" || this.current === "connecting" || this.current === "closed") {
      return;
    }
    this.setState("connecting");
    let link: Link;
    try {
      link = this.factory({
        onOpen: () => {
          if (this.current === "closed") {
            return;
          }
          this.setState("open");
          this.flush();
        },
        onClose: () => {
          this.link = null;
          if (this.current !== "closed") {
            this.setState("lost");
          }
        },
      });
    } catch {
      this.link = null;
      this.setState("lost");
      return;
    }
    // the factory may report open or closed synchronously, before we
    // could record the link, so reconcile here (the snapshot call keeps
    // the compiler from narrowing away states the callbacks introduced)
    const after = this.snapshot();
    if (after === "lost" || after === "closed") {
      return;
    }
    this.link = link;
    if (after === "open") {
      this.flush();
    }
  }

  private snapshot(): TransportState {
    return this.current;
  }

  /** Deliberate reconnect after a loss. */
  retry(): void {
    if (this.current === "lost" || this.current === "idle") {
      this.connect();
    }
  }

  /**
   * Queue or deliver one line. Never throws; a carrier failure flips the
   * transport to "lost" and the line stays queued for the next carrier.
   */
  send(line: string): void {
    if (this.current === "open" && this.link !== null) {
      try {
        this.link.send(line);
        this.sentCount += 1;
        return;
      } catch {
        this.link = null;
        this.setState("lost");
      }
    }
    this.queue.push(line);
  }

  close(): void {
    if (this.current === "closed") {
      return;
    }
    this.setState("closed");
    if (this.link !== null) {
      try {
        this.link.close();
      } catch {
        // already gone
      }
      this.link = null;
    }
  }

  private flush(): void {
    while (this.current === "open" && this.link !== null) {
      const line = this.queue.peek();
      if (line === undefined) {
        return;
      }
      try {
        this.link.send(line);
      } catch {
        // leave the line queued so order survives the next flush
        this.link = null;
        this.setState("lost");
        return;
      }
      this.queue.shift();
      this.sentCount += 1;
    }
  }

  private setState(state: TransportState): void {
    if (state === this.current) {
      return;
    }
    this.current = state;
    for (const listener of this.listeners) {
      listener(state);
    }
  }
}

/**
 * Carrier over a browser WebSocket. Each frame is one newline-terminated
 * record, so a dumb socket-to-TCP bridge can pipe frames straight into
 * the ingest server.
 */
export function webSocketLink(url: string): LinkFactory {
  return (handlers) => {
    const ws = new WebSocket(url);
    ws.onopen = () => handlers.onOpen();
    ws.onclose = () => handlers.onClose();
    ws.onerror = () => {
      try {
        ws.close();
      } catch {
        // close() on a failed socket can itself throw; nothing to do
      }
    };
    return {
      send: (line: string) => {
        if (ws.readyState !== WebSocket.OPEN) {
          throw new Error("websocket not open");
        }
        ws.send(line + "\n");
      },
      close: () => ws.close(),
    };
  };
}
