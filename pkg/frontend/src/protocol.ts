/**
 * Wire protocol client for the livewire-oct session service.
 *
 * One JSON message per line (TCP) or per text frame (WebSocket); every
 * request carries an id the response echoes. The client matches
 * responses to pending requests by id, so transports only need to
 * deliver raw message strings.
 */

export type Verb =
  | "load_volume"
  | "get_slice"
  | "set_mode"
  | "add_anchor"
  | "undo_anchor"
  | "commit"
  | "splice"
  | "filter_fluids"
  | "export"
  | "get_config"
  | "set_config";

export interface Request {
  id: number;
  verb: Verb;
  payload: Record<string, unknown>;
}

export interface ErrorBody {
  code: string;
  message: string;
}

export interface Response {
  id: number | null;
  ok: boolean;
  payload?: Record<string, unknown>;
  error?: ErrorBody;
}

export interface VolumeInfo {
  volume_id: string;
  num_bscans: number;
  width: number;
  height: number;
  scan_kind: string;
  eye: string;
}

export interface SliceData {
  index: number;
  width: number;
  height: number;
  png_base64: string;
}

export type Preview =
  | { kind: "empty" }
  | { kind: "boundary"; boundary: string | null; y: number[] }
  | { kind: "polyline"; nodes: [number, number][] };

export interface Transport {
  send(line: string): void;
  onMessage(handler: (line: string) => void): void;
  close(): void;
}

/** Request failed on the service side; `code` is the stable error code. */
export class ServiceError extends Error {
  readonly code: string;

  constructor(body: ErrorBody) {
    super(body.message);
    this.code = body.code;
  }
}

interface PendingEntry {
  resolve: (payload: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export class ServiceClient {
  private transport: Transport;
  private nextId = 0;
  private pending = new Map<number, PendingEntry>();

  constructor(transport: Transport) {
    this.transport = transport;
    transport.onMessage((line) => this.handleLine(line));
  }

  /** Issue a request; resolves with the response payload. The returned
   * id lets callers track which request a preview belongs to. */
  request(
    verb: Verb,
    payload: Record<string, unknown> = {},
  ): { id: number; result: Promise<Record<string, unknown>> } {
    const id = ++this.nextId;
    const result = new Promise<Record<string, unknown>>((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
    });
    this.transport.send(JSON.stringify({ id, verb, payload }));
    return { id, result };
  }

  call(
    verb: Verb,
    payload: Record<string, unknown> = {},
  ): Promise<Record<string, unknown>> {
    return this.request(verb, payload).result;
  }

  close(): void {
    this.transport.close();
    for (const entry of this.pending.values()) {
      entry.reject(new Error("connection closed"));
    }
    this.pending.clear();
  }

  private handleLine(line: string): void {
    let response: Response;
    try {
      response = JSON.parse(line) as Response;
    } catch {
      return; // not a protocol message; nothing to match
    }
    if (response.id === null || response.id === undefined) {
      return;
    }
    const entry = this.pending.get(response.id);
    if (!entry) {
      return;
    }
    this.pending.delete(response.id);
    if (response.ok) {
      entry.resolve(response.payload ?? {});
    } else {
      entry.reject(
        new ServiceError(response.error ?? { code: "unknown", message: "" }),
      );
    }
  }
}

/** Browser transport: one protocol message per WebSocket text frame. */
export class WebSocketTransport implements Transport {
  private ws: WebSocket;
  private handlers: ((line: string) => void)[] = [];
  private queue: string[] = [];

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => {
      for (const line of this.queue.splice(0)) {
        this.ws.send(line);
      }
    };
    this.ws.onmessage = (event) => {
      for (const handler of this.handlers) {
        handler(String(event.data));
      }
    };
  }

  send(line: string): void {
    if (this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(line);
    } else {
      this.queue.push(line);
    }
  }

  onMessage(handler: (line: string) => void): void {
    this.handlers.push(handler);
  }

  close(): void {
    this.ws.close();
  }
}
