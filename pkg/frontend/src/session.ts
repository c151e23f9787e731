// WebSocket session against the editor server.
//
// connect() performs the hello exchange, applies the initial render, and
// hands back a Session whose send() does strict request/response round
// trips: events go out one at a time, in order, each awaiting its render
// before the next is written.  Every keystroke therefore produces exactly
// one protocol event and one applied render.

import {
  PROTOCOL_VERSION,
  RenderModel,
  SessionEvent,
  eventRequest,
  parseServerMessage,
} from "./protocol.js";

// The slice of WebSocket both the browser implementation and the "ws"
// package provide; tests substitute fakes through SessionOptions.makeSocket.
export interface SocketLike {
  addEventListener(type: "open", listener: () => void): void;
  addEventListener(type: "message", listener: (ev: { data: unknown }) => void): void;
  addEventListener(type: "close", listener: () => void): void;
  addEventListener(type: "error", listener: () => void): void;
  send(data: string): void;
  close(): void;
}

export type SessionFailure = "connect" | "version" | "protocol" | "closed";

export class SessionError extends Error {
  readonly code: SessionFailure;

  constructor(code: SessionFailure, message: string) {
    super(message);
    this.name = "SessionError";
    this.code = code;
  }
}

export interface Session {
  /** Latest model applied from the server, starting with the initial render. */
  readonly model: RenderModel;
  /** Send one event; resolves with the render it produced. */
  send(event: SessionEvent): Promise<RenderModel>;
  close(): void;
}

export interface SessionOptions {
  /** Called for every applied render, including the initial one. */
  onRender?: (model: RenderModel) => void;
  /** Socket constructor override; defaults to the global WebSocket. */
  makeSocket?: (endpoint: string) => SocketLike;
}

interface Pending {
  resolve: (model: RenderModel) => void;
  reject: (err: Error) => void;
}

function defaultSocket(endpoint: string): SocketLike {
  const ctor = (globalThis as { WebSocket?: new (url: string) => SocketLike }).WebSocket;
  if (!ctor) {
    throw new SessionError("connect", "no WebSocket implementation available");
  }
  return new ctor(endpoint);
}

export function connect(
  endpoint: string,
  options: SessionOptions = {},
): Promise<Session> {
  const makeSocket = options.makeSocket ?? defaultSocket;
  const onRender = options.onRender ?? (() => {});

  return new Promise((resolveSession, rejectSession) => {
    let socket: SocketLike;
    try {
      socket = makeSocket(endpoint);
    } catch (err) {
      rejectSession(
        err instanceof SessionError
          ? err
          : new SessionError("connect", String(err)),
      );
      return;
    }

    let phase: "hello" | "initial" | "ready" | "failed" = "hello";
    let model: RenderModel | null = null;
    const pending: Pending[] = [];
    // Serializes send() calls so at most one request is in flight.
    let queue: Promise<unknown> = Promise.resolve();

    const fail = (err: SessionError) => {
      if (phase === "failed") return;
      const wasReady = phase === "ready";
      phase = "failed";
      while (pending.length > 0) pending.shift()!.reject(err);
      if (!wasReady) rejectSession(err);
    };

    const session: Session = {
      get model(): RenderModel {
        if (model === null) {
          throw new SessionError("protocol", "no render received yet");
        }
        return model;
      },
      send(event: SessionEvent): Promise<RenderModel> {
        const turn = queue.then(
          () =>
            new Promise<RenderModel>((resolve, reject) => {
              if (phase !== "ready") {
                reject(new SessionError("closed", "session is not open"));
                return;
              }
              pending.push({ resolve, reject });
              socket.send(eventRequest(event));
            }),
        );
        // Keep the chain alive whether the round trip succeeds or fails.
        queue = turn.catch(() => {});
        return turn;
      },
      close() {
        socket.close();
      },
    };

    socket.addEventListener("error", () => {
      fail(new SessionError("connect", `could not reach ${endpoint}`));
    });

    socket.addEventListener("close", () => {
      fail(new SessionError("closed", "connection closed"));
    });

    socket.addEventListener("message", (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg === null) {
        fail(new SessionError("protocol", "unrecognized message from server"));
        return;
      }
      if (phase === "hello") {
        if (msg.type !== "hello") {
          fail(new SessionError("protocol", "expected hello, got " + msg.type));
        } else if (msg.v !== PROTOCOL_VERSION) {
          fail(
            new SessionError(
              "version",
              `server speaks protocol v${msg.v}, this client needs v${PROTOCOL_VERSION}`,
            ),
          );
        } else {
          phase = "initial";
        }
        return;
      }
      if (msg.type === "hello") {
        fail(new SessionError("protocol", "unexpected second hello"));
        return;
      }
      if (phase === "initial") {
        if (msg.type !== "render") {
          fail(new SessionError("protocol", "expected initial render"));
          return;
        }
        model = msg.model;
        onRender(msg.model);
        phase = "ready";
        resolveSession(session);
        return;
      }
      // phase === "ready": responses to queued events, in order.
      const turn = pending.shift();
      if (msg.type === "error") {
        turn?.reject(new SessionError("protocol", msg.message));
        return;
      }
      model = msg.model;
      onRender(msg.model);
      turn?.resolve(msg.model);
    });
  });
}
