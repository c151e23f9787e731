// Wire types for the line-JSON editor session protocol, version 1.
//
// The server speaks newline-free JSON objects over a WebSocket.  On connect
// it sends a hello carrying the protocol version, then an initial render of
// the empty buffer.  After that, every event request is answered by exactly
// one response: a render on success, an error otherwise.

export const PROTOCOL_VERSION = 1;

export type TipShape = "convex" | "concave";

export type GroutKind = "operand" | "infix" | "prefix" | "postfix";

export interface RenderToken {
  /** Source text of the token (grout tokens carry their glyph). */
  text: string;
  /** Sort name, or null for tokens that have no mold (unmolded input). */
  sort: string | null;
  /** Tip shapes; non-null only for tokens of the term under the caret. */
  left_tip: TipShape | null;
  right_tip: TipShape | null;
  /** True for ghost tiles: expected tokens the user has not typed yet. */
  ghost: boolean;
  /** Set when the token is grout injected by error correction. */
  grout_kind: GroutKind | null;
  /** True for raw input the molder could not place. */
  unmolded: boolean;
  /** True on the token the caret sits immediately after. */
  caret_here: boolean;
  /** Nonzero for tokens inside the caret term; used for underlining. */
  underline_group: number;
}

export interface RenderLine {
  /** Leading indentation in spaces. */
  indent: number;
  tokens: RenderToken[];
}

export interface RenderModel {
  /** Caret position counted in display entries; 0 is before everything. */
  caret: number;
  lines: RenderLine[];
}

export type SessionEvent =
  | { kind: "insert"; text: string }
  | { kind: "backspace" }
  | { kind: "move"; dir: "left" | "right" }
  | { kind: "tab" }
  | { kind: "newline" };

export interface EventRequest {
  type: "event";
  event: SessionEvent;
}

export interface HelloMessage {
  type: "hello";
  v: number;
}

export interface RenderMessage {
  type: "render";
  model: RenderModel;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage = HelloMessage | RenderMessage | ErrorMessage;

function isObject(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

function isTip(x: unknown): x is TipShape | null {
  return x === null || x === "convex" || x === "concave";
}

function isGroutKind(x: unknown): x is GroutKind | null {
  return (
    x === null ||
    x === "operand" ||
    x === "infix" ||
    x === "prefix" ||
    x === "postfix"
  );
}

export function isRenderToken(x: unknown): x is RenderToken {
  if (!isObject(x)) return false;
  return (
    typeof x.text === "string" &&
    (x.sort === null || typeof x.sort === "string") &&
    isTip(x.left_tip) &&
    isTip(x.right_tip) &&
    typeof x.ghost === "boolean" &&
    isGroutKind(x.grout_kind) &&
    typeof x.unmolded === "boolean" &&
    typeof x.caret_here === "boolean" &&
    typeof x.underline_group === "number"
  );
}

export function isRenderLine(x: unknown): x is RenderLine {
  if (!isObject(x)) return false;
  return (
    typeof x.indent === "number" &&
    Array.isArray(x.tokens) &&
    x.tokens.every(isRenderToken)
  );
}

export function isRenderModel(x: unknown): x is RenderModel {
  if (!isObject(x)) return false;
  return (
    typeof x.caret === "number" &&
    Array.isArray(x.lines) &&
    x.lines.length > 0 &&
    x.lines.every(isRenderLine)
  );
}

export function isHello(x: unknown): x is HelloMessage {
  return isObject(x) && x.type === "hello" && typeof x.v === "number";
}

export function isRenderMessage(x: unknown): x is RenderMessage {
  return isObject(x) && x.type === "render" && isRenderModel(x.model);
}

export function isErrorMessage(x: unknown): x is ErrorMessage {
  return isObject(x) && x.type === "error" && typeof x.message === "string";
}

export function parseServerMessage(data: string): ServerMessage | null {
  let parsed: unknown;
  try {
    parsed = JSON.parse(data);
  } catch {
    return null;
  }
  if (isHello(parsed) || isRenderMessage(parsed) || isErrorMessage(parsed)) {
    return parsed;
  }
  return null;
}

export function eventRequest(event: SessionEvent): string {
  const req: EventRequest = { type: "event", event };
  return JSON.stringify(req);
}
