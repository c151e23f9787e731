// Keyboard handling: one key press maps to at most one protocol event.

import { SessionEvent } from "./protocol.js";

export interface KeyPress {
  key: string;
  ctrlKey?: boolean;
  metaKey?: boolean;
  altKey?: boolean;
}

// Printable characters insert themselves; editing and movement keys map
// 1:1 onto protocol events.  Anything else (modified keys, function keys)
// is left to the browser.
export function eventForKey(press: KeyPress): SessionEvent | null {
  if (press.ctrlKey || press.metaKey || press.altKey) return null;
  switch (press.key) {
    case "Backspace":
      return { kind: "backspace" };
    case "ArrowLeft":
      return { kind: "move", dir: "left" };
    case "ArrowRight":
      return { kind: "move", dir: "right" };
    case "Tab":
      return { kind: "tab" };
    case "Enter":
      return { kind: "newline" };
    default:
      if (press.key.length === 1) {
        return { kind: "insert", text: press.key };
      }
      return null;
  }
}
