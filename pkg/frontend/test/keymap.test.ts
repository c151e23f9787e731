import { describe, expect, it } from "vitest";

import { eventForKey } from "../src/keymap.js";

describe("eventForKey", () => {
  it("maps printable characters to insert events", () => {
    expect(eventForKey({ key: "a" })).toEqual({ kind: "insert", text: "a" });
    expect(eventForKey({ key: "+" })).toEqual({ kind: "insert", text: "+" });
    expect(eventForKey({ key: " " })).toEqual({ kind: "insert", text: " " });
    expect(eventForKey({ key: "(" })).toEqual({ kind: "insert", text: "(" });
  });

  it("maps editing and movement keys 1:1", () => {
    expect(eventForKey({ key: "Backspace" })).toEqual({ kind: "backspace" });
    expect(eventForKey({ key: "ArrowLeft" })).toEqual({ kind: "move", dir: "left" });
    expect(eventForKey({ key: "ArrowRight" })).toEqual({ kind: "move", dir: "right" });
    expect(eventForKey({ key: "Tab" })).toEqual({ kind: "tab" });
    expect(eventForKey({ key: "Enter" })).toEqual({ kind: "newline" });
  });

  it("ignores keys that have no protocol event", () => {
    expect(eventForKey({ key: "Escape" })).toBeNull();
    expect(eventForKey({ key: "F5" })).toBeNull();
    expect(eventForKey({ key: "ArrowUp" })).toBeNull();
    expect(eventForKey({ key: "Shift" })).toBeNull();
  });

  it("leaves modified keys to the browser", () => {
    expect(eventForKey({ key: "a", ctrlKey: true })).toBeNull();
    expect(eventForKey({ key: "r", metaKey: true })).toBeNull();
    expect(eventForKey({ key: "x", altKey: true })).toBeNull();
  });
});
