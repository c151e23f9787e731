// DOM rendering of server render models.
//
// The server model is authoritative: every display decision (which tokens
// exist, which are ghosts or grout, where tips and underlines go, how far a
// line indents, where the caret is) arrives precomputed, and this module
// only translates fields into elements and class names.  Nothing here
// inspects the structure of the program.

import { RenderModel, RenderToken, isRenderModel } from "./protocol.js";

export interface ViewToken {
  text: string;
  classes: string[];
  /** Render a caret element immediately after this token. */
  caretAfter: boolean;
}

// One ViewToken per model token: text plus the class list the stylesheet
// keys off (sort color, ghost dimming, grout styling, unmolded highlight,
// tip shapes, underline grouping).
export function viewToken(tok: RenderToken): ViewToken {
  const classes = ["token", tok.sort === null ? "sort-none" : `sort-${tok.sort}`];
  if (tok.ghost) classes.push("ghost");
  if (tok.unmolded) classes.push("unmolded");
  if (tok.grout_kind !== null) classes.push(`grout-${tok.grout_kind}`);
  if (tok.left_tip !== null) classes.push(`tip-left-${tok.left_tip}`);
  if (tok.right_tip !== null) classes.push(`tip-right-${tok.right_tip}`);
  if (tok.underline_group !== 0) classes.push("underlined");
  return { text: tok.text, classes, caretAfter: tok.caret_here };
}

function caretElement(doc: Document): HTMLElement {
  const caret = doc.createElement("span");
  caret.className = "caret";
  return caret;
}

function tokenElement(doc: Document, tok: RenderToken): HTMLElement {
  const view = viewToken(tok);
  const el = doc.createElement("span");
  el.className = view.classes.join(" ");
  el.dataset.group = String(tok.underline_group);
  el.textContent = view.text;
  return el;
}

// Replace the contents of `root` with the rendered model.  Rendering is a
// pure function of the model: the tree is rebuilt from scratch, so applying
// the same model twice produces identical markup.  A malformed model is
// reported on the console and leaves the previous frame in place; returns
// whether the model was applied.
export function renderModel(root: HTMLElement, model: unknown): boolean {
  if (!isRenderModel(model)) {
    console.error("renderModel: malformed model, keeping previous frame", model);
    return false;
  }
  const doc = root.ownerDocument;
  const next: HTMLElement[] = [];
  let caretPlaced = false;
  for (const line of model.lines) {
    const lineEl = doc.createElement("div");
    lineEl.className = "line";
    const indent = doc.createElement("span");
    indent.className = "indent";
    indent.textContent = " ".repeat(line.indent);
    lineEl.appendChild(indent);
    for (const tok of line.tokens) {
      lineEl.appendChild(tokenElement(doc, tok));
      if (tok.caret_here) {
        lineEl.appendChild(caretElement(doc));
        caretPlaced = true;
      }
    }
    next.push(lineEl);
  }
  // Caret 0 sits before any token; the model flags no token then.
  if (!caretPlaced && next.length > 0) {
    const first = next[0]!;
    first.insertBefore(caretElement(doc), first.children[1] ?? null);
  }
  root.replaceChildren(...next);
  return true;
}

export interface TokenSnapshot {
  text: string;
  ghost: boolean;
  sortClass: string;
}

// Read back what is on screen, one entry per token element, for tests that
// compare the DOM against the model that produced it.
export function snapshotTokens(root: HTMLElement): TokenSnapshot[][] {
  const lines: TokenSnapshot[][] = [];
  for (const lineEl of root.querySelectorAll(".line")) {
    const toks: TokenSnapshot[] = [];
    for (const el of lineEl.querySelectorAll(".token")) {
      const sortClass =
        Array.from(el.classList).find((c) => c.startsWith("sort-")) ?? "";
      toks.push({
        text: el.textContent ?? "",
        ghost: el.classList.contains("ghost"),
        sortClass,
      });
    }
    lines.push(toks);
  }
  return lines;
}
