// Browser entry point: wires the keyboard to a server session and the
// session's renders to the page.

import { eventForKey } from "./keymap.js";
import { Session, SessionError, connect } from "./session.js";
import { renderModel } from "./view.js";

const DEFAULT_ENDPOINT = "ws://127.0.0.1:8716";

function endpointFromLocation(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("ws") ?? DEFAULT_ENDPOINT;
}

function showBanner(banner: HTMLElement, text: string, retry?: () => void) {
  banner.replaceChildren();
  banner.classList.remove("hidden");
  const msg = document.createElement("span");
  msg.textContent = text;
  banner.appendChild(msg);
  if (retry) {
    const button = document.createElement("button");
    button.textContent = "Retry";
    button.addEventListener("click", retry);
    banner.appendChild(button);
  }
}

function hideBanner(banner: HTMLElement) {
  banner.replaceChildren();
  banner.classList.add("hidden");
}

async function start() {
  const editor = document.getElementById("editor");
  const banner = document.getElementById("banner");
  if (!editor || !banner) throw new Error("missing #editor or #banner");

  const endpoint = endpointFromLocation();
  let session: Session | null = null;

  const open = async () => {
    showBanner(banner, `connecting to ${endpoint}…`);
    try {
      session = await connect(endpoint, {
        onRender: (model) => renderModel(editor, model),
      });
      hideBanner(banner);
    } catch (err) {
      session = null;
      if (err instanceof SessionError && err.code === "version") {
        showBanner(banner, err.message);
      } else {
        const detail = err instanceof Error ? err.message : String(err);
        showBanner(banner, `connection failed: ${detail}`, () => void open());
      }
    }
  };

  document.addEventListener("keydown", (ev) => {
    if (session === null) return;
    const event = eventForKey(ev);
    if (event === null) return;
    ev.preventDefault();
    session.send(event).catch((err) => {
      console.error("event rejected by server", err);
    });
  });

  await open();
}

window.addEventListener("DOMContentLoaded", () => void start());
