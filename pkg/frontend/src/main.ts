/**
 * Console bootstrap: wire the form, the controller, and the renderer.
 *
 * The page starts with a small "new session / attach" form. Creating
 * or attaching hands control to SessionController; from then on every
 * server response triggers a full redraw of the affected regions.
 */

import { SessionApi } from "./api.js";
import { SessionController } from "./controller.js";
import type { ConsoleRegions } from "./render.js";
import { renderAll } from "./render.js";

function region(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing page region #${id}`);
  return node;
}

function boot(): void {
  const regions: ConsoleRegions = {
    phase: region("phase"),
    budget: region("budget"),
    tallies: region("tallies"),
    sparklines: region("sparklines"),
    banner: region("banner"),
    queue: region("queue"),
  };
  const apiBase =
    new URLSearchParams(window.location.search).get("api") ?? "";
  const api = new SessionApi(apiBase);
  const controller = new SessionController(api, (state) =>
    renderAll(regions, state, (queryId, answer) => {
      void controller.submitAndRefresh(queryId, answer).catch(() => {
        /* banner already raised; the card reopened for retry */
      });
    }),
  );

  const form = region("setup") as HTMLFormElement;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const fields = new FormData(form);
    const attachId = String(fields.get("session") ?? "").trim();
    const busy = region("setup-status");
    busy.textContent = "starting session...";
    const begin = attachId
      ? controller.attach(attachId)
      : controller.start({
          dataset: String(fields.get("dataset") ?? ""),
          budget: Number(fields.get("budget") ?? 30),
          batch_size: Number(fields.get("batch") ?? 5),
          seed: Number(fields.get("seed") ?? 0),
        });
    begin
      .then(() => {
        busy.textContent = `session ${controller.state.sessionId}`;
        form.classList.add("collapsed");
      })
      .catch((error: unknown) => {
        busy.textContent = String(error);
      });
  });
}

document.addEventListener("DOMContentLoaded", boot);
