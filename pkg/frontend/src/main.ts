// Page bootstrap: create a session, mount the storefront, start the
// polling panel, and wire the operator console.
//
// Query parameters:
//   ?mode=rerank        panel mode (default assortment)
//   ?capture=fixture    send pre-stored screenshot keys instead of live captures
//   ?poll=1000          polling cadence in ms (default 2000)
//   ?session=myid       reuse a fixed session id

import { ApiClient } from "./api.js";
import { OperatorConsole } from "./console.js";
import { RecommendationPanel } from "./panel.js";
import { Storefront } from "./storefront.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const api = new ApiClient("");
  const sessionId = await api.createSession(params.get("session") ?? undefined);

  const mode = params.get("mode") === "rerank" ? "rerank" : "assortment";
  const poll = Number(params.get("poll") ?? "") || undefined;
  const captureMode = params.get("capture") === "fixture" ? "fixture" : "viewport";

  const panel = new RecommendationPanel(
    api,
    sessionId,
    document.getElementById("panel") as HTMLElement,
    { mode, intervalMs: poll },
  );

  const storefront = new Storefront(api, sessionId, {
    mode: captureMode,
    fixturePrefix: sessionId,
  });
  const catalog = await api.getCatalog();
  storefront.mount(document.getElementById("storefront") as HTMLElement, catalog.items);

  const operator = new OperatorConsole(
    api,
    sessionId,
    document.getElementById("console") as HTMLElement,
    () => void panel.tick(),
  );
  api
    .getSummary(sessionId)
    .then((envelope) => operator.showCurrent(envelope.constraints))
    .catch(() => operator.showCurrent(null));

  panel.start();
  const label = document.getElementById("session-label");
  if (label) label.textContent = `session ${sessionId}`;
}

void boot();
