// Browser entry point: pick the view by the ?role query, wire the
// controls, and repaint on every server message plus a 1 s countdown tick.

import { SessionClient, webSocketTransport } from "./client.js";
import {
  observerTemplate,
  participantTemplate,
  renderObserver,
  renderParticipant,
} from "./view.js";

function wsUrl(role: string): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws?role=${role}`;
}

function start(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const params = new URLSearchParams(location.search);
  const role = params.get("role") === "observer" ? "observer" : "participant";
  root.innerHTML = role === "observer" ? observerTemplate : participantTemplate;
  const render = role === "observer" ? renderObserver : renderParticipant;

  const client = new SessionClient(webSocketTransport(wsUrl(role)), (state) =>
    render(root, state, Date.now()),
  );
  setInterval(() => render(root, client.state, Date.now()), 1000);

  if (role === "participant") {
    const name =
      params.get("name") ?? `trader-${Math.random().toString(36).slice(2, 7)}`;
    client.join(name);
    for (const [id, action] of [
      ["buy", "buy"],
      ["sell", "sell"],
      ["hold", "hold"],
    ] as const) {
      root.addEventListener("click", (event) => {
        const target = event.target as HTMLElement;
        if (target.id === id) client.submitOrder(action);
      });
    }
  }
}

start();
