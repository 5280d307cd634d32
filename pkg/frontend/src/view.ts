// DOM views. Rendering is a pure function of the latest state: every
// number on screen is copied verbatim from a server message (money and
// prices stay strings end to end); the canvas charts use parsed values
// for geometry only.

import { drawLines } from "./chart.js";
import {
  SessionState,
  countdownSeconds,
  currentPrediction,
} from "./state.js";

export const participantTemplate = `
  <div class="lobby" id="lobby"></div>
  <div class="session" id="session" hidden>
    <div class="header">
      <span id="period"></span>
      <span id="countdown" class="countdown"></span>
      <span id="price" class="price"></span>
    </div>
    <canvas id="price-chart" width="560" height="220"></canvas>
    <div class="news" id="news">
      <div class="news-headline" id="news-headline"></div>
      <div class="news-body" id="news-body"></div>
    </div>
    <div class="account">
      shares <span id="shares"></span>,
      cash <span id="cash"></span>,
      P&amp;L <span id="pnl"></span>
    </div>
    <div class="controls">
      <button id="buy">Buy 1</button>
      <button id="sell">Sell 1</button>
      <button id="hold">Do nothing</button>
      <span id="order-status"></span>
    </div>
    <div class="error" id="error"></div>
  </div>
  <div class="settled" id="settled" hidden>
    <h2>Session complete</h2>
    <p>Your payout: <span id="payout"></span></p>
  </div>
`;

export const observerTemplate = `
  <div class="lobby" id="lobby"></div>
  <div class="session" id="session" hidden>
    <div class="header">
      <span id="period"></span>
      <span id="countdown" class="countdown"></span>
      <span id="price" class="price"></span>
    </div>
    <canvas id="price-chart" width="560" height="180"></canvas>
    <div class="banner" id="prediction-banner" hidden></div>
    <canvas id="delta-chart" width="560" height="180"></canvas>
    <div class="delta-legend">d+ solid, d&minus; dashed</div>
    <table class="delta-table">
      <thead><tr><th>period</th><th>d+</th><th>d&minus;</th><th>gap</th><th>prediction</th></tr></thead>
      <tbody id="delta-rows"></tbody>
    </table>
    <div class="error" id="error"></div>
  </div>
  <div class="settled" id="settled" hidden>
    <h2>Session complete</h2>
    <table><tbody id="payout-rows"></tbody></table>
  </div>
`;

function text(root: ParentNode, id: string, value: string): void {
  const el = root.querySelector<HTMLElement>(`#${id}`);
  if (el) el.textContent = value;
}

function show(root: ParentNode, id: string, visible: boolean): void {
  const el = root.querySelector<HTMLElement>(`#${id}`);
  if (el) el.hidden = !visible;
}

function renderCommon(root: ParentNode, state: SessionState, nowMs: number): void {
  show(root, "lobby", state.phase === "connecting" || state.phase === "lobby");
  show(root, "session", state.phase === "running");
  show(root, "settled", state.phase === "settled");
  if (state.phase === "lobby" || state.phase === "connecting") {
    const cap = state.capacity === null ? "?" : String(state.capacity);
    text(root, "lobby", `Waiting for participants: ${state.joinedCount}/${cap}`);
  }
  text(root, "period", `Period ${state.period}`);
  text(root, "countdown", `${countdownSeconds(state, nowMs)}s`);
  const last = state.prices[state.prices.length - 1];
  text(root, "price", last ? last.price : "");
  text(root, "error", state.lastError ? `${state.lastError.code}: ${state.lastError.message}` : "");

  const canvas = root.querySelector<HTMLCanvasElement>("#price-chart");
  if (canvas && state.prices.length > 0) {
    const labels = state.prices.map((p) => parseFloat(p.price));
    const lo = state.prices[labels.indexOf(Math.min(...labels))];
    const hi = state.prices[labels.indexOf(Math.max(...labels))];
    drawLines(
      canvas,
      [
        {
          label: "price",
          xs: state.prices.map((p) => p.period),
          ys: labels,
          color: "#222",
        },
      ],
      lo?.price,
      hi?.price,
    );
  }
}

export function renderParticipant(root: ParentNode, state: SessionState, nowMs: number): void {
  renderCommon(root, state, nowMs);
  if (state.news) {
    text(root, "news-headline", state.news.headline);
    text(root, "news-body", state.news.body);
  }
  if (state.account) {
    text(root, "shares", String(state.account.shares));
    text(root, "cash", state.account.cash);
    text(root, "pnl", state.account.pnl);
  }
  const statusLabel = {
    none: "no order this period",
    pending: "order sent...",
    submitted: "order accepted, controls locked",
    rejected: "order rejected",
  }[state.orderStatus];
  text(root, "order-status", statusLabel);
  const lock =
    state.phase !== "running" ||
    state.orderStatus === "pending" ||
    state.orderStatus === "submitted" ||
    (state.deadlineMs !== null && nowMs > state.deadlineMs);
  for (const id of ["buy", "sell", "hold"]) {
    const btn = root.querySelector<HTMLButtonElement>(`#${id}`);
    if (btn) btn.disabled = lock;
  }
  if (state.payout !== null) text(root, "payout", state.payout);
}

export function renderObserver(root: ParentNode, state: SessionState, nowMs: number): void {
  renderCommon(root, state, nowMs);

  const banner = root.querySelector<HTMLElement>("#prediction-banner");
  const prediction = currentPrediction(state);
  if (banner) {
    banner.hidden = prediction === null;
    banner.textContent = prediction
      ? `prediction for period ${prediction.period + 1}: ${prediction.prediction}`
      : "";
  }

  const canvas = root.querySelector<HTMLCanvasElement>("#delta-chart");
  if (canvas && state.deltaD.length > 0) {
    drawLines(
      canvas,
      [
        {
          label: "d+",
          xs: state.deltaD.map((d) => d.period),
          ys: state.deltaD.map((d) => d.dPlus),
          color: "#1668b4",
        },
        {
          label: "d-",
          xs: state.deltaD.map((d) => d.period),
          ys: state.deltaD.map((d) => d.dMinus),
          color: "#c23c3c",
          dashed: true,
        },
      ],
      "0",
      "1",
    );
  }

  const rows = root.querySelector<HTMLElement>("#delta-rows");
  if (rows) {
    rows.innerHTML = "";
    const doc = rows.ownerDocument!;
    for (const d of state.deltaD) {
      const tr = doc.createElement("tr");
      for (const value of [
        String(d.period),
        String(d.dPlus),
        String(d.dMinus),
        String(d.deltaD),
        d.prediction ?? "-",
      ]) {
        const td = doc.createElement("td");
        td.textContent = value;
        tr.appendChild(td);
      }
      rows.appendChild(tr);
    }
  }

  const payoutRows = root.querySelector<HTMLElement>("#payout-rows");
  if (payoutRows && state.payouts) {
    payoutRows.innerHTML = "";
    const doc = payoutRows.ownerDocument!;
    for (const [name, payout] of Object.entries(state.payouts)) {
      const tr = doc.createElement("tr");
      const nameCell = doc.createElement("td");
      nameCell.textContent = name;
      const payCell = doc.createElement("td");
      payCell.textContent = payout;
      tr.append(nameCell, payCell);
      payoutRows.appendChild(tr);
    }
  }
}
