// Pure session state: a reducer over server messages. All market values
// are kept as the server sent them (strings for money); closes arriving
// out of order are buffered and applied in period order.

import type {
  AccountWire,
  DeltaDMsg,
  NewsWire,
  PeriodCloseMsg,
  ServerMsg,
} from "./protocol.js";

export type Phase = "connecting" | "lobby" | "running" | "settled";
export type OrderStatus = "none" | "pending" | "submitted" | "rejected";

export interface PricePoint {
  period: number;
  price: string;
}

export interface DeltaPoint {
  period: number;
  dPlus: number;
  dMinus: number;
  deltaD: number;
  prediction: "up" | "down" | null;
}

export interface SessionState {
  phase: Phase;
  name: string | null;
  participant: number | null;
  capacity: number | null;
  joinedCount: number;
  period: number;
  deadlineMs: number | null;
  news: NewsWire | null;
  prices: PricePoint[];
  account: AccountWire | null;
  orderStatus: OrderStatus;
  lastError: { code: string; message: string } | null;
  payout: string | null;
  payouts: Record<string, string> | null;
  deltaD: DeltaPoint[];
  closedThrough: number;
  bufferedCloses: Map<number, PeriodCloseMsg>;
}

export function initialState(): SessionState {
  return {
    phase: "connecting",
    name: null,
    participant: null,
    capacity: null,
    joinedCount: 0,
    period: 0,
    deadlineMs: null,
    news: null,
    prices: [],
    account: null,
    orderStatus: "none",
    lastError: null,
    payout: null,
    payouts: null,
    deltaD: [],
    closedThrough: 0,
    bufferedCloses: new Map(),
  };
}

function applyClose(state: SessionState, msg: PeriodCloseMsg): void {
  state.prices.push({ period: msg.period, price: msg.price });
  state.closedThrough = msg.period;
  if (msg.account) {
    state.account = msg.account;
  }
}

export function applyMessage(state: SessionState, msg: ServerMsg): SessionState {
  const next: SessionState = {
    ...state,
    prices: state.prices.slice(),
    deltaD: state.deltaD.slice(),
    bufferedCloses: new Map(state.bufferedCloses),
  };
  switch (msg.type) {
    case "joined":
      next.phase = "lobby";
      next.name = msg.name;
      next.participant = msg.participant;
      next.capacity = msg.capacity;
      next.joinedCount = msg.joined;
      break;
    case "lobby":
      if (next.phase === "connecting") next.phase = "lobby";
      next.joinedCount = msg.joined;
      next.capacity = msg.capacity;
      break;
    case "period_open":
      next.phase = "running";
      next.period = msg.period;
      next.deadlineMs = msg.deadline_ms;
      next.news = msg.news;
      next.orderStatus = "none";
      next.lastError = null;
      if (msg.period === 1 && next.prices.length === 0) {
        // The first open carries the starting price; later opens repeat
        // the latest close, which the chart already has.
        next.prices.push({ period: 0, price: msg.price });
      }
      break;
    case "period_close": {
      if (msg.period === next.closedThrough + 1) {
        applyClose(next, msg);
        let buffered = next.bufferedCloses.get(next.closedThrough + 1);
        while (buffered) {
          next.bufferedCloses.delete(buffered.period);
          applyClose(next, buffered);
          buffered = next.bufferedCloses.get(next.closedThrough + 1);
        }
      } else if (msg.period > next.closedThrough) {
        next.bufferedCloses.set(msg.period, msg);
      }
      break;
    }
    case "order_ack":
      if (msg.period === next.period) next.orderStatus = "submitted";
      break;
    case "error":
      next.lastError = { code: msg.code, message: msg.message };
      if (
        msg.code === "duplicate_order" ||
        msg.code === "late_order" ||
        msg.code === "wrong_period"
      ) {
        if (next.orderStatus === "pending") next.orderStatus = "rejected";
      }
      break;
    case "settlement":
      next.phase = "settled";
      next.payout = msg.payout;
      break;
    case "settlement_summary":
      next.phase = "settled";
      next.payouts = msg.payouts;
      break;
    case "delta_d":
      next.deltaD.push(toDeltaPoint(msg));
      break;
  }
  return next;
}

export function toDeltaPoint(msg: DeltaDMsg): DeltaPoint {
  return {
    period: msg.period,
    dPlus: msg.d_plus,
    dMinus: msg.d_minus,
    deltaD: msg.delta_d,
    prediction: msg.prediction,
  };
}

export function currentPrediction(state: SessionState): DeltaPoint | null {
  const last = state.deltaD[state.deltaD.length - 1];
  return last && last.prediction ? last : null;
}

// Whole seconds left on the clock, never past the server deadline.
export function countdownSeconds(state: SessionState, nowMs: number): number {
  if (state.deadlineMs === null) return 0;
  return Math.max(0, Math.floor((state.deadlineMs - nowMs) / 1000));
}

export function canOrder(state: SessionState, nowMs: number): boolean {
  return (
    state.phase === "running" &&
    state.orderStatus === "none" &&
    state.deadlineMs !== null &&
    nowMs <= state.deadlineMs
  );
}
