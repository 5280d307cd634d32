// Wire protocol of the session server. Money travels as 4-decimal strings
// and must be displayed verbatim; the client never recomputes market values.

export type OrderAction = "buy" | "sell" | "hold";

export interface NewsWire {
  period: number;
  headline: string;
  body: string;
  tag: "neutral" | "positive" | "negative";
}

export interface AccountWire {
  shares: number;
  cash: string;
  pnl: string;
}

export interface JoinedMsg {
  type: "joined";
  name: string;
  participant: number;
  capacity: number;
  joined: number;
}

export interface LobbyMsg {
  type: "lobby";
  joined: number;
  capacity: number;
}

export interface PeriodOpenMsg {
  type: "period_open";
  period: number;
  deadline_ms: number;
  price: string;
  news: NewsWire;
}

export interface PeriodCloseMsg {
  type: "period_close";
  period: number;
  imbalance: number;
  price: string;
  account?: AccountWire;
}

export interface OrderAckMsg {
  type: "order_ack";
  period: number;
  action: OrderAction;
}

export interface SettlementMsg {
  type: "settlement";
  payout: string;
}

export interface SettlementSummaryMsg {
  type: "settlement_summary";
  payouts: Record<string, string>;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  message: string;
}

export interface DeltaDMsg {
  type: "delta_d";
  period: number;
  d_plus: number;
  d_minus: number;
  delta_d: number;
  prediction: "up" | "down" | null;
}

export type ServerMsg =
  | JoinedMsg
  | LobbyMsg
  | PeriodOpenMsg
  | PeriodCloseMsg
  | OrderAckMsg
  | SettlementMsg
  | SettlementSummaryMsg
  | ErrorMsg
  | DeltaDMsg;

export interface JoinClientMsg {
  type: "join";
  name: string;
}

export interface OrderClientMsg {
  type: "order";
  period: number;
  action: OrderAction;
}

export type ClientMsg = JoinClientMsg | OrderClientMsg;
