// Transport-agnostic session client: owns the state, enforces the
// one-order-per-period rule on the sending side, and notifies a render
// callback after every applied message.

import type { ClientMsg, OrderAction, ServerMsg } from "./protocol.js";
import {
  SessionState,
  applyMessage,
  canOrder,
  initialState,
} from "./state.js";

export interface Transport {
  send(text: string): void;
  close(): void;
}

export type TransportFactory = (
  onMessage: (text: string) => void,
  onClose: () => void,
) => Transport;

export class SessionClient {
  state: SessionState = initialState();
  ordersSent: ClientMsg[] = [];
  private transport: Transport;
  private readonly onChange: (state: SessionState) => void;
  private readonly clock: () => number;

  constructor(
    factory: TransportFactory,
    onChange: (state: SessionState) => void = () => {},
    clock: () => number = () => Date.now(),
  ) {
    this.onChange = onChange;
    this.clock = clock;
    this.transport = factory(
      (text) => this.handleText(text),
      () => {},
    );
  }

  handleText(text: string): void {
    let msg: ServerMsg;
    try {
      msg = JSON.parse(text) as ServerMsg;
    } catch {
      return;
    }
    this.state = applyMessage(this.state, msg);
    this.onChange(this.state);
  }

  join(name: string): void {
    this.send({ type: "join", name });
  }

  // Returns true when an order message actually went out. Rapid repeat
  // calls within one period send exactly one message: the first call
  // moves the status to "pending" and later calls bail out.
  submitOrder(action: OrderAction): boolean {
    if (!canOrder(this.state, this.clock())) return false;
    this.state = { ...this.state, orderStatus: "pending" };
    this.send({ type: "order", period: this.state.period, action });
    this.onChange(this.state);
    return true;
  }

  private send(msg: ClientMsg): void {
    if (msg.type === "order") this.ordersSent.push(msg);
    this.transport.send(JSON.stringify(msg));
  }

  close(): void {
    this.transport.close();
  }
}

// Browser transport over a native WebSocket; queues sends until open.
export function webSocketTransport(url: string): TransportFactory {
  return (onMessage, onClose) => {
    const ws = new WebSocket(url);
    const pending: string[] = [];
    let open = false;
    ws.onopen = () => {
      open = true;
      for (const text of pending) ws.send(text);
      pending.length = 0;
    };
    ws.onmessage = (event) => onMessage(String(event.data));
    ws.onclose = () => onClose();
    return {
      send(text: string) {
        if (open) ws.send(text);
        else pending.push(text);
      },
      close() {
        ws.close();
      },
    };
  };
}
