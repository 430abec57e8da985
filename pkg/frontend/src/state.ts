/** Per-tab session: selections plus an append-only chat history. */

export interface ChatExchange {
  query: string;
  pipeline: string;
  model: string;
  answer: string;
  grounding: string[];
}

export class UiSession {
  readonly sessionId: string;
  pipeline = "advanced";
  model = "";
  private exchanges: ChatExchange[] = [];

  constructor() {
    this.sessionId = `s-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 8)}`;
  }

  /** History is append-only; callers get a snapshot. */
  get history(): readonly ChatExchange[] {
    return [...this.exchanges];
  }

  append(exchange: ChatExchange): void {
    this.exchanges.push(exchange);
  }
}

const RATER_KEY = "studyforge.rater_id";
let raterFallback = "";

export function loadRaterId(): string {
  try {
    return window.localStorage.getItem(RATER_KEY) ?? raterFallback;
  } catch {
    return raterFallback;
  }
}

export function saveRaterId(raterId: string): void {
  raterFallback = raterId;
  try {
    window.localStorage.setItem(RATER_KEY, raterId);
  } catch {
    // storage unavailable: keep the in-memory fallback
  }
}
