/**
 * Session flow, independent of the DOM: fetch the next blinded pair, submit
 * a choice, advance. One in-flight request at a time; a conflict (the pair
 * was judged elsewhere) skips forward with a notice instead of failing.
 */

import { GatewayClient, GatewayError } from "./api.js";
import { Choice, JudgePair } from "./schema.js";

export type JudgeState =
  | { kind: "loading" }
  | {
      kind: "judging";
      pair: JudgePair;
      judged: number;
      totalJudgeable: number;
      notice?: string;
    }
  | { kind: "done"; judged: number; totalJudgeable: number }
  | { kind: "error"; message: string };

export class JudgeController {
  private state: JudgeState = { kind: "loading" };
  private inFlight = false;
  private listeners: Array<(s: JudgeState) => void> = [];

  constructor(
    private readonly client: GatewayClient,
    private readonly sessionId: string,
  ) {}

  getState(): JudgeState {
    return this.state;
  }

  subscribe(fn: (s: JudgeState) => void): void {
    this.listeners.push(fn);
    fn(this.state);
  }

  private setState(s: JudgeState): void {
    this.state = s;
    for (const fn of this.listeners) fn(s);
  }

  /** Load (or reload) the next unjudged pair. */
  async refresh(notice?: string): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      const next = await this.client.next(this.sessionId);
      if (next.done) {
        this.setState({
          kind: "done",
          judged: next.judged,
          totalJudgeable: next.total_judgeable,
        });
      } else {
        this.setState({
          kind: "judging",
          pair: next.pair,
          judged: next.judged,
          totalJudgeable: next.total_judgeable,
          notice,
        });
      }
    } catch (err) {
      this.setState({ kind: "error", message: String(err) });
    } finally {
      this.inFlight = false;
    }
  }

  /** Submit a choice for the displayed pair, then advance. */
  async submit(choice: Choice): Promise<void> {
    if (this.state.kind !== "judging" || this.inFlight) return;
    const pairId = this.state.pair.pair_id;
    this.inFlight = true;
    let notice: string | undefined;
    try {
      await this.client.judge(this.sessionId, pairId, choice);
    } catch (err) {
      if (err instanceof GatewayError && err.status === 409) {
        notice = `pair ${pairId} was already judged elsewhere; skipped`;
      } else {
        this.setState({ kind: "error", message: String(err) });
        this.inFlight = false;
        return;
      }
    } finally {
      this.inFlight = false;
    }
    await this.refresh(notice);
  }
}
