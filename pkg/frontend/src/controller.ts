import type { ReviewApi } from "./api.js";
import type { Decision, PairView } from "./types.js";

interface HistoryEntry {
  pair: PairView;
  decision: Decision;
  previous: Decision | null; // what this session had submitted before, if anything
}

interface PendingSubmission {
  pairId: string;
  decision: Decision;
}

/** Screening state for one annotator in one browser session.
 *
 * The queue is exactly the server's order (no client-side filtering). A
 * decision advances optimistically; failed submissions are retained in a
 * retry queue and flushed before anything else is sent, so nothing is ever
 * dropped. Undo re-submits the overwritten decision when there was one;
 * a first-time decision has no previous server state to restore, so the pair
 * is only re-queued locally for re-decision.
 */
export class ScreeningController {
  private queue: PairView[] = [];
  private history: HistoryEntry[] = [];
  private pending: PendingSubmission[] = [];
  private submitted = new Map<string, Decision>();
  decided = 0;
  total = 0;

  constructor(
    private readonly api: ReviewApi,
    readonly sessionId: string,
    readonly annotator: string,
  ) {}

  current(): PairView | null {
    return this.queue[0] ?? null;
  }

  remaining(): number {
    return this.queue.length;
  }

  queueSnapshot(): readonly PairView[] {
    return this.queue;
  }

  pendingCount(): number {
    return this.pending.length;
  }

  isComplete(): boolean {
    return this.total > 0 && this.decided >= this.total && this.pending.length === 0;
  }

  /** Re-sync with the server (flushing any retained submissions first). */
  async refresh(): Promise<void> {
    await this.flushPending();
    const view = await this.api.queue(this.sessionId, this.annotator);
    this.queue = view.pairs;
    this.decided = view.decided;
    this.total = view.total;
  }

  private async submit(pairId: string, decision: Decision): Promise<void> {
    try {
      await this.api.submitDecision(this.annotator, pairId, decision);
      this.submitted.set(pairId, decision);
    } catch (err) {
      this.pending.push({ pairId, decision });
      throw err;
    }
  }

  async flushPending(): Promise<void> {
    while (this.pending.length > 0) {
      const next = this.pending[0]!;
      await this.api.submitDecision(this.annotator, next.pairId, next.decision);
      this.submitted.set(next.pairId, next.decision);
      this.pending.shift();
    }
  }

  /** Decide the currently displayed pair and advance. */
  async decide(decision: Decision): Promise<void> {
    const pair = this.current();
    if (pair === null) return;
    const previous = this.submitted.get(pair.pair_id) ?? null;
    this.history.push({ pair, decision, previous });
    this.queue.shift();
    this.decided += 1;
    try {
      await this.flushPending();
      await this.submit(pair.pair_id, decision);
    } catch {
      // retained in the retry queue; state already advanced optimistically
    }
  }

  /** Undo the most recent decision of this session. */
  async undoLast(): Promise<void> {
    const entry = this.history.pop();
    if (entry === undefined) return;
    this.queue.unshift(entry.pair);
    this.decided -= 1;
    this.pending = this.pending.filter((p) => p.pairId !== entry.pair.pair_id);
    if (entry.previous !== null) {
      try {
        await this.submit(entry.pair.pair_id, entry.previous);
      } catch {
        // retained for retry
      }
    }
  }
}
