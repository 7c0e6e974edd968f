// Request discipline for the what-if loop: edits debounce into at most
// one request per settled burst, every request carries a sequence
// number, and a response paints only if nothing newer has painted.

export const DEBOUNCE_MS = 300;

export interface RecalcEvents<Res> {
  onResult(result: Res, seq: number): void;
  onError(error: unknown, seq: number): void;
  onPending?(seq: number): void;
}

export class RecalcController<Req, Res> {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private issued = 0; // newest sequence handed to the transport
  private applied = 0; // newest sequence whose result painted
  public requestCount = 0;

  constructor(
    private readonly send: (req: Req) => Promise<Res>,
    private readonly events: RecalcEvents<Res>,
    private readonly debounceMs: number = DEBOUNCE_MS,
  ) {}

  // Debounced entry point: called on every form edit.
  edit(req: Req): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      this.fire(req);
    }, this.debounceMs);
  }

  // Immediate entry point for the initial render and explicit retry.
  submit(req: Req): void {
    if (this.timer !== null) {
      clearTimeout(this.timer); // the pending edit is superseded
      this.timer = null;
    }
    this.fire(req);
  }

  private fire(req: Req): void {
    const seq = ++this.issued;
    this.requestCount += 1;
    this.events.onPending?.(seq);
    this.send(req).then(
      (res) => {
        if (seq <= this.applied) {
          return; // a newer response already painted; drop this one
        }
        this.applied = seq;
        this.events.onResult(res, seq);
      },
      (err) => {
        if (seq <= this.applied || seq < this.issued) {
          return; // superseded failure, nothing useful to report
        }
        this.events.onError(err, seq);
      },
    );
  }
}
