/**
 * Two-phase destructive operations.
 *
 * The confirmed call can only be made with the ticket returned by the
 * preview call, so there is no code path that deletes or merges without
 * first fetching (and presumably showing) the affected-annotations
 * report. The server enforces the same contract; this mirrors it in the
 * type system.
 */

import type { ApiClient, DeleteForwardReport, MergeForwardReport } from "./api.js";
import type { SessionState } from "./state.js";

export interface DeleteTicket {
  readonly kind: "delete-forward";
  readonly ids: number[];
  readonly fromIndex: number;
  readonly report: DeleteForwardReport["report"];
}

export interface MergeTicket {
  readonly kind: "merge-forward";
  readonly keepId: number;
  readonly absorbId: number;
  readonly fromIndex: number;
  readonly report: MergeForwardReport["report"];
}

export class DestructiveFlows {
  constructor(
    private api: ApiClient,
    private state: SessionState,
    private pid: string,
  ) {}

  async previewDeleteForward(ids: number[], fromIndex: number): Promise<DeleteTicket> {
    const response = await this.api.deleteForward(this.pid, ids, fromIndex, false);
    return { kind: "delete-forward", ids, fromIndex, report: response.report };
  }

  async confirmDeleteForward(ticket: DeleteTicket): Promise<void> {
    const response = await this.api.deleteForward(this.pid, ticket.ids, ticket.fromIndex, true);
    if (response.frame) this.state.applyFrame(response.frame);
    if (this.state.selection !== null && ticket.ids.includes(this.state.selection)) {
      this.state.select(null);
    }
  }

  async previewMergeForward(keepId: number, absorbId: number, fromIndex: number): Promise<MergeTicket> {
    const response = await this.api.mergeForward(this.pid, keepId, absorbId, fromIndex, false);
    return { kind: "merge-forward", keepId, absorbId, fromIndex, report: response.report };
  }

  async confirmMergeForward(ticket: MergeTicket): Promise<void> {
    const response = await this.api.mergeForward(
      this.pid,
      ticket.keepId,
      ticket.absorbId,
      ticket.fromIndex,
      true,
    );
    if (response.frame) this.state.applyFrame(response.frame);
  }
}

/** Human-readable modal body quoting the affected annotations. */
export function ticketSummary(ticket: DeleteTicket | MergeTicket): string {
  if (ticket.kind === "delete-forward") {
    const frames = ticket.report.map((r) => r.frame_index);
    return (
      `Deleting ID(s) ${ticket.ids.join(", ")} removes ${ticket.report.length} ` +
      `annotation(s) in frames ${frames.length ? `${Math.min(...frames)}..${Math.max(...frames)}` : "(none)"}.`
    );
  }
  const relabeled = ticket.report.filter((r) => r.action === "relabeled").length;
  const merged = ticket.report.length - relabeled;
  return (
    `Merging ID ${ticket.absorbId} into ${ticket.keepId} re-labels ${relabeled} ` +
    `and unions ${merged} annotation(s); ID ${ticket.absorbId} disappears from frame ` +
    `${ticket.fromIndex} onward.`
  );
}
