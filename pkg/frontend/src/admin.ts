// Admin dashboard: per-judge progress and per-poem coverage against the
// plan's K, derived from the plan plus the ratings export.

import { AdminApi, ExportRow, FetchLike, PlanView } from "./api.js";

export interface JudgeProgressRow {
  judge_id: string;
  rated: number;
  assigned: number;
}

export interface CoverageSummary {
  k_min: number;
  totalPoems: number;
  complete: number; // poems with >= k_min ratings
  rows: { poem_id: string; rated: number; required: number }[];
}

export function judgeProgress(plan: PlanView, rows: ExportRow[]): JudgeProgressRow[] {
  const ratedByJudge = new Map<string, number>();
  for (const row of rows) {
    ratedByJudge.set(row.judge_id, (ratedByJudge.get(row.judge_id) ?? 0) + 1);
  }
  return Object.keys(plan.assignments)
    .sort()
    .map((judgeId) => ({
      judge_id: judgeId,
      rated: ratedByJudge.get(judgeId) ?? 0,
      assigned: plan.assignments[judgeId]?.length ?? 0,
    }));
}

export function coverageSummary(plan: PlanView, rows: ExportRow[]): CoverageSummary {
  const ratedByPoem = new Map<string, number>();
  for (const row of rows) {
    ratedByPoem.set(row.poem_id, (ratedByPoem.get(row.poem_id) ?? 0) + 1);
  }
  const poemIds = Object.keys(plan.coverage).sort();
  const out = poemIds.map((poemId) => ({
    poem_id: poemId,
    rated: ratedByPoem.get(poemId) ?? 0,
    required: plan.k_min,
  }));
  return {
    k_min: plan.k_min,
    totalPoems: poemIds.length,
    complete: out.filter((r) => r.rated >= plan.k_min).length,
    rows: out,
  };
}

export function renderDashboard(
  judges: JudgeProgressRow[],
  coverage: CoverageSummary,
  exportUrl: string,
): string {
  const judgeRows = judges
    .map(
      (j) =>
        `<tr><td>${j.judge_id}</td><td id="judge-${j.judge_id}">${j.rated} / ${j.assigned}</td></tr>`,
    )
    .join("");
  const poemRows = coverage.rows
    .map(
      (p) =>
        `<tr><td>${p.poem_id}</td><td>${p.rated} / ${p.required}</td></tr>`,
    )
    .join("");
  return `
    <section class="card">
      <h1>Collection status</h1>
      <p id="coverage-summary">${coverage.complete} / ${coverage.totalPoems} poems at full ${coverage.k_min}-judge coverage</p>
      <p><a id="export-link" href="${exportUrl}">Download ratings CSV</a></p>
      <h2>Judges</h2>
      <table id="judge-table"><tr><th>Judge</th><th>Progress</th></tr>${judgeRows}</table>
      <h2>Poems</h2>
      <table id="poem-table"><tr><th>Poem</th><th>Ratings</th></tr>${poemRows}</table>
    </section>`;
}

export class AdminApp {
  constructor(
    private readonly root: HTMLElement,
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch,
    private readonly doc: Document = document,
  ) {}

  start(): void {
    this.root.innerHTML = `
      <section class="card" id="admin-login">
        <h1>Admin</h1>
        <input id="admin-token" type="password" placeholder="admin token" />
        <button id="admin-login-btn">Open dashboard</button>
        <p id="admin-error" class="error hidden"></p>
      </section>`;
    this.doc.getElementById("admin-login-btn")?.addEventListener("click", () => {
      const token = (this.doc.getElementById("admin-token") as HTMLInputElement).value.trim();
      void this.load(token);
    });
  }

  async load(token: string): Promise<void> {
    const api = new AdminApi(this.baseUrl, token, this.fetchFn);
    try {
      const [plan, rows] = await Promise.all([api.plan(), api.exportRows()]);
      this.root.innerHTML = renderDashboard(
        judgeProgress(plan, rows),
        coverageSummary(plan, rows),
        api.exportUrl(),
      );
    } catch {
      const err = this.doc.getElementById("admin-error");
      if (err) {
        err.classList.remove("hidden");
        err.textContent = "Not authorized or server unreachable.";
      }
    }
  }
}

export function mountAdminApp(): void {
  const root = document.getElementById("admin-app");
  if (!root) throw new Error("missing #admin-app container");
  new AdminApp(root, "").start();
}

declare global {
  interface Window {
    __PROFTAP_NO_AUTOMOUNT__?: boolean;
  }
}

if (typeof window !== "undefined" && !window.__PROFTAP_NO_AUTOMOUNT__) {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", mountAdminApp);
  } else if (document.getElementById("admin-app")) {
    mountAdminApp();
  }
}
