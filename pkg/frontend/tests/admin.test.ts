// Dashboard consistency against the live service: everything shown is
// derived from /plan and /export, so totals must agree with the export.

import { describe, expect, it } from "vitest";

import { AdminApi } from "../src/api.js";
import { AdminApp, coverageSummary, judgeProgress, renderDashboard } from "../src/admin.js";
import { serverState } from "./helpers.js";

describe("admin dashboard", () => {
  it("dashboard counts equal export row counts", async () => {
    const state = serverState();
    const admin = new AdminApi(state.baseUrl, state.adminToken);
    const [plan, rows] = await Promise.all([admin.plan(), admin.exportRows()]);
    const judges = judgeProgress(plan, rows);
    const coverage = coverageSummary(plan, rows);

    const totalShownForJudges = judges.reduce((acc, j) => acc + j.rated, 0);
    const totalShownForPoems = coverage.rows.reduce((acc, p) => acc + p.rated, 0);
    expect(totalShownForJudges).toBe(rows.length);
    expect(totalShownForPoems).toBe(rows.length);

    const html = renderDashboard(judges, coverage, admin.exportUrl());
    expect(html).toContain("Download ratings CSV");
    for (const judge of judges) {
      expect(html).toContain(`${judge.rated} / ${judge.assigned}`);
    }
  });

  it("wrong admin token shows an error, not a dashboard", async () => {
    const state = serverState();
    document.body.innerHTML = '<main id="admin-app"></main>';
    const root = document.getElementById("admin-app") as HTMLElement;
    const app = new AdminApp(root, state.baseUrl);
    app.start();
    await app.load("not-the-admin-token");
    expect(document.getElementById("admin-error")!.classList.contains("hidden")).toBe(false);
    expect(root.innerHTML).not.toContain("Collection status");
  });

  it("valid token renders the dashboard into the page", async () => {
    const state = serverState();
    document.body.innerHTML = '<main id="admin-app"></main>';
    const root = document.getElementById("admin-app") as HTMLElement;
    const app = new AdminApp(root, state.baseUrl);
    app.start();
    await app.load(state.adminToken);
    expect(root.innerHTML).toContain("Collection status");
    expect(root.innerHTML).toContain("judge01");
  });
});
