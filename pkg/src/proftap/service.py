"""HTTP judging service.

Serves poems blindly: a judge authenticates with an access token, pulls
one poem at a time in their private order, and posts a probability that
the poem is human-authored. Payloads to judges carry exactly
``{poem_id, title, body, progress}``; authorship never crosses the wire.

Endpoints (all JSON unless noted), versioned under ``/api/v1``:

* ``POST /api/v1/session``  {token} -> judge session summary
* ``GET  /api/v1/next``     next unrated poem, 204 when done
* ``POST /api/v1/rating``   {poem_id, probability}
* ``GET  /api/v1/progress`` {rated, total}
* ``GET  /api/v1/export``   admin only, ratings as CSV
* ``GET  /api/v1/plan``     admin only, the assignment plan
* ``POST /api/v1/plan``     admin only, replace plan/pool/judges
* ``POST /api/v1/void``     admin only, discard a rating for re-judging
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException, Response
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import DuplicateRatingError, RatingError
from .judging import AssignmentPlan, Judge, RatingStore, export_csv


@dataclass
class PoolPoem:
    poem_id: str
    title: str
    body: str


@dataclass
class ServiceState:
    poems: dict[str, PoolPoem]
    plan: AssignmentPlan
    judges: list[Judge]
    admin_token: str
    store: RatingStore
    lock: threading.RLock = field(default_factory=threading.RLock)

    def __post_init__(self) -> None:
        self.judges_by_token = {j.access_token: j for j in self.judges}
        missing = self.plan.poem_ids() - set(self.poems)
        if missing:
            raise ValueError(f"plan references poems not in pool: {sorted(missing)[:5]}")

    def replace(self, poems: dict[str, PoolPoem], plan: AssignmentPlan, judges: list[Judge]) -> None:
        with self.lock:
            self.poems = poems
            self.plan = plan
            self.judges = judges
            self.judges_by_token = {j.access_token: j for j in judges}
            self.store.plan = plan


def load_run_state(run_dir: str | Path) -> ServiceState:
    """Build service state from a run directory written by the pipeline."""
    run_dir = Path(run_dir)
    poems: dict[str, PoolPoem] = {}
    for raw in (run_dir / "pool.jsonl").read_text(encoding="utf-8").splitlines():
        if not raw.strip():
            continue
        row = json.loads(raw)
        poems[row["poem_id"]] = PoolPoem(row["poem_id"], row["title"], row["body"])
    plan = AssignmentPlan.from_json(json.loads((run_dir / "plan.json").read_text(encoding="utf-8")))
    judges_data = json.loads((run_dir / "judges.json").read_text(encoding="utf-8"))
    judges = [
        Judge(j["judge_id"], j["access_token"], j.get("display_name"))
        for j in judges_data["judges"]
    ]
    store = RatingStore(plan=plan, log_path=run_dir / "ratings.jsonl")
    return ServiceState(
        poems=poems,
        plan=plan,
        judges=judges,
        admin_token=judges_data["admin_token"],
        store=store,
    )


class SessionRequest(BaseModel):
    token: str


class RatingRequest(BaseModel):
    poem_id: str
    probability: float


class PlanUpload(BaseModel):
    plan: dict
    poems: list[dict]
    judges: list[dict]
    admin_token: str | None = None


class VoidRequest(BaseModel):
    judge_id: str
    poem_id: str


def _progress(state: ServiceState, judge_id: str) -> dict:
    assigned = state.plan.assignments.get(judge_id, [])
    rated = state.store.rated_by(judge_id)
    return {"rated": len([p for p in assigned if p in rated]), "total": len(assigned)}


def create_app(state: ServiceState, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="proftap judging service")

    def current_judge(authorization: str = Header(default="")) -> Judge:
        token = authorization.removeprefix("Bearer ").strip()
        judge = state.judges_by_token.get(token)
        if judge is None:
            raise HTTPException(status_code=401, detail="unknown access token")
        return judge

    def require_admin(authorization: str = Header(default="")) -> None:
        token = authorization.removeprefix("Bearer ").strip()
        if token != state.admin_token:
            raise HTTPException(status_code=401, detail="admin token required")

    @app.post("/api/v1/session")
    def open_session(req: SessionRequest):
        judge = state.judges_by_token.get(req.token)
        if judge is None:
            raise HTTPException(status_code=401, detail="unknown access token")
        return {
            "judge_id": judge.judge_id,
            "display_name": judge.display_name,
            "progress": _progress(state, judge.judge_id),
        }

    @app.get("/api/v1/next")
    def next_poem(judge: Judge = Depends(current_judge)):
        with state.lock:
            rated = state.store.rated_by(judge.judge_id)
            for poem_id in state.plan.assignments.get(judge.judge_id, []):
                if poem_id in rated:
                    continue
                poem = state.poems[poem_id]
                return {
                    "poem_id": poem.poem_id,
                    "title": poem.title,
                    "body": poem.body,
                    "progress": _progress(state, judge.judge_id),
                }
        return Response(status_code=204)

    @app.post("/api/v1/rating", status_code=201)
    def submit_rating(req: RatingRequest, judge: Judge = Depends(current_judge)):
        if not (0.0 <= req.probability <= 1.0):
            raise HTTPException(
                status_code=422,
                detail=f"probability {req.probability} outside [0, 1]",
            )
        with state.lock:
            assigned = state.plan.assignments.get(judge.judge_id, [])
            if req.poem_id not in assigned:
                raise HTTPException(status_code=404, detail="poem not assigned to you")
            try:
                state.store.record(judge.judge_id, req.poem_id, req.probability)
            except DuplicateRatingError:
                raise HTTPException(status_code=409, detail="already rated")
            except RatingError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            return {"status": "recorded", "progress": _progress(state, judge.judge_id)}

    @app.get("/api/v1/progress")
    def progress(judge: Judge = Depends(current_judge)):
        return _progress(state, judge.judge_id)

    @app.get("/api/v1/export", response_class=PlainTextResponse)
    def export(_: None = Depends(require_admin)):
        with state.lock:
            return export_csv(state.store.records())

    @app.get("/api/v1/plan")
    def get_plan(_: None = Depends(require_admin)):
        return state.plan.to_json()

    @app.post("/api/v1/void")
    def void_rating(req: VoidRequest, _: None = Depends(require_admin)):
        with state.lock:
            if not state.store.void(req.judge_id, req.poem_id):
                raise HTTPException(status_code=404, detail="no such rating")
        return {"status": "voided"}

    @app.post("/api/v1/plan")
    def upload_plan(payload: PlanUpload, _: None = Depends(require_admin)):
        plan = AssignmentPlan.from_json(payload.plan)
        poems = {
            p["poem_id"]: PoolPoem(p["poem_id"], p["title"], p["body"])
            for p in payload.poems
        }
        judges = [
            Judge(j["judge_id"], j["access_token"], j.get("display_name"))
            for j in payload.judges
        ]
        missing = plan.poem_ids() - set(poems)
        if missing:
            raise HTTPException(status_code=422, detail="plan references unknown poems")
        state.replace(poems, plan, judges)
        return {"status": "replaced", "poems": len(poems), "judges": len(judges)}

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
