import asyncio
import json
import logging
from pathlib import Path
from typing import Any, Dict, List

from fastapi import Depends, FastAPI, HTTPException, Query, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .config import Settings, get_settings
from .services.orchestrator import RunMetrics, replay
from .storage.event_log import EventRecord, read_records

logger = logging.getLogger(__name__)

settings = get_settings()
app = FastAPI(title=settings.app_name)

# Read-only API: no credentials, any origin may look.
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["GET"],
    allow_headers=["*"],
)

FOLLOW_POLL_SECONDS = 0.5


class RunSummary(BaseModel):
    run_id: str
    goal: str = ""
    status: str = "running"
    records: int = 0


class RunProgress(BaseModel):
    run_id: str
    status: str
    markdown: str
    metrics: RunMetrics


def _run_dir(run_id: str, settings: Settings) -> Path:
    root = Path(settings.runs_dir).resolve()
    candidate = (root / run_id).resolve()
    if candidate.parent != root or not (candidate / "events.jsonl").is_file():
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"run '{run_id}' not found")
    return candidate


def _summary(run_dir: Path) -> RunSummary:
    records = read_records(run_dir / "events.jsonl")
    summary = RunSummary(run_id=run_dir.name, records=len(records))
    for record in records:
        if record.type == "PlanInitialized":
            summary.goal = record.payload.get("goal", "")
        elif record.type == "RunFinished":
            summary.status = record.payload.get("status", "finished")
    return summary


@app.get("/")
def root():
    return {"status": f"{settings.app_name} API is live"}


@app.get("/api/v1/runs", response_model=List[RunSummary])
def list_runs(settings: Settings = Depends(get_settings)) -> List[RunSummary]:
    root = Path(settings.runs_dir)
    if not root.is_dir():
        return []
    return [_summary(path) for path in sorted(root.iterdir()) if (path / "events.jsonl").is_file()]


@app.get("/api/v1/runs/{run_id}/progress", response_model=RunProgress)
def run_progress(run_id: str, settings: Settings = Depends(get_settings)) -> RunProgress:
    result = replay(read_records(_run_dir(run_id, settings) / "events.jsonl"))
    return RunProgress(
        run_id=run_id,
        status=result.status or "running",
        markdown=result.markdown,
        metrics=result.metrics,
    )


@app.get("/api/v1/runs/{run_id}/events", response_model=List[EventRecord])
def run_events(
    run_id: str,
    after: int = Query(0, ge=0),
    settings: Settings = Depends(get_settings),
) -> List[EventRecord]:
    return read_records(_run_dir(run_id, settings) / "events.jsonl", after=after)


@app.get("/api/v1/runs/{run_id}/events/stream")
async def stream_run_events(
    run_id: str,
    request: Request,
    after: int = Query(0, ge=0),
    follow: bool = False,
    settings: Settings = Depends(get_settings),
):
    path = _run_dir(run_id, settings) / "events.jsonl"
    logger.info(f"[SSE] Client streaming {run_id} from seq {after} (follow={follow})")

    async def event_generator():
        last_seq = after
        while True:
            finished = False
            for record in read_records(path, after=last_seq):
                last_seq = record.seq
                finished = finished or record.type == "RunFinished"
                payload: Dict[str, Any] = record.model_dump(mode="json")
                yield f"id: {record.seq}\nevent: {record.type}\ndata: {json.dumps(payload, sort_keys=True)}\n\n"
            if finished or not follow or await request.is_disconnected():
                break
            await asyncio.sleep(FOLLOW_POLL_SECONDS)

    return StreamingResponse(
        event_generator(),
        media_type="text/event-stream",
        headers={
            "Cache-Control": "no-cache",
            "Connection": "keep-alive",
            "X-Accel-Buffering": "no",  # Disable nginx buffering
        },
    )
