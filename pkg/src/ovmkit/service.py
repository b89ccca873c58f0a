"""HTTP service exposing the engine: model storage, derivation, analysis,
interactive sessions, and workflow resolution.

Stored models are immutable; derivation outputs are registered as new models.
Session operations are serialized per session; everything else runs
concurrently.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import analysis, dsl, workflow
from .configurator import (
    ConfiguratorSession,
    Decision,
    SessionError,
    TenantConfiguration,
    complete,
    decide,
    new_session,
    retract,
)
from .derivation import CustomizationModel, DerivationError, DerivationTrace, DeveloperBinding, derive
from .model import VariabilityModel, has_errors, well_formed


@dataclass
class StoredModel:
    id: str
    model: VariabilityModel
    source_text: str
    cm: Optional[CustomizationModel] = None
    trace: Optional[DerivationTrace] = None
    source: Optional[VariabilityModel] = None  # model the cm was derived from


@dataclass
class SessionSlot:
    id: str
    session: ConfiguratorSession
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.monotonic)


class ModelStore:
    """In-memory store with monotonically increasing ids and optional
    directory snapshots on shutdown."""

    def __init__(self, state_dir: Optional[str] = None, session_ttl: float = 3600.0):
        self._lock = threading.Lock()
        self.models: dict[str, StoredModel] = {}
        self.sessions: dict[str, SessionSlot] = {}
        self._model_seq = 0
        self._session_seq = 0
        self.session_ttl = session_ttl
        self.state_dir = Path(state_dir) if state_dir else None

    def add_model(self, model: VariabilityModel, text: str, **extra) -> StoredModel:
        with self._lock:
            self._model_seq += 1
            entry = StoredModel(f"m{self._model_seq}", model, text, **extra)
            self.models[entry.id] = entry
            return entry

    def add_session(self, session: ConfiguratorSession) -> SessionSlot:
        with self._lock:
            self._session_seq += 1
            slot = SessionSlot(f"s{self._session_seq}", session)
            self.sessions[slot.id] = slot
            return slot

    def get_session(self, session_id: str) -> Optional[SessionSlot]:
        slot = self.sessions.get(session_id)
        if slot is None:
            return None
        now = time.monotonic()
        if now - slot.last_access > self.session_ttl:
            self.sessions.pop(session_id, None)
            return None
        slot.last_access = now
        return slot

    def load_snapshot(self) -> None:
        if not self.state_dir or not self.state_dir.is_dir():
            return
        for path in sorted(self.state_dir.glob("*.ovm")):
            try:
                text = path.read_text(encoding="utf-8")
                model = dsl.parse(text)
            except (OSError, dsl.ParseFailure):
                continue
            if not has_errors(well_formed(model)):
                self.add_model(model, text)

    def write_snapshot(self) -> None:
        if not self.state_dir:
            return
        self.state_dir.mkdir(parents=True, exist_ok=True)
        for entry in self.models.values():
            (self.state_dir / f"{entry.id}.ovm").write_text(
                dsl.serialize(entry.model), encoding="utf-8"
            )


class BindingBody(BaseModel):
    bindings: dict[str, list[str]]


class SessionBody(BaseModel):
    model: str


class DecisionBody(BaseModel):
    cp: str
    variant: str
    value: str


class RetractBody(BaseModel):
    cp: str
    variant: str


class ResolveBody(BaseModel):
    workflow: dict
    config: Optional[dict] = None


def _diag_payload(diags) -> dict:
    return {"diagnostics": [d.to_json() for d in diags]}


def session_state(slot: SessionSlot) -> dict:
    session = slot.session
    model = session.cm.model
    decisions = []
    for vp in model.vps:
        for e in vp.edges():
            decisions.append(
                {
                    "cp": vp.id,
                    "variant": e.variant_id,
                    "value": session.value(vp.id, e.variant_id).value,
                    "forced": session.is_forced(vp.id, e.variant_id),
                }
            )
    groups = []
    for vp in model.vps:
        if vp.group is not None:
            members = {e.variant_id for e in vp.group.members}
            selected = sum(
                1
                for v in members
                if session.value(vp.id, v) is Decision.SELECTED
            )
            groups.append({"cp": vp.id, "min": vp.group.min, "max": vp.group.max, "selected": selected})
    cps = [
        {
            "id": vp.id,
            "layer": vp.layer.value,
            "variants": [
                {"id": e.variant_id, "kind": e.kind.value, "guard": e.guard} for e in vp.edges()
            ],
        }
        for vp in model.vps
    ]
    return {
        "id": slot.id,
        "model": model.name,
        "mode": session.mode,
        "conflict": session.conflict,
        "decisions": decisions,
        "groups": groups,
        "cps": cps,
    }


def _customization_of(entry: StoredModel) -> Optional[CustomizationModel]:
    if entry.cm is not None:
        return entry.cm
    if entry.model.internal_vps():
        return None
    return CustomizationModel(entry.model, entry.model.name, DeveloperBinding(()))


def create_app(store: ModelStore, ui_dir: Optional[str] = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        store.write_snapshot()

    app = FastAPI(title="ovm", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.store = store
    store.load_snapshot()

    @app.post("/models")
    async def create_model(request: Request):
        text = (await request.body()).decode("utf-8")
        try:
            model = dsl.parse(text)
        except dsl.ParseFailure as exc:
            return JSONResponse({"errors": [e.to_json() for e in exc.errors]}, status_code=400)
        diags = well_formed(model)
        if has_errors(diags):
            return JSONResponse(_diag_payload(diags), status_code=422)
        entry = store.add_model(model, text)
        return JSONResponse(
            {"id": entry.id, "diagnostics": [d.to_json() for d in diags]}, status_code=201
        )

    @app.get("/models/{model_id}")
    def get_model(model_id: str):
        entry = store.models.get(model_id)
        if entry is None:
            return JSONResponse({"error": f"no model '{model_id}'"}, status_code=404)
        return PlainTextResponse(dsl.serialize(entry.model))

    @app.post("/models/{model_id}/derive")
    def derive_model(model_id: str, body: BindingBody):
        entry = store.models.get(model_id)
        if entry is None:
            return JSONResponse({"error": f"no model '{model_id}'"}, status_code=404)
        binding = DeveloperBinding.of(body.bindings)
        try:
            cm, trace = derive(entry.model, binding)
        except DerivationError as exc:
            return JSONResponse(_diag_payload(exc.diagnostics), status_code=422)
        derived = store.add_model(
            cm.model, dsl.serialize(cm.model), cm=cm, trace=trace, source=entry.model
        )
        return {"id": derived.id, "trace": trace.to_json()}

    @app.get("/models/{model_id}/analysis")
    def analyze_model(model_id: str):
        entry = store.models.get(model_id)
        if entry is None:
            return JSONResponse({"error": f"no model '{model_id}'"}, status_code=404)
        try:
            return analysis.report(entry.cm if entry.cm else entry.model)
        except analysis.UnsupportedModelError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)

    @app.post("/sessions")
    def create_session(body: SessionBody):
        entry = store.models.get(body.model)
        if entry is None:
            return JSONResponse({"error": f"no model '{body.model}'"}, status_code=404)
        cm = _customization_of(entry)
        if cm is None:
            return JSONResponse(
                {"error": f"model '{body.model}' still has internal VPs; derive it first"},
                status_code=422,
            )
        try:
            session = new_session(cm)
        except SessionError as exc:
            return JSONResponse({"code": exc.code, "error": exc.message}, status_code=422)
        slot = store.add_session(session)
        return JSONResponse({"id": slot.id, "state": session_state(slot)}, status_code=201)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        slot = store.get_session(session_id)
        if slot is None:
            return JSONResponse({"error": f"no session '{session_id}'"}, status_code=404)
        return session_state(slot)

    @app.post("/sessions/{session_id}/decisions")
    def post_decision(session_id: str, body: DecisionBody):
        slot = store.get_session(session_id)
        if slot is None:
            return JSONResponse({"error": f"no session '{session_id}'"}, status_code=404)
        if body.value not in (Decision.SELECTED.value, Decision.DESELECTED.value):
            return JSONResponse({"error": "value must be selected or deselected"}, status_code=400)
        with slot.lock:
            try:
                session, report = decide(slot.session, body.cp, body.variant, Decision(body.value))
            except SessionError as exc:
                return JSONResponse({"code": exc.code, "error": exc.message}, status_code=409)
            slot.session = session
            return {
                "conflict": report.conflict,
                "forced": [
                    {"cp": cp, "variant": variant, "value": value.value}
                    for (cp, variant), value in report.forced
                ],
                "state": session_state(slot),
            }

    @app.delete("/sessions/{session_id}/decisions")
    def delete_decision(session_id: str, body: RetractBody):
        slot = store.get_session(session_id)
        if slot is None:
            return JSONResponse({"error": f"no session '{session_id}'"}, status_code=404)
        with slot.lock:
            try:
                slot.session = retract(slot.session, body.cp, body.variant)
            except SessionError as exc:
                return JSONResponse({"code": exc.code, "error": exc.message}, status_code=409)
            return {"state": session_state(slot)}

    @app.post("/sessions/{session_id}/validate")
    def validate_session(session_id: str):
        slot = store.get_session(session_id)
        if slot is None:
            return JSONResponse({"error": f"no session '{session_id}'"}, status_code=404)
        with slot.lock:
            cfg, diags = complete(slot.session)
        return {
            "configuration": cfg.to_json() if cfg else None,
            "diagnostics": [d.to_json() for d in diags],
        }

    @app.post("/models/{model_id}/workflow/resolve")
    def resolve(model_id: str, body: ResolveBody):
        entry = store.models.get(model_id)
        if entry is None:
            return JSONResponse({"error": f"no model '{model_id}'"}, status_code=404)
        cm = _customization_of(entry)
        if cm is None:
            return JSONResponse(
                {"error": f"model '{model_id}' still has internal VPs; derive it first"},
                status_code=422,
            )
        trace = entry.trace if entry.trace is not None else DerivationTrace(())
        try:
            graph = workflow.load_graph(body.workflow)
        except workflow.GraphFormatError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        source = entry.source if entry.source is not None else entry.model
        diags = workflow.validate_workflow(graph, source)
        if diags:
            return JSONResponse(_diag_payload(diags), status_code=422)
        try:
            resolved = workflow.resolve_workflow(graph, cm, trace)
            if body.config is not None:
                cfg = TenantConfiguration.from_json(body.config)
                resolved = workflow.apply_configuration(resolved, cfg, cm)
        except workflow.WorkflowError as exc:
            return JSONResponse(_diag_payload(exc.diagnostics), status_code=422)
        return {"workflow": workflow.graph_to_json(resolved)}

    ui_path = _find_ui(ui_dir)
    if ui_path is not None:
        app.mount("/ui", StaticFiles(directory=str(ui_path), html=True), name="ui")

    return app


def _find_ui(ui_dir: Optional[str]) -> Optional[Path]:
    candidates = []
    if ui_dir:
        candidates.append(Path(ui_dir))
    candidates.append(Path.cwd() / "frontend" / "dist")
    # editable install: src/ovmkit/service.py -> repo root
    candidates.append(Path(__file__).resolve().parents[2] / "frontend" / "dist")
    for path in candidates:
        if (path / "index.html").is_file():
            return path
    return None
