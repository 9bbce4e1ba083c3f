"""Read-only HTTP API over a loaded model bundle.

The service holds one immutable ModelBundle and answers ingredient and
recommendation queries for the recipe-builder UI. No request mutates the
model, so concurrent handling needs no locking. Requests speak ingredient
names, not ids; unresolvable names are echoed back in ``unknown``.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .bundle import ModelBundle
from .recommender import PartialRecipe, recommend


class IngredientEntry(BaseModel):
    name: str
    count: int


class RecommendRequest(BaseModel):
    ingredients: list[str] = Field(min_length=1)
    n: int = Field(default=10, ge=1, le=50)
    ignore_unknown: bool = True


class RecommendationItem(BaseModel):
    name: str
    fit: float
    rank: int


class RecommendResponse(BaseModel):
    recommendations: list[RecommendationItem]
    resolved: list[str]
    unknown: list[str]


class HealthResponse(BaseModel):
    status: str
    bundle: dict | None = None


def published_schemas() -> dict[str, dict]:
    """JSON schemas for the API payloads, as shipped under schemas/.

    A repo test keeps the shipped files in sync with these definitions.
    """
    draft = {"$schema": "https://json-schema.org/draft/2020-12/schema"}
    return {
        "recommend_request": {**draft, **RecommendRequest.model_json_schema()},
        "recommend_response": {**draft, **RecommendResponse.model_json_schema()},
        "ingredients_response": {**draft, "title": "IngredientsResponse",
                                 "type": "array",
                                 "items": IngredientEntry.model_json_schema()},
        "health_response": {**draft, **HealthResponse.model_json_schema()},
    }


def create_app(bundle: ModelBundle | None = None,
               static_dir: str | Path | None = None,
               allow_origins: tuple[str, ...] = ()) -> FastAPI:
    """Build the API app around one (already loaded) model bundle.

    ``bundle=None`` models the not-yet-loaded startup window: every API
    endpoint answers 503 until a bundle is attached to ``app.state``.
    """
    app = FastAPI(title="souschef", docs_url="/api/docs", openapi_url="/api/openapi.json")
    app.state.bundle = bundle

    if allow_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(allow_origins),
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    @app.exception_handler(RequestValidationError)
    async def _invalid_request(request: Request, exc: RequestValidationError):
        # Malformed bodies and out-of-range fields are client errors, not
        # unprocessable entities: answer 400.
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def _bundle() -> ModelBundle | None:
        return app.state.bundle

    @app.get("/api/health", response_model=HealthResponse,
             responses={503: {"model": HealthResponse}})
    async def health():
        bundle = _bundle()
        if bundle is None:
            return JSONResponse(status_code=503,
                                content={"status": "loading", "bundle": None})
        return HealthResponse(status="ok", bundle=bundle.manifest_summary())

    @app.get("/api/ingredients", response_model=list[IngredientEntry])
    async def ingredients():
        bundle = _bundle()
        if bundle is None:
            return JSONResponse(status_code=503,
                                content={"status": "loading", "bundle": None})
        vocab = bundle.vocabulary
        entries = sorted(zip(vocab.names, vocab.counts),
                         key=lambda kv: (-kv[1], kv[0]))
        return [IngredientEntry(name=name, count=count) for name, count in entries]

    @app.post("/api/recommend", response_model=RecommendResponse,
              responses={422: {"description": "no resolvable ingredients"}})
    async def recommend_endpoint(request: RecommendRequest):
        bundle = _bundle()
        if bundle is None:
            return JSONResponse(status_code=503,
                                content={"status": "loading", "bundle": None})
        vocab = bundle.vocabulary
        ids, unknown = vocab.resolve(request.ingredients)
        if unknown and not request.ignore_unknown:
            return JSONResponse(
                status_code=422,
                content={"detail": "unknown ingredients", "unknown": unknown})
        if not ids:
            return JSONResponse(
                status_code=422,
                content={"detail": "no resolvable ingredients", "unknown": unknown})
        recipe = PartialRecipe.from_ids(ids)
        recs = recommend(bundle.model, vocab, recipe, request.n)
        return RecommendResponse(
            recommendations=[RecommendationItem(name=r.name, fit=r.fit, rank=r.rank)
                             for r in recs],
            resolved=[vocab.names[i] for i in ids],
            unknown=unknown,
        )

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
