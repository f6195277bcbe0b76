"""
FastAPI Backend for Scherk Lab
Pure geometric endpoints over the polygon spec format; solves stay on the CLI.
"""

import logging
from datetime import datetime

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from backend.config import config
from backend.exceptions import ScherkLabError
from backend.loaders.polygon_loader import PolygonSpec, PolygonSpecError, parse_polygon_spec
from backend.logging_config import setup_logging
from backend.polygons.admissibility import check_admissible
from backend.polygons.ideal_polygon import TruncationScheme, balance, edge_lengths

setup_logging(log_file="api.log")
logger = logging.getLogger(__name__)

app = FastAPI(
    title="Scherk Lab API",
    description="Truncated edge lengths and admissibility audits of ideal polygons",
    version=config.VERSION,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)


class EdgeLengthsRequest(BaseModel):
    spec: str = Field(..., description="Polygon spec text (curvature / vertex / first_edge lines)")
    level: float = Field(0.0, description="Uniform truncation level")


class AdmissibilityRequest(BaseModel):
    spec: str = Field(..., description="Polygon spec text")
    levels: list[float] = Field(default_factory=lambda: [0.0, -1.0, -2.0, -3.0],
                                description="Uniform truncation levels to search")


def _parse(text: str) -> PolygonSpec:
    try:
        return parse_polygon_spec(text, source="<request>")
    except PolygonSpecError as e:
        logger.warning(f"Rejected polygon spec: {e}")
        raise HTTPException(status_code=400, detail=str(e))


@app.get("/")
async def root():
    """Root endpoint - API information"""
    return {
        "message": "Scherk Lab API",
        "version": config.VERSION,
        "endpoints": {
            "POST /polygon/edge-lengths": "Truncated edge lengths and balance",
            "POST /polygon/admissibility": "Admissibility audit over a level grid",
            "GET /health": "Health check",
        },
    }


@app.get("/health")
async def health_check():
    """Health check endpoint"""
    return {
        "status": "healthy",
        "timestamp": datetime.now().isoformat(),
    }


@app.post("/polygon/edge-lengths")
def polygon_edge_lengths(request: EdgeLengthsRequest):
    """
    Truncated lengths of every edge at a uniform level, scaled by 1/a.

    - **spec**: polygon spec text
    - **level**: Busemann level of every horocycle
    """
    spec = _parse(request.spec)
    poly = spec.polygon
    trunc = TruncationScheme.uniform(poly, request.level)
    scale = 1.0 / spec.curvature
    try:
        lengths = edge_lengths(poly, trunc)
        value = balance(poly, trunc)
    except (ScherkLabError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    return {
        "level": request.level,
        "curvature_scale": spec.curvature,
        "edges": [
            {"index": i, "tag": poly.edge_tag(i), "label": label.value, "length": scale * length}
            for i, (label, length) in enumerate(lengths)
        ],
        "balance": scale * value,
    }


@app.post("/polygon/admissibility")
def polygon_admissibility(request: AdmissibilityRequest):
    """
    Admissibility verdict with the per-inscribed-polygon audit.

    - **spec**: polygon spec text
    - **levels**: grid of uniform truncation levels
    """
    spec = _parse(request.spec)
    try:
        report = check_admissible(spec.polygon, request.levels, config.max_workers())
    except (ScherkLabError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    logger.info(f"Admissibility of a {spec.polygon.n_vertices}-gon: {report.verdict.value}")
    body = report.to_dict()
    body["balance"] = report.balance / spec.curvature
    return body


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host=config.API_HOST, port=config.API_PORT)
