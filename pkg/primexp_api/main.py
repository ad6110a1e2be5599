import asyncio
import os
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from typing import Optional

import uvicorn
from dotenv import load_dotenv
from fastapi import FastAPI, HTTPException, Query
from loguru import logger

from primexp import settings
from primexp.errors import DomainError, PrecisionError, PrimexpError
from primexp.exponents import exponent_report
from primexp.expsums import SumRequest, f_k_sum, weyl_short
from primexp.local_factors import wk_value
from primexp.phase import as_alpha
from primexp.rational import classify_arc
from primexp.utils import configure_logging
from primexp_api.models import ClassifyBody, ClassifyResponse, SumBody, SumKind, SumResponse, WkResponse

# Load environment variables
load_dotenv()
HOST = os.getenv("HOST", "0.0.0.0")
PORT = int(os.getenv("PORT", 8000))
WORKERS = int(os.getenv("WORKERS", 1))

app = FastAPI(
    title="primexp API",
    description="Exponential sums over primes in short intervals",
    version="0.1.0",
)

# Blocking evaluations run here so the event loop stays responsive
executor = ThreadPoolExecutor(max_workers=WORKERS)


@app.on_event("startup")
def startup_event():
    configure_logging()
    logger.info(f"primexp API on {HOST}:{PORT}, {WORKERS} worker(s), {settings.PRECISION_BITS}-bit alpha")


async def _run(fn, *args, **kwargs):
    """Run ``fn`` on the executor; library errors become HTTP errors."""
    try:
        return await asyncio.get_running_loop().run_in_executor(executor, partial(fn, *args, **kwargs))
    except (DomainError, PrecisionError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except PrimexpError as e:
        raise HTTPException(status_code=422, detail=str(e))


def _sum(body: SumBody) -> dict:
    alpha = as_alpha(body.alpha)
    if body.kind == SumKind.WEYL:
        result = weyl_short(alpha, body.x, body.y, body.k, body.path, threads=settings.THREADS)
    else:
        req = SumRequest(alpha=alpha, x=body.x, y=body.y, k=body.k, path=body.path)
        result = f_k_sum(req, threads=settings.THREADS)
    return result.to_dict()


@app.post("/sum", response_model=SumResponse)
async def exponential_sum(body: SumBody):
    """f_k(alpha; x, y) (kind=prime) or the unweighted short Weyl sum (kind=weyl)."""
    return await _run(_sum, body)


def _classify(body: ClassifyBody) -> dict:
    return classify_arc(as_alpha(body.alpha), body.k, body.theta, body.x, body.P).to_dict()


@app.post("/classify", response_model=ClassifyResponse)
async def classify(body: ClassifyBody):
    return await _run(_classify, body)


@app.get("/exponents")
async def exponents(k: int = Query(..., ge=3), theta: str = Query(...), rho: Optional[str] = None):
    return await _run(exponent_report, k, theta, rho)


def _wk(q: int, k: int) -> dict:
    value = wk_value(q, k)
    return {"q": q, "k": k, "rat": str(value.rat), "rad": value.rad, "value": float(value)}


@app.get("/wk", response_model=WkResponse)
async def wk(q: int = Query(..., ge=1), k: int = Query(..., ge=3)):
    return await _run(_wk, q, k)


@app.get("/health")
async def health():
    return {"status": "ok"}


@app.on_event("shutdown")
def shutdown_event():
    executor.shutdown()
    logger.info("executor shutdown complete")


if __name__ == "__main__":
    uvicorn.run(
        "primexp_api.main:app",
        host=HOST,
        port=PORT,
        workers=WORKERS,
        reload=False,
        log_level="info",
    )
