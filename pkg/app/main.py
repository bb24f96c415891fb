import logging
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from app.config import settings
from app.exceptions import StlRelaxError
from app.services.solver_service import backend_available

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Create FastAPI app
app = FastAPI(
    title=settings.APP_NAME,
    version=settings.VERSION,
    description="STL control synthesis under minimal temporal relaxation",
    docs_url="/docs",
    redoc_url="/redoc"
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(StlRelaxError)
async def toolkit_error_handler(request: Request, exc: StlRelaxError):
    """Domain errors become HTTPException-style payloads with their mapped status code."""
    log = logger.warning if exc.status_code < 500 else logger.error
    log(f"{request.url.path}: {type(exc).__name__}: {exc}")
    content = {"detail": str(exc), "error": type(exc).__name__}
    lp_path = getattr(exc, "lp_path", None)
    if lp_path:
        content["lp_path"] = lp_path
    return JSONResponse(status_code=exc.status_code, content=content)


@app.on_event("startup")
async def startup_event():
    logger.info(f"Starting {settings.APP_NAME} v{settings.VERSION}")
    logger.info(f"Environment: {settings.ENVIRONMENT}")
    logger.info(f"Solver backend: {settings.SOLVER_BACKEND} ({settings.solver_executable or 'no executable found'})")


@app.on_event("shutdown")
async def shutdown_event():
    logger.info("Shutting down application")


@app.get("/")
async def root():
    return {
        "app": settings.APP_NAME,
        "version": settings.VERSION,
        "status": "running"
    }


@app.get("/health")
async def health_check():
    """Health check endpoint; synthesis needs solver_available"""
    return {
        "status": "healthy",
        "environment": settings.ENVIRONMENT,
        "solver_backend": settings.SOLVER_BACKEND,
        "solver_available": backend_available(),
    }


# Import and include routers
from app.api import monitor, synthesis

app.include_router(monitor.router, prefix="/api", tags=["Monitoring"])
app.include_router(synthesis.router, prefix="/api", tags=["Synthesis"])
