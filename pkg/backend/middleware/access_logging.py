"""Middleware for logging access requests."""
import logging
import time
from typing import Callable, Optional

from fastapi import Request, Response
from starlette.middleware.base import BaseHTTPMiddleware

logger = logging.getLogger(__name__)


class AccessLoggingMiddleware(BaseHTTPMiddleware):
    """
    Middleware to log method, path, status and response time of model requests.
    """

    def __init__(self, app, path_prefix: str = "/api/gw"):
        super().__init__(app)
        self.path_prefix = path_prefix

    async def dispatch(self, request: Request, call_next: Callable) -> Response:
        """Process request and log access information."""
        start_time = time.perf_counter()
        response = await call_next(request)
        response_time_ms = int((time.perf_counter() - start_time) * 1000)

        endpoint = str(request.url.path)
        operation_type = self._determine_operation_type(endpoint, request.method)
        if operation_type is None:
            return response

        logger.info(
            f"{request.method} {endpoint} -> {response.status_code} "
            f"in {response_time_ms} ms ({operation_type}, client {self._get_client_ip(request)})"
        )
        response.headers["X-Response-Time-Ms"] = str(response_time_ms)
        return response

    def _get_client_ip(self, request: Request) -> str:
        """
        Get client IP address from request.
        Handles proxies and load balancers.
        """
        forwarded_for = request.headers.get("X-Forwarded-For")
        if forwarded_for:
            # X-Forwarded-For can contain multiple IPs, take the first one
            return forwarded_for.split(",")[0].strip()

        real_ip = request.headers.get("X-Real-IP")
        if real_ip:
            return real_ip

        if request.client:
            return request.client.host

        return "unknown"

    def _determine_operation_type(self, endpoint: str, method: str) -> Optional[str]:
        """Operation label for model endpoints, None for everything else."""
        path = endpoint.rstrip("/")
        if not path.startswith(self.path_prefix):
            return None
        if path == f"{self.path_prefix}/run" and method == "POST":
            return "model_run"
        if path == f"{self.path_prefix}/commands" and method == "GET":
            return "commands_view"
        return "other"
