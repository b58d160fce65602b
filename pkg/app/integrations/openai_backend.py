"""
Live completion backend speaking the OpenAI-compatible chat-completions protocol.
Works against api.openai.com or any compatible server via ``base_url``.
"""
from __future__ import annotations

import logging
from typing import Any, Optional

try:
    from openai import OpenAI
    OPENAI_AVAILABLE = True
except ImportError:
    OPENAI_AVAILABLE = False
    logger = logging.getLogger(__name__)
    logger.warning("openai library not installed. Install with: pip install openai")

from ..config import get_settings
from ..errors import BackendError
from .base import CompletionBackend, CompletionRequest

logger = logging.getLogger(__name__)


class OpenAIBackend(CompletionBackend):
    """
    Chat-completions wrapper. Endpoint, key and model default to the
    ``WAYFINDER_LLM_*`` settings; explicit arguments win.
    """

    name = "http"

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        model: Optional[str] = None,
        temperature: Optional[float] = None,
        max_tokens: Optional[int] = None,
        timeout: Optional[float] = None,
        client: Any = None,
    ) -> None:
        super().__init__()
        settings = get_settings()
        self.base_url = base_url or settings.llm_base_url or None
        self.model = model or settings.llm_model
        self.temperature = settings.llm_temperature if temperature is None else temperature
        self.max_tokens = max_tokens or settings.llm_max_tokens
        self.timeout = timeout or settings.llm_timeout

        if client is not None:
            self.client = client
            return
        if not OPENAI_AVAILABLE:
            raise BackendError("the http backend needs the openai library. Run: pip install openai")
        try:
            self.client = OpenAI(
                # local compatible servers usually accept any key
                api_key=api_key or settings.llm_api_key or "unused",
                base_url=self.base_url,
                timeout=self.timeout,
                max_retries=0,
            )
        except Exception as e:
            raise BackendError(f"OpenAI client initialization failed: {e}") from e
        logger.info(f"OpenAI-compatible backend initialized: model={self.model} base_url={self.base_url or 'default'}")

    def _complete(self, request: CompletionRequest) -> str:
        try:
            response = self.client.chat.completions.create(
                model=self.model,
                messages=[message.model_dump() for message in request.messages],
                temperature=self.temperature if request.temperature is None else request.temperature,
                max_tokens=request.max_tokens or self.max_tokens,
            )
        except Exception as e:
            logger.warning(f"chat completion failed for {request.label}: {e}")
            raise BackendError(f"chat completion failed: {e}") from e

        if not response.choices:
            raise BackendError("chat completion returned no choices")
        output = response.choices[0].message.content or ""
        logger.debug(f"{request.label} raw response (first 300 chars): {output[:300]}")
        return output
