"""HTTP surface: the generated feed at ``/feed.xml`` plus a validation endpoint."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse, Response

from ..compose import RecordError, build_feed, load_records
from ..config import load_site_config
from ..rfc822 import DateParseError, RssDateTime, parse_rfc822
from ..validator import validate
from ..xmlcodec import FeedError
from .schemas import Report


def create_app(config_path, records_path, now: RssDateTime | None = None) -> FastAPI:
    """Build the app; the config is read once here, records on every request."""
    config = load_site_config(config_path)
    app = FastAPI(title="feedforge", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.config = config
    app.state.records_path = str(records_path)

    @app.get("/feed.xml")
    def feed():
        try:
            store = load_records(app.state.records_path)
            body = build_feed(store, config, now or RssDateTime.now(config.timezone))
        except (OSError, RecordError, FeedError, ValueError) as exc:
            return PlainTextResponse(f"cannot build feed: {exc}\n", status_code=500)
        headers = {}
        if config.channel.ttl_minutes is not None:
            headers["Cache-Control"] = f"max-age={config.channel.ttl_minutes * 60}"
        return Response(body, media_type=f"application/rss+xml; charset={config.encoding}",
                        headers=headers)

    @app.post("/validate", response_model=Report)
    async def check(request: Request, now_text: str | None = Query(None, alias="now")):
        when = now or RssDateTime.now()
        if now_text:
            try:
                when = parse_rfc822(now_text)
            except DateParseError as exc:
                raise HTTPException(422, f"now: {exc}") from None
        return Report.from_report(validate(await request.body(), when))

    return app
