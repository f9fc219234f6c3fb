from typing import Optional

from pydantic import BaseModel, Field


class Health(BaseModel):
    status: int = Field(description="Numeric status code (200 when the service is up)")
    status_message: str = Field(description="Human-readable status message")
    timestamp: str = Field(description="Timestamp in ISO 8601 format (UTC)")
    ip_address: str = Field(description="IP address of the responding service")
    simulations: int = Field(0, ge=0, description="Runs held in the in-memory registry")
    echo: Optional[str] = Field(default=None, description="Optional echo (query param)")

    model_config = {
        "json_schema_extra": {
            "example": {
                "status": 200,
                "status_message": "OK",
                "timestamp": "2026-01-15T12:34:56Z",
                "ip_address": "192.168.1.10",
                "simulations": 3,
                "echo": "ping",
            }
        }
    }
