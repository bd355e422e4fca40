"""
Development entry point: serves app.main:app with uvicorn
"""
import os

import uvicorn

from app.main import app

__all__ = ["app"]

if __name__ == "__main__":
    uvicorn.run(app, host=os.environ.get("HOST", "0.0.0.0"), port=int(os.environ.get("PORT", "8000")))
